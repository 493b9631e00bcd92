#include "projnorm/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace projnorm {

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

void require_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + " must be square, got " + shape_str(m));
  }
  if (m.size() > 0 && !is_symmetric(m)) {
    const double dev = (m - m.transpose()).cwiseAbs().maxCoeff();
    std::ostringstream os;
    os << what << " must be symmetric within " << kSymTol << ", max deviation " << dev;
    throw NotSpdError(os.str());
  }
}

void require_spd(const Matrix& m, const char* what) {
  require_symmetric(m, what);
  if (m.rows() == 0) {
    throw DimensionError(std::string(what) + " must be non-empty");
  }
  if (m.rows() > kMaxDim) {
    throw DimensionError(std::string(what) + " exceeds the supported dimension");
  }
  if (!m.allFinite()) {
    throw NotSpdError(std::string(what) + " has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NotSpdError(std::string(what) + ": eigendecomposition failed");
  }
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << what << " must be positive definite, smallest eigenvalue " << lmin;
    throw NotSpdError(os.str());
  }
}

GaussianParams::GaussianParams(Vector mu_in, Matrix sigma_in)
    : mu(std::move(mu_in)), sigma(std::move(sigma_in)) {
  if (mu.size() < 2) {
    throw DimensionError("mu must have dimension >= 2");
  }
  if (mu.size() > kMaxDim) {
    throw DimensionError("mu exceeds the supported dimension");
  }
  if (!mu.allFinite()) {
    throw DomainError("mu has non-finite entries");
  }
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw DimensionError("sigma must be " + std::to_string(mu.size()) + "x" +
                         std::to_string(mu.size()) + ", got " + shape_str(sigma));
  }
  require_spd(sigma, "sigma");
}

ProjectionVariant::ProjectionVariant(std::optional<Matrix> b_in, double c_in)
    : b(std::move(b_in)), c(c_in) {
  if (!(c >= 0.0)) {
    throw DomainError("denominator constant c must be >= 0");
  }
  if (b.has_value()) {
    require_spd(*b, "b");
  }
}

ProjectionVariant::Kind ProjectionVariant::kind() const {
  if (b.has_value()) {
    return c > 0.0 ? Kind::kPnBc : Kind::kPnB;
  }
  return c > 0.0 ? Kind::kPnC : Kind::kPn;
}

void ProjectionVariant::require_dim(Index n) const {
  if (b.has_value() && b->rows() != n) {
    throw DimensionError("b is " + std::to_string(b->rows()) + "-dimensional, expected " +
                         std::to_string(n));
  }
}

const char* to_string(ProjectionVariant::Kind kind) {
  switch (kind) {
    case ProjectionVariant::Kind::kPn: return "pn";
    case ProjectionVariant::Kind::kPnC: return "pnc";
    case ProjectionVariant::Kind::kPnB: return "pnb";
    case ProjectionVariant::Kind::kPnBc: return "pnbc";
  }
  return "unknown";
}

Moments Moments::from_gamma_and_second(Vector gamma, Matrix second_moment) {
  if (second_moment.rows() != gamma.size() || second_moment.cols() != gamma.size()) {
    throw DimensionError("second_moment shape does not match gamma");
  }
  require_symmetric(second_moment, "second_moment");
  Moments m;
  m.psi = second_moment - gamma * gamma.transpose();
  m.gamma = std::move(gamma);
  m.second_moment = std::move(second_moment);
  return m;
}

void Moments::validate(double psd_slack, double consistency_tol) const {
  if (gamma.size() == 0) {
    throw DimensionError("moments are empty");
  }
  if (psi.rows() != gamma.size() || second_moment.rows() != gamma.size()) {
    throw DimensionError("moments blocks disagree in dimension");
  }
  require_symmetric(psi, "psi");
  const Matrix reconstructed = second_moment - gamma * gamma.transpose();
  const double dev = (psi - reconstructed).cwiseAbs().maxCoeff();
  if (dev > consistency_tol) {
    std::ostringstream os;
    os << "psi is inconsistent with second_moment - gamma gamma^T by " << dev;
    throw DomainError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(psi, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin < -psd_slack) {
    std::ostringstream os;
    os << "psi must be positive semidefinite within " << psd_slack
       << ", smallest eigenvalue " << lmin;
    throw NotSpdError(os.str());
  }
}

}  // namespace projnorm
