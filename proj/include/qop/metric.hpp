#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "qop/errors.hpp"

namespace qop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Structural classification of a metric matrix. PD/PSD are decided on the
/// symmetric part (Q+Qt)/2, since the quadratic form only sees that part.
struct MetricStructure {
  bool is_symmetric = false;
  bool is_psd = false;
  bool is_pd = false;
};

/// A (possibly non-symmetric, possibly indefinite) square matrix Q defining
/// the pairing <a|b>_Q = <Qa, b> and the signed quantity |a|_Q^2 = <Qa, a>.
class Metric {
 public:
  static constexpr double kDefaultSymTolerance = 1e-9;

  explicit Metric(Matrix q, double sym_tolerance = kDefaultSymTolerance)
      : q_(std::move(q)), sym_tolerance_(sym_tolerance) {
    if (q_.rows() != q_.cols()) {
      throw InvalidDimension("metric matrix must be square");
    }
    if (!q_.allFinite()) {
      throw InvalidDimension("metric matrix has non-finite entries");
    }
    classify();
  }

  static Metric identity(Eigen::Index n) {
    return Metric(Matrix::Identity(n, n));
  }

  const Matrix& q() const { return q_; }
  Eigen::Index n() const { return q_.rows(); }
  const MetricStructure& structure() const { return structure_; }
  bool is_symmetric() const { return structure_.is_symmetric; }
  bool is_psd() const { return structure_.is_psd; }
  bool is_pd() const { return structure_.is_pd; }
  double sym_tolerance() const { return sym_tolerance_; }

  /// Spectral norm of Q.
  double spectral_norm() const {
    return q_.jacobiSvd().singularValues()(0);
  }

  Metric transposed() const { return Metric(q_.transpose(), sym_tolerance_); }

  Matrix symmetric_part() const { return 0.5 * (q_ + q_.transpose()); }

 private:
  void classify() {
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    structure_.is_symmetric =
        (q_ - q_.transpose()).cwiseAbs().maxCoeff() <= sym_tolerance_ * scale;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(),
                                             Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    structure_.is_psd = min_eig >= -sym_tolerance_ * scale;
    structure_.is_pd = min_eig > sym_tolerance_ * scale;
  }

  Matrix q_;
  double sym_tolerance_;
  MetricStructure structure_;
};

namespace detail {
inline void check_dim(const Metric& m, const Vector& a, const char* who) {
  if (a.size() != m.n()) {
    throw InvalidDimension(std::string(who) + ": vector dimension " +
                           std::to_string(a.size()) + " != metric dimension " +
                           std::to_string(m.n()));
  }
  if (!a.allFinite()) {
    throw InvalidDimension(std::string(who) + ": non-finite vector entries");
  }
}
}  // namespace detail

/// <a|b>_Q = <Qa, b>.
inline double q_inner(const Metric& m, const Vector& a, const Vector& b) {
  detail::check_dim(m, a, "q_inner");
  detail::check_dim(m, b, "q_inner");
  return (m.q() * a).dot(b);
}

/// |a|_Q^2 = <Qa, a>. Signed; may be negative when Q is not PSD.
inline double q_norm_sq(const Metric& m, const Vector& a) {
  detail::check_dim(m, a, "q_norm_sq");
  return (m.q() * a).dot(a);
}

/// Reporting helper sqrt(max(0, |a-b|_Q^2)). Meaningful as a distance only
/// when the metric is PSD.
inline double q_dist(const Metric& m, const Vector& a, const Vector& b) {
  return std::sqrt(std::max(0.0, q_norm_sq(m, a - b)));
}

/// Residual of the convex-combination identity
///   |k b1 + (1-k) b2|_Q^2
///     = k |b1|_Q^2 + (1-k) |b2|_Q^2 - k(1-k) |b1-b2|_Q^2,
/// valid for any real k and arbitrary Q. Returns LHS - RHS; serves as a
/// self-test of the metric arithmetic (|residual| <= 1e-10 * scale, where
/// scale sums 1 + |each term|).
inline double convex_combination_identity_residual(const Metric& m, double k,
                                                   const Vector& b1,
                                                   const Vector& b2) {
  detail::check_dim(m, b1, "convex_combination_identity_residual");
  detail::check_dim(m, b2, "convex_combination_identity_residual");
  const double lhs = q_norm_sq(m, k * b1 + (1.0 - k) * b2);
  const double t1 = k * q_norm_sq(m, b1);
  const double t2 = (1.0 - k) * q_norm_sq(m, b2);
  const double t3 = k * (1.0 - k) * q_norm_sq(m, b1 - b2);
  return lhs - (t1 + t2 - t3);
}

/// Scale factor used to normalize the identity residual.
inline double convex_combination_identity_scale(const Metric& m, double k,
                                                const Vector& b1,
                                                const Vector& b2) {
  const double lhs = q_norm_sq(m, k * b1 + (1.0 - k) * b2);
  const double t1 = k * q_norm_sq(m, b1);
  const double t2 = (1.0 - k) * q_norm_sq(m, b2);
  const double t3 = k * (1.0 - k) * q_norm_sq(m, b1 - b2);
  return 1.0 + std::abs(lhs) + std::abs(t1) + std::abs(t2) + std::abs(t3);
}

}  // namespace qop
