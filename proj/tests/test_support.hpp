#pragma once

// Shared helpers for the test suites: seeded random matrices/vectors and
// operator constructions with known closed-form certificates.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "qop/metric.hpp"
#include "qop/operator.hpp"

namespace qop::test {

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline Vector random_vector(std::mt19937_64& gen, Eigen::Index n,
                            double lo = -10.0, double hi = 10.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(gen, lo, hi);
  return v;
}

inline Matrix random_matrix(std::mt19937_64& gen, Eigen::Index rows,
                            Eigen::Index cols, double lo = -10.0,
                            double hi = 10.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(gen, lo, hi);
  }
  return m;
}

/// Random orthogonal matrix (QR of a random matrix).
inline Matrix random_orthogonal(std::mt19937_64& gen, Eigen::Index n) {
  const Matrix a = random_matrix(gen, n, n, -1.0, 1.0);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  // fix signs so the distribution does not degenerate
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  }
  return q;
}

/// Random symmetric PD matrix G^t G + I.
inline Matrix random_spd(std::mt19937_64& gen, Eigen::Index n,
                         double scale = 1.0) {
  const Matrix g = random_matrix(gen, n, n, -scale, scale);
  return g.transpose() * g + Matrix::Identity(n, n);
}

/// Linear operator K with Q-based Lipschitz constant exactly xi, for a
/// symmetric PD metric Q = G^t G: K = xi G^{-1} R G with R orthogonal.
inline Matrix exact_lipschitz_matrix(std::mt19937_64& gen, const Metric& m,
                                     double xi) {
  Eigen::LLT<Matrix> llt(m.symmetric_part());
  const Matrix g = llt.matrixU();
  const Matrix r = random_orthogonal(gen, m.n());
  return xi * g.inverse() * r * g;
}

/// Member of the (xi, alpha) class built to meet the certificate exactly:
/// T = (1-alpha) I + alpha K with |K|_Q = xi.
inline OperatorHandle exact_class_member(std::mt19937_64& gen, const Metric& m,
                                         double xi, double alpha) {
  const Matrix k = exact_lipschitz_matrix(gen, m, xi);
  const Eigen::Index n = m.n();
  return OperatorHandle::affine(
      (1.0 - alpha) * Matrix::Identity(n, n) + alpha * k, Vector::Zero(n));
}

}  // namespace qop::test
