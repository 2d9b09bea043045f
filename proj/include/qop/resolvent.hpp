#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "qop/certificates.hpp"
#include "qop/errors.hpp"
#include "qop/fixed_point.hpp"
#include "qop/metric.hpp"
#include "qop/operator.hpp"
#include "qop/prox.hpp"

namespace qop {

/// Maximally monotone operator b -> M b + c with M + Mt PSD.
struct AffineMonotone {
  Matrix m;
  Vector c;
};

/// Subdifferential of a catalog convex function.
struct Subdifferential {
  ProxFunction f;
};

/// A + mu I for another spec.
struct ScaledStrong;

using MonotoneVariant =
    std::variant<AffineMonotone, Subdifferential,
                 std::shared_ptr<const ScaledStrong>>;

/// Description of a maximally monotone operator from the catalog, with its
/// strong-monotonicity modulus (0 when merely monotone). For affine kinds mu
/// is the smallest eigenvalue of the symmetric part, clamped at 0.
class MonotoneSpec {
 public:
  static MonotoneSpec affine(Matrix m, Vector c);
  static MonotoneSpec subdifferential(ProxFunction f, Eigen::Index n);
  static MonotoneSpec scaled_strong(double mu, MonotoneSpec inner);

  const MonotoneVariant& kind() const { return kind_; }
  Eigen::Index n() const { return n_; }
  double strong_monotonicity_mu() const { return mu_; }

 private:
  MonotoneSpec(MonotoneVariant kind, Eigen::Index n, double mu)
      : kind_(std::move(kind)), n_(n), mu_(mu) {}

  MonotoneVariant kind_;
  Eigen::Index n_;
  double mu_;
};

struct ScaledStrong {
  double mu;
  MonotoneSpec inner;
};

inline MonotoneSpec MonotoneSpec::affine(Matrix m, Vector c) {
  if (m.rows() != m.cols() || m.rows() != c.size()) {
    throw InvalidDimension("AffineMonotone: inconsistent dimensions");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (min_eig < -1e-9 * scale) {
    throw RuleNotApplicable("AffineMonotone requires M + Mt PSD");
  }
  const Eigen::Index n = m.rows();
  return MonotoneSpec(AffineMonotone{std::move(m), std::move(c)}, n,
                      std::max(0.0, min_eig));
}

inline MonotoneSpec MonotoneSpec::subdifferential(ProxFunction f,
                                                  Eigen::Index n) {
  // the quadratic catalog member is 1-strongly monotone, the rest merely
  const double mu = std::holds_alternative<QuadraticFn>(f) ? 1.0 : 0.0;
  if (const auto* q = std::get_if<QuadraticFn>(&f)) {
    if (q->p.size() != n) {
      throw InvalidDimension("Subdifferential(quadratic): dimension mismatch");
    }
  }
  return MonotoneSpec(Subdifferential{std::move(f)}, n, mu);
}

inline MonotoneSpec MonotoneSpec::scaled_strong(double mu, MonotoneSpec inner) {
  if (!(mu > 0.0)) {
    throw RuleNotApplicable("ScaledStrong requires mu > 0");
  }
  const Eigen::Index n = inner.n();
  const double total_mu = mu + inner.strong_monotonicity_mu();
  return MonotoneSpec(
      std::make_shared<const ScaledStrong>(ScaledStrong{mu, std::move(inner)}),
      n, total_mu);
}

/// Metric resolvent T = (A + Q)^{-1} Q: the unique z with
/// 0 in A(z) + Q(z - b). Affine kinds solve (M + Q) z = Q b - c with a
/// factorization done once at construction; subdifferential kinds pair with
/// scalar metrics Q = (1/tau) I and evaluate the closed-form prox.
class ResolventHandle {
 public:
  ResolventHandle(MonotoneSpec a, Metric m)
      : a_(std::move(a)), m_(std::move(m)) {
    if (!m_.is_pd()) {
      throw MetricStructureError("metric resolvent requires a PD metric");
    }
    if (a_.n() != m_.n()) {
      throw InvalidDimension("resolvent: operator/metric dimension mismatch");
    }
    if (const Matrix* ma = flattened_affine_matrix()) {
      Eigen::PartialPivLU<Matrix> lu(*ma + m_.q());
      const double rcond = lu.rcond();
      if (!(rcond > 1e-14)) {
        throw SingularResolvent("M + Q is numerically singular");
      }
      lu_ = std::make_shared<Eigen::PartialPivLU<Matrix>>(std::move(lu));
    } else {
      // subdifferential kinds: metric must be (1/tau) I
      const auto* sub = std::get_if<Subdifferential>(&a_.kind());
      if (!sub) {
        throw UnsupportedPairing(
            "ScaledStrong over a subdifferential is not supported");
      }
      const Matrix& q = m_.q();
      const double diag = q(0, 0);
      if (!(q - diag * Matrix::Identity(q.rows(), q.cols()))
               .isZero(1e-12 * std::max(1.0, std::abs(diag)))) {
        throw UnsupportedPairing(
            "subdifferential specs pair only with scalar metrics Q = (1/tau) I");
      }
      tau_ = 1.0 / diag;
    }
  }

  const MonotoneSpec& monotone_spec() const { return a_; }
  const Metric& metric() const { return m_; }
  Eigen::Index n() const { return a_.n(); }

  Vector apply(const Vector& b) const {
    detail::check_dim(m_, b, "resolvent_apply");
    if (lu_) {
      const Vector c = flattened_affine_offset();
      return lu_->solve(m_.q() * b - c);
    }
    const auto& sub = std::get<Subdifferential>(a_.kind());
    return prox(sub.f, tau_, b);
  }

  OperatorHandle as_operator() const {
    if (lu_) {
      const Matrix t = lu_->solve(m_.q());
      const Vector c = Vector(-lu_->solve(flattened_affine_offset()));
      return OperatorHandle::affine(t, c, "metric-resolvent");
    }
    auto self = *this;
    return OperatorHandle::from_function(
        n(), [self](const Vector& b) { return self.apply(b); },
        "metric-resolvent");
  }

  /// Residual of the inclusion 0 in A(z) + Q(z - b) at z = apply(b).
  /// Contract: <= 1e-9 * (1 + |b|).
  double inclusion_residual(const Vector& b, const Vector& z) const {
    const Vector w = -(m_.q() * (z - b));  // must lie in A(z)
    return monotone_distance(a_, z, w);
  }

 private:
  // distance from w to A(z)
  static double monotone_distance(const MonotoneSpec& a, const Vector& z,
                                  const Vector& w) {
    struct V {
      const Vector& z;
      const Vector& w;
      double operator()(const AffineMonotone& af) const {
        return (w - (af.m * z + af.c)).norm();
      }
      double operator()(const Subdifferential& s) const {
        return subgradient_distance(s.f, z, w);
      }
      double operator()(const std::shared_ptr<const ScaledStrong>& ss) const {
        return monotone_distance(ss->inner, z, Vector(w - ss->mu * z));
      }
    };
    return std::visit(V{z, w}, a.kind());
  }

  // non-null when the spec flattens to an affine map M z + c
  const Matrix* flattened_affine_matrix() {
    flatten();
    return flat_affine_ ? &flat_affine_->m : nullptr;
  }
  Vector flattened_affine_offset() const {
    return flat_affine_->c;
  }

  void flatten() {
    if (flatten_done_) return;
    flatten_done_ = true;
    double shift = 0.0;
    const MonotoneSpec* spec = &a_;
    while (const auto* ss =
               std::get_if<std::shared_ptr<const ScaledStrong>>(&spec->kind())) {
      shift += (*ss)->mu;
      spec = &(*ss)->inner;
    }
    if (const auto* af = std::get_if<AffineMonotone>(&spec->kind())) {
      flat_affine_ = AffineData{
          af->m + shift * Matrix::Identity(a_.n(), a_.n()), af->c};
    } else if (shift > 0.0) {
      flat_affine_.reset();  // ScaledStrong over subdifferential: unsupported
    }
  }

  MonotoneSpec a_;
  Metric m_;
  std::shared_ptr<Eigen::PartialPivLU<Matrix>> lu_;
  std::optional<AffineData> flat_affine_;
  bool flatten_done_ = false;
  double tau_ = 0.0;
};

inline Vector resolvent_apply(const ResolventHandle& r, const Vector& b) {
  return r.apply(b);
}

/// Variable metric proximal point iteration b^{k+1} = (A + Q)^{-1} Q b^k.
inline IterationTrace ppa(const ResolventHandle& r, const Vector& b0,
                          const IterationOptions& opts = {}) {
  return banach_picard(r.as_operator(), r.metric(), b0, opts);
}

/// Relaxed proximal point iteration; gamma in (0, 2) so that the relaxed
/// operator stays averaged.
inline IterationTrace rppa(const ResolventHandle& r, double gamma,
                           const Vector& b0, const IterationOptions& opts = {}) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw RuleNotApplicable("rppa requires gamma in (0, 2)");
  }
  return krasnoselskii_mann(r.as_operator(), r.metric(), gamma, b0, opts);
}

struct ResolventCertificates {
  AveragedCertificate op;          // certificate for T
  AveragedCertificate complement;  // certificate for I - T
};

/// Certificates for the metric resolvent under a symmetric metric:
///   merely monotone:     T in F(1, 1/2), I - T in F(1, 1/2);
///   mu-strongly monotone, PD metric:
///     T in F(|Q|/(2mu+|Q|), (2mu+|Q|)/(2mu+2|Q|)),
///     I - T in F(1, |Q|/(2(|Q|+mu))).
inline ResolventCertificates resolvent_certificate(const ResolventHandle& r) {
  const Metric& m = r.metric();
  if (!m.is_symmetric()) {
    throw MetricStructureError(
        "resolvent certificates require a symmetric metric");
  }
  const double mu = r.monotone_spec().strong_monotonicity_mu();
  const auto prov = Provenance::derived("sec4_resolvent", Provenance::asserted());
  if (mu <= 0.0) {
    return {AveragedCertificate(1.0, 0.5, prov),
            AveragedCertificate(1.0, 0.5, prov)};
  }
  const double qn = m.spectral_norm();
  return {AveragedCertificate(qn / (2.0 * mu + qn),
                              (2.0 * mu + qn) / (2.0 * mu + 2.0 * qn), prov),
          AveragedCertificate(1.0, qn / (2.0 * (qn + mu)), prov)};
}

}  // namespace qop
