#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qop/certificates.hpp"
#include "qop/errors.hpp"
#include "qop/metric.hpp"
#include "qop/operator.hpp"

namespace qop {

enum class IterationScheme { BanachPicard, KrasnoselskiiMann };

struct IterationOptions {
  long max_iter = 10000;
  double stop_tol = 1e-12;
};

/// Record of one fixed-point run: iterates b0..bK, the Q-based sequential
/// errors |b^k - b^{k+1}|_Q (length K), and optionally the Q-distances to a
/// reference fixed point. Immutable once returned.
struct IterationTrace {
  std::vector<Vector> iterates;
  std::vector<double> q_seq_err;
  std::optional<std::vector<double>> q_dist_to_sol;
  IterationScheme scheme = IterationScheme::BanachPicard;
  double gamma = 1.0;  // KM relaxation parameter; 1 for Banach-Picard
  std::optional<Metric> metric;
  std::optional<OperatorHandle> op;  // the underlying T (not T_gamma)
  std::optional<AveragedCertificate> averaged_cert;
  std::optional<CocoercivityCertificate> cocoercive_cert;
  double stop_threshold = 0.0;  // absolute sequential-error threshold used

  long steps() const { return static_cast<long>(q_seq_err.size()); }
};

namespace detail {

inline IterationTrace iterate_scheme(const OperatorHandle& t, const Metric& m,
                                     const Vector& b0, IterationScheme scheme,
                                     double gamma,
                                     const IterationOptions& opts) {
  if (!(m.is_symmetric() && m.is_pd())) {
    throw MetricStructureError(
        "fixed-point iteration requires a symmetric PD metric");
  }
  check_dim(m, b0, "fixed_point");
  if (t.n() != m.n()) {
    throw InvalidDimension("fixed_point: operator/metric dimension mismatch");
  }
  IterationTrace trace;
  trace.scheme = scheme;
  trace.gamma = gamma;
  trace.metric = m;
  trace.op = t;
  trace.stop_threshold =
      opts.stop_tol * (1.0 + std::sqrt(std::max(0.0, q_norm_sq(m, b0))));
  trace.iterates.push_back(b0);
  Vector b = b0;
  for (long k = 0; k < opts.max_iter; ++k) {
    const Vector tb = t(b);
    // gamma == 1 must reproduce the plain iteration bitwise
    const Vector b_next = (gamma == 1.0) ? tb : Vector(b + gamma * (tb - b));
    if (!b_next.allFinite()) {
      throw DivergenceDetected(static_cast<int>(k + 1));
    }
    const double err = q_dist(m, b, b_next);
    trace.iterates.push_back(b_next);
    trace.q_seq_err.push_back(err);
    b = b_next;
    if (err <= trace.stop_threshold) break;
  }
  return trace;
}

}  // namespace detail

/// b^{k+1} = T b^k until the relative sequential error drops below stop_tol
/// or max_iter is reached.
inline IterationTrace banach_picard(const OperatorHandle& t, const Metric& m,
                                    const Vector& b0,
                                    const IterationOptions& opts = {}) {
  return detail::iterate_scheme(t, m, b0, IterationScheme::BanachPicard, 1.0,
                                opts);
}

/// b^{k+1} = b^k + gamma (T b^k - b^k). Fix T_gamma = Fix T, so rate reports
/// reference the fixed points of T.
inline IterationTrace krasnoselskii_mann(const OperatorHandle& t,
                                         const Metric& m, double gamma,
                                         const Vector& b0,
                                         const IterationOptions& opts = {}) {
  return detail::iterate_scheme(t, m, b0, IterationScheme::KrasnoselskiiMann,
                                gamma, opts);
}

/// Fixed point of T: affine kinds by a dense solve of (I - M) b = c,
/// everything else by iterating to high precision and certifying.
inline Vector reference_fixed_point(const OperatorHandle& t, const Metric& m) {
  if (t.is_affine()) {
    const auto& a = t.affine_data();
    const Matrix lhs = Matrix::Identity(t.n(), t.n()) - a.m;
    Eigen::FullPivLU<Matrix> lu(lhs);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) {
      throw NoUniqueFixedPoint(
          "I - M is singular: fixed point set empty or non-unique");
    }
    return lu.solve(a.c);
  }
  IterationOptions opts;
  opts.stop_tol = 1e-14;
  opts.max_iter = 100000;
  const auto trace = banach_picard(t, m, Vector::Zero(t.n()), opts);
  const Vector b = trace.iterates.back();
  if (q_dist(m, t(b), b) > 1e-10) {
    throw FixedPointNotFound("iteration did not reach a certified fixed point");
  }
  return b;
}

enum class BoundKind { PointwiseSqrtK, QLinear, RLinearGlobal, RLinearLocal };

/// Per-iteration evaluation of one of the rate bounds. margin[k] is
/// bound_value - observed_value; the bound is satisfied when every counted
/// margin is >= -1e-8 * (1 + |bound| + |observed|).
struct RateBoundReport {
  BoundKind kind = BoundKind::PointwiseSqrtK;
  bool applicable = true;
  std::string not_applicable_reason;
  double nu = 0.0;
  std::vector<double> bound_value;
  std::vector<double> observed;
  std::vector<double> margin;
  bool all_satisfied = false;
  std::optional<long> local_onset_k;  // RLinearLocal: margins counted from here
};

constexpr double kBoundTolerance = 1e-8;

namespace detail {

/// Effective rate parameters from the trace certificate. KM replaces alpha by
/// gamma * alpha with the same xi; a cocoercivity certificate maps to
/// xi = 1/(2b-1), alpha = 1 - 1/(2b).
struct RateParams {
  double xi;
  double alpha;  // effective (gamma-scaled for KM)
  double nu;
  bool from_cocoercive;
  double beta;
};

inline RateParams rate_params(const IterationTrace& trace) {
  RateParams p{};
  if (trace.averaged_cert) {
    p.xi = trace.averaged_cert->xi;
    p.alpha = trace.averaged_cert->alpha;
    p.from_cocoercive = false;
  } else if (trace.cocoercive_cert) {
    const double beta = trace.cocoercive_cert->beta;
    if (!(beta > 0.5)) {
      throw RuleNotApplicable("rate bounds need beta > 1/2");
    }
    p.xi = 1.0 / (2.0 * beta - 1.0);
    p.alpha = 1.0 - 1.0 / (2.0 * beta);
    p.from_cocoercive = true;
    p.beta = beta;
  } else {
    throw RuleNotApplicable("trace carries no certificate for bound evaluation");
  }
  if (trace.scheme == IterationScheme::KrasnoselskiiMann) {
    p.alpha *= trace.gamma;
    p.from_cocoercive = false;  // KM rates are stated via the averaged form
  }
  p.nu = 1.0 - p.alpha + p.alpha * p.xi * p.xi;
  return p;
}

inline void require_reference_point(const IterationTrace& trace,
                                    const Vector& bstar) {
  if (!trace.op || !trace.metric) {
    throw NotAFixedPoint("trace does not reference its operator");
  }
  if (trace.iterates.empty() || trace.q_seq_err.empty()) {
    throw NotAFixedPoint("empty trace");
  }
  const double res = q_dist(*trace.metric, (*trace.op)(bstar), bstar);
  if (res > 1e-8) {
    throw NotAFixedPoint("reference point is not fixed (residual " +
                         std::to_string(res) + ")");
  }
}

inline bool margins_satisfied(const RateBoundReport& r, std::size_t from = 0) {
  for (std::size_t i = from; i < r.margin.size(); ++i) {
    const double scale = 1.0 + std::abs(r.bound_value[i]) + std::abs(r.observed[i]);
    if (r.margin[i] < -kBoundTolerance * scale) return false;
  }
  return true;
}

}  // namespace detail

/// Sublinear sequential-error bound
///   |b^k - b^{k+1}|_Q <= factor / sqrt(k+1) * |b^0 - b*|_Q,
/// factor = sqrt(a/(1-a)) (gamma-scaled for KM) or sqrt(2b-1) for a
/// cocoercivity certificate.
inline RateBoundReport pointwise_bound(const IterationTrace& trace,
                                       const Vector& bstar) {
  detail::require_reference_point(trace, bstar);
  const auto p = detail::rate_params(trace);
  RateBoundReport r;
  r.kind = BoundKind::PointwiseSqrtK;
  r.nu = p.nu;
  const double factor = p.from_cocoercive
                            ? std::sqrt(2.0 * p.beta - 1.0)
                            : std::sqrt(p.alpha / (1.0 - p.alpha));
  const double dist0 = q_dist(*trace.metric, trace.iterates.front(), bstar);
  for (long k = 0; k < trace.steps(); ++k) {
    const double bound = factor / std::sqrt(static_cast<double>(k + 1)) * dist0;
    r.bound_value.push_back(bound);
    r.observed.push_back(trace.q_seq_err[k]);
    r.margin.push_back(bound - trace.q_seq_err[k]);
  }
  r.all_satisfied = detail::margins_satisfied(r);
  return r;
}

/// Per-step contraction checks |b^{k+1}-b*|_Q^2 <= nu |b^k-b*|_Q^2 and the
/// same for consecutive sequential errors. Applicable only for xi < 1
/// (equivalently beta > 1).
inline RateBoundReport qlinear_report(const IterationTrace& trace,
                                      const Vector& bstar) {
  detail::require_reference_point(trace, bstar);
  const auto p = detail::rate_params(trace);
  RateBoundReport r;
  r.kind = BoundKind::QLinear;
  r.nu = p.nu;
  if (!(p.xi < 1.0)) {
    r.applicable = false;
    r.not_applicable_reason = "q-linear rate requires xi < 1";
    return r;
  }
  const Metric& m = *trace.metric;
  const long kmax = trace.steps();
  for (long k = 0; k + 1 < static_cast<long>(trace.iterates.size()); ++k) {
    const double dk = q_norm_sq(m, trace.iterates[k] - bstar);
    const double dk1 = q_norm_sq(m, trace.iterates[k + 1] - bstar);
    r.bound_value.push_back(p.nu * dk);
    r.observed.push_back(dk1);
    r.margin.push_back(p.nu * dk - dk1);
  }
  for (long k = 0; k + 1 < kmax; ++k) {
    const double ek = trace.q_seq_err[k] * trace.q_seq_err[k];
    const double ek1 = trace.q_seq_err[k + 1] * trace.q_seq_err[k + 1];
    r.bound_value.push_back(p.nu * ek);
    r.observed.push_back(ek1);
    r.margin.push_back(p.nu * ek - ek1);
  }
  r.all_satisfied = detail::margins_satisfied(r);
  return r;
}

/// Envelope bound on the sequential error relative to the initial distance:
///   averaged form:   sqrt(a(1-nu)/((1-a)nu)) * nu^{(k+1)/4} * |b^0-b*|_Q
///   cocoercive form: sqrt(2(b-1)) * (2b-1)^{-(k-1)/4}    * |b^0-b*|_Q
/// Global when a > (3-sqrt5)/2 and xi <= sqrt(1-(3-sqrt5)/(2a)) (resp.
/// b >= (3+sqrt5)/4); otherwise local from the onset
/// k >= ln((1+sqrt5)/2)/ln(1/sqrt(nu)) - 1; earlier ks are reported but not
/// counted as violations.
inline RateBoundReport rlinear_report(const IterationTrace& trace,
                                      const Vector& bstar) {
  detail::require_reference_point(trace, bstar);
  const auto p = detail::rate_params(trace);
  RateBoundReport r;
  r.nu = p.nu;
  if (!(p.nu < 1.0)) {
    r.kind = BoundKind::RLinearLocal;
    r.applicable = false;
    r.not_applicable_reason = "r-linear rate requires nu < 1";
    return r;
  }
  const double sqrt5 = std::sqrt(5.0);
  const double alpha_lo = (3.0 - sqrt5) / 2.0;
  const double onset_num = std::log((1.0 + sqrt5) / 2.0);

  bool global;
  if (p.from_cocoercive) {
    global = p.beta >= (3.0 + sqrt5) / 4.0;
  } else {
    global = p.alpha > alpha_lo &&
             p.xi * p.xi <= 1.0 - alpha_lo / p.alpha;
  }
  if (!global && !(p.xi <= 1.0)) {
    r.kind = BoundKind::RLinearLocal;
    r.applicable = false;
    r.not_applicable_reason = "local r-linear rate requires xi <= 1";
    return r;
  }
  r.kind = global ? BoundKind::RLinearGlobal : BoundKind::RLinearLocal;

  long onset = 0;
  if (!global) {
    const double k0 = onset_num / std::log(1.0 / std::sqrt(p.nu)) - 1.0;
    onset = std::max<long>(0, static_cast<long>(std::ceil(k0)));
    r.local_onset_k = onset;
  }

  const double dist0 = q_dist(*trace.metric, trace.iterates.front(), bstar);
  for (long k = 0; k < trace.steps(); ++k) {
    double bound;
    if (p.from_cocoercive) {
      const double c = 2.0 * p.beta - 1.0;
      bound = std::sqrt(2.0 * (p.beta - 1.0)) *
              std::pow(c, -(static_cast<double>(k) - 1.0) / 4.0) * dist0;
    } else {
      bound = std::sqrt(p.alpha * (1.0 - p.nu) / ((1.0 - p.alpha) * p.nu)) *
              std::pow(p.nu, (static_cast<double>(k) + 1.0) / 4.0) * dist0;
    }
    r.bound_value.push_back(bound);
    r.observed.push_back(trace.q_seq_err[k]);
    r.margin.push_back(bound - trace.q_seq_err[k]);
  }
  r.all_satisfied = detail::margins_satisfied(
      r, static_cast<std::size_t>(std::min<long>(onset, trace.steps())));
  return r;
}

/// Fills q_dist_to_sol with |b^k - b*|_Q for k = 0..K-1.
inline void attach_distances(IterationTrace& trace, const Vector& bstar) {
  if (!trace.metric) {
    throw NotAFixedPoint("trace does not reference its metric");
  }
  std::vector<double> dists;
  dists.reserve(trace.q_seq_err.size());
  for (long k = 0; k < trace.steps(); ++k) {
    dists.push_back(q_dist(*trace.metric, trace.iterates[k], bstar));
  }
  trace.q_dist_to_sol = std::move(dists);
}

/// True when the sequential error has reached the stopping threshold and is
/// non-increasing over the last (up to 10) entries.
inline bool asymptotic_regularity(const IterationTrace& trace) {
  if (trace.q_seq_err.size() < 1 || trace.iterates.size() < 2) {
    throw InvalidDimension("asymptotic_regularity needs a trace of length >= 2");
  }
  if (trace.q_seq_err.back() > trace.stop_threshold) return false;
  const std::size_t n = trace.q_seq_err.size();
  const std::size_t window = std::min<std::size_t>(10, n);
  for (std::size_t i = n - window; i + 1 < n; ++i) {
    const double slack = 1e-12 * (1.0 + trace.q_seq_err[i]);
    if (trace.q_seq_err[i + 1] > trace.q_seq_err[i] + slack) return false;
  }
  return true;
}

}  // namespace qop
