#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qop/errors.hpp"
#include "qop/metric.hpp"
#include "qop/operator.hpp"

namespace qop {

/// How a certificate came to be: asserted by the caller, derived from another
/// certificate by a calculus rule, or empirically certified by sampling.
struct Provenance {
  enum class Kind { Asserted, DerivedByRule, Certified };

  Kind kind = Kind::Asserted;
  std::string rule;                       // DerivedByRule only
  std::shared_ptr<const Provenance> parent;  // DerivedByRule only
  long samples = 0;                       // Certified only
  double max_violation = 0.0;             // Certified only

  static Provenance asserted() { return {}; }
  static Provenance derived(std::string rule_name, Provenance parent_prov) {
    Provenance p;
    p.kind = Kind::DerivedByRule;
    p.rule = std::move(rule_name);
    p.parent = std::make_shared<Provenance>(std::move(parent_prov));
    return p;
  }
  static Provenance certified(long samples, double max_violation) {
    Provenance p;
    p.kind = Kind::Certified;
    p.samples = samples;
    p.max_violation = max_violation;
    return p;
  }

  /// "asserted" / "derived(rule)<-..." / "certified(n,v)" chain.
  std::string describe() const {
    switch (kind) {
      case Kind::Asserted:
        return "asserted";
      case Kind::Certified:
        return "certified(" + std::to_string(samples) + "," +
               std::to_string(max_violation) + ")";
      case Kind::DerivedByRule: {
        std::string s = "derived(" + rule + ")";
        if (parent) s += "<-" + parent->describe();
        return s;
      }
    }
    return "?";
  }
};

/// Claim: T = (1-alpha) I + alpha K with K xi-Lipschitz under the metric.
/// Strongly averaged when xi <= 1, weakly averaged when xi > 1.
struct AveragedCertificate {
  double xi;
  double alpha;
  Provenance provenance;

  AveragedCertificate(double xi_, double alpha_,
                      Provenance prov = Provenance::asserted())
      : xi(xi_), alpha(alpha_), provenance(std::move(prov)) {
    if (!(xi > 0.0)) throw RuleNotApplicable("certificate requires xi > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw RuleNotApplicable("certificate requires alpha in (0,1)");
    }
  }

  bool strongly_averaged() const { return xi <= 1.0; }
  bool weakly_averaged() const { return xi > 1.0; }
};

/// Claim: <b1-b2 | Tb1-Tb2>_Q >= beta |Tb1-Tb2|_Q^2 for all pairs.
struct CocoercivityCertificate {
  double beta;
  Provenance provenance;

  explicit CocoercivityCertificate(double beta_,
                                   Provenance prov = Provenance::asserted())
      : beta(beta_), provenance(std::move(prov)) {
    if (!(beta > 0.0)) throw RuleNotApplicable("cocoercivity requires beta > 0");
  }
};

/// RHS - LHS of the defining inequality of the (xi, alpha) class at a sample
/// pair:
///   (1-a+a xi^2)|b1-b2|_Q^2 - (1-a)/a |(I-T)b1-(I-T)b2|_Q^2 - |Tb1-Tb2|_Q^2.
/// Nonnegative (within tolerance) whenever the certificate is valid at the
/// pair.
inline double fclass_gap(const OperatorHandle& t, const Metric& m,
                         const AveragedCertificate& cert, const Vector& b1,
                         const Vector& b2) {
  detail::check_dim(m, b1, "fclass_gap");
  detail::check_dim(m, b2, "fclass_gap");
  const Vector d = b1 - b2;
  const Vector td = t(b1) - t(b2);
  const Vector rd = d - td;
  const double a = cert.alpha;
  const double nu = 1.0 - a + a * cert.xi * cert.xi;
  return nu * q_norm_sq(m, d) - (1.0 - a) / a * q_norm_sq(m, rd) -
         q_norm_sq(m, td);
}

/// Normalization for fclass_gap tolerances: 1 + sum of term magnitudes.
inline double fclass_gap_scale(const OperatorHandle& t, const Metric& m,
                               const AveragedCertificate& cert,
                               const Vector& b1, const Vector& b2) {
  const Vector d = b1 - b2;
  const Vector td = t(b1) - t(b2);
  const Vector rd = d - td;
  const double a = cert.alpha;
  const double nu = 1.0 - a + a * cert.xi * cert.xi;
  return 1.0 + std::abs(nu * q_norm_sq(m, d)) +
         std::abs((1.0 - a) / a * q_norm_sq(m, rd)) +
         std::abs(q_norm_sq(m, td));
}

/// Cocoercivity of T from its (xi, alpha) class: beta = (1 + 1/(1-a+a xi^2))/2.
/// Needs xi <= (1-a)/a and a symmetric PSD metric.
inline CocoercivityCertificate cocoercivity_from_class(
    const AveragedCertificate& cert, const Metric& m) {
  if (!(m.is_symmetric() && m.is_psd())) {
    throw MetricStructureError(
        "cocoercivity_from_class requires a symmetric PSD metric");
  }
  if (!(cert.xi <= (1.0 - cert.alpha) / cert.alpha)) {
    throw RuleNotApplicable("cocoercivity_from_class requires xi <= (1-a)/a");
  }
  const double nu = 1.0 - cert.alpha + cert.alpha * cert.xi * cert.xi;
  return CocoercivityCertificate(0.5 * (1.0 + 1.0 / nu),
                                 Provenance::derived("t_lip_iii", cert.provenance));
}

/// (xi, alpha) class of a beta-cocoercive T with beta > 1/2 and symmetric
/// metric: xi = 1/(2b-1), alpha = 1 - 1/(2b).
inline AveragedCertificate class_from_cocoercive(
    const CocoercivityCertificate& c, const Metric& m) {
  if (!m.is_symmetric()) {
    throw MetricStructureError("class_from_cocoercive requires a symmetric metric");
  }
  if (!(c.beta > 0.5)) {
    throw RuleNotApplicable("class_from_cocoercive requires beta > 1/2");
  }
  return AveragedCertificate(1.0 / (2.0 * c.beta - 1.0),
                             1.0 - 1.0 / (2.0 * c.beta),
                             Provenance::derived("l_cocoercive_i", c.provenance));
}

/// Certificate for I - g T: (a xi/(1-a), g(1-a)), valid for g in (0, 1/(1-a)).
inline AveragedCertificate subtract_scaled(const AveragedCertificate& cert,
                                           double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0 / (1.0 - cert.alpha))) {
    throw RuleNotApplicable("subtract_scaled requires gamma in (0, 1/(1-a))");
  }
  return AveragedCertificate(cert.alpha * cert.xi / (1.0 - cert.alpha),
                             gamma * (1.0 - cert.alpha),
                             Provenance::derived("t_lip_iv", cert.provenance));
}

/// Certificate for 2T - I: (xi, 2a), valid for a in (0, 1/2).
inline AveragedCertificate reflect(const AveragedCertificate& cert) {
  if (!(cert.alpha < 0.5)) {
    throw RuleNotApplicable("reflect requires alpha < 1/2");
  }
  return AveragedCertificate(cert.xi, 2.0 * cert.alpha,
                             Provenance::derived("t_lip_vii", cert.provenance));
}

/// Certificate for (1-g) I + g T: (1, g a). Stated for xi = 1 only; needs
/// g in (0, 1/a).
inline AveragedCertificate relax(const AveragedCertificate& cert, double gamma) {
  if (cert.xi != 1.0) {
    throw RuleNotApplicable("relax is stated for xi = 1 only");
  }
  if (!(gamma > 0.0 && gamma < 1.0 / cert.alpha)) {
    throw RuleNotApplicable("relax requires gamma in (0, 1/a)");
  }
  return AveragedCertificate(1.0, gamma * cert.alpha,
                             Provenance::derived("l_average_iv", cert.provenance));
}

/// One leaf of the regime tree for a (xi, alpha) class member.
struct RegimeLeaf {
  std::optional<double> cocoercive_beta;  // nullopt when unclassified
  bool firmly_nonexpansive = false;
  bool strongly_averaged = false;
  bool weakly_averaged = false;
  bool classified = false;
};

struct RegimeReport {
  RegimeLeaf op;                       // leaf for T itself
  std::optional<RegimeLeaf> shifted;   // leaf for I - gamma T, when requested
  std::optional<AveragedCertificate> shifted_cert;
};

namespace detail {

inline RegimeLeaf regime_leaf(double xi, double alpha) {
  RegimeLeaf leaf;
  leaf.strongly_averaged = xi <= 1.0;
  leaf.weakly_averaged = xi > 1.0;
  if (xi <= (1.0 - alpha) / alpha) {
    const double nu = 1.0 - alpha + alpha * xi * xi;
    leaf.cocoercive_beta = 0.5 * (1.0 + 1.0 / nu);
    leaf.firmly_nonexpansive = xi <= 1.0 || alpha >= 0.5;
    leaf.classified = true;
  }
  return leaf;
}

}  // namespace detail

/// Regime classification of T (and optionally I - gamma T) under a symmetric
/// PSD metric, decided exactly by the thresholds xi <= (1-a)/a, xi <= 1,
/// a >= 1/2, gamma < 1/(2(1-a)), xi <= 1/(gamma a) - (1-a)/a.
inline RegimeReport classify_regime(const AveragedCertificate& cert,
                                    const Metric& m,
                                    std::optional<double> gamma = std::nullopt) {
  if (!(m.is_symmetric() && m.is_psd())) {
    throw MetricStructureError("classify_regime requires a symmetric PSD metric");
  }
  RegimeReport report;
  report.op = detail::regime_leaf(cert.xi, cert.alpha);
  if (gamma) {
    const double g = *gamma;
    auto shifted = subtract_scaled(cert, g);  // throws if g out of range
    report.shifted_cert = shifted;
    RegimeLeaf leaf;
    leaf.strongly_averaged = shifted.xi <= 1.0;
    leaf.weakly_averaged = shifted.xi > 1.0;
    const double a = cert.alpha;
    const double xi = cert.xi;
    if (xi <= 1.0 / (g * a) - (1.0 - a) / a) {
      const double nup =
          1.0 - shifted.alpha + shifted.alpha * shifted.xi * shifted.xi;
      leaf.cocoercive_beta = 0.5 * (1.0 + 1.0 / nup);
      leaf.classified = true;
      if (g < 1.0 / (2.0 * (1.0 - a))) {
        leaf.firmly_nonexpansive = xi <= (1.0 - a) / a;
      } else {
        leaf.firmly_nonexpansive = true;
      }
    }
    report.shifted = leaf;
  }
  return report;
}

}  // namespace qop
