#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "qop/certificates.hpp"
#include "qop/errors.hpp"
#include "qop/metric.hpp"
#include "qop/operator.hpp"

namespace qop {

/// The properties of an operator under a metric that can be checked by
/// sampling. Parameters are the constants in the defining inequalities.
struct PartlyNonexpansive {};
struct Nonexpansive {};
struct LipschitzContinuous {
  double xi;
};
struct FirmlyNonexpansive {};
struct Cocoercive {
  double beta;
};
struct AveragedClass {
  double xi;
  double alpha;
};

using PropertyKind =
    std::variant<PartlyNonexpansive, Nonexpansive, LipschitzContinuous,
                 FirmlyNonexpansive, Cocoercive, AveragedClass>;

inline std::string property_name(const PropertyKind& p) {
  struct V {
    std::string operator()(PartlyNonexpansive) const { return "partly-nonexpansive"; }
    std::string operator()(Nonexpansive) const { return "nonexpansive"; }
    std::string operator()(const LipschitzContinuous& l) const {
      return "lipschitz(" + std::to_string(l.xi) + ")";
    }
    std::string operator()(FirmlyNonexpansive) const { return "firmly-nonexpansive"; }
    std::string operator()(const Cocoercive& c) const {
      return "cocoercive(" + std::to_string(c.beta) + ")";
    }
    std::string operator()(const AveragedClass& a) const {
      return "averaged(" + std::to_string(a.xi) + "," + std::to_string(a.alpha) + ")";
    }
  };
  return std::visit(V{}, p);
}

/// Sampling box for certification draws; uniform per component.
struct SamplingSpec {
  double lo = -10.0;
  double hi = 10.0;
};

/// Outcome of a sampling run. A Pass is an empirical certificate only: it
/// reports that no sampled pair violated the inequality beyond tolerance, not
/// a proof of the universally quantified statement. max_violation is
/// normalized per sample by scale = 1 + ||b1-b2||_Q^2 magnitude.
struct CertifyReport {
  PropertyKind property;
  long samples = 0;
  double max_violation = 0.0;  // normalized; negative means slack everywhere
  Vector worst_b1;
  Vector worst_b2;
  long worst_index = -1;
  bool pass = false;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
};

namespace detail {

/// Portable uniform double in [0,1): top 53 bits of one mt19937_64 draw.
/// Fixed algorithm so reports reproduce across standard libraries.
inline double next_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline Vector sample_vector(std::mt19937_64& gen, Eigen::Index n,
                            const SamplingSpec& box) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = box.lo + (box.hi - box.lo) * next_unit(gen);
  }
  return v;
}

/// Raw violation of the defining inequality at one pair (positive means
/// violated), as "LHS - RHS" for the <=-forms and "RHS - LHS" for the
/// inner-product >= forms.
inline double property_violation(const OperatorHandle& t, const Metric& m,
                                 const PropertyKind& p, const Vector& b1,
                                 const Vector& b2) {
  const Vector d = b1 - b2;
  const Vector td = t(b1) - t(b2);
  struct V {
    const Metric& m;
    const Vector& d;
    const Vector& td;
    double operator()(PartlyNonexpansive) const {
      return q_norm_sq(m, td) - q_inner(m, d, td);
    }
    double operator()(Nonexpansive) const {
      return q_norm_sq(m, td) - q_norm_sq(m, d);
    }
    double operator()(const LipschitzContinuous& l) const {
      return q_norm_sq(m, td) - l.xi * l.xi * q_norm_sq(m, d);
    }
    double operator()(FirmlyNonexpansive) const {
      return q_norm_sq(m, td) + q_norm_sq(m, d - td) - q_norm_sq(m, d);
    }
    double operator()(const Cocoercive& c) const {
      return c.beta * q_norm_sq(m, td) - q_inner(m, d, td);
    }
    double operator()(const AveragedClass& a) const {
      const double nu = 1.0 - a.alpha + a.alpha * a.xi * a.xi;
      return q_norm_sq(m, td) +
             (1.0 - a.alpha) / a.alpha * q_norm_sq(m, d - td) -
             nu * q_norm_sq(m, d);
    }
  };
  return std::visit(V{m, d, td}, p);
}

}  // namespace detail

constexpr double kCertifyTolerance = 1e-8;

/// Draws n_samples pairs i.i.d. from the sampling box with the seeded
/// generator and records the maximum normalized violation of the defining
/// inequality of p. Deterministic and prefix-stable: the first k pairs of a
/// run with n_samples >= k are identical to a run with k samples.
inline CertifyReport certify(const OperatorHandle& t, const Metric& m,
                             const PropertyKind& p, long n_samples,
                             std::uint64_t seed,
                             const SamplingSpec& box = SamplingSpec{}) {
  if (t.n() != m.n()) {
    throw InvalidDimension("certify: operator/metric dimension mismatch");
  }
  if (n_samples < 1) {
    throw InvalidDimension("certify: n_samples must be >= 1");
  }
  std::mt19937_64 gen(seed);
  CertifyReport report;
  report.property = p;
  report.samples = n_samples;
  report.seed = seed;
  report.tolerance = kCertifyTolerance;
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < n_samples; ++i) {
    const Vector b1 = detail::sample_vector(gen, m.n(), box);
    const Vector b2 = detail::sample_vector(gen, m.n(), box);
    const double raw = detail::property_violation(t, m, p, b1, b2);
    const double scale = 1.0 + std::abs(q_norm_sq(m, b1 - b2));
    const double v = raw / scale;
    if (v > report.max_violation) {
      report.max_violation = v;
      report.worst_b1 = b1;
      report.worst_b2 = b2;
      report.worst_index = i;
    }
  }
  report.pass = report.max_violation <= kCertifyTolerance;
  return report;
}

/// The five equivalent forms for a partly nonexpansive T under symmetric Q:
/// (i) T partly nonexpansive, (ii) T firmly nonexpansive, (iii) I-T firmly
/// nonexpansive, (iv) 2T-I nonexpansive, (v) I-T partly nonexpansive under
/// Qt. All five are checked on the same sample set and should agree.
inline std::vector<CertifyReport> certify_equivalences(
    const OperatorHandle& t, const Metric& m, long n_samples,
    std::uint64_t seed, const SamplingSpec& box = SamplingSpec{}) {
  if (!m.is_symmetric()) {
    throw MetricStructureError(
        "certify_equivalences requires a symmetric metric; form (v) alone is "
        "valid for arbitrary Q via certify");
  }
  const auto i_minus_t = t.identity_minus_scaled(1.0);
  const Metric mt = m.transposed();
  std::vector<CertifyReport> reports;
  reports.push_back(certify(t, m, PartlyNonexpansive{}, n_samples, seed, box));
  reports.push_back(certify(t, m, FirmlyNonexpansive{}, n_samples, seed, box));
  reports.push_back(
      certify(i_minus_t, m, FirmlyNonexpansive{}, n_samples, seed, box));
  reports.push_back(
      certify(t.reflected(), m, Nonexpansive{}, n_samples, seed, box));
  reports.push_back(
      certify(i_minus_t, mt, PartlyNonexpansive{}, n_samples, seed, box));
  return reports;
}

}  // namespace qop
