#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "qop/errors.hpp"
#include "qop/metric.hpp"

namespace qop {

/// Catalog of convex functions with closed-form proximal operators.
/// h(x) = 1/2 |x - p|^2
struct QuadraticFn {
  Vector p;
};
/// h(x) = lambda |x|_1
struct L1Fn {
  double lambda = 1.0;
};
/// Indicator of the box [lo, hi]^n
struct BoxFn {
  double lo;
  double hi;
};

using ProxFunction = std::variant<QuadraticFn, L1Fn, BoxFn>;

inline std::string prox_function_name(const ProxFunction& f) {
  struct V {
    std::string operator()(const QuadraticFn&) const { return "quadratic"; }
    std::string operator()(const L1Fn& l) const {
      return "l1(" + std::to_string(l.lambda) + ")";
    }
    std::string operator()(const BoxFn& b) const {
      return "box[" + std::to_string(b.lo) + "," + std::to_string(b.hi) + "]";
    }
  };
  return std::visit(V{}, f);
}

/// prox_{t h}(v) = argmin_z h(z) + 1/(2t) |z - v|^2.
inline Vector prox(const ProxFunction& f, double step, const Vector& v) {
  if (!(step > 0.0)) {
    throw RuleNotApplicable("prox step must be positive");
  }
  struct V {
    double t;
    const Vector& v;
    Vector operator()(const QuadraticFn& q) const {
      if (q.p.size() != v.size()) {
        throw InvalidDimension("prox(quadratic): dimension mismatch");
      }
      return (v + t * q.p) / (1.0 + t);
    }
    Vector operator()(const L1Fn& l) const {
      const double thr = t * l.lambda;
      Vector z(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        z(i) = std::copysign(std::max(0.0, std::abs(v(i)) - thr), v(i));
      }
      return z;
    }
    Vector operator()(const BoxFn& b) const {
      return v.cwiseMax(b.lo).cwiseMin(b.hi);
    }
  };
  return std::visit(V{step, v}, f);
}

/// prox of the Fenchel conjugate via the Moreau decomposition:
///   prox_{s h*}(v) = v - s prox_{h/s}(v/s).
inline Vector prox_conjugate(const ProxFunction& f, double sigma,
                             const Vector& v) {
  return v - sigma * prox(f, 1.0 / sigma, v / sigma);
}

/// prox of the Fenchel conjugate by its own closed form, without going
/// through the Moreau decomposition:
///   quadratic 1/2|y-p|^2: h*(s) = 1/2|s|^2 + <p,s>, prox = (v - s p)/(1+s);
///   lambda |.|_1:         h* = indicator of [-lambda, lambda]^n;
///   box indicator:        h* = support function, piecewise-linear prox.
inline Vector prox_conjugate_direct(const ProxFunction& f, double sigma,
                                    const Vector& v) {
  if (!(sigma > 0.0)) {
    throw RuleNotApplicable("prox step must be positive");
  }
  struct V {
    double s;
    const Vector& v;
    Vector operator()(const QuadraticFn& q) const {
      if (q.p.size() != v.size()) {
        throw InvalidDimension("prox_conjugate_direct(quadratic): dimension");
      }
      return (v - s * q.p) / (1.0 + s);
    }
    Vector operator()(const L1Fn& l) const {
      return v.cwiseMax(-l.lambda).cwiseMin(l.lambda);
    }
    Vector operator()(const BoxFn& b) const {
      Vector z(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) > s * b.hi) {
          z(i) = v(i) - s * b.hi;
        } else if (v(i) < s * b.lo) {
          z(i) = v(i) - s * b.lo;
        } else {
          z(i) = 0.0;
        }
      }
      return z;
    }
  };
  return std::visit(V{sigma, v}, f);
}

/// Euclidean distance from g to the subdifferential of h at z. Exact for the
/// catalog functions; used for inclusion-residual checks.
inline double subgradient_distance(const ProxFunction& f, const Vector& z,
                                   const Vector& g) {
  if (z.size() != g.size()) {
    throw InvalidDimension("subgradient_distance: dimension mismatch");
  }
  struct V {
    const Vector& z;
    const Vector& g;
    double operator()(const QuadraticFn& q) const {
      if (q.p.size() != z.size()) {
        throw InvalidDimension("subgradient_distance(quadratic): dimension");
      }
      return (g - (z - q.p)).norm();
    }
    double operator()(const L1Fn& l) const {
      // componentwise: {lambda sign(z_i)} when z_i != 0, else [-lambda, lambda]
      double s = 0.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        double d;
        if (z(i) > 0.0) {
          d = g(i) - l.lambda;
        } else if (z(i) < 0.0) {
          d = g(i) + l.lambda;
        } else {
          d = std::max(0.0, std::abs(g(i)) - l.lambda);
        }
        s += d * d;
      }
      return std::sqrt(s);
    }
    double operator()(const BoxFn& b) const {
      // normal cone of the box at z
      double s = 0.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        double d;
        if (z(i) < b.lo || z(i) > b.hi) {
          d = std::numeric_limits<double>::infinity();
        } else {
          const bool at_lo = z(i) <= b.lo;
          const bool at_hi = z(i) >= b.hi;
          if (at_lo && at_hi) {
            d = 0.0;  // degenerate box, any g admissible
          } else if (at_lo) {
            d = std::max(0.0, g(i));  // cone is (-inf, 0]
          } else if (at_hi) {
            d = std::max(0.0, -g(i));  // cone is [0, inf)
          } else {
            d = g(i);
          }
        }
        s += d * d;
      }
      return std::sqrt(s);
    }
  };
  return std::visit(V{z, g}, f);
}

/// Distance from g to the subdifferential of the conjugate h* at v, by the
/// closed form of each conjugate. A tiny band around set boundaries keeps the
/// check stable when v itself was computed in floating point.
inline double conjugate_subgradient_distance(const ProxFunction& f,
                                             const Vector& v, const Vector& g) {
  if (v.size() != g.size()) {
    throw InvalidDimension("conjugate_subgradient_distance: dimension mismatch");
  }
  struct V {
    const Vector& v;
    const Vector& g;
    // h = 1/2 |x-p|^2: h*(s) = 1/2|s|^2 + <p,s>, dh*(v) = {v + p}
    double operator()(const QuadraticFn& q) const {
      if (q.p.size() != v.size()) {
        throw InvalidDimension("conjugate_subgradient_distance(quadratic)");
      }
      return (g - (v + q.p)).norm();
    }
    // h = lambda |.|_1: h* is the indicator of [-lambda, lambda]^n, dh* is
    // its normal cone
    double operator()(const L1Fn& l) const {
      const double band = 1e-12 * (1.0 + std::abs(l.lambda));
      double s = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        double d;
        if (v(i) > l.lambda + band || v(i) < -l.lambda - band) {
          d = std::numeric_limits<double>::infinity();
        } else {
          const bool at_hi = v(i) >= l.lambda - band;
          const bool at_lo = v(i) <= -l.lambda + band;
          if (at_hi && at_lo) {
            d = 0.0;
          } else if (at_hi) {
            d = std::max(0.0, -g(i));
          } else if (at_lo) {
            d = std::max(0.0, g(i));
          } else {
            d = g(i);
          }
        }
        s += d * d;
      }
      return std::sqrt(s);
    }
    // h = indicator of [lo, hi]^n: h* is its support function,
    // dh*(v)_i = {hi} for v_i > 0, {lo} for v_i < 0, [lo, hi] at 0
    double operator()(const BoxFn& b) const {
      const double band =
          1e-12 * (1.0 + std::max(std::abs(b.lo), std::abs(b.hi)));
      double s = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        double d;
        if (v(i) > band) {
          d = g(i) - b.hi;
        } else if (v(i) < -band) {
          d = g(i) - b.lo;
        } else {
          d = std::max({0.0, g(i) - b.hi, b.lo - g(i)});
        }
        s += d * d;
      }
      return std::sqrt(s);
    }
  };
  return std::visit(V{v, g}, f);
}

}  // namespace qop
