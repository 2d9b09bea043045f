#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "qop/errors.hpp"
#include "qop/metric.hpp"

namespace qop {

/// Affine map b -> M b + c.
struct AffineData {
  Matrix m;
  Vector c;
};

/// A deterministic map R^n -> R^n. Evaluation is pure; handles are immutable
/// value objects. When the map is affine the (M, c) data is kept alongside the
/// evaluator so that downstream code (fixed-point solves, certificate checks)
/// can use the closed form. The algebraic combinators below preserve
/// affine-ness.
class OperatorHandle {
 public:
  using EvalFn = std::function<Vector(const Vector&)>;

  static OperatorHandle identity(Eigen::Index n) {
    return affine(Matrix::Identity(n, n), Vector::Zero(n), "identity");
  }

  static OperatorHandle zero(Eigen::Index n) {
    return affine(Matrix::Zero(n, n), Vector::Zero(n), "zero");
  }

  static OperatorHandle affine(Matrix m, Vector c, std::string name = "affine") {
    if (m.rows() != m.cols() || m.rows() != c.size()) {
      throw InvalidDimension("affine operator: inconsistent dimensions");
    }
    OperatorHandle h;
    h.n_ = m.rows();
    h.name_ = std::move(name);
    auto data = std::make_shared<AffineData>(AffineData{std::move(m), std::move(c)});
    h.affine_ = data;
    h.eval_ = [data](const Vector& b) -> Vector { return data->m * b + data->c; };
    return h;
  }

  static OperatorHandle from_function(Eigen::Index n, EvalFn f,
                                      std::string name = "callable") {
    OperatorHandle h;
    h.n_ = n;
    h.name_ = std::move(name);
    h.eval_ = std::move(f);
    return h;
  }

  Vector operator()(const Vector& b) const {
    if (b.size() != n_) {
      throw InvalidDimension("operator '" + name_ + "': input dimension " +
                             std::to_string(b.size()) + " != " +
                             std::to_string(n_));
    }
    return eval_(b);
  }

  Eigen::Index n() const { return n_; }
  const std::string& name() const { return name_; }
  bool is_affine() const { return affine_ != nullptr; }
  const AffineData& affine_data() const {
    if (!affine_) throw UnsupportedPairing("operator '" + name_ + "' is not affine");
    return *affine_;
  }

  /// (1-g) I + g T.
  OperatorHandle relaxed(double gamma) const {
    if (affine_) {
      const auto& a = *affine_;
      Matrix m = (1.0 - gamma) * Matrix::Identity(n_, n_) + gamma * a.m;
      return affine(std::move(m), gamma * a.c, "relaxed(" + name_ + ")");
    }
    auto self = *this;
    return from_function(
        n_,
        [self, gamma](const Vector& b) -> Vector {
          return (1.0 - gamma) * b + gamma * self(b);
        },
        "relaxed(" + name_ + ")");
  }

  /// I - g T.
  OperatorHandle identity_minus_scaled(double gamma) const {
    if (affine_) {
      const auto& a = *affine_;
      Matrix m = Matrix::Identity(n_, n_) - gamma * a.m;
      return affine(std::move(m), -gamma * a.c, "shifted(" + name_ + ")");
    }
    auto self = *this;
    return from_function(
        n_,
        [self, gamma](const Vector& b) -> Vector { return b - gamma * self(b); },
        "shifted(" + name_ + ")");
  }

  /// 2T - I.
  OperatorHandle reflected() const {
    if (affine_) {
      const auto& a = *affine_;
      Matrix m = 2.0 * a.m - Matrix::Identity(n_, n_);
      return affine(std::move(m), 2.0 * a.c, "reflected(" + name_ + ")");
    }
    auto self = *this;
    return from_function(
        n_, [self](const Vector& b) -> Vector { return 2.0 * self(b) - b; },
        "reflected(" + name_ + ")");
  }

  /// this after other: b -> T(S b).
  OperatorHandle compose(const OperatorHandle& other) const {
    if (other.n_ != n_) {
      throw InvalidDimension("compose: dimension mismatch");
    }
    if (affine_ && other.affine_) {
      const auto& t = *affine_;
      const auto& s = *other.affine_;
      return affine(t.m * s.m, t.m * s.c + t.c,
                    name_ + "*" + other.name_);
    }
    auto self = *this;
    auto inner = other;
    return from_function(
        n_, [self, inner](const Vector& b) -> Vector { return self(inner(b)); },
        name_ + "*" + other.name_);
  }

 private:
  OperatorHandle() = default;

  Eigen::Index n_ = 0;
  std::string name_;
  EvalFn eval_;
  std::shared_ptr<const AffineData> affine_;
};

}  // namespace qop
