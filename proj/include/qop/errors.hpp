#pragma once

#include <stdexcept>
#include <string>

namespace qop {

struct InvalidDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RuleNotApplicable : std::domain_error {
  using std::domain_error::domain_error;
};

struct MetricStructureError : std::domain_error {
  using std::domain_error::domain_error;
};

// Iteration produced a non-finite iterate; `iteration` is the step index.
struct DivergenceDetected : std::runtime_error {
  int iteration;
  explicit DivergenceDetected(int k)
      : std::runtime_error("non-finite iterate at step " + std::to_string(k)),
        iteration(k) {}
};

struct NotAFixedPoint : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NoUniqueFixedPoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FixedPointNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularResolvent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedPairing : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qop
