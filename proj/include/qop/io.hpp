#pragma once

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qop/certificates.hpp"
#include "qop/certify.hpp"
#include "qop/errors.hpp"
#include "qop/fixed_point.hpp"
#include "qop/metric.hpp"
#include "qop/operator.hpp"
#include "qop/pdhg.hpp"
#include "qop/prox.hpp"
#include "qop/resolvent.hpp"

namespace qop::io {

using nlohmann::json;

/// Plain-text dense matrix: first line the dimension n, then n rows of n
/// whitespace-separated numbers (row-major).
inline Matrix load_dense_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open matrix file: " + path);
  Eigen::Index n = 0;
  if (!(in >> n) || n <= 0) {
    throw ConfigParseError("matrix file " + path + ": bad dimension line");
  }
  Matrix q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(in >> q(i, j))) {
        throw ConfigParseError("matrix file " + path + ": truncated data");
      }
    }
  }
  return q;
}

inline Vector parse_vector(const json& j) {
  if (!j.is_array()) throw ConfigParseError("expected a numeric array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

/// Dense matrix from {"rows": r, "cols": c, "data": [row-major]} or a square
/// {"n": n, "data": [...]}.
inline Matrix parse_matrix(const json& j) {
  Eigen::Index rows, cols;
  if (j.contains("n")) {
    rows = cols = j.at("n").get<Eigen::Index>();
  } else {
    rows = j.at("rows").get<Eigen::Index>();
    cols = j.at("cols").get<Eigen::Index>();
  }
  const auto& data = j.at("data");
  if (!data.is_array() ||
      static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigParseError("matrix data length does not match declared shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) {
      m(i, j2) = data[i * cols + j2].get<double>();
    }
  }
  return m;
}

/// Metric from {"identity": n} | {"file": path} | {"n":, "data":}.
inline Metric parse_metric(const json& j) {
  if (j.contains("identity")) {
    return Metric::identity(j.at("identity").get<Eigen::Index>());
  }
  if (j.contains("file")) {
    return Metric(load_dense_matrix(j.at("file").get<std::string>()));
  }
  return Metric(parse_matrix(j));
}

inline ProxFunction parse_prox_function(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") return QuadraticFn{parse_vector(j.at("p"))};
  if (kind == "l1") return L1Fn{j.value("lambda", 1.0)};
  if (kind == "box") {
    return BoxFn{j.at("lo").get<double>(), j.at("hi").get<double>()};
  }
  throw ConfigParseError("unknown prox function kind: " + kind);
}

inline OperatorHandle parse_operator(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    Matrix m = parse_matrix(j.at("m"));
    Vector c = j.contains("c") ? parse_vector(j.at("c"))
                               : Vector(Vector::Zero(m.rows()));
    return OperatorHandle::affine(std::move(m), std::move(c));
  }
  if (kind == "identity") {
    return OperatorHandle::identity(j.at("n").get<Eigen::Index>());
  }
  throw ConfigParseError("unknown operator kind: " + kind);
}

inline MonotoneSpec parse_monotone_spec(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    Matrix m = parse_matrix(j.at("m"));
    Vector c = j.contains("c") ? parse_vector(j.at("c"))
                               : Vector(Vector::Zero(m.rows()));
    return MonotoneSpec::affine(std::move(m), std::move(c));
  }
  if (kind == "subdifferential") {
    return MonotoneSpec::subdifferential(parse_prox_function(j.at("f")),
                                         j.at("n").get<Eigen::Index>());
  }
  if (kind == "scaled_strong") {
    return MonotoneSpec::scaled_strong(j.at("mu").get<double>(),
                                       parse_monotone_spec(j.at("inner")));
  }
  throw ConfigParseError("unknown monotone spec kind: " + kind);
}

inline SaddleProblem parse_saddle_problem(const json& j) {
  SaddleProblem p{parse_prox_function(j.at("f")),
                  parse_prox_function(j.at("g")), parse_matrix(j.at("a")),
                  j.at("sigma").get<double>(), j.at("tau").get<double>()};
  p.validate();
  return p;
}

inline PropertyKind parse_property(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "partly_nonexpansive") return PartlyNonexpansive{};
  if (kind == "nonexpansive") return Nonexpansive{};
  if (kind == "lipschitz") return LipschitzContinuous{j.at("xi").get<double>()};
  if (kind == "firmly_nonexpansive") return FirmlyNonexpansive{};
  if (kind == "cocoercive") return Cocoercive{j.at("beta").get<double>()};
  if (kind == "averaged") {
    return AveragedClass{j.at("xi").get<double>(), j.at("alpha").get<double>()};
  }
  throw ConfigParseError("unknown property kind: " + kind);
}

inline AveragedCertificate parse_certificate(const json& j) {
  return AveragedCertificate(j.at("xi").get<double>(),
                             j.at("alpha").get<double>());
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline json certificate_to_json(const AveragedCertificate& c,
                                const std::string& metric_id) {
  return json{{"xi", c.xi},
              {"alpha", c.alpha},
              {"metric_id", metric_id},
              {"provenance", c.provenance.describe()}};
}

inline json report_to_json(const CertifyReport& r) {
  json j{{"property", property_name(r.property)},
         {"samples", r.samples},
         {"max_violation", r.max_violation},
         {"verdict", r.pass ? "Pass" : "Fail"},
         {"seed", r.seed},
         {"tolerance", r.tolerance},
         {"worst_index", r.worst_index}};
  if (r.worst_b1.size() > 0) {
    j["worst_b1"] = std::vector<double>(r.worst_b1.begin(), r.worst_b1.end());
    j["worst_b2"] = std::vector<double>(r.worst_b2.begin(), r.worst_b2.end());
  }
  return j;
}

inline const char* bound_kind_name(BoundKind k) {
  switch (k) {
    case BoundKind::PointwiseSqrtK: return "pointwise_sqrt_k";
    case BoundKind::QLinear: return "q_linear";
    case BoundKind::RLinearGlobal: return "r_linear_global";
    case BoundKind::RLinearLocal: return "r_linear_local";
  }
  return "?";
}

/// Trace CSV, schema v1: comment header, then one row per step with the
/// sequential error, distance to the reference point (when available), and
/// one column per enabled bound report. Deterministic byte-for-byte output.
inline void write_trace_csv(std::ostream& out, const IterationTrace& trace,
                            const std::vector<RateBoundReport>& bounds = {}) {
  out << "# qop-trace-v1\n";
  out << "k,seq_err_q,dist_q";
  for (const auto& b : bounds) {
    if (b.applicable) out << ",bound_" << bound_kind_name(b.kind);
  }
  out << "\n";
  for (long k = 0; k < trace.steps(); ++k) {
    out << k << "," << format_double(trace.q_seq_err[k]) << ",";
    if (trace.q_dist_to_sol &&
        k < static_cast<long>(trace.q_dist_to_sol->size())) {
      out << format_double((*trace.q_dist_to_sol)[k]);
    }
    for (const auto& b : bounds) {
      if (!b.applicable) continue;
      out << ",";
      if (b.kind == BoundKind::PointwiseSqrtK ||
          b.kind == BoundKind::RLinearGlobal ||
          b.kind == BoundKind::RLinearLocal) {
        if (k < static_cast<long>(b.bound_value.size())) {
          out << format_double(b.bound_value[k]);
        }
      }
    }
    out << "\n";
  }
}

inline void write_trace_csv_file(const std::string& path,
                                 const IterationTrace& trace,
                                 const std::vector<RateBoundReport>& bounds = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileNotFound("cannot open output file: " + path);
  write_trace_csv(out, trace, bounds);
}

}  // namespace qop::io
