// Config-driven experiment runner for the qop library.
//
// Verbs: certify, iterate, resolvent, pdhg, regime, batch.
// Exit codes: 0 ok, 2 config error, 3 contract violation, 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qop/certificates.hpp"
#include "qop/certify.hpp"
#include "qop/errors.hpp"
#include "qop/fixed_point.hpp"
#include "qop/io.hpp"
#include "qop/metric.hpp"
#include "qop/operator.hpp"
#include "qop/pdhg.hpp"
#include "qop/resolvent.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitContractViolation = 3;
constexpr int kExitNumericalFailure = 4;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> samples;
  std::optional<double> stop_tol;
  std::string out_dir = ".";
};

qop::io::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qop::FileNotFound("cannot open config file: " + path);
  qop::io::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw qop::ConfigParseError(std::string("config parse error: ") + e.what());
  }
  return j;
}

std::string output_path(const Overrides& ov, const qop::io::json& cfg,
                        const char* fallback) {
  const std::string name = cfg.value("output", std::string(fallback));
  return (std::filesystem::path(ov.out_dir) / name).string();
}

int run_certify(const qop::io::json& cfg, const Overrides& ov,
                std::ostream& out) {
  const auto metric = qop::io::parse_metric(cfg.at("metric"));
  const auto op = qop::io::parse_operator(cfg.at("operator"));
  const auto seed = ov.seed.value_or(cfg.value("seed", std::uint64_t{1}));
  const auto samples = ov.samples.value_or(cfg.value("n_samples", 1000L));

  std::vector<qop::CertifyReport> reports;
  if (cfg.contains("properties")) {
    for (const auto& pj : cfg.at("properties")) {
      reports.push_back(qop::certify(op, metric, qop::io::parse_property(pj),
                                     samples, seed));
    }
  } else {
    reports.push_back(qop::certify(
        op, metric, qop::io::parse_property(cfg.at("property")), samples, seed));
  }

  out << "property,verdict,max_violation,samples,seed\n";
  bool all_pass = true;
  for (const auto& r : reports) {
    out << qop::property_name(r.property) << ","
        << (r.pass ? "Pass" : "Fail") << ","
        << qop::io::format_double(r.max_violation) << "," << r.samples << ","
        << r.seed << "\n";
    all_pass = all_pass && r.pass;
  }
  if (cfg.value("expect_pass", false) && !all_pass) {
    std::cerr << "certification failed but config expected Pass\n";
    return kExitContractViolation;
  }
  return kExitOk;
}

std::vector<qop::RateBoundReport> evaluate_bounds(
    const qop::IterationTrace& trace, const qop::Vector& bstar) {
  std::vector<qop::RateBoundReport> bounds;
  bounds.push_back(qop::pointwise_bound(trace, bstar));
  bounds.push_back(qop::qlinear_report(trace, bstar));
  bounds.push_back(qop::rlinear_report(trace, bstar));
  return bounds;
}

int report_and_write_trace(qop::IterationTrace& trace, const qop::io::json& cfg,
                           const Overrides& ov, std::ostream& out) {
  std::vector<qop::RateBoundReport> bounds;
  bool bounds_ok = true;
  if (trace.averaged_cert || trace.cocoercive_cert) {
    try {
      const qop::Vector bstar =
          qop::reference_fixed_point(*trace.op, *trace.metric);
      qop::attach_distances(trace, bstar);
      bounds = evaluate_bounds(trace, bstar);
      for (const auto& b : bounds) {
        out << "bound " << qop::io::bound_kind_name(b.kind) << ": "
            << (b.applicable ? (b.all_satisfied ? "satisfied" : "VIOLATED")
                             : ("n/a (" + b.not_applicable_reason + ")"))
            << "\n";
        bounds_ok = bounds_ok && (!b.applicable || b.all_satisfied);
      }
    } catch (const qop::NoUniqueFixedPoint& e) {
      out << "bounds skipped: " << e.what() << "\n";
    }
  }
  const auto path = output_path(ov, cfg, "trace.csv");
  qop::io::write_trace_csv_file(path, trace, bounds);
  out << "steps " << trace.steps() << "\n";
  out << "trace written to " << path << "\n";
  return bounds_ok ? kExitOk : kExitContractViolation;
}

int run_iterate(const qop::io::json& cfg, const Overrides& ov,
                std::ostream& out) {
  const auto metric = qop::io::parse_metric(cfg.at("metric"));
  const auto op = qop::io::parse_operator(cfg.at("operator"));
  const auto b0 = qop::io::parse_vector(cfg.at("b0"));
  qop::IterationOptions opts;
  opts.max_iter = cfg.value("max_iter", 10000L);
  opts.stop_tol = ov.stop_tol.value_or(cfg.value("stop_tol", 1e-12));

  qop::IterationTrace trace;
  const auto scheme = cfg.value("scheme", std::string("banach_picard"));
  if (scheme == "banach_picard") {
    trace = qop::banach_picard(op, metric, b0, opts);
  } else if (scheme == "km") {
    trace = qop::krasnoselskii_mann(op, metric, cfg.at("gamma").get<double>(),
                                    b0, opts);
  } else {
    throw qop::ConfigParseError("unknown scheme: " + scheme);
  }
  if (cfg.contains("certificate")) {
    trace.averaged_cert = qop::io::parse_certificate(cfg.at("certificate"));
  }
  return report_and_write_trace(trace, cfg, ov, out);
}

int run_resolvent(const qop::io::json& cfg, const Overrides& ov,
                  std::ostream& out) {
  const auto metric = qop::io::parse_metric(cfg.at("metric"));
  const auto spec = qop::io::parse_monotone_spec(cfg.at("monotone"));
  const qop::ResolventHandle r(spec, metric);
  const auto b0 = qop::io::parse_vector(cfg.at("b0"));
  qop::IterationOptions opts;
  opts.max_iter = cfg.value("max_iter", 10000L);
  opts.stop_tol = ov.stop_tol.value_or(cfg.value("stop_tol", 1e-12));

  auto trace = cfg.contains("gamma")
                   ? qop::rppa(r, cfg.at("gamma").get<double>(), b0, opts)
                   : qop::ppa(r, b0, opts);
  if (metric.is_symmetric()) {
    const auto certs = qop::resolvent_certificate(r);
    trace.averaged_cert = certs.op;
    out << qop::io::certificate_to_json(certs.op,
                                        cfg.value("metric_id", "inline"))
               .dump()
        << "\n";
  }
  // per-step inclusion residual contract
  for (std::size_t k = 0; k + 1 < trace.iterates.size(); ++k) {
    const auto& b = trace.iterates[k];
    const auto& z = trace.iterates[k + 1];
    if (trace.scheme == qop::IterationScheme::BanachPicard) {
      const double res = r.inclusion_residual(b, z);
      if (res > 1e-9 * (1.0 + b.norm())) {
        std::cerr << "inclusion residual " << res << " exceeded at step " << k
                  << "\n";
        return kExitContractViolation;
      }
    }
  }
  return report_and_write_trace(trace, cfg, ov, out);
}

int run_pdhg(const qop::io::json& cfg, const Overrides& ov, std::ostream& out) {
  const auto p = qop::io::parse_saddle_problem(cfg.at("problem"));
  qop::PdhgState st0{qop::Vector::Zero(p.dual_dim()),
                     qop::Vector::Zero(p.primal_dim())};
  if (cfg.contains("s0")) st0.s = qop::io::parse_vector(cfg.at("s0"));
  if (cfg.contains("x0")) st0.x = qop::io::parse_vector(cfg.at("x0"));
  qop::IterationOptions opts;
  opts.max_iter = cfg.value("max_iter", 10000L);
  opts.stop_tol = ov.stop_tol.value_or(cfg.value("stop_tol", 1e-12));

  const double eq = qop::pdhg_resolvent_equivalence(p, st0);
  const double eq_scale =
      1.0 + std::max(st0.s.size() ? st0.s.cwiseAbs().maxCoeff() : 0.0,
                     st0.x.size() ? st0.x.cwiseAbs().maxCoeff() : 0.0);
  out << "resolvent equivalence residual " << qop::io::format_double(eq)
      << "\n";
  if (eq > 1e-10 * eq_scale) {
    std::cerr << "pdhg/resolvent equivalence contract violated\n";
    return kExitContractViolation;
  }
  out << "block metric PD: " << (p.steps_admissible() ? "yes" : "no") << "\n";

  auto trace = qop::pdhg_run(p, st0, opts);
  return report_and_write_trace(trace, cfg, ov, out);
}

int run_regime(const qop::io::json& cfg, const Overrides&, std::ostream& out) {
  const auto metric = qop::io::parse_metric(cfg.at("metric"));
  const auto cert = qop::io::parse_certificate(cfg.at("certificate"));
  std::optional<double> gamma;
  if (cfg.contains("gamma")) gamma = cfg.at("gamma").get<double>();
  const auto report = qop::classify_regime(cert, metric, gamma);

  auto print_leaf = [&out](const char* who, const qop::RegimeLeaf& leaf) {
    out << who << ": ";
    if (!leaf.classified) {
      out << "unclassified";
    } else {
      out << "beta=" << qop::io::format_double(*leaf.cocoercive_beta)
          << (leaf.firmly_nonexpansive ? " FNE" : " non-FNE");
    }
    out << (leaf.strongly_averaged ? " strongly-averaged" : " weakly-averaged")
        << "\n";
  };
  print_leaf("T", report.op);
  if (report.shifted) print_leaf("I-gamma*T", *report.shifted);
  return kExitOk;
}

int dispatch(const std::string& verb, const qop::io::json& cfg,
             const Overrides& ov, std::ostream& out);

int run_batch(const qop::io::json& cfg, const Overrides& ov,
              std::ostream& out) {
  const auto& experiments = cfg.at("experiments");
  std::vector<std::future<std::pair<int, std::string>>> futures;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    qop::io::json sub = experiments[i];
    Overrides sub_ov = ov;
    futures.push_back(std::async(std::launch::async, [sub, sub_ov, i]() {
      std::ostringstream local;
      int rc;
      try {
        rc = dispatch(sub.at("experiment").get<std::string>(), sub, sub_ov,
                      local);
      } catch (const std::exception& e) {
        local << "error: " << e.what() << "\n";
        rc = kExitNumericalFailure;
      }
      return std::make_pair(rc, "[" + std::to_string(i) + "] " + local.str());
    }));
  }
  int worst = kExitOk;
  for (auto& f : futures) {
    auto [rc, text] = f.get();
    out << text;
    worst = std::max(worst, rc);
  }
  return worst;
}

int dispatch(const std::string& verb, const qop::io::json& cfg,
             const Overrides& ov, std::ostream& out) {
  if (verb == "certify") return run_certify(cfg, ov, out);
  if (verb == "iterate" || verb == "banach_picard" || verb == "km") {
    return run_iterate(cfg, ov, out);
  }
  if (verb == "resolvent" || verb == "ppa" || verb == "rppa") {
    return run_resolvent(cfg, ov, out);
  }
  if (verb == "pdhg") return run_pdhg(cfg, ov, out);
  if (verb == "regime") return run_regime(cfg, ov, out);
  if (verb == "batch") return run_batch(cfg, ov, out);
  throw qop::ConfigParseError("unknown experiment kind: " + verb);
}

int run_verb(const std::string& verb, const std::string& config_path,
             const Overrides& ov) {
  try {
    const auto cfg = load_config(config_path);
    return dispatch(verb, cfg, ov, std::cout);
  } catch (const qop::ConfigParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const qop::FileNotFound& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const qop::io::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const qop::DivergenceDetected& e) {
    std::cerr << "DivergenceDetected: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variable-metric operator calculus experiment runner"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  app.add_option("--out-dir", ov.out_dir, "directory for output files");

  std::optional<std::uint64_t> seed;
  std::optional<long> samples;
  std::optional<double> stop_tol;
  app.add_option("--seed", seed, "override the sampling seed");
  app.add_option("--samples", samples, "override the sample count");
  app.add_option("--stop-tol", stop_tol, "override the stopping tolerance");

  std::vector<std::string> verbs = {"certify", "iterate", "resolvent",
                                    "pdhg",    "regime",  "batch"};
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
  }

  CLI11_PARSE(app, argc, argv);
  ov.seed = seed;
  ov.samples = samples;
  ov.stop_tol = stop_tol;

  const auto& chosen = app.get_subcommands().front()->get_name();
  return run_verb(chosen, config_path, ov);
}
