// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver. Three subcommands:
//
//   lrsd generate <spec.json> -o DIR   write a synthetic instance bundle
//   lrsd solve <config.json>           run solvers, write per-run trace CSVs
//   lrsd compare <config.json>         run >= 2 solvers, write combined CSV
//                                      and SVG convergence charts
//
// Exit codes: 0 ok, 2 usage/config/input errors, 3 numeric failures.
// LRSD_THREADS caps worker parallelism (simulated distributed nodes, and
// algorithm-level parallelism under compare --parallel).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrsd/lrsd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON plumbing
// ---------------------------------------------------------------------------

json load_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lrsd::ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw lrsd::ParseError(path.string() + ": " + e.what());
  }
}

void check_keys(const json& obj, const std::string& what,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw lrsd::ArgumentError(what + " must be a JSON object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw lrsd::ArgumentError(what + ": unknown field '" + item.key() + "'");
  }
}

double as_double(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw lrsd::ArgumentError(ctx + " must be a number");
  return j.get<double>();
}

long long as_int(const json& j, const std::string& ctx) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw lrsd::ArgumentError(ctx + " must be an integer");
  return j.get<long long>();
}

std::uint64_t as_u64(const json& j, const std::string& ctx) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const long long v = j.get<long long>();
    if (v < 0) throw lrsd::ArgumentError(ctx + " must be a nonnegative integer");
    return static_cast<std::uint64_t>(v);
  }
  throw lrsd::ArgumentError(ctx + " must be a nonnegative integer");
}

bool as_bool(const json& j, const std::string& ctx) {
  if (!j.is_boolean()) throw lrsd::ArgumentError(ctx + " must be a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) throw lrsd::ArgumentError(ctx + " must be a string");
  return j.get<std::string>();
}

void write_json_file(const fs::path& path, const json& j) {
  lrsd::detail::write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

unsigned thread_cap() {
  const char* env = std::getenv("LRSD_THREADS");
  if (!env) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
  }
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1)
    throw lrsd::ArgumentError("LRSD_THREADS must be a positive integer, got '" +
                              std::string(env) + "'");
  return static_cast<unsigned>(v);
}

// ---------------------------------------------------------------------------
// Generation spec
// ---------------------------------------------------------------------------

lrsd::GenSpec genspec_from_json(const json& j, const std::string& what) {
  check_keys(j, what,
             {"schema", "n", "k", "i", "rho_true", "noise_var", "p_anomaly", "factor_var_p",
              "factor_var_q", "d_density", "r", "seed"});
  if (j.contains("schema") && as_string(j["schema"], what + ".schema") != "lrsd-genspec-v1")
    throw lrsd::ArgumentError(what + ".schema: expected \"lrsd-genspec-v1\"");
  lrsd::GenSpec spec;
  if (j.contains("n")) spec.N = as_int(j["n"], what + ".n");
  if (j.contains("k")) spec.K = as_int(j["k"], what + ".k");
  if (j.contains("i")) spec.I = as_int(j["i"], what + ".i");
  if (j.contains("rho_true")) spec.rho_true = as_int(j["rho_true"], what + ".rho_true");
  if (j.contains("noise_var")) spec.noise_var = as_double(j["noise_var"], what + ".noise_var");
  if (j.contains("p_anomaly")) spec.p_anomaly = as_double(j["p_anomaly"], what + ".p_anomaly");
  if (j.contains("factor_var_p"))
    spec.factor_var_p = as_double(j["factor_var_p"], what + ".factor_var_p");
  if (j.contains("factor_var_q"))
    spec.factor_var_q = as_double(j["factor_var_q"], what + ".factor_var_q");
  if (j.contains("d_density")) spec.d_density = as_double(j["d_density"], what + ".d_density");
  if (j.contains("r")) spec.r = as_double(j["r"], what + ".r");
  if (j.contains("seed")) spec.seed = as_u64(j["seed"], what + ".seed");
  spec.validate();
  return spec;
}

json meta_from_instance(const lrsd::GenSpec& spec, const lrsd::GeneratedInstance& inst) {
  json meta;
  meta["schema"] = "lrsd-meta-v1";
  meta["generator"] = lrsd::kGeneratorId;
  meta["seed"] = spec.seed;
  meta["n"] = spec.N;
  meta["k"] = spec.K;
  meta["i"] = spec.I;
  meta["rho_true"] = spec.rho_true;
  meta["noise_var"] = spec.noise_var;
  meta["p_anomaly"] = spec.p_anomaly;
  meta["d_density"] = spec.d_density;
  meta["r"] = spec.r;
  if (spec.factor_var_p) meta["factor_var_p"] = *spec.factor_var_p;
  if (spec.factor_var_q) meta["factor_var_q"] = *spec.factor_var_q;
  meta["lambda"] = inst.data.lambda;
  meta["mu"] = inst.data.mu;
  meta["files"] = {{"Y", "Y.mat"},
                   {"D", "D.mat"},
                   {"truth_P", "truth_P.mat"},
                   {"truth_Q", "truth_Q.mat"},
                   {"truth_S", "truth_S.mat"}};
  return meta;
}

int cmd_generate(const fs::path& spec_path, const fs::path& out_dir) {
  const lrsd::GenSpec spec = genspec_from_json(load_json(spec_path), "spec");
  const lrsd::GeneratedInstance inst = lrsd::generate(spec);
  fs::create_directories(out_dir);
  lrsd::write_matrix(out_dir / "Y.mat", inst.data.Y);
  lrsd::write_matrix(out_dir / "D.mat", inst.data.D);
  lrsd::write_matrix(out_dir / "truth_P.mat", inst.truth_P);
  lrsd::write_matrix(out_dir / "truth_Q.mat", inst.truth_Q);
  lrsd::write_matrix(out_dir / "truth_S.mat", inst.truth_S);
  write_json_file(out_dir / "meta.json", meta_from_instance(spec, inst));
  std::cout << "wrote " << out_dir.string() << ": Y " << spec.N << "x" << spec.K << ", D "
            << spec.N << "x" << spec.I << ", lambda " << lrsd::format_double(inst.data.lambda)
            << ", mu " << lrsd::format_double(inst.data.mu) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct AlgoSpec {
  std::string algo;  // pbr | bcd | admm | pbr-distributed
  std::string label;
  double delta = 1e-6;
  bool delta_given = false;
  int max_iters = 2000;
  double max_seconds = std::numeric_limits<double>::infinity();
  bool stepsize_exact = true;
  double gamma0 = 1.0;
  double admm_c = 100.0;
  int nodes = 2;
  bool trace_timing = true;
  bool trace_stationarity = true;
};

struct InitSpec {
  bool zeros = false;
  double stddev = 0.1;
  std::uint64_t seed = 1;
};

struct RunConfig {
  std::optional<fs::path> instance_dir;
  std::optional<lrsd::GenSpec> gen;
  fs::path output_dir;
  bool emit_csv = true;
  bool emit_svg = true;
  std::optional<lrsd::Index> rho;
  InitSpec init;
  std::optional<double> fstar_override;
  double ref_budget_factor = 10.0;
  double ref_delta_factor = 1e-3;
  std::vector<AlgoSpec> algos;
};

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (const char ch : label)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_' ||
            ch == '-')
               ? ch
               : '_';
  return out;
}

AlgoSpec algo_from_json(const json& j, std::size_t idx, bool global_timing,
                        bool has_global_timing) {
  const std::string what = "algorithms[" + std::to_string(idx) + "]";
  check_keys(j, what,
             {"algo", "label", "delta", "max_iters", "max_seconds", "stepsize", "c", "nodes",
              "trace_timing", "trace_stationarity"});
  AlgoSpec a;
  if (!j.contains("algo")) throw lrsd::ArgumentError(what + ": missing field 'algo'");
  a.algo = as_string(j["algo"], what + ".algo");
  if (a.algo != "pbr" && a.algo != "bcd" && a.algo != "admm" && a.algo != "pbr-distributed")
    throw lrsd::ArgumentError(what + ".algo: expected pbr, bcd, admm, or pbr-distributed, got '" +
                              a.algo + "'");
  a.label = j.contains("label") ? as_string(j["label"], what + ".label") : a.algo;
  if (has_global_timing) a.trace_timing = global_timing;
  if (j.contains("delta")) {
    a.delta = as_double(j["delta"], what + ".delta");
    a.delta_given = true;
  }
  if (j.contains("max_iters")) {
    const long long v = as_int(j["max_iters"], what + ".max_iters");
    if (v < 0) throw lrsd::ArgumentError(what + ".max_iters must be >= 0");
    a.max_iters = static_cast<int>(v);
  }
  if (j.contains("max_seconds")) a.max_seconds = as_double(j["max_seconds"], what + ".max_seconds");
  if (j.contains("stepsize")) {
    if (a.algo == "bcd" || a.algo == "admm")
      throw lrsd::ArgumentError(what + ".stepsize does not apply to " + a.algo);
    if (j["stepsize"].is_string()) {
      if (j["stepsize"].get<std::string>() != "exact")
        throw lrsd::ArgumentError(what + ".stepsize: expected \"exact\" or a number in (0, 1]");
    } else {
      a.stepsize_exact = false;
      a.gamma0 = as_double(j["stepsize"], what + ".stepsize");
    }
  }
  if (j.contains("c")) {
    if (a.algo != "admm") throw lrsd::ArgumentError(what + ".c only applies to admm");
    a.admm_c = as_double(j["c"], what + ".c");
  }
  if (j.contains("nodes")) {
    if (a.algo != "pbr-distributed")
      throw lrsd::ArgumentError(what + ".nodes only applies to pbr-distributed");
    const long long v = as_int(j["nodes"], what + ".nodes");
    if (v < 1) throw lrsd::ArgumentError(what + ".nodes must be >= 1");
    a.nodes = static_cast<int>(v);
  }
  if (j.contains("trace_timing")) a.trace_timing = as_bool(j["trace_timing"], what + ".trace_timing");
  if (j.contains("trace_stationarity"))
    a.trace_stationarity = as_bool(j["trace_stationarity"], what + ".trace_stationarity");
  if ((a.algo == "bcd" || a.algo == "admm") && a.delta_given)
    std::cerr << "note: " << a.label << ": delta is ignored, " << a.algo
              << " runs are budget-driven\n";
  return a;
}

RunConfig config_from_json(const json& j) {
  check_keys(j, "config",
             {"schema", "instance", "generate", "output_dir", "emit", "rho", "init", "fstar",
              "reference", "trace_timing", "algorithms"});
  if (!j.contains("schema") || as_string(j["schema"], "config.schema") != "lrsd-config-v1")
    throw lrsd::ArgumentError("config.schema: expected \"lrsd-config-v1\"");
  RunConfig cfg;
  if (j.contains("instance") == j.contains("generate"))
    throw lrsd::ArgumentError("config: exactly one of 'instance' or 'generate' is required");
  if (j.contains("instance")) cfg.instance_dir = as_string(j["instance"], "config.instance");
  if (j.contains("generate")) cfg.gen = genspec_from_json(j["generate"], "config.generate");
  if (!j.contains("output_dir"))
    throw lrsd::ArgumentError("config: missing field 'output_dir'");
  cfg.output_dir = as_string(j["output_dir"], "config.output_dir");
  if (j.contains("emit")) {
    if (!j["emit"].is_array()) throw lrsd::ArgumentError("config.emit must be an array");
    cfg.emit_csv = cfg.emit_svg = false;
    for (const auto& e : j["emit"]) {
      const std::string v = as_string(e, "config.emit entry");
      if (v == "csv") cfg.emit_csv = true;
      else if (v == "svg") cfg.emit_svg = true;
      else throw lrsd::ArgumentError("config.emit: expected \"csv\" or \"svg\", got '" + v + "'");
    }
  }
  if (j.contains("rho")) {
    const long long v = as_int(j["rho"], "config.rho");
    if (v < 1) throw lrsd::ArgumentError("config.rho must be >= 1");
    cfg.rho = static_cast<lrsd::Index>(v);
  }
  if (j.contains("init")) {
    const json& init = j["init"];
    check_keys(init, "config.init", {"kind", "std", "seed"});
    const std::string kind =
        init.contains("kind") ? as_string(init["kind"], "config.init.kind") : "gaussian";
    if (kind == "zeros") cfg.init.zeros = true;
    else if (kind != "gaussian")
      throw lrsd::ArgumentError("config.init.kind: expected \"gaussian\" or \"zeros\"");
    if (init.contains("std")) {
      cfg.init.stddev = as_double(init["std"], "config.init.std");
      if (!(cfg.init.stddev > 0.0)) throw lrsd::ArgumentError("config.init.std must be > 0");
    }
    if (init.contains("seed")) cfg.init.seed = as_u64(init["seed"], "config.init.seed");
  }
  if (j.contains("fstar")) cfg.fstar_override = as_double(j["fstar"], "config.fstar");
  if (j.contains("reference")) {
    const json& ref = j["reference"];
    check_keys(ref, "config.reference", {"budget_factor", "delta_factor"});
    if (ref.contains("budget_factor")) {
      cfg.ref_budget_factor = as_double(ref["budget_factor"], "config.reference.budget_factor");
      if (!(cfg.ref_budget_factor > 0.0))
        throw lrsd::ArgumentError("config.reference.budget_factor must be > 0");
    }
    if (ref.contains("delta_factor")) {
      cfg.ref_delta_factor = as_double(ref["delta_factor"], "config.reference.delta_factor");
      if (!(cfg.ref_delta_factor > 0.0))
        throw lrsd::ArgumentError("config.reference.delta_factor must be > 0");
    }
  }
  if (!j.contains("algorithms") || !j["algorithms"].is_array() || j["algorithms"].empty())
    throw lrsd::ArgumentError("config.algorithms must be a nonempty array");
  const bool has_global_timing = j.contains("trace_timing");
  const bool global_timing =
      has_global_timing ? as_bool(j["trace_timing"], "config.trace_timing") : true;
  for (std::size_t idx = 0; idx < j["algorithms"].size(); ++idx)
    cfg.algos.push_back(algo_from_json(j["algorithms"][idx], idx, global_timing,
                                       has_global_timing));

  // Default labels can collide (two pbr entries); disambiguate by position.
  // User-provided duplicates are rejected.
  std::vector<std::string> labels;
  for (std::size_t idx = 0; idx < cfg.algos.size(); ++idx) {
    AlgoSpec& a = cfg.algos[idx];
    a.label = sanitize_label(a.label);
    if (std::count(labels.begin(), labels.end(), a.label) > 0) {
      if (j["algorithms"][idx].contains("label"))
        throw lrsd::ArgumentError("config.algorithms: duplicate label '" + a.label + "'");
      a.label += "-" + std::to_string(idx);
    }
    labels.push_back(a.label);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Instance loading and initialization
// ---------------------------------------------------------------------------

lrsd::ProblemData load_instance(const RunConfig& cfg, json* meta_out) {
  if (cfg.gen) {
    lrsd::GeneratedInstance inst = lrsd::generate(*cfg.gen);
    const lrsd::Index rho = cfg.rho.value_or(cfg.gen->rho_true);
    if (rho == cfg.gen->rho_true) return std::move(inst.data);
    return lrsd::ProblemData(inst.data.Y, inst.data.D, inst.data.lambda, inst.data.mu, rho);
  }
  const fs::path dir = *cfg.instance_dir;
  json meta = load_json(dir / "meta.json");
  if (!meta.contains("lambda") || !meta.contains("mu") || !meta.contains("rho_true"))
    throw lrsd::ParseError((dir / "meta.json").string() +
                           ": missing lambda, mu, or rho_true");
  const double lambda = as_double(meta["lambda"], "meta.lambda");
  const double mu = as_double(meta["mu"], "meta.mu");
  const lrsd::Index rho = cfg.rho.value_or(as_int(meta["rho_true"], "meta.rho_true"));
  lrsd::Matrix Y = lrsd::read_matrix(dir / "Y.mat");
  lrsd::Matrix D = lrsd::read_matrix(dir / "D.mat");
  if (meta_out) *meta_out = std::move(meta);
  return lrsd::ProblemData(std::move(Y), std::move(D), lambda, mu, rho);
}

// Seeded Gaussian start shared by every run in a config; streams are offset
// from the data-generation streams so an instance seed reused as init seed
// cannot alias.
lrsd::FactorState make_init(const lrsd::ProblemData& data, const InitSpec& init) {
  if (init.zeros) return lrsd::FactorState::zeros(data);
  lrsd::FactorState z;
  lrsd::CounterRng rp(init.seed, 11), rq(init.seed, 12), rs(init.seed, 13);
  z.P.resize(data.n(), data.rho);
  for (lrsd::Index i = 0; i < data.n(); ++i)
    for (lrsd::Index j = 0; j < data.rho; ++j) z.P(i, j) = rp.normal(0.0, init.stddev);
  z.Q.resize(data.rho, data.k());
  for (lrsd::Index i = 0; i < data.rho; ++i)
    for (lrsd::Index j = 0; j < data.k(); ++j) z.Q(i, j) = rq.normal(0.0, init.stddev);
  z.S.resize(data.i(), data.k());
  for (lrsd::Index i = 0; i < data.i(); ++i)
    for (lrsd::Index j = 0; j < data.k(); ++j) z.S(i, j) = rs.normal(0.0, init.stddev);
  return z;
}

json init_as_json(const InitSpec& init) {
  if (init.zeros) return json{{"kind", "zeros"}};
  return json{{"kind", "gaussian"}, {"std", init.stddev}, {"seed", init.seed}};
}

// ---------------------------------------------------------------------------
// Reference objective
// ---------------------------------------------------------------------------

// F* for the rel_error column: an extended exact-step run at 10x the largest
// configured budget and a small fraction of the tightest delta. Cached in the
// instance's meta.json keyed by everything the value depends on.
double reference_fstar(const lrsd::ProblemData& data, const lrsd::FactorState& z0,
                       const RunConfig& cfg, json* meta, const fs::path& meta_path) {
  if (cfg.fstar_override) return *cfg.fstar_override;

  int budget = 0;
  double delta_min = std::numeric_limits<double>::infinity();
  for (const AlgoSpec& a : cfg.algos) {
    budget = std::max(budget, a.max_iters);
    if (a.algo == "pbr" || a.algo == "pbr-distributed")
      delta_min = std::min(delta_min, a.delta);
  }
  if (!std::isfinite(delta_min)) delta_min = 1e-6;
  const double ref_budget_d = std::ceil(static_cast<double>(budget) * cfg.ref_budget_factor);
  const int ref_budget = static_cast<int>(std::min(ref_budget_d, 1e8));
  const double ref_delta = delta_min * cfg.ref_delta_factor;

  if (ref_budget < 1) return lrsd::eval_objective(data, z0);

  const json key = {{"rho", data.rho},
                    {"init", init_as_json(cfg.init)},
                    {"max_iters", ref_budget},
                    {"delta", ref_delta}};
  if (meta && meta->contains("reference")) {
    const json& ref = (*meta)["reference"];
    if (ref.contains("key") && ref["key"] == key && ref.contains("fstar"))
      return as_double(ref["fstar"], "meta.reference.fstar");
  }

  lrsd::SolverConfig sc;
  sc.delta = ref_delta;
  sc.max_iters = ref_budget;
  sc.stepsize = lrsd::StepsizeMode::Exact;
  sc.trace_timing = false;
  const lrsd::SolveResult res = lrsd::solve(data, z0, sc);
  const double fstar =
      res.trace.empty() ? lrsd::eval_objective(data, z0) : res.trace.back().objective;

  if (meta && !meta_path.empty()) {
    (*meta)["reference"] = {{"key", key},
                            {"fstar", fstar},
                            {"stop", lrsd::to_string(res.reason)},
                            {"iterations", res.trace.empty() ? 0 : res.trace.back().iter}};
    try {
      write_json_file(meta_path, *meta);
    } catch (const std::exception& e) {
      std::cerr << "note: could not cache reference objective: " << e.what() << "\n";
    }
  }
  return fstar;
}

// ---------------------------------------------------------------------------
// Running algorithms
// ---------------------------------------------------------------------------

struct RunOutput {
  lrsd::FactorState state;
  std::vector<lrsd::IterationTrace> trace;
  std::string reason;
};

RunOutput run_algo(const AlgoSpec& a, const lrsd::ProblemData& data,
                   const lrsd::FactorState& z0, unsigned workers) {
  if (a.algo == "pbr" || a.algo == "pbr-distributed") {
    lrsd::SolverConfig sc;
    sc.delta = a.delta;
    sc.max_iters = a.max_iters;
    sc.stepsize = a.stepsize_exact ? lrsd::StepsizeMode::Exact : lrsd::StepsizeMode::Constant;
    sc.gamma0 = a.gamma0;
    sc.trace_timing = a.trace_timing;
    if (a.algo == "pbr") {
      lrsd::SolveResult res = lrsd::solve(data, z0, sc);
      return {std::move(res.state), std::move(res.trace), lrsd::to_string(res.reason)};
    }
    lrsd::DistributedResult res = lrsd::distributed_solve(data, z0, sc, a.nodes, workers);
    return {std::move(res.state), std::move(res.trace), lrsd::to_string(res.reason)};
  }
  lrsd::BaselineBudget budget{a.max_iters, a.max_seconds};
  lrsd::BaselineOptions opts;
  opts.admm_c = a.admm_c;
  opts.trace_timing = a.trace_timing;
  opts.trace_stationarity = a.trace_stationarity;
  lrsd::BaselineResult res = lrsd::run_baseline(
      data, z0, a.algo == "bcd" ? lrsd::BaselineAlgo::Bcd : lrsd::BaselineAlgo::Admm, budget,
      opts);
  return {std::move(res.state), std::move(res.trace), "budget"};
}

std::string run_comment(const AlgoSpec& a, const RunOutput& out) {
  std::string comment = "algo=" + a.label + " kind=" + a.algo;
  if (a.algo == "pbr-distributed") comment += " nodes=" + std::to_string(a.nodes);
  if (a.algo == "admm") comment += " c=" + lrsd::format_double(a.admm_c);
  comment += " stop=" + out.reason;
  return comment;
}

void write_final_state(const fs::path& dir, const std::string& label, const RunOutput& out) {
  lrsd::write_matrix(dir / (label + ".P.mat"), out.state.P);
  lrsd::write_matrix(dir / (label + ".Q.mat"), out.state.Q);
  lrsd::write_matrix(dir / (label + ".S.mat"), out.state.S);
}

int cmd_solve(const fs::path& config_path) {
  const RunConfig cfg = config_from_json(load_json(config_path));
  json meta;
  const lrsd::ProblemData data = load_instance(cfg, &meta);
  const lrsd::FactorState z0 = make_init(data, cfg.init);
  const fs::path meta_path =
      cfg.instance_dir ? (*cfg.instance_dir / "meta.json") : fs::path();
  const double fstar =
      reference_fstar(data, z0, cfg, cfg.instance_dir ? &meta : nullptr, meta_path);
  const unsigned workers = thread_cap();

  fs::create_directories(cfg.output_dir);
  for (const AlgoSpec& a : cfg.algos) {
    const RunOutput out = run_algo(a, data, z0, workers);
    if (cfg.emit_csv)
      lrsd::write_trace_csv(cfg.output_dir / (a.label + ".csv"), out.trace, fstar,
                            run_comment(a, out));
    write_final_state(cfg.output_dir, a.label, out);
    const double final_obj =
        out.trace.empty() ? lrsd::eval_objective(data, z0) : out.trace.back().objective;
    std::cout << a.label << ": stop=" << out.reason << " rows=" << out.trace.size()
              << " objective=" << lrsd::format_double(final_obj)
              << " rel_error=" << lrsd::format_double(lrsd::relative_error(final_obj, fstar))
              << "\n";
  }
  return 0;
}

int cmd_compare(const fs::path& config_path, bool parallel) {
  const RunConfig cfg = config_from_json(load_json(config_path));
  if (cfg.algos.size() < 2)
    throw lrsd::ArgumentError("compare needs at least 2 algorithms, got " +
                              std::to_string(cfg.algos.size()));
  json meta;
  const lrsd::ProblemData data = load_instance(cfg, &meta);
  const lrsd::FactorState z0 = make_init(data, cfg.init);
  const unsigned workers = thread_cap();

  std::vector<RunOutput> outputs(cfg.algos.size());
  if (parallel) {
    std::cerr << "warning: --parallel runs algorithms concurrently; elapsed_seconds is not "
                 "comparable across runs\n";
    lrsd::detail::for_each_node(static_cast<int>(cfg.algos.size()), workers, [&](int idx) {
      outputs[idx] = run_algo(cfg.algos[idx], data, z0, 1);
    });
  } else {
    for (std::size_t idx = 0; idx < cfg.algos.size(); ++idx)
      outputs[idx] = run_algo(cfg.algos[idx], data, z0, workers);
  }

  // Cross-algorithm reference: the smallest final objective over all runs.
  double fstar = std::numeric_limits<double>::infinity();
  for (const RunOutput& out : outputs) {
    const double final_obj =
        out.trace.empty() ? lrsd::eval_objective(data, z0) : out.trace.back().objective;
    fstar = std::min(fstar, final_obj);
  }

  fs::create_directories(cfg.output_dir);
  std::vector<std::pair<std::string, std::vector<lrsd::IterationTrace>>> runs;
  for (std::size_t idx = 0; idx < cfg.algos.size(); ++idx)
    runs.emplace_back(cfg.algos[idx].label, outputs[idx].trace);

  std::string comment = "runs=" + std::to_string(runs.size());
  if (cfg.emit_csv) lrsd::write_compare_csv(cfg.output_dir / "compare.csv", runs, fstar, comment);

  if (cfg.emit_svg) {
    const std::string footer =
        "F* = " + lrsd::format_double(fstar) +
        " (smallest final objective across runs); monotonic process clock";
    std::vector<lrsd::ChartSeries> by_iter, by_time;
    for (const auto& [label, trace] : runs) {
      lrsd::ChartSeries si{label, {}}, st{label, {}};
      for (const lrsd::IterationTrace& row : trace) {
        const double rel = lrsd::relative_error(row.objective, fstar);
        si.points.emplace_back(static_cast<double>(row.iter), rel);
        st.points.emplace_back(row.elapsed_seconds, rel);
      }
      by_iter.push_back(std::move(si));
      by_time.push_back(std::move(st));
    }
    lrsd::write_svg_chart(cfg.output_dir / "rel_error_vs_iteration.svg",
                          "Relative objective error vs iteration", "iteration",
                          "relative error", by_iter, footer);
    lrsd::write_svg_chart(cfg.output_dir / "rel_error_vs_time.svg",
                          "Relative objective error vs time", "seconds", "relative error",
                          by_time, footer);
  }

  for (std::size_t idx = 0; idx < cfg.algos.size(); ++idx) {
    const RunOutput& out = outputs[idx];
    const double final_obj =
        out.trace.empty() ? lrsd::eval_objective(data, z0) : out.trace.back().objective;
    std::cout << cfg.algos[idx].label << ": stop=" << out.reason
              << " rows=" << out.trace.size()
              << " objective=" << lrsd::format_double(final_obj)
              << " rel_error=" << lrsd::format_double(lrsd::relative_error(final_obj, fstar))
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank plus dictionary-sparse decomposition toolkit"};
  app.require_subcommand(1);

  std::string gen_spec, gen_out;
  CLI::App* gen = app.add_subcommand("generate", "write a synthetic instance bundle");
  gen->add_option("spec", gen_spec, "generation spec JSON")->required();
  gen->add_option("-o,--output", gen_out, "output directory")->required();

  std::string solve_config;
  CLI::App* solve = app.add_subcommand("solve", "run solvers, write trace CSVs");
  solve->add_option("config", solve_config, "run config JSON")->required();

  std::string compare_config;
  bool compare_parallel = false;
  CLI::App* compare =
      app.add_subcommand("compare", "run >= 2 solvers, write combined CSV and SVG charts");
  compare->add_option("config", compare_config, "run config JSON")->required();
  compare->add_flag("--parallel", compare_parallel,
                    "run algorithms concurrently (invalidates wall-time comparisons)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_spec, gen_out);
    if (solve->parsed()) return cmd_solve(solve_config);
    return cmd_compare(compare_config, compare_parallel);
  } catch (const lrsd::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const lrsd::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
