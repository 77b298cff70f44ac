#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <conjlab/conjugacy.hpp>
#include <conjlab/dynsys.hpp>
#include <conjlab/entropy.hpp>
#include <conjlab/errors.hpp>
#include <conjlab/grid.hpp>
#include <conjlab/json_io.hpp>
#include <conjlab/numeric.hpp>
#include <conjlab/series.hpp>

namespace conjlab {
namespace cli {

// Built-in scenario bundles; the files under presets/ mirror these strings
// byte for byte (a test enforces it).
inline const std::map<std::string, std::string>& preset_table() {
  static const std::map<std::string, std::string> table = {
      {"geom", R"({"command":"series","params":{"N":60,"c":"zeros","rho":0.5}})"},
      {"example-2-2",
       R"({"command":"entropy","params":{"generator":"inverse_square","op":"divergence_diagnostic","schedule":[10,100,1000,10000,100000,1000000,10000000]}})"},
      {"przyk",
       R"({"command":"entropy","params":{"generator":"inverse_n_log_sq","op":"divergence_diagnostic","schedule":[100,10000,1000000,10000000]}})"},
      {"theorem-2cycle",
       R"({"command":"verify","params":{"N":60,"c":"zeros","phi":[-0.6931471805599453,-0.6931471805599453],"system":{"map":[1,0],"p":1,"states":2}}})"},
      {"theorem-lowdim",
       R"({"command":"verify","params":{"N":1,"c":[0.0,0.0],"phi":[-0.7],"system":{"map":[0],"p":1,"states":1}}})"},
      {"logexp-remark",
       R"({"command":"conjugate","params":{"axes":[{"count":161,"hi":4,"lo":-4},{"count":161,"hi":4,"lo":-4}],"dual_axes":[{"count":41,"hi":1,"lo":0},{"count":41,"hi":1,"lo":0}],"f":{"builtin":"logsumexp2"}}})"},
  };
  return table;
}

struct Invocation {
  std::string command;
  json params;
  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  int threads = 1;
};

struct Output {
  json report;
  std::string csv;  // empty when the command has no csv rendering
};

namespace detail {

inline void require_key(const json& params, const std::string& key) {
  if (!params.contains(key)) throw ConfigInvalid("missing key \"" + key + "\"");
}

inline double require_number(const json& params, const std::string& key) {
  require_key(params, key);
  if (!params[key].is_number()) throw ConfigInvalid("\"" + key + "\" must be a number");
  return params[key].get<double>();
}

inline std::size_t require_order(const json& params, const std::string& key) {
  require_key(params, key);
  if (!params[key].is_number_integer() || params[key].get<long long>() < 0)
    throw ConfigInvalid("\"" + key + "\" must be a nonnegative integer");
  return params[key].get<std::size_t>();
}

inline std::string require_string(const json& params, const std::string& key) {
  require_key(params, key);
  if (!params[key].is_string()) throw ConfigInvalid("\"" + key + "\" must be a string");
  return params[key].get<std::string>();
}

inline std::string kv_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : rows) out += k + "," + v + "\n";
  return out;
}

// --- series --------------------------------------------------------------

inline Output run_series(const Invocation& inv) {
  const json& p = inv.params;
  CoefficientSeq c = coefficients_from_json(p, "c", "N");
  std::size_t N = require_order(p, "N");
  double rho = require_number(p, "rho");
  if (!(rho > 0.0)) throw ConfigInvalid("NonPositiveRho", "rho must be > 0, got " + format_real(rho));
  if (N > c.trunc_n())
    throw ConfigInvalid("TruncationMismatch", "N exceeds the coefficient truncation order");

  double lp = log_partition(c, rho, N);
  SimplexWeights t = gibbs_maximizer(c, rho, N);
  double mean = mean_index(t);
  json head = json::array();
  for (std::size_t n = 0; n < std::min<std::size_t>(10, N + 1); ++n) head.push_back(t[n]);

  Output out;
  out.report = json{{"command", "series"},
                    {"log_partition", lp},
                    {"maximizer_head", head},
                    {"mean_index", mean},
                    {"inputs", json{{"N", N}, {"rho", rho}}},
                    {"tolerances", json{{"maximizer_sum", 1e-14}, {"summation", 1e-12}}}};
  std::vector<std::pair<std::string, std::string>> rows = {
      {"log_partition", format_real(lp)}, {"mean_index", format_real(mean)}};
  for (std::size_t n = 0; n < head.size(); ++n)
    rows.push_back({"t" + std::to_string(n), format_real(head[n].get<double>())});
  out.csv = kv_csv(rows);
  return out;
}

// --- entropy -------------------------------------------------------------

inline Output run_entropy(const Invocation& inv) {
  const json& p = inv.params;
  std::string op = require_string(p, "op");
  Output out;

  if (op == "neg_entropy" || op == "relative_entropy" || op == "g_r") {
    require_key(p, "t");
    std::vector<double> raw = real_vector_from_json(p["t"], "t");
    if (op == "g_r") {
      double rho = require_number(p, "rho");
      if (!(rho > 0.0) || !(rho < 1.0))
        throw ConfigInvalid("RhoOutOfRange", "rho must lie in (0,1), got " + format_real(rho));
      double v = g_r(raw, rho);
      out.report = json{{"command", "entropy"},
                        {"op", op},
                        {"value", v},
                        {"tolerances", json{{"summation", 1e-12}}}};
      out.csv = kv_csv({{"g_r", format_real(v)}});
      return out;
    }
    SimplexWeights t{raw};
    double v;
    if (op == "neg_entropy") {
      v = neg_entropy(t);
    } else {
      require_key(p, "ref");
      CoefficientSeq ref(real_vector_from_json(p["ref"], "ref"));
      v = relative_entropy(t, ref);
    }
    out.report = json{{"command", "entropy"},
                      {"op", op},
                      {"value", v},
                      {"tolerances", json{{"summation", 1e-12}}}};
    out.csv = kv_csv({{op, format_real(v)}});
    return out;
  }

  if (op == "tilted_min_entropy") {
    CoefficientSeq a_log = coefficients_from_json(p, "a_log", "N");
    std::size_t N = require_order(p, "N");
    double target = require_number(p, "target_mean");
    if (N > a_log.trunc_n())
      throw ConfigInvalid("TruncationMismatch", "N exceeds the coefficient truncation order");
    if (!(target >= 0.0) || !(target <= static_cast<double>(N)))
      throw ConfigInvalid("TargetMeanOutOfRange",
                          "target_mean " + format_real(target) + " outside [0, " + std::to_string(N) + "]");
    TiltedSolution sol = tilted_min_entropy(a_log, target, N);
    out.report = json{{"command", "entropy"},
                      {"op", op},
                      {"value", sol.value},
                      {"tilt", sol.tilt},
                      {"weights", sol.weights.weights()},
                      {"tolerances", json{{"mean_match", 1e-10}, {"bracket", 1e-13}}}};
    std::vector<std::pair<std::string, std::string>> rows = {{"value", format_real(sol.value)},
                                                             {"tilt", format_real(sol.tilt)}};
    for (std::size_t n = 0; n <= sol.weights.trunc_n(); ++n)
      rows.push_back({"t" + std::to_string(n), format_real(sol.weights[n])});
    out.csv = kv_csv(rows);
    return out;
  }

  if (op == "divergence_diagnostic") {
    std::string gen_name = require_string(p, "generator");
    SeriesGenerator gen;
    if (gen_name == "inverse_square") {
      gen = SeriesGenerator::inverse_square;
    } else if (gen_name == "inverse_n_log_sq") {
      gen = SeriesGenerator::inverse_n_log_sq;
    } else {
      throw ConfigInvalid("\"generator\" must be inverse_square or inverse_n_log_sq");
    }
    require_key(p, "schedule");
    if (!p["schedule"].is_array() || p["schedule"].empty())
      throw ConfigInvalid("EmptySchedule", "\"schedule\" must be a nonempty integer array");
    std::vector<std::int64_t> schedule;
    for (std::size_t i = 0; i < p["schedule"].size(); ++i) {
      if (!p["schedule"][i].is_number_integer())
        throw ConfigInvalid("\"schedule\" entry at index " + std::to_string(i) +
                            " must be an integer");
      schedule.push_back(p["schedule"][i].get<std::int64_t>());
      if (i > 0 && schedule[i] <= schedule[i - 1])
        throw ConfigInvalid("ScheduleNotIncreasing",
                            "schedule must be strictly increasing at position " + std::to_string(i));
    }
    PartialSumTrace trace = divergence_diagnostic(gen, schedule, inv.threads);
    out.report = json{{"command", "entropy"},
                      {"op", op},
                      {"generator", gen_name},
                      {"trace", trace_to_json(trace)},
                      {"tolerances", json{{"chunk_merge", 1e-9}}}};
    out.csv = trace_to_csv(trace);
    return out;
  }

  throw ConfigInvalid("unknown entropy op \"" + op + "\"");
}

// --- conjugate -----------------------------------------------------------

inline std::vector<GridAxis> axes_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty())
    throw ConfigInvalid("\"" + key + "\" must be a nonempty array of axes");
  std::vector<GridAxis> axes;
  for (const json& ja : j) axes.push_back(axis_from_json(ja));
  return axes;
}

inline Output run_conjugate(const Invocation& inv) {
  const json& p = inv.params;
  require_key(p, "f");
  require_key(p, "dual_axes");
  std::vector<GridAxis> dual_axes = axes_from_json(p["dual_axes"], "dual_axes");

  GriddedFunction f = [&]() -> GriddedFunction {
    const json& jf = p["f"];
    if (jf.is_object() && jf.contains("builtin")) {
      std::string name = require_string(jf, "builtin");
      require_key(p, "axes");
      std::vector<GridAxis> axes = axes_from_json(p["axes"], "axes");
      if (name == "logsumexp2") {
        if (axes.size() != 2) throw ConfigInvalid("logsumexp2 needs exactly 2 axes");
        return GriddedFunction::sample(axes, [](std::span<const double> x) {
          double hi = std::max(x[0], x[1]);
          return hi + std::log(std::exp(x[0] - hi) + std::exp(x[1] - hi));
        });
      }
      if (name == "half_square") {
        return GriddedFunction::sample(axes, [](std::span<const double> x) {
          double acc = 0.0;
          for (double v : x) acc += 0.5 * v * v;
          return acc;
        });
      }
      throw ConfigInvalid("unknown builtin \"" + name + "\"");
    }
    if (jf.is_object() && jf.contains("header") && jf.contains("values")) {
      std::vector<GridAxis> axes = axes_from_json(jf["header"]["axes"], "axes");
      std::vector<double> values;
      for (const json& v : jf["values"]) {
        if (v.is_string()) {
          values.push_back(parse_real(v.get<std::string>()));
        } else if (v.is_number()) {
          values.push_back(v.get<double>());
        } else {
          throw ConfigInvalid("\"values\" entries must be numbers or \"+inf\"");
        }
      }
      return GriddedFunction(std::move(axes), std::move(values));
    }
    throw ConfigInvalid("\"f\" must hold a builtin name or header+values");
  }();

  std::string op = p.contains("op") ? require_string(p, "op") : "conjugate";
  GriddedFunction result = [&]() {
    if (op == "conjugate") return conjugate_grid(f, dual_axes, inv.threads);
    if (op == "biconjugate") {
      std::vector<GridAxis> primal =
          p.contains("primal_axes") ? axes_from_json(p["primal_axes"], "primal_axes") : f.axes();
      return biconjugate_grid(f, dual_axes, primal, inv.threads);
    }
    throw ConfigInvalid("\"op\" must be conjugate or biconjugate");
  }();

  json steps = json::array(), dual_steps = json::array();
  for (const GridAxis& ax : f.axes()) steps.push_back(ax.step());
  for (const GridAxis& ax : result.axes()) dual_steps.push_back(ax.step());

  Output out;
  out.report = json{{"command", "conjugate"},
                    {"op", op},
                    {"header", grid_header_json(result)},
                    {"values", result.values()},
                    {"tolerances", json{{"grid_step", steps}, {"result_step", dual_steps}}}};
  out.csv = grid_to_csv(result);
  return out;
}

// --- dynsys --------------------------------------------------------------

inline Output run_dynsys(const Invocation& inv) {
  const json& p = inv.params;
  std::string op = require_string(p, "op");
  require_key(p, "system");
  FiniteDynSystem sys = system_from_json(p["system"]);
  Output out;

  if (op == "spectral_exponent") {
    require_key(p, "phi");
    WeightFunction phi = phi_from_json(p["phi"]);
    double rho = spectral_radius(transfer_matrix(sys, phi));
    double lam = rho > 0.0 ? std::log(rho) : kNegInf;
    out.report = json{{"command", "dynsys"},
                      {"op", op},
                      {"spectral_radius", rho},
                      {"spectral_exponent", lam},
                      {"tolerances", json{{"spectral_radius_rel", 1e-10}}}};
    out.csv = kv_csv({{"spectral_radius", format_real(rho)},
                      {"spectral_exponent", format_real(lam)}});
    return out;
  }

  if (op == "hull") {
    std::vector<FiniteMeasure> hull = invariant_measure_hull(sys);
    json vertices = json::array();
    for (const FiniteMeasure& nu : hull) vertices.push_back(nu.mass());
    out.report = json{{"command", "dynsys"},
                      {"op", op},
                      {"vertices", vertices},
                      {"tolerances", json{{"exact", 0.0}}}};
    std::string csv = "vertex,state,mass\n";
    for (std::size_t j = 0; j < hull.size(); ++j)
      for (std::size_t x = 0; x < hull[j].size(); ++x)
        csv += std::to_string(j) + "," + std::to_string(x) + "," + format_real(hull[j][x]) + "\n";
    out.csv = csv;
    return out;
  }

  if (op == "lambda_star") {
    require_key(p, "nu");
    FiniteMeasure nu(real_vector_from_json(p["nu"], "nu"));
    GridAxis box = p.contains("box") ? axis_from_json(p["box"]) : GridAxis{-2.0, 2.0, 41};
    LambdaConjugateEstimate est = lambda_conjugate_numeric(sys, nu, box, inv.threads);
    out.report = json{{"command", "dynsys"},
                      {"op", op},
                      {"value", est.value},
                      {"box_radius", est.box_radius},
                      {"saturated", est.saturated},
                      {"tolerances", json{{"grid_step", box.step()}}}};
    out.csv = kv_csv({{"value", format_real(est.value)},
                      {"box_radius", format_real(est.box_radius)},
                      {"saturated", est.saturated ? "1" : "0"}});
    return out;
  }

  if (op == "operator_series") {
    require_key(p, "phi");
    WeightFunction phi = phi_from_json(p["phi"]);
    CoefficientSeq c = coefficients_from_json(p, "c", "N");
    std::size_t N = require_order(p, "N");
    if (N > c.trunc_n())
      throw ConfigInvalid("TruncationMismatch", "N exceeds the coefficient truncation order");
    OperatorSeriesRadius r = operator_series_radius(c, sys, phi, N);
    out.report = json{{"command", "dynsys"},
                      {"op", op},
                      {"via_matrix", r.via_matrix},
                      {"via_scalar", r.via_scalar},
                      {"difference", r.via_matrix - r.via_scalar},
                      {"tolerances", json{{"spectral_radius_rel", 1e-10}}}};
    out.csv = kv_csv({{"via_matrix", format_real(r.via_matrix)},
                      {"via_scalar", format_real(r.via_scalar)}});
    return out;
  }

  throw ConfigInvalid("unknown dynsys op \"" + op + "\"");
}

// --- verify --------------------------------------------------------------

inline Output run_verify(const Invocation& inv) {
  const json& p = inv.params;
  CoefficientSeq c = coefficients_from_json(p, "c", "N");
  std::size_t N = require_order(p, "N");
  require_key(p, "system");
  FiniteDynSystem sys = system_from_json(p["system"]);
  require_key(p, "phi");
  WeightFunction phi = phi_from_json(p["phi"]);
  if (N > c.trunc_n())
    throw ConfigInvalid("TruncationMismatch", "N exceeds the coefficient truncation order");

  VerifyOptions options;
  if (p.contains("options")) {
    const json& jo = p["options"];
    if (!jo.is_object()) throw ConfigInvalid("\"options\" must be an object");
    if (jo.contains("gap_probes")) options.gap_probes = require_order(jo, "gap_probes");
    if (jo.contains("bruteforce_probes"))
      options.bruteforce_probes = require_order(jo, "bruteforce_probes");
    if (jo.contains("coeff_axis")) options.coeff_axis = axis_from_json(jo["coeff_axis"]);
    if (jo.contains("phi_axis")) options.phi_axis = axis_from_json(jo["phi_axis"]);
    if (jo.contains("bruteforce_max_dim"))
      options.bruteforce_max_dim = require_order(jo, "bruteforce_max_dim");
  }

  ConjugacyReport rep = verify_hat_conjugacy(c, sys, phi, N, options, inv.seed);

  json probes = json::array();
  for (const ProbeRecord& pr : rep.probes) probes.push_back({{"gap", pr.gap}, {"mean", pr.mean}});
  json brute = rep.bruteforce_max_discrepancy ? json(*rep.bruteforce_max_discrepancy) : json();
  Output out;
  out.report = json{{"command", "verify"},
                    {"lambda_hat", rep.lambda_hat},
                    {"fenchel_young_min_gap", rep.fenchel_young_min_gap},
                    {"attainment_residual", rep.attainment_residual},
                    {"bruteforce_max_discrepancy", brute},
                    {"probes", probes},
                    {"tolerances", json{{"fenchel_young_gap", 1e-8},
                                        {"attainment", 1e-8},
                                        {"bruteforce", 5e-2},
                                        {"hull_membership", kHullTol},
                                        {"mass_match", kMeanMatchTol}}}};
  std::vector<std::pair<std::string, std::string>> rows = {
      {"lambda_hat", format_real(rep.lambda_hat)},
      {"fenchel_young_min_gap", format_real(rep.fenchel_young_min_gap)},
      {"attainment_residual", format_real(rep.attainment_residual)}};
  if (rep.bruteforce_max_discrepancy)
    rows.push_back({"bruteforce_max_discrepancy", format_real(*rep.bruteforce_max_discrepancy)});
  out.csv = kv_csv(rows);
  return out;
}

}  // namespace detail

inline Output execute(const Invocation& inv) {
  if (inv.command == "series") return detail::run_series(inv);
  if (inv.command == "entropy") return detail::run_entropy(inv);
  if (inv.command == "conjugate") return detail::run_conjugate(inv);
  if (inv.command == "dynsys") return detail::run_dynsys(inv);
  if (inv.command == "verify") return detail::run_verify(inv);
  throw ConfigInvalid("unknown command \"" + inv.command + "\"");
}

inline json resolve_params(const std::string& command, json params) {
  if (params.contains("preset")) {
    if (!params["preset"].is_string()) throw ConfigInvalid("\"preset\" must be a string");
    std::string name = params["preset"].get<std::string>();
    auto it = preset_table().find(name);
    if (it == preset_table().end()) throw ConfigInvalid("unknown preset \"" + name + "\"");
    json preset = json::parse(it->second);
    if (preset["command"].get<std::string>() != command)
      throw ConfigInvalid("preset \"" + name + "\" belongs to command " +
                          preset["command"].get<std::string>());
    json merged = preset["params"];
    for (const auto& [key, val] : params.items())
      if (key != "preset") merged[key] = val;
    return merged;
  }
  return params;
}

// Parses and runs one invocation. Exit status: 0 success, 1 config error,
// 2 domain error.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"numerical convex-analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_path, format = "json";
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<CLI::App*> subs;
  for (const char* name : {"series", "entropy", "conjugate", "dynsys", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "path to a JSON config");
    sub->add_option("--preset", preset_name, "name of a built-in scenario");
    sub->add_option("--out", out_path, "write the report to this path");
    sub->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", seed);
    sub->add_option("--threads", threads)->check(CLI::Range(1, 256));
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s", dump_json_17(json{{"error", "ConfigInvalid"},
                                                 {"detail", e.what()}}).c_str());
    return 1;
  }

  Invocation inv;
  CLI::App* active = nullptr;
  for (CLI::App* sub : subs)
    if (sub->parsed()) {
      active = sub;
      inv.command = sub->get_name();
    }

  try {
    if (!config_path.empty() && !preset_name.empty())
      throw ConfigInvalid("use --config or --preset, not both");
    json params;
    if (!preset_name.empty()) {
      params = json{{"preset", preset_name}};
    } else if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigInvalid("cannot open config file " + config_path);
      std::ostringstream buf;
      buf << in.rdbuf();
      json file;
      try {
        file = json::parse(buf.str());
      } catch (const json::parse_error& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
      }
      if (!file.is_object()) throw ConfigInvalid("config must be a JSON object");
      if (file.contains("params")) {
        if (file.contains("command") &&
            (!file["command"].is_string() || file["command"].get<std::string>() != inv.command))
          throw ConfigInvalid("config command does not match invocation " + inv.command);
        params = file["params"];
        if (file.contains("seed") && active->count("--seed") == 0) {
          if (!file["seed"].is_number_integer())
            throw ConfigInvalid("\"seed\" must be an integer");
          seed = file["seed"].get<std::uint64_t>();
        }
        if (file.contains("output_path") && out_path.empty()) {
          if (!file["output_path"].is_string())
            throw ConfigInvalid("\"output_path\" must be a string");
          out_path = file["output_path"].get<std::string>();
        }
        if (file.contains("format") && active->count("--format") == 0) {
          if (!file["format"].is_string() ||
              (file["format"] != "json" && file["format"] != "csv"))
            throw ConfigInvalid("\"format\" must be json or csv");
          format = file["format"].get<std::string>();
        }
      } else {
        params = file;
      }
    } else {
      throw ConfigInvalid("provide --config or --preset");
    }
    inv.params = resolve_params(inv.command, params);
    inv.out_path = out_path;
    inv.format = format;
    inv.seed = seed;
    inv.threads = threads;
  } catch (const Error& e) {
    std::fprintf(stderr, "%s",
                 dump_json_17(json{{"error", e.code()}, {"detail", e.what()}}).c_str());
    return 1;
  }

  Output output;
  try {
    output = execute(inv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s",
                 dump_json_17(json{{"error", e.code()}, {"detail", e.what()}}).c_str());
    return 1;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "%s",
                 dump_json_17(json{{"error", e.code()}, {"detail", e.what()}}).c_str());
    return 2;
  }

  std::string payload =
      inv.format == "csv" ? output.csv : dump_json_17(output.report);
  if (!inv.out_path.empty()) {
    std::ofstream file(inv.out_path, std::ios::binary);
    if (!file) {
      std::fprintf(stderr, "%s",
                   dump_json_17(json{{"error", "ConfigInvalid"},
                                     {"detail", "cannot write " + inv.out_path}}).c_str());
      return 1;
    }
    file << payload;
    std::printf("%s", dump_json_17(json{{"status", "ok"},
                                        {"written", json::array({inv.out_path})}}).c_str());
  } else {
    std::printf("%s", payload.c_str());
  }
  return 0;
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cli
}  // namespace conjlab
