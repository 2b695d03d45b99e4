#pragma once

// mpbl command-line front end: fit, bootstrap, simulate, diagnose.
//
// Settings come from an optional JSON config (--config) overridden by
// flags. The fully resolved config is printed as JSON before any work is
// done; feeding that JSON back through --config reproduces the run.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mpbl/mpbl.hpp"

namespace mpbl::cli {

using nlohmann::json;

inline constexpr std::uint64_t kDefaultSeed = 20240101;
inline constexpr std::size_t kDefaultBootstrapB = 500;

enum class Status : int { ok = 0, numerical = 1, usage = 2 };

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Config {
  std::string command;
  std::string input;
  std::string output;
  std::string fit_input;  // diagnose: load a saved fit instead of refitting
  std::string format;     // json | csv; empty infers from the output extension
  std::string method;
  std::uint64_t seed = kDefaultSeed;
  std::size_t threads = 1;  // 0 = auto
  ColumnSpec columns;
  EstimatorSuite suite;
  std::size_t b = kDefaultBootstrapB;
  double level = 0.95;
  std::vector<SimSpec> cells;
};

// Flag values; unset flags leave the config untouched.
struct Overrides {
  std::optional<std::string> config, input, output, fit_input, format, method, threads, response, covariates,
      error_dist;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps, b, n;
  std::optional<int> model;
  std::optional<double> lambda_lo, lambda_hi, lambda_step, response_offset, level;
  std::optional<int> refine_rounds;
};

namespace detail {

inline std::string default_method(const std::string& command) {
  return command == "fit" || command == "simulate" ? "all" : "mpbl";
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = mpbl::detail::trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

inline std::size_t parse_threads(const std::string& s) {
  if (s == "auto") return 0;
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s.front() == '-' || v == 0)
    throw UsageError("--threads must be a positive count or 'auto', got '" + s + "'");
  return static_cast<std::size_t>(v);
}

inline ErrorDist parse_error_dist(const std::string& s) {
  if (s == "normal") return ErrorDist::normal;
  if (s == "chisq") return ErrorDist::chisq;
  throw UsageError("error distribution must be 'normal' or 'chisq', got '" + s + "'");
}

inline json grid_json(const LambdaGrid& g) {
  return {{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}, {"refine_rounds", g.refine_rounds}};
}

inline void grid_from_json(const json& j, LambdaGrid& g) {
  g.lo = j.value("lo", g.lo);
  g.hi = j.value("hi", g.hi);
  g.step = j.value("step", g.step);
  g.refine_rounds = j.value("refine_rounds", g.refine_rounds);
}

inline std::string_view rule_name(FosterRule r) { return r == FosterRule::exact ? "exact" : "gauss_legendre"; }

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError("config section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw UsageError("unknown config key '" + key + "' in " + where);
  }
}

}  // namespace detail

inline json to_json(const Config& c) {
  json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["output"] = c.output;
  j["fit_input"] = c.fit_input;
  j["format"] = c.format;
  j["method"] = c.method;
  j["seed"] = c.seed;
  j["threads"] = c.threads == 0 ? json("auto") : json(c.threads);
  j["columns"] = {{"response", c.columns.response},
                  {"covariates", c.columns.covariates},
                  {"scales", c.columns.scales},
                  {"response_offset", c.columns.response_offset}};
  const auto& o = c.suite.optim;
  j["lambda_grid"] = detail::grid_json(o.lambda_grid);
  j["optim"] = {{"nelder_mead",
                 {{"max_iters", o.nm.max_iters}, {"xtol", o.nm.xtol}, {"ftol", o.nm.ftol}}},
                {"restarts", o.restarts},
                {"init", {{"ols", o.init.ols}, {"rank", o.init.rank}, {"warm_start", o.init.warm_start}}}};
  const auto& q = c.suite.foster.quad;
  j["foster"] = {{"rule", std::string(detail::rule_name(q.rule))}, {"n_nodes", q.n_nodes}, {"span_sds", q.span_sds}};
  j["bootstrap"] = {{"b", c.b}, {"level", c.level}};
  json cells = json::array();
  for (const auto& s : c.cells) cells.push_back(mpbl::to_json(s));
  j["cells"] = std::move(cells);
  return j;
}

inline void apply_json(const json& j, Config& c) {
  detail::check_keys(j,
                     {"command", "input", "output", "fit_input", "format", "method", "seed", "threads", "columns",
                      "lambda_grid", "optim", "foster", "bootstrap", "cells"},
                     "config");
  c.input = j.value("input", c.input);
  c.output = j.value("output", c.output);
  c.fit_input = j.value("fit_input", c.fit_input);
  c.format = j.value("format", c.format);
  c.method = j.value("method", c.method);
  c.seed = j.value("seed", c.seed);
  if (j.contains("threads")) {
    const auto& t = j.at("threads");
    c.threads = t.is_string() ? detail::parse_threads(t.get<std::string>()) : t.get<std::size_t>();
  }
  if (j.contains("columns")) {
    const auto& cs = j.at("columns");
    detail::check_keys(cs, {"response", "covariates", "scales", "response_offset"}, "columns");
    c.columns.response = cs.value("response", c.columns.response);
    if (cs.contains("covariates")) c.columns.covariates = cs.at("covariates").get<std::vector<std::string>>();
    if (cs.contains("scales")) c.columns.scales = cs.at("scales").get<std::map<std::string, double>>();
    c.columns.response_offset = cs.value("response_offset", c.columns.response_offset);
  }
  if (j.contains("lambda_grid")) {
    detail::check_keys(j.at("lambda_grid"), {"lo", "hi", "step", "refine_rounds"}, "lambda_grid");
    detail::grid_from_json(j.at("lambda_grid"), c.suite.optim.lambda_grid);
  }
  if (j.contains("optim")) {
    const auto& o = j.at("optim");
    detail::check_keys(o, {"nelder_mead", "restarts", "init"}, "optim");
    auto& cfg = c.suite.optim;
    if (o.contains("nelder_mead")) {
      const auto& nm = o.at("nelder_mead");
      detail::check_keys(nm, {"max_iters", "xtol", "ftol"}, "optim.nelder_mead");
      cfg.nm.max_iters = nm.value("max_iters", cfg.nm.max_iters);
      cfg.nm.xtol = nm.value("xtol", cfg.nm.xtol);
      cfg.nm.ftol = nm.value("ftol", cfg.nm.ftol);
    }
    cfg.restarts = o.value("restarts", cfg.restarts);
    if (o.contains("init")) {
      const auto& in = o.at("init");
      detail::check_keys(in, {"ols", "rank", "warm_start"}, "optim.init");
      cfg.init.ols = in.value("ols", cfg.init.ols);
      cfg.init.rank = in.value("rank", cfg.init.rank);
      cfg.init.warm_start = in.value("warm_start", cfg.init.warm_start);
    }
  }
  if (j.contains("foster")) {
    const auto& f = j.at("foster");
    detail::check_keys(f, {"rule", "n_nodes", "span_sds"}, "foster");
    auto& q = c.suite.foster.quad;
    if (f.contains("rule")) {
      const auto r = f.at("rule").get<std::string>();
      if (r == "exact")
        q.rule = FosterRule::exact;
      else if (r == "gauss_legendre")
        q.rule = FosterRule::gauss_legendre;
      else
        throw UsageError("foster.rule must be 'exact' or 'gauss_legendre', got '" + r + "'");
    }
    q.n_nodes = f.value("n_nodes", q.n_nodes);
    q.span_sds = f.value("span_sds", q.span_sds);
  }
  if (j.contains("bootstrap")) {
    detail::check_keys(j.at("bootstrap"), {"b", "level"}, "bootstrap");
    c.b = j.at("bootstrap").value("b", c.b);
    c.level = j.at("bootstrap").value("level", c.level);
  }
  if (j.contains("cells")) {
    c.cells.clear();
    for (const auto& cell : j.at("cells")) {
      detail::check_keys(cell, {"model_id", "error_dist", "error_scale", "n", "reps", "seed"}, "cells[]");
      SimSpec s;
      s.seed = c.seed;
      c.cells.push_back(simspec_from_json(cell, s));
    }
  }
}

inline Config resolve(const std::string& command, const Overrides& ov) {
  Config c;
  c.command = command;
  std::optional<std::string> config_command;
  if (ov.config) {
    std::ifstream in(*ov.config);
    if (!in) throw IoError("cannot open config file: " + *ov.config);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError("config file " + *ov.config + " is not valid JSON: " + e.what());
    }
    if (j.contains("command")) config_command = j.at("command").get<std::string>();
    apply_json(j, c);
  }
  if (config_command && *config_command != command)
    throw UsageError("config file is for command '" + *config_command + "', not '" + command + "'");

  if (ov.input) c.input = *ov.input;
  if (ov.output) c.output = *ov.output;
  if (ov.fit_input) c.fit_input = *ov.fit_input;
  if (ov.format) c.format = *ov.format;
  if (ov.method) c.method = *ov.method;
  if (ov.seed) c.seed = *ov.seed;
  if (ov.threads) c.threads = detail::parse_threads(*ov.threads);
  if (ov.response) c.columns.response = *ov.response;
  if (ov.covariates) c.columns.covariates = detail::split_list(*ov.covariates);
  if (ov.response_offset) c.columns.response_offset = *ov.response_offset;
  auto& grid = c.suite.optim.lambda_grid;
  if (ov.lambda_lo) grid.lo = *ov.lambda_lo;
  if (ov.lambda_hi) grid.hi = *ov.lambda_hi;
  if (ov.lambda_step) grid.step = *ov.lambda_step;
  if (ov.refine_rounds) grid.refine_rounds = *ov.refine_rounds;
  c.suite.foster.lambda_grid = grid;
  if (ov.b) c.b = *ov.b;
  if (ov.level) c.level = *ov.level;
  if (c.method.empty()) c.method = detail::default_method(command);

  if (command == "simulate") {
    const bool cell_flags = ov.model || ov.error_dist || ov.n;
    if (c.cells.empty() || cell_flags) {
      if (c.cells.size() > 1 && cell_flags)
        throw UsageError("--model/--error-dist/--n cannot override a config with several cells");
      SimSpec s = c.cells.empty() ? SimSpec{} : c.cells.front();
      if (c.cells.empty()) s.seed = c.seed;
      if (ov.model) s.model_id = *ov.model;
      if (ov.error_dist) s.error_dist = detail::parse_error_dist(*ov.error_dist);
      if (ov.n) s.n = *ov.n;
      c.cells = {s};
    }
    for (auto& s : c.cells) {
      if (ov.reps) s.reps = *ov.reps;
      if (ov.seed) s.seed = *ov.seed;
    }
  }
  if (!c.format.empty() && c.format != "json" && c.format != "csv")
    throw UsageError("--format must be 'json' or 'csv', got '" + c.format + "'");
  return c;
}

struct Runner {
  const Config& config;
  std::ostream& out;

  Format output_format() const {
    if (config.format == "csv") return Format::csv;
    if (config.format == "json") return Format::json;
    return std::filesystem::path(config.output).extension() == ".csv" ? Format::csv : Format::json;
  }

  std::vector<Method> methods(bool allow_constant) const {
    if (config.method == "all") return {Method::mpbl, Method::parametric, Method::foster};
    if (config.method == "constant" && allow_constant) return {};
    if (const auto m = parse_method(config.method)) return {*m};
    throw UsageError("unknown method '" + config.method + "' (expected mpbl, parametric, foster or all)");
  }

  Dataset load() const {
    if (config.input.empty()) throw UsageError("--input is required");
    if (!std::filesystem::exists(config.input)) throw IoError("input file not found: " + config.input);
    const CsvDataset csv = read_csv(config.input, config.columns);
    out << "read " << csv.data.n() << " rows (" << csv.dropped << " of " << csv.total_rows
        << " dropped for missing values), " << csv.data.p() << " covariates\n";
    return csv.data;
  }

  void write(const std::string& text) const {
    if (config.output.empty()) return;
    mpbl::detail::write_text(config.output, text);
    out << "wrote " << config.output << "\n";
  }

  // Degenerate estimator (hidden method "constant"): the same theta for any
  // data, lambda = 1 and beta = 0. Used to check the bootstrap plumbing.
  static FitResult constant_fit(const Dataset& d) {
    FitResult f;
    f.method = Method::mpbl;
    f.theta_hat = {1.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.p()))};
    f.n_obj_evals = 0;
    return f;
  }

  void print_fit(const FitResult& f) const {
    out << std::left << std::setw(11) << to_string(f.method) << std::right << " lambda " << std::setw(10)
        << std::setprecision(6) << f.theta_hat.lambda;
    for (Eigen::Index k = 0; k < f.theta_hat.beta.size(); ++k)
      out << "  beta" << k + 1 << " " << std::setw(10) << f.theta_hat.beta(k);
    out << "  gamma " << std::setw(10) << f.gamma_hat << (f.converged ? "" : "  (not converged)") << "\n";
  }

  int fit_cmd() const {
    const Dataset data = load();
    std::vector<FitResult> fits;
    if (config.method == "constant") {
      fits.push_back(constant_fit(data));
    } else {
      for (Method m : methods(false)) fits.push_back(fit(m, data, config.suite));
    }
    for (const auto& f : fits) print_fit(f);
    if (fits.size() == 1)
      write(serialize(fits.front(), output_format()));
    else
      write(serialize(fits, output_format()));
    return 0;
  }

  int bootstrap_cmd() const {
    const Dataset data = load();
    std::vector<BootstrapResult> results;
    if (config.method == "constant") {
      results.push_back(bootstrap_fit(data, constant_fit, config.b, config.seed, config.threads, config.level));
    } else {
      for (Method m : methods(false))
        results.push_back(bootstrap_fit(data, m, config.suite, config.b, config.seed, config.threads, config.level));
    }
    for (const auto& r : results) {
      out << to_string(r.point.method) << " (B = " << r.b << ", failures " << r.failures << ")\n";
      out << std::left << std::setw(10) << "parameter" << std::right << std::setw(12) << "Est" << std::setw(12)
          << "BSD" << "  BCI\n";
      const auto est = parameter_vector(r.point);
      for (std::size_t k = 0; k < r.parameters.size(); ++k)
        out << std::left << std::setw(10) << r.parameters[k] << std::right << std::setprecision(4) << std::fixed
            << std::setw(12) << est[k] << std::setw(12) << r.bsd[k] << "  (" << r.bci[k].first << ", "
            << r.bci[k].second << ")\n"
            << std::defaultfloat;
    }
    if (results.size() == 1) {
      write(serialize_bootstrap(results.front()));
    } else {
      write(serialize_bootstraps(results));
    }
    return 0;
  }

  std::string serialize_bootstrap(const BootstrapResult& r) const {
    return output_format() == Format::json ? mpbl::to_json(r).dump(2) + "\n" : to_csv(r);
  }

  std::string serialize_bootstraps(const std::vector<BootstrapResult>& rs) const {
    if (output_format() == Format::json) {
      json j{{"schema_version", kSchemaVersion}, {"kind", "bootstraps"}, {"results", json::array()}};
      for (const auto& r : rs) j["results"].push_back(mpbl::to_json(r));
      return j.dump(2) + "\n";
    }
    std::string s;
    for (std::size_t k = 0; k < rs.size(); ++k) {
      std::string one = to_csv(rs[k]);
      if (k > 0) one.erase(0, one.find('\n') + 1);
      s += one;
    }
    return s;
  }

  int simulate_cmd() const {
    const std::vector<Method> ms = methods(false);
    std::vector<McSummary> cells;
    for (const auto& spec : config.cells) {
      spec.check();
      out << "cell: model " << spec.model_id << ", " << to_string(spec.error_dist) << ", n " << spec.n << ", reps "
          << spec.reps << ", seed " << spec.seed << "\n";
      McSummary s = run_cell(spec, ms, config.suite, config.threads);
      out << "  " << s.reps_done << " reps, " << s.redraws << " redraws, " << std::setprecision(3)
          << s.wall_seconds << " s\n";
      out << "  " << std::left << std::setw(11) << "method" << std::setw(10) << "parameter" << std::right
          << std::setw(12) << "bias" << std::setw(14) << ("MSEx" + std::to_string(static_cast<int>(s.mse_scale)))
          << "\n";
      for (const auto& m : s.methods)
        for (const auto& p : m.parameters)
          out << "  " << std::left << std::setw(11) << to_string(m.method) << std::setw(10) << p.parameter
              << std::right << std::fixed << std::setprecision(4) << std::setw(12) << p.bias << std::setw(14)
              << p.mse_scaled << std::defaultfloat << "\n";
      cells.push_back(std::move(s));
    }
    if (cells.size() == 1) {
      write(serialize(cells.front(), output_format()));
    } else if (output_format() == Format::json) {
      json j{{"schema_version", kSchemaVersion}, {"kind", "simulations"}, {"cells", json::array()}};
      for (const auto& s : cells) j["cells"].push_back(mpbl::to_json(s));
      write(j.dump(2) + "\n");
    } else {
      std::string text = "model_id,error_dist,n,method,parameter,bias,mse_scaled\n";
      for (const auto& s : cells) {
        const std::string prefix = std::to_string(s.spec.model_id) + "," + std::string(to_string(s.spec.error_dist)) +
                                   "," + std::to_string(s.spec.n) + ",";
        std::istringstream rows(to_csv(s));
        std::string line;
        std::getline(rows, line);
        while (std::getline(rows, line)) text += prefix + line + "\n";
      }
      write(text);
    }
    return 0;
  }

  int diagnose_cmd() const {
    if (config.output.empty()) throw UsageError("diagnose needs --output for the Q-Q data");
    const Dataset data = load();
    FitResult f;
    if (!config.fit_input.empty()) {
      std::ifstream in(config.fit_input);
      if (!in) throw IoError("cannot open fit file: " + config.fit_input);
      json j;
      try {
        j = json::parse(in);
        f = fit_from_json(j);
      } catch (const json::exception& e) {
        throw IoError("fit file " + config.fit_input + " is not a fit result: " + e.what());
      }
      if (static_cast<std::size_t>(f.theta_hat.beta.size()) != data.p())
        throw UsageError("fit file has " + std::to_string(f.theta_hat.beta.size()) + " slopes but the data has " +
                         std::to_string(data.p()) + " covariates");
    } else {
      const auto ms = methods(false);
      if (ms.size() != 1) throw UsageError("diagnose takes a single method, not 'all'");
      f = fit(ms.front(), data, config.suite);
    }
    print_fit(f);
    export_residual_qq(data, f, config.output);
    out << "wrote " << config.output << " (" << data.n() << " rows)\n";
    return 0;
  }

  int run() const {
    if (config.command == "fit") return fit_cmd();
    if (config.command == "bootstrap") return bootstrap_cmd();
    if (config.command == "simulate") return simulate_cmd();
    return diagnose_cmd();
  }
};

inline void report(std::ostream& err, std::string_view kind, const std::string& message, Status status) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", static_cast<int>(status)}}.dump() << "\n";
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Box-Cox transformation model estimation (MPBL, parametric MLE, Foster)", "mpbl"};
  app.require_subcommand(1);
  Overrides ov;

  auto add_common = [&](CLI::App* sub, bool simulate) {
    sub->add_option("--config", ov.config, "JSON config file (flags override it)");
    sub->add_option("--output", ov.output, "results file");
    sub->add_option("--format", ov.format, "json or csv (default: from the output extension)");
    sub->add_option("--method", ov.method, simulate ? "mpbl, parametric, foster or all" : "estimator");
    sub->add_option("--seed", ov.seed, "random seed");
    sub->add_option("--threads", ov.threads, "worker threads or 'auto'");
    sub->add_option("--lambda-lo", ov.lambda_lo, "lambda grid lower end");
    sub->add_option("--lambda-hi", ov.lambda_hi, "lambda grid upper end");
    sub->add_option("--lambda-step", ov.lambda_step, "coarse lambda grid step");
    sub->add_option("--refine-rounds", ov.refine_rounds, "grid refinement rounds");
    if (!simulate) {
      sub->add_option("--input", ov.input, "input CSV");
      sub->add_option("--response", ov.response, "response column");
      sub->add_option("--covariates", ov.covariates, "comma-separated covariate columns");
      sub->add_option("--response-offset", ov.response_offset, "added to the response before fitting");
    }
  };
  CLI::App* fit_app = app.add_subcommand("fit", "fit one or all estimators");
  add_common(fit_app, false);
  CLI::App* boot_app = app.add_subcommand("bootstrap", "pairs bootstrap SDs and percentile intervals");
  add_common(boot_app, false);
  boot_app->add_option("--b", ov.b, "bootstrap replicates");
  boot_app->add_option("--level", ov.level, "interval level");
  CLI::App* sim_app = app.add_subcommand("simulate", "Monte Carlo bias/MSE for simulation cells");
  add_common(sim_app, true);
  sim_app->add_option("--reps", ov.reps, "repetitions per cell");
  sim_app->add_option("--model", ov.model, "model 1..6");
  sim_app->add_option("--error-dist", ov.error_dist, "normal or chisq");
  sim_app->add_option("--n", ov.n, "sample size");
  CLI::App* diag_app = app.add_subcommand("diagnose", "residual Q-Q data for a fit");
  add_common(diag_app, false);
  diag_app->add_option("--fit", ov.fit_input, "saved fit JSON to use instead of refitting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what(), Status::usage);
    return static_cast<int>(Status::usage);
  }
  std::string command;
  for (CLI::App* sub : {fit_app, boot_app, sim_app, diag_app})
    if (sub->parsed()) command = sub->get_name();

  try {
    const Config config = resolve(command, ov);
    config.suite.check();
    out << "resolved config:\n" << to_json(config).dump(2) << "\n";
    return Runner{config, out}.run();
  } catch (const UsageError& e) {
    report(err, "usage", e.what(), Status::usage);
  } catch (const ConfigError& e) {
    report(err, "config", e.what(), Status::usage);
  } catch (const IoError& e) {
    report(err, "io", e.what(), Status::usage);
    return static_cast<int>(Status::usage);
  } catch (const ValidationError& e) {
    report(err, "validation", e.what(), Status::usage);
  } catch (const json::exception& e) {
    report(err, "config", e.what(), Status::usage);
  } catch (const std::exception& e) {
    report(err, "numerical", e.what(), Status::numerical);
    return static_cast<int>(Status::numerical);
  }
  return static_cast<int>(Status::usage);
}

}  // namespace mpbl::cli
