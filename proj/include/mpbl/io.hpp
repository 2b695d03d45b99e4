#pragma once

// CSV ingestion, residual Q-Q export and JSON/CSV result serialization.
// JSON objects are emitted with sorted keys and shortest round-trip
// numbers, so parse -> dump reproduces a file byte for byte.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mpbl/bootstrap.hpp"
#include "mpbl/data.hpp"
#include "mpbl/error.hpp"
#include "mpbl/normal.hpp"
#include "mpbl/numeric.hpp"
#include "mpbl/simgen.hpp"
#include "mpbl/transform.hpp"

namespace mpbl {

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// CSV

struct ColumnSpec {
  std::string response;
  std::vector<std::string> covariates;
  // Covariate (or response) value is multiplied by scales[name].
  std::map<std::string, double> scales;
  double response_offset = 0.0;  // added after scaling

  void check() const {
    if (response.empty()) throw ConfigError("column spec needs a response column");
    if (covariates.empty()) throw ConfigError("column spec needs at least one covariate");
    if (std::find(covariates.begin(), covariates.end(), response) != covariates.end())
      throw ConfigError("response column '" + response + "' is also listed as a covariate");
    for (const auto& [name, s] : scales)
      if (!std::isfinite(s) || s == 0.0) throw ConfigError("scale for column '" + name + "' must be finite and nonzero");
    if (!std::isfinite(response_offset)) throw ConfigError("response offset must be finite");
  }
};

namespace detail {

// Splits one CSV record; handles quoted fields with doubled quotes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline bool is_missing(std::string_view cell) {
  std::string low(cell);
  std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
  return low.empty() || low == "na" || low == "nan";
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace detail

// Parsed selection before dataset validation.
struct CsvTable {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::size_t total_rows = 0;
  std::size_t dropped = 0;  // rows with a missing value in a selected column
};

struct CsvDataset {
  Dataset data;
  std::size_t total_rows = 0;
  std::size_t dropped = 0;
};

inline CsvTable parse_csv(const std::filesystem::path& path, const ColumnSpec& spec) {
  spec.check();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("input file is empty: " + path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("unknown column '" + name + "' in " + path.string());
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::string> names{spec.response};
  names.insert(names.end(), spec.covariates.begin(), spec.covariates.end());
  std::vector<std::size_t> cols;
  std::vector<double> scales;
  for (const auto& nm : names) {
    cols.push_back(column_of(nm));
    const auto s = spec.scales.find(nm);
    scales.push_back(s == spec.scales.end() ? 1.0 : s->second);
  }
  for (const auto& [nm, s] : spec.scales) (void)column_of(nm);

  std::vector<std::vector<double>> kept;
  std::size_t total = 0, dropped = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++total;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    std::vector<double> row(cols.size());
    bool missing = false;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string cell = cols[k] < cells.size() ? detail::trim(cells[cols[k]]) : std::string();
      if (detail::is_missing(cell)) {
        missing = true;
        continue;
      }
      double v = 0.0;
      if (!detail::parse_double(cell, v))
        throw IoError("unparseable value '" + cell + "' at line " + std::to_string(line_no) + ", column '" +
                      names[k] + "' in " + path.string());
      row[k] = v * scales[k];
    }
    if (missing) {
      ++dropped;
      continue;
    }
    row[0] += spec.response_offset;
    kept.push_back(std::move(row));
  }
  if (kept.empty()) throw IoError("no complete rows in " + path.string());

  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto p = static_cast<Eigen::Index>(spec.covariates.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = kept[static_cast<std::size_t>(i)];
    y(i) = r[0];
    for (Eigen::Index c = 0; c < p; ++c) x(i, c) = r[static_cast<std::size_t>(c) + 1];
  }
  return {std::move(y), std::move(x), total, dropped};
}

inline CsvDataset read_csv(const std::filesystem::path& path, const ColumnSpec& spec) {
  CsvTable t = parse_csv(path, spec);
  return {Dataset::validate(std::move(t.y), std::move(t.x)), t.total_rows, t.dropped};
}

// ---------------------------------------------------------------------------
// Residual Q-Q data

struct QqPoint {
  double residual = 0.0;  // standardized, ascending
  double normal_quantile = 0.0;
};

// Residuals y^(lambda) - x'beta - gamma at the fit, standardized by their
// sample SD, against Phi^-1((i - 0.5) / n).
inline std::vector<QqPoint> residual_qq(const Dataset& data, const FitResult& fit) {
  const std::size_t n = data.n();
  if (n < 3) throw DomainError("residual Q-Q export needs n >= 3");
  const Eigen::VectorXd xb = data.x() * fit.theta_hat.beta;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    r[i] = boxcox(data.y()(k), fit.theta_hat.lambda) - xb(k) - fit.gamma_hat;
  }
  const double sd = sample_sd(r);
  if (!(sd > 0.0)) throw DomainError("residuals have zero spread; cannot standardize");
  std::sort(r.begin(), r.end());
  std::vector<QqPoint> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = {r[i] / sd, normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n))};
  return out;
}

namespace detail {

inline std::string format_double(double v) {
  // nlohmann's serializer prints the shortest representation that round-trips.
  return nlohmann::json(v).dump();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline void export_residual_qq(const Dataset& data, const FitResult& fit, const std::filesystem::path& path) {
  std::string text = "sorted_residual,theoretical_normal_quantile\n";
  for (const auto& q : residual_qq(data, fit))
    text += detail::format_double(q.residual) + "," + detail::format_double(q.normal_quantile) + "\n";
  detail::write_text(path, text);
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

inline json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) v(static_cast<Eigen::Index>(k)) = a.at(k).get<double>();
  return v;
}

inline json to_json(const FitResult& f) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "fit";
  j["method"] = std::string(to_string(f.method));
  j["lambda_hat"] = f.theta_hat.lambda;
  j["beta_hat"] = vector_json(f.theta_hat.beta);
  j["gamma_hat"] = f.gamma_hat;
  j["objective"] = f.objective;
  j["converged"] = f.converged;
  j["n_obj_evals"] = f.n_obj_evals;
  if (f.sigma_hat) j["sigma_hat"] = *f.sigma_hat;
  json trace = json::array();
  for (const auto& pt : f.lambda_grid_trace)
    trace.push_back({{"lambda", pt.lambda}, {"value", pt.value}, {"beta", vector_json(pt.beta)}});
  j["lambda_grid_trace"] = std::move(trace);
  return j;
}

inline FitResult fit_from_json(const json& j) {
  FitResult f;
  const auto m = parse_method(j.at("method").get<std::string>());
  if (!m) throw IoError("unknown method in fit JSON");
  f.method = *m;
  f.theta_hat.lambda = j.at("lambda_hat").get<double>();
  f.theta_hat.beta = vector_from_json(j.at("beta_hat"));
  f.gamma_hat = j.at("gamma_hat").get<double>();
  f.objective = j.at("objective").get<double>();
  f.converged = j.at("converged").get<bool>();
  f.n_obj_evals = j.at("n_obj_evals").get<std::size_t>();
  if (j.contains("sigma_hat")) f.sigma_hat = j.at("sigma_hat").get<double>();
  for (const auto& t : j.at("lambda_grid_trace"))
    f.lambda_grid_trace.push_back({t.at("lambda").get<double>(), vector_from_json(t.at("beta")), t.at("value").get<double>()});
  return f;
}

inline json to_json(const BootstrapResult& b) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "bootstrap";
  j["point"] = to_json(b.point);
  j["parameters"] = b.parameters;
  j["bsd"] = b.bsd;
  json ci = json::array();
  for (const auto& [lo, hi] : b.bci) ci.push_back({lo, hi});
  j["bci"] = std::move(ci);
  j["level"] = b.level;
  j["b"] = b.b;
  j["failures"] = b.failures;
  j["seed"] = b.seed;
  j["quantile_rule"] = "linear interpolation between order statistics (type 7)";
  j["resampling"] = "pairs";
  return j;
}

inline BootstrapResult bootstrap_from_json(const json& j) {
  BootstrapResult b;
  b.point = fit_from_json(j.at("point"));
  b.parameters = j.at("parameters").get<std::vector<std::string>>();
  b.bsd = j.at("bsd").get<std::vector<double>>();
  for (const auto& ci : j.at("bci")) b.bci.emplace_back(ci.at(0).get<double>(), ci.at(1).get<double>());
  b.level = j.at("level").get<double>();
  b.b = j.at("b").get<std::size_t>();
  b.failures = j.at("failures").get<std::size_t>();
  b.seed = j.at("seed").get<std::uint64_t>();
  return b;
}

inline json to_json(const SimSpec& s) {
  return {{"model_id", s.model_id}, {"error_dist", std::string(to_string(s.error_dist))},
          {"error_scale", s.error_scale}, {"n", s.n}, {"reps", s.reps}, {"seed", s.seed}};
}

inline SimSpec simspec_from_json(const json& j, SimSpec s = {}) {
  if (j.contains("model_id")) s.model_id = j.at("model_id").get<int>();
  if (j.contains("error_dist")) {
    const auto d = j.at("error_dist").get<std::string>();
    if (d == "normal")
      s.error_dist = ErrorDist::normal;
    else if (d == "chisq")
      s.error_dist = ErrorDist::chisq;
    else
      throw ConfigError("error_dist must be 'normal' or 'chisq', got '" + d + "'");
  }
  if (j.contains("error_scale")) s.error_scale = j.at("error_scale").get<double>();
  if (j.contains("n")) s.n = j.at("n").get<std::size_t>();
  if (j.contains("reps")) s.reps = j.at("reps").get<std::size_t>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

// Wall time is left out so that reruns produce identical files.
inline json to_json(const McSummary& m) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "simulation";
  j["spec"] = to_json(m.spec);
  j["mse_scale"] = m.mse_scale;
  j["reps_done"] = m.reps_done;
  j["redraws"] = m.redraws;
  json rows = json::array();
  for (const auto& ms : m.methods)
    for (const auto& p : ms.parameters)
      rows.push_back({{"method", std::string(to_string(ms.method))}, {"parameter", p.parameter},
                      {"bias", p.bias}, {"mse_scaled", p.mse_scaled}});
  j["rows"] = std::move(rows);
  return j;
}

inline McSummary mcsummary_from_json(const json& j) {
  McSummary m;
  m.spec = simspec_from_json(j.at("spec"));
  m.mse_scale = j.at("mse_scale").get<double>();
  m.reps_done = j.at("reps_done").get<std::size_t>();
  m.redraws = j.at("redraws").get<std::size_t>();
  for (const auto& r : j.at("rows")) {
    const auto method = parse_method(r.at("method").get<std::string>());
    if (!method) throw IoError("unknown method in simulation JSON");
    if (m.methods.empty() || m.methods.back().method != *method) m.methods.push_back({*method, {}, {}});
    m.methods.back().parameters.push_back(
        {r.at("parameter").get<std::string>(), r.at("bias").get<double>(), r.at("mse_scaled").get<double>()});
  }
  return m;
}

// ---------------------------------------------------------------------------
// CSV tables

inline std::string to_csv(const FitResult& f) {
  std::string s = "method,parameter,estimate\n";
  const std::string m(to_string(f.method));
  s += m + ",lambda," + detail::format_double(f.theta_hat.lambda) + "\n";
  for (Eigen::Index k = 0; k < f.theta_hat.beta.size(); ++k)
    s += m + ",beta" + std::to_string(k + 1) + "," + detail::format_double(f.theta_hat.beta(k)) + "\n";
  s += m + ",gamma," + detail::format_double(f.gamma_hat) + "\n";
  return s;
}

inline std::string to_csv(const BootstrapResult& b) {
  std::string s = "method,parameter,estimate,bsd,bci_lo,bci_hi\n";
  const std::string m(to_string(b.point.method));
  const std::vector<double> est = parameter_vector(b.point);
  for (std::size_t k = 0; k < b.parameters.size(); ++k)
    s += m + "," + b.parameters[k] + "," + detail::format_double(est[k]) + "," + detail::format_double(b.bsd[k]) +
         "," + detail::format_double(b.bci[k].first) + "," + detail::format_double(b.bci[k].second) + "\n";
  return s;
}

inline std::string to_csv(const McSummary& m) {
  std::string s = "method,parameter,bias,mse_scaled\n";
  for (const auto& ms : m.methods)
    for (const auto& p : ms.parameters)
      s += std::string(to_string(ms.method)) + "," + p.parameter + "," + detail::format_double(p.bias) + "," +
           detail::format_double(p.mse_scaled) + "\n";
  return s;
}

enum class Format { json, csv };

using AnyResult = std::variant<FitResult, BootstrapResult, McSummary, std::vector<FitResult>>;

inline std::string serialize(const AnyResult& result, Format format) {
  return std::visit(
      [&](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, std::vector<FitResult>>) {
          if (format == Format::json) {
            json j;
            j["schema_version"] = kSchemaVersion;
            j["kind"] = "fits";
            j["fits"] = json::array();
            for (const auto& f : r) j["fits"].push_back(to_json(f));
            return j.dump(2) + "\n";
          }
          std::string s;
          for (std::size_t k = 0; k < r.size(); ++k) {
            std::string one = to_csv(r[k]);
            if (k > 0) one.erase(0, one.find('\n') + 1);
            s += one;
          }
          return s;
        } else {
          return format == Format::json ? to_json(r).dump(2) + "\n" : to_csv(r);
        }
      },
      result);
}

inline void write_results(const AnyResult& result, const std::filesystem::path& path, Format format) {
  detail::write_text(path, serialize(result, format));
}

}  // namespace mpbl
