#pragma once

// Line-oriented run configuration:
//
//   # comment
//   [model]
//   type = lmm                 # linreg | lmm | sparse | logistic
//   [columns]
//   response = y
//   linear = x1, x2
//   smooth = x4:35, x5         # optional per-predictor basis size
//   group = county
//   [hyper]
//   sigsq_beta = 1e10
//   A_eps = 1e5
//   A_u = 1e5
//   A_rho = 1
//   B_rho = 1
//   [run]
//   n_warm = 100
//   n_valid = 100
//   ...

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "../diagnostics.hpp"

namespace streamvb::io {

enum class ModelKind { linreg, lmm, sparse, logistic };

inline std::string_view model_name(ModelKind k) {
  switch (k) {
    case ModelKind::linreg: return "linreg";
    case ModelKind::lmm: return "lmm";
    case ModelKind::sparse: return "sparse";
    case ModelKind::logistic: return "logistic";
  }
  return "?";
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SmoothTerm {
  std::string column;
  int num_knots = 0;  // 0 selects min(35, n_warm / 4)

  bool operator==(const SmoothTerm&) const = default;
};

struct RunConfig {
  ModelKind model = ModelKind::linreg;

  std::string response;
  std::vector<std::string> linear;
  std::vector<SmoothTerm> smooth;
  std::vector<std::string> groups;

  double sigsq_beta = 1e10;
  double A_eps = 1e5;
  double A_u = 1e5;
  double A_rho = 1.0;
  double B_rho = 1.0;

  std::int64_t n_warm = 100;
  std::int64_t n_valid = 100;
  bool scaling = false;
  std::string output_dir = "out";
  double threshold = kDefaultDivergenceThreshold;
  std::int64_t cadence = 100;
  double tol = 1e-8;
  int max_iter = 500;
  bool densities = false;

  bool operator==(const RunConfig&) const = default;

  /// Role/model consistency checks shared by the parser and programmatic callers.
  void validate() const {
    if (response.empty()) throw ConfigError("config: missing response column");
    if (n_warm < 1 || n_valid < 1 || cadence < 1 || max_iter < 1)
      throw ConfigError("config: n_warm, n_valid, cadence and max_iter must be positive");
    if (!(tol > 0.0) || !(threshold > 0.0)) throw ConfigError("config: tol and threshold must be positive");
    if (!(sigsq_beta > 0.0) || !(A_eps > 0.0) || !(A_u > 0.0) || !(A_rho > 0.0) || !(B_rho > 0.0))
      throw ConfigError("config: hyperparameters must be positive");
    for (const auto& s : smooth)
      if (s.num_knots < 0) throw ConfigError("config: smooth basis size must be positive");
    if (model == ModelKind::linreg && (!smooth.empty() || !groups.empty()))
      throw ConfigError("config: linreg takes linear predictors only; use lmm for smooth or group terms");
    if (model == ModelKind::sparse && !groups.empty()) throw ConfigError("config: sparse model takes no group columns");
    if (model == ModelKind::sparse && linear.empty() && smooth.empty())
      throw ConfigError("config: sparse model needs at least one linear or smooth column");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(line) + ": '" + key + "' expects a number, got '" + v + "'");
  }
}

inline std::int64_t parse_int(const std::string& v, int line, const std::string& key) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config line " + std::to_string(line) + ": '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
  if (v == "off" || v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("config line " + std::to_string(line) + ": '" + key + "' expects on/off, got '" + v + "'");
}

inline std::string format_double(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::map<std::string, int> key_lines;     // "section.key" -> line
  std::map<std::string, std::pair<std::string, int>> column_roles;  // column -> (role, line)
  bool saw_model_type = false;

  auto claim_column = [&](const std::string& col, const std::string& role, int line) {
    auto it = column_roles.find(col);
    if (it != column_roles.end())
      throw ConfigError("config: column '" + col + "' assigned to role '" + it->second.first + "' on line " +
                        std::to_string(it->second.second) + " and to role '" + role + "' on line " +
                        std::to_string(line));
    column_roles.emplace(col, std::make_pair(role, line));
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "model" && section != "columns" && section != "hyper" && section != "run")
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    if (section.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": key outside any section");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    const std::string qualified = section + "." + key;
    if (auto it = key_lines.find(qualified); it != key_lines.end())
      throw ConfigError("config: '" + key + "' in [" + section + "] set on line " + std::to_string(it->second) +
                        " and again on line " + std::to_string(line_no));
    key_lines.emplace(qualified, line_no);

    auto unknown = [&] {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in [" + section + "]");
    };

    if (section == "model") {
      if (key != "type") unknown();
      if (value == "linreg") cfg.model = ModelKind::linreg;
      else if (value == "lmm") cfg.model = ModelKind::lmm;
      else if (value == "sparse") cfg.model = ModelKind::sparse;
      else if (value == "logistic") cfg.model = ModelKind::logistic;
      else throw ConfigError("config line " + std::to_string(line_no) + ": unknown model type '" + value + "'");
      saw_model_type = true;
    } else if (section == "columns") {
      if (key == "response") {
        if (value.empty() || value.find(',') != std::string::npos)
          throw ConfigError("config line " + std::to_string(line_no) + ": response takes exactly one column");
        claim_column(value, "response", line_no);
        cfg.response = value;
      } else if (key == "linear") {
        for (auto& col : detail::split_list(value)) {
          claim_column(col, "linear", line_no);
          cfg.linear.push_back(col);
        }
      } else if (key == "smooth") {
        for (auto& item : detail::split_list(value)) {
          SmoothTerm term;
          const auto colon = item.find(':');
          term.column = detail::trim(std::string_view(item).substr(0, colon));
          if (colon != std::string::npos)
            term.num_knots = static_cast<int>(detail::parse_int(detail::trim(std::string_view(item).substr(colon + 1)),
                                                                line_no, "smooth"));
          claim_column(term.column, "smooth", line_no);
          cfg.smooth.push_back(term);
        }
      } else if (key == "group") {
        for (auto& col : detail::split_list(value)) {
          claim_column(col, "group", line_no);
          cfg.groups.push_back(col);
        }
      } else {
        unknown();
      }
    } else if (section == "hyper") {
      const double d = detail::parse_double(value, line_no, key);
      if (key == "sigsq_beta") cfg.sigsq_beta = d;
      else if (key == "A" || key == "A_eps") cfg.A_eps = d;
      else if (key == "A_u") cfg.A_u = d;
      else if (key == "A_rho") cfg.A_rho = d;
      else if (key == "B_rho") cfg.B_rho = d;
      else unknown();
    } else if (section == "run") {
      if (key == "n_warm") cfg.n_warm = detail::parse_int(value, line_no, key);
      else if (key == "n_valid") cfg.n_valid = detail::parse_int(value, line_no, key);
      else if (key == "scaling") cfg.scaling = detail::parse_bool(value, line_no, key);
      else if (key == "output") cfg.output_dir = value;
      else if (key == "threshold") cfg.threshold = detail::parse_double(value, line_no, key);
      else if (key == "cadence") cfg.cadence = detail::parse_int(value, line_no, key);
      else if (key == "tol") cfg.tol = detail::parse_double(value, line_no, key);
      else if (key == "max_iter") cfg.max_iter = static_cast<int>(detail::parse_int(value, line_no, key));
      else if (key == "densities") cfg.densities = detail::parse_bool(value, line_no, key);
      else unknown();
    }
  }
  if (!saw_model_type) throw ConfigError("config: missing [model] type");
  cfg.validate();
  return cfg;
}

/// Canonical text form; parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& cfg) {
  std::ostringstream os;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  os << "[model]\ntype = " << model_name(cfg.model) << "\n\n[columns]\nresponse = " << cfg.response << '\n';
  if (!cfg.linear.empty()) os << "linear = " << join(cfg.linear) << '\n';
  if (!cfg.smooth.empty()) {
    os << "smooth = ";
    for (std::size_t i = 0; i < cfg.smooth.size(); ++i) {
      os << (i ? ", " : "") << cfg.smooth[i].column;
      if (cfg.smooth[i].num_knots > 0) os << ':' << cfg.smooth[i].num_knots;
    }
    os << '\n';
  }
  if (!cfg.groups.empty()) os << "group = " << join(cfg.groups) << '\n';
  os << "\n[hyper]\nsigsq_beta = " << detail::format_double(cfg.sigsq_beta)
     << "\nA_eps = " << detail::format_double(cfg.A_eps) << "\nA_u = " << detail::format_double(cfg.A_u)
     << "\nA_rho = " << detail::format_double(cfg.A_rho) << "\nB_rho = " << detail::format_double(cfg.B_rho) << '\n';
  os << "\n[run]\nn_warm = " << cfg.n_warm << "\nn_valid = " << cfg.n_valid
     << "\nscaling = " << (cfg.scaling ? "on" : "off") << "\noutput = " << cfg.output_dir
     << "\nthreshold = " << detail::format_double(cfg.threshold) << "\ncadence = " << cfg.cadence
     << "\ntol = " << detail::format_double(cfg.tol) << "\nmax_iter = " << cfg.max_iter
     << "\ndensities = " << (cfg.densities ? "on" : "off") << '\n';
  return os.str();
}

}  // namespace streamvb::io
