#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "corrbandit/environment.hpp"
#include "corrbandit/error.hpp"
#include "corrbandit/estimator.hpp"

namespace corrbandit::harness {

enum class StudyKind { Experiment, Concentration, Theory };

inline std::string to_string(StudyKind k) {
  switch (k) {
    case StudyKind::Experiment: return "experiment";
    case StudyKind::Concentration: return "concentration";
    case StudyKind::Theory: return "theory";
  }
  return "?";
}

enum class Algorithm { Uniform, SuccessiveRejects };

inline std::string to_string(Algorithm a) { return a == Algorithm::Uniform ? "uniform" : "sr"; }

/// Every knob of a study. Loaded from a flat `key = value` text file; CLI
/// flags override individual fields.
struct StudyConfig {
  StudyKind study = StudyKind::Experiment;
  std::string model = "sigma1";
  bool as_printed = false;
  std::vector<Algorithm> algorithms{Algorithm::Uniform, Algorithm::SuccessiveRejects};

  /// Fixed budget; unset means `auto` (geometric sweep).
  std::optional<std::uint64_t> budget;
  std::uint64_t sweep_min = 100'000;
  std::uint64_t sweep_max = 10'000'000;
  std::size_t sweep_points = 9;
  /// With `auto`, the sweep budget whose uniform error is closest to this
  /// value is reported as the calibrated budget.
  std::optional<double> target_uniform_error;

  std::size_t replications = 200;
  std::uint64_t base_seed = 1;
  std::size_t workers = 1;
  std::string out_dir = "out";
  VarianceMode variance_mode = VarianceMode::PerPair;
  SamplingMode sampling = SamplingMode::PerDraw;
  bool write_traces = false;

  // concentration
  std::vector<std::uint64_t> n_grid{250, 500, 1000, 2000, 4000};
  std::vector<double> eps_grid{0.5};
  std::size_t trials = 10'000;
  std::size_t arm = 0;  // 0-based

  // theory
  std::vector<std::uint64_t> lb_n_grid{100, 1000, 10000};
  std::size_t theory_reps = 200;

  void validate() const {
    if (replications < 1) throw Error(ErrorCode::ConfigError, "replications must be >= 1");
    if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
    if (algorithms.empty()) throw Error(ErrorCode::ConfigError, "no algorithms selected");
    if (!budget && (sweep_min < 1 || sweep_max < sweep_min || sweep_points < 1))
      throw Error(ErrorCode::ConfigError, "invalid budget sweep");
    if (study == StudyKind::Concentration) {
      if (n_grid.empty() || eps_grid.empty())
        throw Error(ErrorCode::ConfigError, "concentration study needs n_grid and eps_grid");
      if (trials < 1) throw Error(ErrorCode::ConfigError, "trials must be >= 1");
      for (double e : eps_grid)
        if (!(e > 0.0)) throw Error(ErrorCode::ConfigError, "eps_grid entries must be > 0");
      for (auto n : n_grid)
        if (n < 1) throw Error(ErrorCode::ConfigError, "n_grid entries must be >= 1");
    }
    if (study == StudyKind::Theory && lb_n_grid.empty())
      throw Error(ErrorCode::ConfigError, "theory study needs lb_n_grid");
  }

  /// Budgets actually run: the fixed one, or the geometric sweep.
  std::vector<std::uint64_t> budgets() const;

  nlohmann::json to_json() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T v{};
  if (!(in >> v) || !(in >> std::ws).eof())
    throw Error(ErrorCode::ConfigError, "bad value for " + key + ": '" + value + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ConfigError, "bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

inline StudyKind parse_study(const std::string& v) {
  if (v == "experiment") return StudyKind::Experiment;
  if (v == "concentration") return StudyKind::Concentration;
  if (v == "theory") return StudyKind::Theory;
  throw Error(ErrorCode::ConfigError, "unknown study '" + v + "'");
}

/// Applies one key/value pair. Unknown keys are errors.
inline void apply_setting(StudyConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "study") {
    c.study = parse_study(value);
  } else if (key == "model") {
    c.model = value;
  } else if (key == "as_printed") {
    c.as_printed = detail::parse_bool(key, value);
  } else if (key == "algorithms") {
    c.algorithms.clear();
    for (const auto& a : detail::split_list(value)) {
      if (a == "uniform") c.algorithms.push_back(Algorithm::Uniform);
      else if (a == "sr") c.algorithms.push_back(Algorithm::SuccessiveRejects);
      else throw Error(ErrorCode::ConfigError, "unknown algorithm '" + a + "'");
    }
  } else if (key == "budget") {
    if (value == "auto") c.budget.reset();
    else c.budget = parse_number<std::uint64_t>(key, value);
  } else if (key == "sweep_min") {
    c.sweep_min = parse_number<std::uint64_t>(key, value);
  } else if (key == "sweep_max") {
    c.sweep_max = parse_number<std::uint64_t>(key, value);
  } else if (key == "sweep_points") {
    c.sweep_points = parse_number<std::size_t>(key, value);
  } else if (key == "target_uniform_error") {
    c.target_uniform_error = parse_number<double>(key, value);
  } else if (key == "replications" || key == "reps") {
    c.replications = parse_number<std::size_t>(key, value);
  } else if (key == "seed" || key == "base_seed") {
    c.base_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "workers") {
    c.workers = parse_number<std::size_t>(key, value);
  } else if (key == "out" || key == "output_dir") {
    c.out_dir = value;
  } else if (key == "variance_mode") {
    if (value == "per_pair") c.variance_mode = VarianceMode::PerPair;
    else if (value == "pooled") c.variance_mode = VarianceMode::Pooled;
    else throw Error(ErrorCode::ConfigError, "variance_mode must be per_pair or pooled");
  } else if (key == "sampling") {
    if (value == "per_draw") c.sampling = SamplingMode::PerDraw;
    else if (value == "batched") c.sampling = SamplingMode::Batched;
    else throw Error(ErrorCode::ConfigError, "sampling must be per_draw or batched");
  } else if (key == "traces") {
    c.write_traces = detail::parse_bool(key, value);
  } else if (key == "n_grid") {
    c.n_grid.clear();
    for (const auto& v : detail::split_list(value)) c.n_grid.push_back(parse_number<std::uint64_t>(key, v));
  } else if (key == "eps_grid") {
    c.eps_grid.clear();
    for (const auto& v : detail::split_list(value)) c.eps_grid.push_back(parse_number<double>(key, v));
  } else if (key == "trials") {
    c.trials = parse_number<std::size_t>(key, value);
  } else if (key == "arm") {
    const auto a = parse_number<std::size_t>(key, value);
    if (a < 1) throw Error(ErrorCode::ConfigError, "arm is 1-based");
    c.arm = a - 1;
  } else if (key == "lb_n_grid") {
    c.lb_n_grid.clear();
    for (const auto& v : detail::split_list(value))
      c.lb_n_grid.push_back(parse_number<std::uint64_t>(key, v));
  } else if (key == "theory_reps") {
    c.theory_reps = parse_number<std::size_t>(key, value);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
  }
}

inline StudyConfig parse_config(std::istream& in, StudyConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline StudyConfig load_config(const std::string& path, StudyConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  return parse_config(in, std::move(base));
}

inline std::vector<std::uint64_t> StudyConfig::budgets() const {
  if (budget) return {*budget};
  std::vector<std::uint64_t> out;
  if (sweep_points == 1) return {sweep_min};
  const double ratio = std::pow(static_cast<double>(sweep_max) / static_cast<double>(sweep_min),
                                1.0 / static_cast<double>(sweep_points - 1));
  for (std::size_t i = 0; i < sweep_points; ++i) {
    const auto b = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(sweep_min) * std::pow(ratio, static_cast<double>(i))));
    if (out.empty() || b != out.back()) out.push_back(b);
  }
  return out;
}

inline nlohmann::json StudyConfig::to_json() const {
  nlohmann::json j;
  j["study"] = to_string(study);
  j["model"] = model;
  j["as_printed"] = as_printed;
  std::vector<std::string> algs;
  for (auto a : algorithms) algs.push_back(to_string(a));
  j["algorithms"] = algs;
  j["budget"] = budget ? nlohmann::json(*budget) : nlohmann::json("auto");
  if (!budget) {
    j["sweep_min"] = sweep_min;
    j["sweep_max"] = sweep_max;
    j["sweep_points"] = sweep_points;
  }
  if (target_uniform_error) j["target_uniform_error"] = *target_uniform_error;
  j["replications"] = replications;
  j["base_seed"] = base_seed;
  j["variance_mode"] = variance_mode == VarianceMode::PerPair ? "per_pair" : "pooled";
  j["sampling"] = sampling == SamplingMode::PerDraw ? "per_draw" : "batched";
  if (study == StudyKind::Concentration) {
    j["n_grid"] = n_grid;
    j["eps_grid"] = eps_grid;
    j["trials"] = trials;
    j["arm"] = arm + 1;
  }
  if (study == StudyKind::Theory) {
    j["lb_n_grid"] = lb_n_grid;
    j["theory_reps"] = theory_reps;
  }
  return j;
}

}  // namespace corrbandit::harness
