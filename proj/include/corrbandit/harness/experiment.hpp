#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "corrbandit/algorithms.hpp"
#include "corrbandit/bounds.hpp"
#include "corrbandit/covariance.hpp"
#include "corrbandit/ground_truth.hpp"
#include "corrbandit/harness/config.hpp"
#include "corrbandit/harness/output.hpp"
#include "corrbandit/harness/parallel.hpp"
#include "corrbandit/rng.hpp"

namespace corrbandit::harness {

/// Stable numeric id mixed into the per-run seed.
inline std::uint64_t algorithm_id(Algorithm a) { return a == Algorithm::Uniform ? 0 : 1; }

/// One replication: the CSV row plus the full result for traces.
struct RunRecord {
  Algorithm algorithm = Algorithm::Uniform;
  std::uint64_t seed = 0;
  std::size_t num_arms = 0;
  std::uint64_t budget = 0;
  RunResult result;
};

struct RunSettings {
  VarianceMode variance_mode = VarianceMode::PerPair;
  SamplingMode sampling = SamplingMode::PerDraw;
};

inline RunRecord run_once(const std::shared_ptr<const CovarianceModel>& model, std::size_t best_arm,
                          Algorithm alg, std::uint64_t budget, std::uint64_t seed,
                          const RunSettings& settings) {
  Environment env(model, seed, settings.sampling);
  RunRecord r{alg, seed, model->num_arms(), budget, {}};
  r.result = alg == Algorithm::Uniform ? uniform_sampling(env, budget, settings.variance_mode)
                                       : successive_rejects(env, budget, settings.variance_mode);
  r.result.correct = r.result.recommended == best_arm;
  return r;
}

/// Replication r of algorithm a uses derive_seed({base, r, id(a)}).
inline std::vector<RunRecord> run_replications(const std::shared_ptr<const CovarianceModel>& model,
                                               Algorithm alg, std::uint64_t budget,
                                               std::size_t replications, std::uint64_t base_seed,
                                               std::size_t workers, const RunSettings& settings) {
  const std::size_t best = gap_profile(*model).best_arm;
  return parallel_map<RunRecord>(replications, workers, [&](std::size_t rep) {
    return run_once(model, best, alg, budget, derive_seed({base_seed, rep, algorithm_id(alg)}), settings);
  });
}

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::Uniform;
  std::uint64_t budget = 0;
  std::size_t replications = 0;
  std::size_t errors = 0;
  double error_frequency = 0.0;
  double std_error = 0.0;
  double mean_total_pulls = 0.0;
  std::uint64_t max_total_pulls = 0;
  std::vector<std::size_t> recommendation_histogram;
  std::size_t clamped_correlations = 0;
  double theoretical_bound = 1.0;
};

inline AlgorithmSummary summarize(const std::vector<RunRecord>& runs, Algorithm alg,
                                  std::uint64_t budget, const CovarianceModel& model) {
  AlgorithmSummary s;
  s.algorithm = alg;
  s.budget = budget;
  s.replications = runs.size();
  s.recommendation_histogram.assign(model.num_arms(), 0);
  double pulls = 0.0;
  for (const RunRecord& r : runs) {
    if (!r.result.correct) ++s.errors;
    pulls += static_cast<double>(r.result.total_pulls);
    s.max_total_pulls = std::max(s.max_total_pulls, r.result.total_pulls);
    ++s.recommendation_histogram[r.result.recommended];
    s.clamped_correlations += r.result.clamped_correlations;
  }
  const double n = static_cast<double>(runs.size());
  s.error_frequency = n > 0 ? static_cast<double>(s.errors) / n : 0.0;
  s.std_error = binomial_se(s.error_frequency, n);
  s.mean_total_pulls = n > 0 ? pulls / n : 0.0;

  const ComplexitySummary cx = complexity_summary(gap_profile(model), model.max_variance());
  if (!cx.degenerate) {
    const GapProfile g = gap_profile(model);
    const double l = model.min_variance();
    s.theoretical_bound =
        alg == Algorithm::Uniform
            ? uniform_error_bound(static_cast<double>(budget), model.num_arms(), l, g.ordered_gaps[0])
            : sr_error_bound(static_cast<double>(budget), model.num_arms(), l, cx.h2);
  }
  return s;
}

inline nlohmann::json to_json(const AlgorithmSummary& s) {
  nlohmann::json hist = nlohmann::json::object();
  for (std::size_t a = 0; a < s.recommendation_histogram.size(); ++a)
    if (s.recommendation_histogram[a] > 0) hist[std::to_string(a + 1)] = s.recommendation_histogram[a];
  return {{"algorithm", to_string(s.algorithm)},
          {"budget", s.budget},
          {"replications", s.replications},
          {"errors", s.errors},
          {"error_frequency", s.error_frequency},
          {"std_error", s.std_error},
          {"mean_total_pulls", s.mean_total_pulls},
          {"max_total_pulls", s.max_total_pulls},
          {"recommendation_histogram", hist},
          {"clamped_correlations", s.clamped_correlations},
          {"theoretical_bound", s.theoretical_bound}};
}

inline constexpr const char* kResultsHeader = "algorithm,seed,K,n,recommended,correct,total_pulls";

/// One CSV row; `recommended` is 1-based.
inline std::string csv_row(const RunRecord& r) {
  std::ostringstream out;
  out << to_string(r.algorithm) << ',' << r.seed << ',' << r.num_arms << ',' << r.budget << ','
      << r.result.recommended + 1 << ',' << (r.result.correct ? 1 : 0) << ',' << r.result.total_pulls;
  return out.str();
}

inline nlohmann::json trace_json(const RunRecord& r, const PairIndex& index) {
  nlohmann::json phases = nlohmann::json::array();
  for (const PhaseRecord& p : r.result.phase_trace) {
    std::vector<std::size_t> gone;
    for (std::size_t a : p.eliminated) gone.push_back(a + 1);
    phases.push_back({{"phase", p.phase},
                      {"eliminated", gone},
                      {"active_pairs", p.active_pairs},
                      {"per_pair_count", p.per_pair_count}});
  }
  nlohmann::json pulls = nlohmann::json::object();
  for (std::size_t q = 0; q < index.size(); ++q) pulls[pair_label(index[q])] = r.result.pulls[q];
  return {{"algorithm", to_string(r.algorithm)},
          {"seed", r.seed},
          {"K", r.num_arms},
          {"n", r.budget},
          {"recommended", r.result.recommended + 1},
          {"correct", r.result.correct},
          {"total_pulls", r.result.total_pulls},
          {"phases", phases},
          {"pulls", pulls}};
}

/// Log-linear interpolation of the budget where an error curve crosses
/// `target`; nullopt if it never does.
inline std::optional<double> interpolate_crossing(const std::vector<std::uint64_t>& budgets,
                                                  const std::vector<double>& errors, double target) {
  for (std::size_t i = 0; i + 1 < budgets.size(); ++i) {
    const double e0 = errors[i] - target;
    const double e1 = errors[i + 1] - target;
    if (e0 == 0.0) return static_cast<double>(budgets[i]);
    if ((e0 > 0) != (e1 > 0)) {
      const double l0 = std::log(static_cast<double>(budgets[i]));
      const double l1 = std::log(static_cast<double>(budgets[i + 1]));
      return std::exp(l0 + (l1 - l0) * e0 / (e0 - e1));
    }
  }
  if (!errors.empty() && errors.back() == target) return static_cast<double>(budgets.back());
  return std::nullopt;
}

inline nlohmann::json model_json(const ResolvedModel& m) {
  const GapProfile g = gap_profile(m.model);
  const ComplexitySummary c = complexity_summary(g, m.model.max_variance());
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  return {{"name", m.name},
          {"K", m.model.num_arms()},
          {"best_arm", g.best_arm + 1},
          {"true_mse", g.mse},
          {"min_gap", g.ordered_gaps.size() > 1 ? g.ordered_gaps[0] : 0.0},
          {"min_variance", m.model.min_variance()},
          {"max_variance", m.model.max_variance()},
          {"jointly_psd", m.model.jointly_psd()},
          {"complexity",
           {{"H2", finite_or_null(c.h2)},
            {"H_bar", finite_or_null(c.h_bar)},
            {"H_lb", finite_or_null(c.h_lb)},
            {"degenerate", c.degenerate}}}};
}

struct ExperimentReport {
  nlohmann::json summary;
  std::vector<std::vector<AlgorithmSummary>> curve;  // [budget][algorithm]
  OutputBundle files;
};

/// Runs every configured algorithm at every budget and produces results.csv,
/// summary.json and (optionally) one trace per run.
inline ExperimentReport run_experiment(const StudyConfig& cfg) {
  cfg.validate();
  ResolvedModel resolved = resolve_model(cfg.model, cfg.as_printed);
  auto model = std::make_shared<const CovarianceModel>(resolved.model);
  const PairIndex index(model->num_arms());
  const RunSettings settings{cfg.variance_mode, cfg.sampling};
  const auto budgets = cfg.budgets();

  ExperimentReport report;
  std::ostringstream csv;
  csv << kResultsHeader << '\n';
  nlohmann::json curve = nlohmann::json::array();
  std::vector<double> uniform_errors;
  for (std::uint64_t budget : budgets) {
    std::vector<AlgorithmSummary> row;
    nlohmann::json point = {{"budget", budget}, {"algorithms", nlohmann::json::array()}};
    for (Algorithm alg : cfg.algorithms) {
      const auto runs = run_replications(model, alg, budget, cfg.replications, cfg.base_seed,
                                         cfg.workers, settings);
      for (std::size_t r = 0; r < runs.size(); ++r) {
        csv << csv_row(runs[r]) << '\n';
        if (cfg.write_traces)
          report.files.add_json("traces/" + to_string(alg) + "_n" + std::to_string(budget) + "_rep" +
                                    std::to_string(r) + ".json",
                                trace_json(runs[r], index));
      }
      row.push_back(summarize(runs, alg, budget, *model));
      point["algorithms"].push_back(to_json(row.back()));
      if (alg == Algorithm::Uniform) uniform_errors.push_back(row.back().error_frequency);
    }
    if (row.size() == 2) {
      const double diff = row[0].error_frequency - row[1].error_frequency;
      const double pooled = (row[0].errors + row[1].errors) /
                            static_cast<double>(row[0].replications + row[1].replications);
      const double se = std::sqrt(pooled * (1 - pooled) *
                                  (1.0 / row[0].replications + 1.0 / row[1].replications));
      point["difference"] = {{"first_minus_second", diff}, {"pooled_std_error", se}};
    }
    curve.push_back(point);
    report.curve.push_back(std::move(row));
  }

  nlohmann::json summary = {{"config", cfg.to_json()},
                            {"model", model_json(resolved)},
                            {"warnings", resolved.warnings},
                            {"curve", curve}};
  if (cfg.target_uniform_error && !uniform_errors.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < uniform_errors.size(); ++i)
      if (std::abs(uniform_errors[i] - *cfg.target_uniform_error) <
          std::abs(uniform_errors[best] - *cfg.target_uniform_error))
        best = i;
    nlohmann::json cal = {{"target_uniform_error", *cfg.target_uniform_error},
                          {"closest_budget", budgets[best]},
                          {"uniform_error_at_closest", uniform_errors[best]}};
    if (auto x = interpolate_crossing(budgets, uniform_errors, *cfg.target_uniform_error))
      cal["interpolated_budget"] = *x;
    summary["calibration"] = cal;
  }
  report.summary = summary;
  report.files.add("results.csv", csv.str());
  report.files.add_json("summary.json", summary);
  return report;
}

}  // namespace corrbandit::harness
