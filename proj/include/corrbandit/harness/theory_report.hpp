#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "corrbandit/algorithms.hpp"
#include "corrbandit/covariance.hpp"
#include "corrbandit/ground_truth.hpp"
#include "corrbandit/harness/config.hpp"
#include "corrbandit/harness/experiment.hpp"
#include "corrbandit/harness/output.hpp"
#include "corrbandit/harness/parallel.hpp"
#include "corrbandit/rng.hpp"
#include "corrbandit/theory.hpp"

namespace corrbandit::harness {

/// E_i of the lower-bound instance in closed form (1-based i):
/// (i-1) - sum_{t=1}^{i-1} rho^{2t} + (K-i)(1 - rho^{2i}).
inline double lb_mse_closed_form(std::size_t num_arms, double rho, std::size_t i) {
  const double r2 = rho * rho;
  double geo = 0.0;
  for (std::size_t t = 1; t < i; ++t) geo += std::pow(r2, static_cast<double>(t));
  return static_cast<double>(i - 1) - geo +
         static_cast<double>(num_arms - i) * (1.0 - std::pow(r2, static_cast<double>(i)));
}

struct EklTail {
  std::size_t t = 0;
  std::size_t trials = 0;
  double eps_tilde = 0.0;
  /// Per transformation m = 2..K (index m-2): frequency of
  /// {some pair has ekl - kl > eps_tilde}.
  std::vector<double> frequency_by_m;
  double max_frequency = 0.0;
  double std_error = 0.0;  // of the max
};

/// Each trial draws t samples of every pair from the original instance and
/// checks ekl^m_ij - kl^m_ij > eps_tilde_t for every m and pair.
inline EklTail ekl_tail_study(std::size_t num_arms, double rho, std::size_t t, std::size_t trials,
                              std::uint64_t base_seed, std::size_t workers = 1,
                              SamplingMode sampling = SamplingMode::PerDraw) {
  auto original = std::make_shared<const CovarianceModel>(build_lb_cov(num_arms, rho));
  const PairIndex index(num_arms);
  const LowerBoundParams params = make_lower_bound_params(num_arms, rho, static_cast<double>(t));
  const double eps = params.eps_tilde(static_cast<double>(t));

  struct Cell {
    Eigen::Matrix2d a0, a1;
    double kl;
  };
  std::vector<std::vector<Cell>> cells(num_arms - 1);
  for (std::size_t m = 1; m < num_arms; ++m) {
    const CovarianceModel transformed = transform_problem(*original, m);
    for (std::size_t q = 0; q < index.size(); ++q) {
      const Eigen::Matrix2d a0 = original->marginal(index[q]);
      const Eigen::Matrix2d a1 = transformed.marginal(index[q]);
      cells[m - 1].push_back({a0, a1, kl_bivariate(a0, a1)});
    }
  }

  const auto hits = parallel_map<std::vector<char>>(trials, workers, [&](std::size_t trial) {
    Environment env(original, derive_seed({base_seed, trial, t, 0x656b6c}), sampling);
    std::vector<PairSums> sums;
    for (std::size_t q = 0; q < index.size(); ++q) sums.push_back(env.pull(index[q], t));
    std::vector<char> hit(num_arms - 1, 0);
    for (std::size_t m = 0; m + 1 < num_arms; ++m)
      for (std::size_t q = 0; q < index.size(); ++q)
        if (empirical_kl(sums[q], cells[m][q].a0, cells[m][q].a1) - cells[m][q].kl > eps) {
          hit[m] = 1;
          break;
        }
    return hit;
  });

  EklTail out{t, trials, eps, std::vector<double>(num_arms - 1, 0.0), 0.0, 0.0};
  for (const auto& h : hits)
    for (std::size_t m = 0; m + 1 < num_arms; ++m) out.frequency_by_m[m] += h[m];
  for (double& f : out.frequency_by_m) f /= static_cast<double>(trials);
  out.max_frequency = *std::max_element(out.frequency_by_m.begin(), out.frequency_by_m.end());
  out.std_error = binomial_se(out.max_frequency, static_cast<double>(trials));
  return out;
}

struct TheoryReport {
  nlohmann::json report;
  OutputBundle files;
};

/// Lower-bound instance diagnostics: exact pairwise KL of every
/// transformation against the hand-derived caps and the gaps, the
/// complexity relations, and the lower-bound value over an n grid next to
/// SR's empirical worst-case error.
inline TheoryReport run_theory_report(const StudyConfig& cfg) {
  cfg.validate();
  ResolvedModel resolved = resolve_model(cfg.model, cfg.as_printed);
  if (!resolved.lower_bound_instance)
    throw Error(ErrorCode::ConfigError, "theory study needs a model of the form lb:K:rho");
  const std::size_t k = resolved.lb_arms;
  const double rho = resolved.lb_rho;
  const CovarianceModel& original = resolved.model;
  const PairIndex index(k);
  const GapProfile gaps = gap_profile(original);
  const ComplexitySummary cx = complexity_summary(gaps, original.max_variance());

  nlohmann::json kl_rows = nlohmann::json::array();
  nlohmann::json kl12 = nlohmann::json::array();
  bool all_gap = true, all_cap = true;
  for (std::size_t m = 1; m < k; ++m) {
    const CovarianceModel transformed = transform_problem(original, m);
    for (std::size_t q = 0; q < index.size(); ++q) {
      const Pair p = index[q];
      const double exact = kl_pairwise(original, transformed, p);
      const double cap = kl_analytic_cap(rho, m, p);
      const double gap = gaps.gaps[m];
      const bool le_gap = exact <= gap;
      const bool le_cap = exact <= cap + 1e-12;
      all_gap = all_gap && le_gap;
      all_cap = all_cap && le_cap;
      kl_rows.push_back({{"m", m + 1},
                         {"pair", pair_label(p)},
                         {"kl", exact},
                         {"analytic_cap", cap},
                         {"gap_m", gap},
                         {"satisfied", le_gap},
                         {"within_cap", le_cap}});
      if (q == 0) kl12.push_back({{"m", m + 1}, {"kl", exact}});
    }
  }

  std::vector<double> closed;
  double closed_err = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    closed.push_back(lb_mse_closed_form(k, rho, i));
    closed_err = std::max(closed_err, std::abs(closed.back() - gaps.mse[i - 1]));
  }
  double h_lb_closed = 0.0;
  for (std::size_t i = 2; i <= k; ++i) h_lb_closed += 1.0 / (closed[i - 1] - closed[0]);

  auto model_ptr = std::make_shared<const CovarianceModel>(original);
  std::vector<std::shared_ptr<const CovarianceModel>> problems{model_ptr};
  for (std::size_t m = 1; m < k; ++m)
    problems.push_back(std::make_shared<const CovarianceModel>(transform_problem(original, m)));

  nlohmann::json curve = nlohmann::json::array();
  for (std::uint64_t n : cfg.lb_n_grid) {
    const LowerBoundParams params = make_lower_bound_params(k, rho, static_cast<double>(n));
    nlohmann::json point = {{"n", n},
                            {"eps_tilde_n", params.eps_tilde_n()},
                            {"log_value", lower_bound_log_value(params, gaps)},
                            {"value", lower_bound_value(params, gaps)}};
    if (n > pair_count(k) && cfg.theory_reps > 0) {
      double worst = 0.0;
      std::size_t worst_problem = 0;
      for (std::size_t m = 0; m < problems.size(); ++m) {
        const auto runs = run_replications(problems[m], Algorithm::SuccessiveRejects, n,
                                           cfg.theory_reps, derive_seed({cfg.base_seed, m}),
                                           cfg.workers, {cfg.variance_mode, cfg.sampling});
        double errs = 0.0;
        for (const auto& r : runs) errs += r.result.correct ? 0.0 : 1.0;
        errs /= static_cast<double>(runs.size());
        if (errs > worst) {
          worst = errs;
          worst_problem = m;
        }
      }
      point["sr_max_error"] = worst;
      point["sr_max_error_problem"] = worst_problem + 1;
    }
    curve.push_back(point);
  }

  const LowerBoundParams base = make_lower_bound_params(k, rho, 1.0);
  const double u = cx.u;
  nlohmann::json report = {
      {"config", cfg.to_json()},
      {"K", k},
      {"rho", rho},
      {"rho2_limit", base.ub_rho2},
      {"rho_in_range", base.rho_in_range},
      {"jointly_psd", original.jointly_psd()},
      {"min_eigenvalue", original.min_eigenvalue()},
      {"c1", base.c1},
      {"c2", base.c2},
      {"c_tilde", base.c_tilde},
      {"true_mse", gaps.mse},
      {"closed_form_mse", closed},
      {"closed_form_max_abs_diff", closed_err},
      {"gaps", gaps.gaps},
      {"complexity",
       {{"H2", cx.h2},
        {"H_bar", cx.h_bar},
        {"H_lb", cx.h_lb},
        {"H_lb_closed_form", h_lb_closed},
        {"log_bar_K", cx.log_bar_k},
        {"harmonic_K", cx.harmonic_k},
        {"u", u},
        {"H2_le_H_bar", cx.h2 <= cx.h_bar},
        {"H_bar_le_log_bar_H2", cx.h_bar <= cx.log_bar_k * cx.h2},
        {"H_bar_le_harmonic_H2", cx.h_bar <= cx.harmonic_k * cx.h2},
        {"H_bar_ge_H_lb_over_Ku", cx.h_bar >= cx.h_lb / (static_cast<double>(k) * u)}}},
      {"kl_pair_12", kl12},
      {"kl_all_within_gap", all_gap},
      {"kl_all_within_cap", all_cap},
      {"kl", kl_rows},
      {"lower_bound_curve", curve},
      {"warnings", resolved.warnings}};
  TheoryReport out;
  out.report = report;
  out.files.add_json("theory.json", report);
  return out;
}

}  // namespace corrbandit::harness
