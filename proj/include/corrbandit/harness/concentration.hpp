#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "corrbandit/bounds.hpp"
#include "corrbandit/covariance.hpp"
#include "corrbandit/environment.hpp"
#include "corrbandit/estimator.hpp"
#include "corrbandit/ground_truth.hpp"
#include "corrbandit/harness/config.hpp"
#include "corrbandit/harness/output.hpp"
#include "corrbandit/harness/parallel.hpp"
#include "corrbandit/rng.hpp"

namespace corrbandit::harness {

enum class Quantity { Variance, Correlation, Mse };

inline std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::Variance: return "variance";
    case Quantity::Correlation: return "correlation";
    case Quantity::Mse: return "mse";
  }
  return "?";
}

struct TailPoint {
  std::uint64_t n = 0;
  double eps = 0.0;
  Quantity quantity = Quantity::Mse;
  std::size_t exceed = 0;
  std::size_t trials = 0;
  double frequency = 0.0;
  double std_error = 0.0;
  double bound = 1.0;
};

/// Absolute estimation errors of one trial at one n: sigma_hat^2 of `arm`
/// and rho_hat of (arm, partner) from that pair's samples, and E_hat of `arm`.
struct Deviations {
  double variance = 0.0;
  double correlation = 0.0;
  double mse = 0.0;
};

inline Deviations concentration_trial(const std::shared_ptr<const CovarianceModel>& model,
                                      std::size_t arm, std::uint64_t n, std::uint64_t seed,
                                      SamplingMode sampling) {
  const std::size_t k = model->num_arms();
  Environment env(model, seed, sampling);
  PairStatistics stats(k);
  for (std::size_t p = 0; p < k; ++p)
    if (p != arm) stats.add(make_pair(arm, p), env.pull(make_pair(arm, p), n));
  const std::size_t partner = arm == 0 ? 1 : 0;
  const Pair pr = make_pair(arm, partner);
  const Side side = pr.first == arm ? Side::First : Side::Second;
  Deviations d;
  d.variance = std::abs(sigma_hat2(stats, pr, side) - model->variance(arm));
  d.correlation = std::abs(rho_hat(stats, pr) - model->correlation(arm, partner));
  d.mse = std::abs(mse_hat(stats, arm) - true_mse(*model, arm));
  return d;
}

struct ConcentrationReport {
  std::vector<TailPoint> tails;
  nlohmann::json summary;
  OutputBundle files;
};

/// Monte Carlo tails of the three estimators against their concentration
/// bounds. Trial t at grid point i uses derive_seed({base, t, i, tag}).
inline ConcentrationReport run_concentration_study(const StudyConfig& cfg) {
  cfg.validate();
  ResolvedModel resolved = resolve_model(cfg.model, cfg.as_printed);
  auto model = std::make_shared<const CovarianceModel>(resolved.model);
  const std::size_t k = model->num_arms();
  if (cfg.arm >= k) throw Error(ErrorCode::InvalidArm, "arm " + std::to_string(cfg.arm + 1));
  const std::size_t partner = cfg.arm == 0 ? 1 : 0;
  const double l = model->min_variance();
  constexpr std::uint64_t kTag = 0x636f6e63;

  ConcentrationReport report;
  std::ostringstream csv;
  csv.precision(17);
  csv << "n,eps,quantity,exceed,trials,tail_frequency,std_error,bound,log_tail\n";
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const std::uint64_t n = cfg.n_grid[ni];
    const auto devs = parallel_map<Deviations>(cfg.trials, cfg.workers, [&](std::size_t t) {
      return concentration_trial(model, cfg.arm, n, derive_seed({cfg.base_seed, t, ni, kTag}),
                                 cfg.sampling);
    });
    for (double eps : cfg.eps_grid) {
      for (Quantity q : {Quantity::Variance, Quantity::Correlation, Quantity::Mse}) {
        TailPoint tp{n, eps, q, 0, devs.size(), 0.0, 0.0, 1.0};
        for (const Deviations& d : devs) {
          const double v = q == Quantity::Variance ? d.variance
                           : q == Quantity::Correlation ? d.correlation
                                                        : d.mse;
          if (v > eps) ++tp.exceed;
        }
        tp.frequency = static_cast<double>(tp.exceed) / static_cast<double>(tp.trials);
        tp.std_error = binomial_se(tp.frequency, static_cast<double>(tp.trials));
        const double nd = static_cast<double>(n);
        tp.bound = q == Quantity::Variance ? variance_tail_bound(nd, model->variance(cfg.arm), eps)
                   : q == Quantity::Correlation ? correlation_tail_bound(nd, l, eps, eps)
                                                : mse_concentration_bound(nd, k, l, eps);
        csv << n << ',' << eps << ',' << to_string(q) << ',' << tp.exceed << ',' << tp.trials << ','
            << tp.frequency << ',' << tp.std_error << ',' << tp.bound << ','
            << (tp.exceed > 0 ? std::to_string(std::log(tp.frequency)) : "-inf") << '\n';
        report.tails.push_back(tp);
      }
    }
  }

  nlohmann::json points = nlohmann::json::array();
  bool all_within = true;
  for (const TailPoint& tp : report.tails) {
    const bool within = tp.frequency <= tp.bound;
    all_within = all_within && within;
    points.push_back({{"n", tp.n},
                      {"eps", tp.eps},
                      {"quantity", to_string(tp.quantity)},
                      {"tail_frequency", tp.frequency},
                      {"std_error", tp.std_error},
                      {"bound", tp.bound},
                      {"within_bound", within}});
  }
  nlohmann::json warnings = resolved.warnings;
  if (!model->unit_bounded())
    warnings.push_back("variances are not all in [l, 1]; the tail bounds assume they are");
  report.summary = {{"config", cfg.to_json()},
                    {"model", resolved.name},
                    {"arm", cfg.arm + 1},
                    {"partner", partner + 1},
                    {"l", l},
                    {"true_mse", true_mse(*model, cfg.arm)},
                    {"all_within_bound", all_within},
                    {"warnings", warnings},
                    {"points", points}};
  report.files.add("tails.csv", csv.str());
  report.files.add_json("concentration.json", report.summary);
  return report;
}

}  // namespace corrbandit::harness
