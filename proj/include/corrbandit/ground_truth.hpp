#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "corrbandit/covariance.hpp"

namespace corrbandit {

/// Error of the best linear estimate of all other arms from arm i:
/// sum over j != i of sigma_j^2 (1 - rho_ij^2).
inline double true_mse(const CovarianceModel& model, std::size_t arm) {
  if (arm >= model.num_arms()) throw Error(ErrorCode::InvalidArm, "arm " + std::to_string(arm));
  if (model.variance(arm) == 0.0)
    throw Error(ErrorCode::ZeroVariance, "arm " + std::to_string(arm + 1));
  double total = 0.0;
  for (std::size_t j = 0; j < model.num_arms(); ++j) {
    if (j == arm) continue;
    const double rho = model.correlation(arm, j);
    total += model.variance(j) * (1.0 - rho * rho);
  }
  return total;
}

inline std::vector<double> true_mse_all(const CovarianceModel& model) {
  std::vector<double> out(model.num_arms());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = true_mse(model, i);
  return out;
}

/// Index of the minimum; ties go to the lowest index.
inline std::size_t argmin_lowest(const std::vector<double>& values) {
  return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
}

struct GapProfile {
  std::vector<double> mse;
  std::size_t best_arm = 0;
  std::vector<double> gaps;
  /// Ascending gaps, position 0 overwritten by position 1 (Delta_(1) := Delta_(2)).
  std::vector<double> ordered_gaps;
};

/// Builds a profile from arbitrary per-arm MSE values.
inline GapProfile gap_profile_from_mse(std::vector<double> mse) {
  if (mse.size() < 3) throw Error(ErrorCode::TooFewArms, "need at least 3 arms");
  GapProfile g;
  g.best_arm = argmin_lowest(mse);
  const double best = mse[g.best_arm];
  g.gaps.resize(mse.size());
  for (std::size_t i = 0; i < mse.size(); ++i) g.gaps[i] = i == g.best_arm ? 0.0 : mse[i] - best;
  g.ordered_gaps = g.gaps;
  std::sort(g.ordered_gaps.begin(), g.ordered_gaps.end());
  g.ordered_gaps[0] = g.ordered_gaps[1];
  g.mse = std::move(mse);
  return g;
}

inline GapProfile gap_profile(const CovarianceModel& model) {
  return gap_profile_from_mse(true_mse_all(model));
}

struct ComplexitySummary {
  double h2 = 0.0;
  double h_bar = 0.0;
  double h_lb = 0.0;
  /// sum_{i=2}^{K-2} 1/i as printed alongside the complexity ordering.
  double log_bar_k = 0.0;
  /// sum_{i=1}^{K} 1/i, the factor for which H_bar <= factor * H2 always holds.
  double harmonic_k = 0.0;
  /// Variance upper bound u used in H_bar >= H_lb / (K u).
  double u = 1.0;
  /// True when some suboptimal gap is zero; the complexities are then infinite.
  bool degenerate = false;
};

inline double log_bar(std::size_t num_arms) {
  double s = 0.0;
  for (std::size_t i = 2; i + 2 <= num_arms; ++i) s += 1.0 / static_cast<double>(i);
  return s;
}

inline double harmonic(std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 1; i <= n; ++i) s += 1.0 / static_cast<double>(i);
  return s;
}

/// H2 = max_{i>=2} i / Delta_(i)^2, H_bar = sum_{i=1}^{K} 1 / Delta_(i)^2 over
/// the ordered gaps (so the Delta_(1) := Delta_(2) slot counts once), and
/// H_lb = sum_{i != i*} 1 / Delta_i.
inline ComplexitySummary complexity_summary(const GapProfile& profile, double u = 1.0) {
  ComplexitySummary c;
  c.u = u;
  const std::size_t k = profile.gaps.size();
  c.log_bar_k = log_bar(k);
  c.harmonic_k = harmonic(k);
  for (std::size_t i = 0; i < k; ++i)
    if (i != profile.best_arm && !(profile.gaps[i] > 0.0)) c.degenerate = true;
  if (c.degenerate) {
    const double inf = std::numeric_limits<double>::infinity();
    c.h2 = c.h_bar = c.h_lb = inf;
    return c;
  }
  for (std::size_t pos = 1; pos < k; ++pos) {
    const double d = profile.ordered_gaps[pos];
    c.h2 = std::max(c.h2, static_cast<double>(pos + 1) / (d * d));
  }
  for (double d : profile.ordered_gaps) c.h_bar += 1.0 / (d * d);
  for (std::size_t i = 0; i < k; ++i)
    if (i != profile.best_arm) c.h_lb += 1.0 / profile.gaps[i];
  return c;
}

}  // namespace corrbandit
