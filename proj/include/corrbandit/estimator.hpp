#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "corrbandit/environment.hpp"
#include "corrbandit/pairs.hpp"

namespace corrbandit {

/// Where the sigma_p^2 factor of the (i,p) term in the MSE estimate comes from.
///  - PerPair: from pair (i,p)'s own samples (default).
///  - Pooled: from every sample of arm p across all pairs containing p. The
///    correlation then no longer collapses to the sample correlation and is
///    clamped to [-1, 1]; clamps are counted.
enum class VarianceMode { PerPair, Pooled };

enum class Side { First, Second };

/// Per-pair running sums for every unordered pair. Single writer.
class PairStatistics {
 public:
  explicit PairStatistics(std::size_t num_arms) : index_(num_arms), sums_(index_.size()) {}

  std::size_t num_arms() const { return index_.num_arms(); }
  const PairIndex& pair_index() const { return index_; }

  void record(Pair p, double x, double y) {
    PairSums& s = sums_[index_.index_of(p)];
    s.count += 1;
    s.sxx += x * x;
    s.syy += y * y;
    s.sxy += x * y;
  }

  void add(Pair p, const PairSums& batch) { sums_[index_.index_of(p)] += batch; }

  const PairSums& at(Pair p) const { return sums_[index_.index_of(p)]; }
  std::uint64_t count(Pair p) const { return at(p).count; }
  const std::vector<PairSums>& all() const { return sums_; }

  /// {"(i,j)": {n, sxx, syy, sxy}} with 1-based labels.
  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (std::size_t k = 0; k < sums_.size(); ++k) {
      const PairSums& s = sums_[k];
      out[pair_label(index_[k])] = {{"n", s.count}, {"sxx", s.sxx}, {"syy", s.syy}, {"sxy", s.sxy}};
    }
    return out;
  }

 private:
  PairIndex index_;
  std::vector<PairSums> sums_;
};

/// Sample second moment of one side of a pair: sxx/n or syy/n.
inline double sigma_hat2(const PairStatistics& stats, Pair p, Side side) {
  const PairSums& s = stats.at(p);
  if (s.count == 0) throw Error(ErrorCode::NoSamples, "pair " + pair_label(p));
  return (side == Side::First ? s.sxx : s.syy) / static_cast<double>(s.count);
}

/// Correlation estimate
///   1 - (1/2) (m_ii / v_i + m_jj / v_j - 2 m_ij / sqrt(v_i v_j))
/// with m the pair's sample moments and v the variance estimates. With
/// per-pair variances the first two ratios are exactly 1 and the value is
/// sxy / sqrt(sxx syy), up to last-ulp rounding that callers clip away.
inline double rho_hat_from(const PairSums& s, double var_first, double var_second) {
  const double n = static_cast<double>(s.count);
  const double m_ii = s.sxx / n;
  const double m_jj = s.syy / n;
  const double m_ij = s.sxy / n;
  const double r =
      1.0 - 0.5 * (m_ii / var_first + m_jj / var_second - 2.0 * m_ij / std::sqrt(var_first * var_second));
  return r;
}

inline double rho_hat(const PairStatistics& stats, Pair p) {
  const PairSums& s = stats.at(p);
  if (s.count == 0) throw Error(ErrorCode::NoSamples, "pair " + pair_label(p));
  if (s.sxx <= 0.0 || s.syy <= 0.0)
    throw Error(ErrorCode::DegenerateVariance, "pair " + pair_label(p));
  const double n = static_cast<double>(s.count);
  return std::clamp(rho_hat_from(s, s.sxx / n, s.syy / n), -1.0, 1.0);
}

struct MseEstimates {
  std::vector<double> values;
  /// Per arm i, min over p != i of n_ip.
  std::vector<std::uint64_t> support_counts;
  /// Pooled mode only: number of correlation estimates clamped into [-1, 1].
  std::size_t clamped = 0;
};

/// Computes MSE estimates on demand from the sufficient statistics.
class MseEstimator {
 public:
  explicit MseEstimator(VarianceMode mode = VarianceMode::PerPair) : mode_(mode) {}

  VarianceMode mode() const { return mode_; }

  /// Estimate for one arm; requires every pair (arm, p) to have samples.
  double mse_hat(const PairStatistics& stats, std::size_t arm) {
    if (arm >= stats.num_arms()) throw Error(ErrorCode::InvalidArm, "arm " + std::to_string(arm));
    if (mode_ == VarianceMode::Pooled) refresh_pooled(stats);
    double total = 0.0;
    for (std::size_t p = 0; p < stats.num_arms(); ++p) {
      if (p == arm) continue;
      total += term(stats, arm, p);
    }
    return total;
  }

  /// Estimates for every arm in `arms` (all arms if empty); other entries are NaN.
  MseEstimates estimate(const PairStatistics& stats, const std::vector<std::size_t>& arms = {}) {
    const std::size_t k = stats.num_arms();
    MseEstimates out;
    out.values.assign(k, std::numeric_limits<double>::quiet_NaN());
    out.support_counts.assign(k, 0);
    clamped_ = 0;
    if (mode_ == VarianceMode::Pooled) refresh_pooled(stats);
    auto one = [&](std::size_t arm) {
      double total = 0.0;
      std::uint64_t support = std::numeric_limits<std::uint64_t>::max();
      for (std::size_t p = 0; p < k; ++p) {
        if (p == arm) continue;
        total += term(stats, arm, p);
        support = std::min(support, stats.count(make_pair(arm, p)));
      }
      out.values[arm] = total;
      out.support_counts[arm] = support;
    };
    if (arms.empty()) {
      for (std::size_t a = 0; a < k; ++a) one(a);
    } else {
      for (std::size_t a : arms) one(a);
    }
    out.clamped = clamped_;
    return out;
  }

 private:
  // sigma_p^2 (1 - rho_ip^2) for the pair (arm, p).
  double term(const PairStatistics& stats, std::size_t arm, std::size_t p) {
    const Pair pr = make_pair(arm, p);
    const PairSums& s = stats.at(pr);
    if (s.count == 0)
      throw Error(ErrorCode::MissingPair, "pair " + pair_label(pr) + " has no samples");
    if (s.sxx <= 0.0 || s.syy <= 0.0)
      throw Error(ErrorCode::DegenerateVariance, "pair " + pair_label(pr));
    const bool p_is_first = pr.first == p;
    const double n = static_cast<double>(s.count);
    if (mode_ == VarianceMode::PerPair) {
      const double rho = std::clamp(rho_hat_from(s, s.sxx / n, s.syy / n), -1.0, 1.0);
      const double var_p = (p_is_first ? s.sxx : s.syy) / n;
      return var_p * (1.0 - rho * rho);
    }
    const double v_first = pooled_[pr.first];
    const double v_second = pooled_[pr.second];
    double rho = rho_hat_from(s, v_first, v_second);
    if (rho > 1.0 || rho < -1.0) {
      ++clamped_;
      rho = std::clamp(rho, -1.0, 1.0);
    }
    return pooled_[p] * (1.0 - rho * rho);
  }

  void refresh_pooled(const PairStatistics& stats) {
    const std::size_t k = stats.num_arms();
    std::vector<double> sq(k, 0.0);
    std::vector<double> cnt(k, 0.0);
    const PairIndex& idx = stats.pair_index();
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const PairSums& s = stats.all()[q];
      sq[idx[q].first] += s.sxx;
      sq[idx[q].second] += s.syy;
      cnt[idx[q].first] += static_cast<double>(s.count);
      cnt[idx[q].second] += static_cast<double>(s.count);
    }
    pooled_.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) pooled_[a] = cnt[a] > 0 ? sq[a] / cnt[a] : 0.0;
  }

  VarianceMode mode_;
  std::vector<double> pooled_;
  std::size_t clamped_ = 0;
};

/// Convenience: per-pair-mode estimate for a single arm.
inline double mse_hat(const PairStatistics& stats, std::size_t arm) {
  return MseEstimator(VarianceMode::PerPair).mse_hat(stats, arm);
}

}  // namespace corrbandit
