#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "corrbandit/environment.hpp"
#include "corrbandit/estimator.hpp"
#include "corrbandit/ground_truth.hpp"
#include "corrbandit/pairs.hpp"

namespace corrbandit {

/// Anything that can hand out batches of pair samples.
template <class E>
concept PairEnvironment = requires(E& env, Pair p, std::uint64_t count) {
  { env.num_arms() } -> std::convertible_to<std::size_t>;
  { env.pull(p, count) } -> std::same_as<PairSums>;
};

/// C(K) = (K-1)/2 + sum_{j=1}^{K-2} j/(K-j).
inline double sr_constant(std::size_t num_arms) {
  const double k = static_cast<double>(num_arms);
  double c = (k - 1.0) / 2.0;
  for (std::size_t j = 1; j + 2 <= num_arms; ++j)
    c += static_cast<double>(j) / static_cast<double>(num_arms - j);
  return c;
}

struct PhaseSchedule {
  std::size_t num_arms = 0;
  std::uint64_t budget = 0;
  double c_of_k = 0.0;
  /// Cumulative per-pair counts n_1 <= ... <= n_{K-2}, after capping.
  std::vector<std::uint64_t> lengths;
  /// |A_k|: pairs still sampled during phase k.
  std::vector<std::uint64_t> active_pairs;
  std::uint64_t total_pulls = 0;
  /// True when ceiling slack pushed the raw schedule over budget and
  /// increments were trimmed from the last phase backwards.
  bool capped = false;
};

/// Phase lengths n_k = ceil((n - K(K-1)/2) / (C(K) (K+1-k))), k = 1..K-2.
/// Phase 1 drops two arms and every later phase one, so K-2 phases leave a
/// single arm and |A_k| = K(K-1)/2 - k(k-1)/2.
inline PhaseSchedule phase_schedule(std::size_t num_arms, std::uint64_t budget) {
  if (num_arms < 3) throw Error(ErrorCode::TooFewArms, "K=" + std::to_string(num_arms));
  const std::uint64_t pairs = pair_count(num_arms);
  if (budget <= pairs)
    throw Error(ErrorCode::BudgetTooSmall, "budget " + std::to_string(budget) + " <= K(K-1)/2 = " +
                                               std::to_string(pairs));
  PhaseSchedule s;
  s.num_arms = num_arms;
  s.budget = budget;
  s.c_of_k = sr_constant(num_arms);
  const std::size_t phases = num_arms - 2;
  const double numer = static_cast<double>(budget - pairs);
  std::vector<std::uint64_t> increments(phases);
  std::uint64_t prev = 0;
  for (std::size_t k = 1; k <= phases; ++k) {
    const double raw = numer / (s.c_of_k * static_cast<double>(num_arms + 1 - k));
    const auto nk = std::max(prev, static_cast<std::uint64_t>(std::ceil(raw)));
    increments[k - 1] = nk - prev;
    prev = nk;
    s.active_pairs.push_back(pairs - pair_count(k));
  }
  auto total = [&] {
    std::uint64_t t = 0;
    for (std::size_t k = 0; k < phases; ++k) t += s.active_pairs[k] * increments[k];
    return t;
  };
  std::uint64_t used = total();
  for (std::size_t k = phases; k-- > 0 && used > budget;) {
    const std::uint64_t excess = used - budget;
    const std::uint64_t per_pair = (excess + s.active_pairs[k] - 1) / s.active_pairs[k];
    const std::uint64_t cut = std::min(per_pair, increments[k]);
    increments[k] -= cut;
    used -= cut * s.active_pairs[k];
    s.capped = true;
  }
  std::uint64_t cumulative = 0;
  for (std::uint64_t inc : increments) {
    cumulative += inc;
    s.lengths.push_back(cumulative);
  }
  s.total_pulls = used;
  return s;
}

struct PhaseRecord {
  std::size_t phase = 0;  // 1-based
  std::vector<std::size_t> eliminated;
  std::size_t active_pairs = 0;
  std::uint64_t per_pair_count = 0;  // cumulative n_k
};

struct RunResult {
  std::size_t recommended = 0;
  /// Pulls per pair, lexicographic pair order.
  std::vector<std::uint64_t> pulls;
  std::uint64_t total_pulls = 0;
  std::vector<PhaseRecord> phase_trace;
  bool correct = false;
  /// Pooled-variance mode only: correlation estimates clamped into [-1, 1].
  std::size_t clamped_correlations = 0;
};

/// Pulls every pair floor(n / P) times and the first n mod P pairs (in
/// lexicographic order) once more, then recommends the arm with the lowest
/// estimated MSE (lowest index on ties).
template <PairEnvironment Env>
RunResult uniform_sampling(Env& env, std::uint64_t budget,
                           VarianceMode mode = VarianceMode::PerPair) {
  const std::size_t k = env.num_arms();
  const PairIndex index(k);
  const std::uint64_t pairs = index.size();
  if (budget < pairs)
    throw Error(ErrorCode::BudgetTooSmall, "uniform sampling needs at least one pull per pair");
  const std::uint64_t base = budget / pairs;
  const std::uint64_t extra = budget % pairs;

  PairStatistics stats(k);
  RunResult result;
  result.pulls.assign(pairs, 0);
  for (std::size_t q = 0; q < pairs; ++q) {
    const std::uint64_t count = base + (q < extra ? 1 : 0);
    stats.add(index[q], env.pull(index[q], count));
    result.pulls[q] = count;
    result.total_pulls += count;
  }
  MseEstimator estimator(mode);
  const MseEstimates est = estimator.estimate(stats);
  result.recommended = argmin_lowest(est.values);
  result.clamped_correlations = est.clamped;
  return result;
}

/// Successive rejects over pairs. Phase 1 samples every pair n_1 times and
/// drops the two arms with the largest estimated MSE; phase k >= 2 tops every
/// active pair up to n_k and drops one more arm. A pair leaves the active set
/// only once both of its arms are out, so every surviving arm keeps all of
/// its pairs. Ties on the worst arm go to the highest index.
template <PairEnvironment Env>
RunResult successive_rejects(Env& env, std::uint64_t budget,
                             VarianceMode mode = VarianceMode::PerPair) {
  const std::size_t k = env.num_arms();
  const PhaseSchedule schedule = phase_schedule(k, budget);
  const PairIndex index(k);

  PairStatistics stats(k);
  MseEstimator estimator(mode);
  RunResult result;
  result.pulls.assign(index.size(), 0);

  std::vector<char> pair_active(index.size(), 1);
  std::vector<std::size_t> active_arms(k);
  std::iota(active_arms.begin(), active_arms.end(), std::size_t{0});
  std::vector<std::size_t> out_of_contention;

  std::uint64_t previous = 0;
  for (std::size_t phase = 1; phase <= k - 2; ++phase) {
    const std::uint64_t increment = schedule.lengths[phase - 1] - previous;
    previous = schedule.lengths[phase - 1];
    std::size_t active_pair_count = 0;
    for (std::size_t q = 0; q < index.size(); ++q) {
      if (!pair_active[q]) continue;
      ++active_pair_count;
      if (increment == 0) continue;
      stats.add(index[q], env.pull(index[q], increment));
      result.pulls[q] += increment;
      result.total_pulls += increment;
    }

    const MseEstimates est = estimator.estimate(stats, active_arms);
    result.clamped_correlations += est.clamped;
    std::vector<std::size_t> ranked = active_arms;
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      if (est.values[a] != est.values[b]) return est.values[a] > est.values[b];
      return a > b;
    });
    const std::size_t drop = phase == 1 ? 2 : 1;
    PhaseRecord record{phase, {}, active_pair_count, schedule.lengths[phase - 1]};
    for (std::size_t d = 0; d < drop; ++d) {
      const std::size_t worst = ranked[d];
      for (std::size_t gone : out_of_contention) pair_active[index.index_of(make_pair(worst, gone))] = 0;
      out_of_contention.push_back(worst);
      record.eliminated.push_back(worst);
      active_arms.erase(std::find(active_arms.begin(), active_arms.end(), worst));
    }
    result.phase_trace.push_back(std::move(record));
  }
  result.recommended = active_arms.front();
  return result;
}

}  // namespace corrbandit
