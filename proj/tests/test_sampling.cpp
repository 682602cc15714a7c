#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "corrbandit/environment.hpp"
#include "corrbandit/estimator.hpp"
#include "corrbandit/ground_truth.hpp"
#include "corrbandit/rng.hpp"

using namespace corrbandit;

namespace {

std::shared_ptr<const CovarianceModel> three_arm(double rho01, double var0 = 1.0) {
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  s(0, 0) = var0;
  s(0, 1) = s(1, 0) = rho01 * std::sqrt(var0);
  return std::make_shared<const CovarianceModel>(validate_covariance(s));
}

PairSums collect(Environment& env, Pair p, int n) {
  PairSums s;
  for (int t = 0; t < n; ++t) {
    auto [x, y] = env.sample_pair(p);
    s.sxx += x * x;
    s.syy += y * y;
    s.sxy += x * y;
  }
  s.count = n;
  return s;
}

}  // namespace

TEST(SplitMix, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed({1, 0, 0}), derive_seed({1, 0, 1}));
  EXPECT_NE(derive_seed({1, 0, 1}), derive_seed({1, 1, 0}));
  EXPECT_EQ(derive_seed({5, 6, 7}), derive_seed({5, 6, 7}));
}

TEST(SamplePair, PerfectCorrelationCopiesX) {
  Environment env(three_arm(1.0), 3);
  for (int t = 0; t < 1000; ++t) {
    auto [x, y] = env.sample_pair({0, 1});
    EXPECT_EQ(x, y);
  }
}

TEST(SamplePair, IndependentArmsHaveZeroCorrelation) {
  Environment env(three_arm(0.0), 4);
  const PairSums s = collect(env, {0, 1}, 1'000'000);
  EXPECT_NEAR(s.sxy / std::sqrt(s.sxx * s.syy), 0.0, 0.01);
}

TEST(SamplePair, CovarianceMatchesModel) {
  Environment env(three_arm(0.9), 5);
  const PairSums s = collect(env, {0, 1}, 1'000'000);
  EXPECT_NEAR(s.sxy / s.count, 0.9, 0.01);
}

TEST(SamplePair, InvalidPairThrows) {
  Environment env(three_arm(0.5), 1);
  EXPECT_THROW(env.sample_pair({1, 1}), Error);
  EXPECT_THROW(env.sample_pair({0, 3}), Error);
  EXPECT_THROW(env.pull({2, 5}, 0), Error);
}

TEST(Environment, SameSeedSameStream) {
  auto m = std::make_shared<const CovarianceModel>(build_experiment_cov(3));
  Environment a(m, 42), b(m, 42), c(m, 43);
  bool differs = false;
  for (int t = 0; t < 500; ++t) {
    const Pair p{static_cast<std::size_t>(t % 7), 7 + static_cast<std::size_t>(t % 5)};
    const auto x = a.sample_pair(p);
    EXPECT_EQ(x, b.sample_pair(p));
    differs = differs || x != c.sample_pair(p);
  }
  EXPECT_TRUE(differs);
}

TEST(Environment, PerDrawPullEqualsManualLoop) {
  auto m = std::make_shared<const CovarianceModel>(build_experiment_cov(1));
  Environment a(m, 9), b(m, 9);
  const PairSums s = a.pull({0, 2}, 777);
  const PairSums t = collect(b, {0, 2}, 777);
  EXPECT_EQ(s.count, t.count);
  EXPECT_EQ(s.sxx, t.sxx);
  EXPECT_EQ(s.syy, t.syy);
  EXPECT_EQ(s.sxy, t.sxy);
}

// Second moments converge at O(1/sqrt(n)): the tolerance shrinks 10x when n
// grows 100x.
TEST(Environment, SecondMomentsConverge) {
  auto m = std::make_shared<const CovarianceModel>(build_experiment_cov(3));
  const PairIndex idx(35);
  for (std::size_t q = 0; q < 12; ++q) {
    const Pair p = idx[q * 31 % idx.size()];
    for (auto [n, tol] : {std::pair{10'000, 0.06}, std::pair{1'000'000, 0.006}}) {
      Environment env(m, 1000 + q);
      const PairSums s = env.pull(p, n);
      EXPECT_NEAR(s.sxx / n, m->variance(p.first), tol);
      EXPECT_NEAR(s.syy / n, m->variance(p.second), tol);
      EXPECT_NEAR(s.sxy / n, m->covariance(p.first, p.second), tol);
    }
  }
}

// The batched path draws the scatter matrix directly. Compare the first two
// moments of its three entries against the per-draw path over many batches,
// plus the exact Wishart moments as an oracle.
TEST(Environment, BatchedMatchesPerDrawInDistribution) {
  const double rho = 0.7, var0 = 2.0;
  auto m = three_arm(rho, var0);
  const double s11 = var0, s22 = 1.0, s12 = rho * std::sqrt(var0);
  constexpr int kBatches = 20'000;
  constexpr int kN = 25;
  struct Moments {
    double mean[3] = {0, 0, 0};
    double sq[3] = {0, 0, 0};
  };
  auto run = [&](SamplingMode mode) {
    Environment env(m, mode == SamplingMode::Batched ? 77 : 78, mode);
    Moments mo;
    for (int b = 0; b < kBatches; ++b) {
      const PairSums s = env.pull({0, 1}, kN);
      const double v[3] = {s.sxx, s.syy, s.sxy};
      for (int c = 0; c < 3; ++c) {
        mo.mean[c] += v[c] / kBatches;
        mo.sq[c] += v[c] * v[c] / kBatches;
      }
    }
    return mo;
  };
  const Moments batched = run(SamplingMode::Batched);
  const Moments direct = run(SamplingMode::PerDraw);
  // Wishart(n, S): E[A_ij] = n S_ij, Var[A_ij] = n (S_ij^2 + S_ii S_jj).
  const double want_mean[3] = {kN * s11, kN * s22, kN * s12};
  const double want_var[3] = {kN * 2 * s11 * s11, kN * 2 * s22 * s22, kN * (s12 * s12 + s11 * s22)};
  for (int c = 0; c < 3; ++c) {
    const double se = std::sqrt(want_var[c] / kBatches);
    EXPECT_NEAR(batched.mean[c], want_mean[c], 4 * se) << c;
    EXPECT_NEAR(direct.mean[c], want_mean[c], 4 * se) << c;
    const double var_b = batched.sq[c] - batched.mean[c] * batched.mean[c];
    const double var_d = direct.sq[c] - direct.mean[c] * direct.mean[c];
    EXPECT_NEAR(var_b / want_var[c], 1.0, 0.05) << c;
    EXPECT_NEAR(var_d / want_var[c], 1.0, 0.05) << c;
  }
}

TEST(Environment, BatchedPerfectCorrelation) {
  Environment env(three_arm(1.0), 2, SamplingMode::Batched);
  const PairSums s = env.pull({0, 1}, 50);
  EXPECT_NEAR(s.sxy / std::sqrt(s.sxx * s.syy), 1.0, 1e-12);
}

TEST(PairStatistics, RecordArithmetic) {
  PairStatistics st(3);
  st.record({0, 1}, 2, 3);
  EXPECT_EQ(st.at({0, 1}).count, 1u);
  EXPECT_EQ(st.at({0, 1}).sxx, 4.0);
  EXPECT_EQ(st.at({0, 1}).syy, 9.0);
  EXPECT_EQ(st.at({0, 1}).sxy, 6.0);
  PairStatistics two(3);
  two.record({0, 1}, 1, 1);
  two.record({0, 1}, -1, -1);
  EXPECT_EQ(two.at({0, 1}).count, 2u);
  EXPECT_EQ(two.at({0, 1}).sxx, 2.0);
  EXPECT_EQ(two.at({0, 1}).sxy, 2.0);
  EXPECT_THROW(st.record({2, 2}, 1, 1), Error);
}

TEST(PairStatistics, ShuffledReplayIsIdentical) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> v(-8, 8);  // small integers keep sums exact
  std::vector<std::pair<double, double>> obs(10'000);
  for (auto& o : obs) o = {v(rng), v(rng)};
  PairStatistics a(4), b(4);
  for (auto [x, y] : obs) a.record({1, 3}, x, y);
  std::shuffle(obs.begin(), obs.end(), rng);
  for (auto [x, y] : obs) b.record({1, 3}, x, y);
  EXPECT_EQ(a.at({1, 3}).sxx, b.at({1, 3}).sxx);
  EXPECT_EQ(a.at({1, 3}).syy, b.at({1, 3}).syy);
  EXPECT_EQ(a.at({1, 3}).sxy, b.at({1, 3}).sxy);
}

TEST(PairStatistics, JsonUsesOneBasedLabels) {
  PairStatistics st(3);
  st.record({1, 2}, 1, 2);
  const auto j = st.to_json();
  EXPECT_EQ(j["(2,3)"]["n"], 1);
  EXPECT_EQ(j["(1,2)"]["n"], 0);
}

TEST(SigmaHat, SmallCases) {
  PairStatistics st(3);
  st.record({0, 1}, 1, 0);
  st.record({0, 1}, -1, 0);
  EXPECT_EQ(sigma_hat2(st, {0, 1}, Side::First), 1.0);
  EXPECT_EQ(sigma_hat2(st, {0, 1}, Side::Second), 0.0);
  EXPECT_THROW(sigma_hat2(st, {1, 2}, Side::First), Error);
}

TEST(SigmaHat, MonteCarloConsistency) {
  Environment env(three_arm(0.3, 0.5), 6);
  PairStatistics st(3);
  st.add({0, 1}, env.pull({0, 1}, 1'000'000));
  EXPECT_NEAR(sigma_hat2(st, {0, 1}, Side::First), 0.5, 0.01);
}

TEST(RhoHat, SignsAndErrors) {
  PairStatistics st(3);
  st.record({0, 1}, 1, 1);
  st.record({0, 1}, -1, -1);
  EXPECT_EQ(rho_hat(st, {0, 1}), 1.0);
  st.record({0, 2}, 1, -1);
  st.record({0, 2}, -1, 1);
  EXPECT_EQ(rho_hat(st, {0, 2}), -1.0);
  try {
    rho_hat(st, {1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSamples);
  }
  PairStatistics flat(3);
  flat.record({1, 2}, 0, 1);
  try {
    rho_hat(flat, {1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateVariance);
  }
}

TEST(RhoHat, MonteCarloConsistency) {
  Environment env(three_arm(0.9), 8);
  PairStatistics st(3);
  st.add({0, 1}, env.pull({0, 1}, 1'000'000));
  EXPECT_NEAR(rho_hat(st, {0, 1}), 0.9, 0.005);
}

TEST(RhoHat, CollapsesToSampleCorrelation) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int t = 0; t < 1000; ++t) {
    PairSums s{1 + rng() % 10'000, u(rng), u(rng), 0.0};
    s.sxy = std::uniform_real_distribution<double>(-1, 1)(rng) * std::sqrt(s.sxx * s.syy);
    PairStatistics st(3);
    st.add({0, 2}, s);
    const double r = rho_hat(st, {0, 2});
    EXPECT_NEAR(r, s.sxy / std::sqrt(s.sxx * s.syy), 1e-12);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(MseHat, SmallCases) {
  // all rho_hat = 0, sigma_hat^2 = 1
  PairStatistics st(3);
  for (Pair p : {Pair{0, 1}, Pair{0, 2}, Pair{1, 2}}) {
    st.record(p, 1, 1);
    st.record(p, 1, -1);
    st.record(p, -1, 1);
    st.record(p, -1, -1);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(mse_hat(st, i), 2.0, 1e-15);

  PairStatistics st2(3);
  st2.record({0, 1}, 1, 1);
  st2.record({0, 1}, -1, -1);
  for (Pair p : {Pair{0, 2}, Pair{1, 2}}) {
    st2.record(p, 1, 1);
    st2.record(p, 1, -1);
    st2.record(p, -1, 1);
    st2.record(p, -1, -1);
  }
  EXPECT_NEAR(mse_hat(st2, 0), 1.0, 1e-15);
}

TEST(MseHat, MissingPairAndBadArm) {
  PairStatistics st(4);
  st.record({0, 1}, 1, 1);
  try {
    mse_hat(st, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingPair);
  }
  EXPECT_THROW(mse_hat(st, 4), Error);
}

// With per-pair statistics, sigma_hat_p^2 (1 - rho_hat_ip^2) is the residual
// sum of squares over n, i.e. r_p chi^2_{n-1} / n with r_p = sigma_p^2 (1 - rho_ip^2),
// independent across p. So E_hat_i has mean E_i (n-1)/n and variance
// sum_p 2 r_p^2 (n-1) / n^2.
TEST(MseHat, ConsistentOnClusterModel) {
  auto m = std::make_shared<const CovarianceModel>(build_experiment_cov(1));
  constexpr std::uint64_t kN = 100'000;
  const double n = static_cast<double>(kN);
  Environment env(m, 12);
  PairStatistics st(35);
  for (const Pair& p : st.pair_index().pairs()) st.add(p, env.pull(p, kN));
  const auto est = MseEstimator().estimate(st);
  for (std::size_t i = 0; i < 35; ++i) {
    double var = 0.0;
    for (std::size_t p = 0; p < 35; ++p) {
      if (p == i) continue;
      const double r = m->variance(p) * (1 - std::pow(m->correlation(i, p), 2));
      var += 2 * r * r * (n - 1) / (n * n);
    }
    const double mean = true_mse(*m, i) * (n - 1) / n;
    EXPECT_NEAR(est.values[i], mean, 5 * std::sqrt(var)) << i + 1;
    EXPECT_EQ(est.support_counts[i], kN);
  }
}

TEST(MseHat, PooledModeIsConsistentAndCountsClamps) {
  auto m = std::make_shared<const CovarianceModel>(build_experiment_cov(3));
  Environment env(m, 13);
  PairStatistics st(35);
  for (const Pair& p : st.pair_index().pairs()) st.add(p, env.pull(p, 20'000));
  MseEstimator pooled(VarianceMode::Pooled);
  const auto est = pooled.estimate(st);
  for (std::size_t i = 0; i < 35; ++i) EXPECT_NEAR(est.values[i], true_mse(*m, i), 0.2);

  // Pooled variances that disagree with the pair's own moments can push the
  // formula outside [-1, 1].
  PairStatistics skew(3);
  skew.add({0, 1}, {10, 10.0, 10.0, -10.0});
  skew.add({0, 2}, {10, 0.1, 0.1, 0.0});
  skew.add({1, 2}, {10, 0.1, 0.1, 0.0});
  const auto e2 = MseEstimator(VarianceMode::Pooled).estimate(skew);
  EXPECT_GT(e2.clamped, 0u);
  EXPECT_EQ(MseEstimator().estimate(skew).clamped, 0u);
}

TEST(MseHat, EstimateOnlyRequestedArms) {
  PairStatistics st(4);
  for (std::size_t j = 1; j < 4; ++j) {
    st.record({0, j}, 1, 0.5);
    st.record({0, j}, -1, 0.2);
  }
  const auto est = MseEstimator().estimate(st, {0});
  EXPECT_TRUE(std::isfinite(est.values[0]));
  EXPECT_TRUE(std::isnan(est.values[1]));
}
