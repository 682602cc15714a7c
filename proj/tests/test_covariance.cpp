#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "corrbandit/covariance.hpp"
#include "corrbandit/ground_truth.hpp"
#include "corrbandit/pairs.hpp"

using namespace corrbandit;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ConfigError;
}

// Random PSD matrix with unit-ish diagonal: B B^T / k plus a ridge.
Eigen::MatrixXd random_psd(std::size_t k, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd b(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) b(i, j) = z(rng);
  Eigen::MatrixXd s = b * b.transpose() / static_cast<double>(k);
  s.diagonal().array() += 0.05;
  return (s + s.transpose()) / 2;
}

// sigma_j^2 (1 - rho_ij^2) written as sigma_j^2 - sigma_ij^2 / sigma_i^2.
double mse_oracle(const Eigen::MatrixXd& s, std::size_t i) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < s.rows(); ++j)
    if (j != static_cast<Eigen::Index>(i)) total += s(j, j) - s(i, j) * s(i, j) / s(i, i);
  return total;
}

}  // namespace

TEST(PairIndex, LexicographicOrderAndInverse) {
  for (std::size_t k = 3; k <= 12; ++k) {
    PairIndex idx(k);
    ASSERT_EQ(idx.size(), k * (k - 1) / 2);
    std::size_t q = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j, ++q) {
        EXPECT_EQ(idx[q].first, i);
        EXPECT_EQ(idx[q].second, j);
        EXPECT_EQ(idx.index_of({i, j}), q);
      }
  }
}

TEST(PairIndex, RejectsBadPairs) {
  PairIndex idx(4);
  EXPECT_EQ(code_of([&] { make_pair(2, 2); }), ErrorCode::InvalidPair);
  EXPECT_EQ(code_of([&] { idx.check({1, 4}); }), ErrorCode::InvalidPair);
  EXPECT_EQ(make_pair(3, 1).first, 1u);
  EXPECT_EQ(pair_label({0, 2}), "(1,3)");
}

TEST(Validate, IdentityIsValid) {
  const auto m = validate_covariance(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_TRUE(m.unit_bounded());
  EXPECT_TRUE(m.jointly_psd());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(m.correlation(i, j), 0.0);
}

TEST(Validate, ErrorPaths) {
  Eigen::MatrixXd two(2, 2);
  two << 1, 0.9, 0.9, 1;
  EXPECT_EQ(code_of([&] { validate_covariance(two); }), ErrorCode::TooFewArms);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(0, 1) = bad(1, 0) = 2.0;
  EXPECT_EQ(code_of([&] { validate_covariance(bad); }), ErrorCode::NotPSD);
  // Oracle: the 3x3 eigen-solve agrees the matrix has a negative eigenvalue.
  EXPECT_LT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(bad).eigenvalues().minCoeff(), 0.0);

  EXPECT_EQ(code_of([] { validate_covariance(Eigen::MatrixXd::Identity(3, 4)); }), ErrorCode::NotSquare);

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.1;
  EXPECT_EQ(code_of([&] { validate_covariance(asym); }), ErrorCode::NotSymmetric);

  Eigen::MatrixXd zero = Eigen::MatrixXd::Identity(3, 3);
  zero(2, 2) = 0.0;
  EXPECT_EQ(code_of([&] { validate_covariance(zero); }), ErrorCode::NonPositiveVariance);
}

TEST(Validate, PsdToleranceAdmitsTinyNegativeEigenvalue) {
  Eigen::MatrixXd s(3, 3);
  s << 1, 1, 0, 1, 1, 0, 0, 0, 1;  // singular, eigenvalue exactly 0
  s(0, 1) = s(1, 0) = 1.0 + 1e-12;
  EXPECT_NO_THROW(validate_covariance(s, 1e-9));
  EXPECT_EQ(code_of([&] { validate_covariance(s, 0.0); }), ErrorCode::NotPSD);
}

TEST(Validate, UnitBoundedFlag) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  s(1, 1) = 2.0;
  EXPECT_FALSE(validate_covariance(s).unit_bounded());
}

TEST(TrueMse, IdentityGivesKMinusOne) {
  const auto m = validate_covariance(Eigen::MatrixXd::Identity(5, 5));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(true_mse(m, i), 4.0);
}

TEST(TrueMse, LowerBoundInstanceClosedForms) {
  const auto m = build_lb_cov(5, 0.5);
  EXPECT_NEAR(true_mse(m, 0), 3.0, 1e-12);
  EXPECT_NEAR(true_mse(m, 1), 3.5625, 1e-12);
}

TEST(TrueMse, MatchesElementwiseOracleOnClusterBlock) {
  const auto s3 = build_experiment_cov(3);
  const Eigen::MatrixXd block = s3.matrix().topLeftCorner(4, 4);
  const auto m = validate_covariance(block);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(true_mse(m, i), mse_oracle(block, i), 1e-12);
  for (std::size_t i = 0; i < 35; ++i) EXPECT_NEAR(true_mse(s3, i), mse_oracle(s3.matrix(), i), 1e-12);
}

TEST(TrueMse, PermutationEquivariance) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 3 + trial % 6;
    const Eigen::MatrixXd s = random_psd(k, rng);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> p(Eigen::VectorXi::Map(perm.data(), k));
    const Eigen::MatrixXd sp = p * s * p.transpose();
    const auto m = validate_covariance(s);
    const auto mp = validate_covariance(sp);
    for (std::size_t i = 0; i < k; ++i)
      EXPECT_NEAR(true_mse(mp, perm[i]), true_mse(m, i), 1e-12);
  }
}

// Monte Carlo over joint draws of the conditional-expectation form:
// E_i = sum_j E[(x_j - rho_ij sigma_j / sigma_i x_i)^2].
TEST(TrueMse, MonteCarloAgreementOnRandomModel) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd s = random_psd(5, rng);
  const auto model = validate_covariance(s);
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(s).matrixL();
  std::normal_distribution<double> z;
  constexpr int kDraws = 1'000'000;
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0, sumsq = 0.0;
    std::mt19937_64 draw_rng(100 + i);
    for (int t = 0; t < kDraws; ++t) {
      Eigen::VectorXd w(5);
      for (int c = 0; c < 5; ++c) w(c) = z(draw_rng);
      const Eigen::VectorXd x = l * w;
      double loss = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        if (j == i) continue;
        const double coef = s(i, j) / s(i, i);
        loss += (x(j) - coef * x(i)) * (x(j) - coef * x(i));
      }
      sum += loss;
      sumsq += loss * loss;
    }
    const double mean = sum / kDraws;
    const double se = std::sqrt((sumsq / kDraws - mean * mean) / kDraws);
    EXPECT_NEAR(mean, true_mse(model, i), 3 * se) << "arm " << i + 1;
  }
}

TEST(TrueMse, ZeroVarianceFromPairwiseModel) {
  EXPECT_EQ(code_of([] {
              Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
              s(1, 1) = 0.0;
              validate_pairwise_covariance(s);
            }),
            ErrorCode::NonPositiveVariance);
}

TEST(GapProfile, IdentityAllZeroBestIsFirst) {
  const auto g = gap_profile(validate_covariance(Eigen::MatrixXd::Identity(4, 4)));
  EXPECT_EQ(g.best_arm, 0u);
  for (double d : g.gaps) EXPECT_EQ(d, 0.0);
  EXPECT_TRUE(complexity_summary(g).degenerate);
  EXPECT_TRUE(std::isinf(complexity_summary(g).h2));
}

TEST(GapProfile, OrderedGapsDuplicateSmallest) {
  const auto g = gap_profile_from_mse({5.0, 1.0, 3.0, 2.0});
  EXPECT_EQ(g.best_arm, 1u);
  EXPECT_EQ(g.gaps, (std::vector<double>{4.0, 0.0, 2.0, 1.0}));
  EXPECT_EQ(g.ordered_gaps, (std::vector<double>{1.0, 1.0, 2.0, 4.0}));
}

TEST(GapProfile, LowerBoundInstanceIsOrdered) {
  for (std::size_t k : {4u, 5u, 8u, 12u, 20u})
    for (double rho : {0.1, 0.3, 0.5, 0.6, 0.8, 0.95}) {
      const auto g = gap_profile(build_lb_cov(k, rho));
      EXPECT_EQ(g.best_arm, 0u);
      for (std::size_t i = 1; i < k; ++i) EXPECT_LE(g.mse[i - 1], g.mse[i]) << k << " " << rho;
    }
}

TEST(Complexity, SmallWorkedProfile) {
  // gaps (0, 1, 1): ordered (1, 1, 1). H_bar counts the duplicated slot.
  const auto c = complexity_summary(gap_profile_from_mse({0.0, 1.0, 1.0}));
  EXPECT_DOUBLE_EQ(c.h2, 3.0);
  EXPECT_DOUBLE_EQ(c.h_bar, 3.0);
  EXPECT_DOUBLE_EQ(c.h_lb, 2.0);
  EXPECT_FALSE(c.degenerate);
}

TEST(Complexity, LogBarAndHarmonic) {
  EXPECT_DOUBLE_EQ(log_bar(3), 0.0);
  EXPECT_DOUBLE_EQ(log_bar(4), 0.5);
  EXPECT_DOUBLE_EQ(log_bar(6), 0.5 + 1.0 / 3 + 0.25);
  EXPECT_DOUBLE_EQ(harmonic(3), 1.0 + 0.5 + 1.0 / 3);
}

TEST(Complexity, OrderingOnRandomProfiles) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 3 + rng() % 38;
    const double u = 1.0;
    std::uniform_real_distribution<double> e(0.0, static_cast<double>(k - 1) * u);
    std::vector<double> mse(k);
    for (double& v : mse) v = e(rng);
    const auto c = complexity_summary(gap_profile_from_mse(mse), u);
    if (c.degenerate) continue;
    EXPECT_LE(c.h2, c.h_bar * (1 + 1e-12));
    EXPECT_LE(c.h_bar, c.harmonic_k * c.h2 * (1 + 1e-12));
    EXPECT_GE(c.h_bar * (1 + 1e-12), c.h_lb / (static_cast<double>(k) * u));
  }
}

TEST(ExperimentCov, BlockStructure) {
  const auto s1 = build_experiment_cov(1);
  const auto s2 = build_experiment_cov(2);
  const auto s3 = build_experiment_cov(3);
  for (const auto* m : {&s1, &s2, &s3}) EXPECT_EQ(m->num_arms(), 35u);
  EXPECT_DOUBLE_EQ(s1.covariance(0, 1), 0.9);
  EXPECT_DOUBLE_EQ(s1.covariance(1, 2), 0.85);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 4; j < 35; ++j) {
      EXPECT_EQ(s1.covariance(i, j), 0.0);
      EXPECT_EQ(s2.covariance(i, j), 0.0);
      EXPECT_EQ(s3.covariance(i, j), 0.0);
    }
  for (std::size_t i = 4; i < 35; ++i)
    for (std::size_t j = 4; j < 35; ++j) {
      EXPECT_EQ(s1.covariance(i, j), i == j ? 1.0 : 0.0);
      const double tri = i == j ? 1.0 : (i + 1 == j || j + 1 == i) ? 0.2 : 0.0;
      EXPECT_EQ(s2.covariance(i, j), tri);
    }
  EXPECT_EQ(gap_profile(s1).best_arm, 0u);
  EXPECT_EQ(gap_profile(s3).best_arm, 0u);
  EXPECT_EQ(build_experiment_cov(1, true).num_arms(), 29u);
  EXPECT_EQ(code_of([] { build_experiment_cov(4); }), ErrorCode::UnknownId);
}

TEST(LowerBoundCov, SmallInstanceEntries) {
  const auto m = build_lb_cov(3, 0.5);
  Eigen::Matrix3d want;
  want << 1, .5, .5, .5, 1, .25, .5, .25, 1;
  EXPECT_TRUE(m.matrix().isApprox(want, 1e-15));
  EXPECT_EQ(code_of([] { build_lb_cov(5, 1.0); }), ErrorCode::RhoOutOfRange);
  EXPECT_EQ(code_of([] { build_lb_cov(5, 0.0); }), ErrorCode::RhoOutOfRange);
}

TEST(LowerBoundCov, NotJointlyPsdAtLargerK) {
  // Pairwise-valid but jointly indefinite once K grows; flagged, not rejected.
  const double rho = std::sqrt(lower_bound_rho2_limit(10));
  const auto m = build_lb_cov(10, rho);
  EXPECT_FALSE(m.jointly_psd());
  EXPECT_LT(m.min_eigenvalue(), 0.0);
  EXPECT_TRUE(build_lb_cov(4, 0.5).jointly_psd());
}

TEST(Transform, SwapsLabelsAndIsInvolution) {
  const auto s = build_lb_cov(6, 0.5);
  for (std::size_t m = 1; m < 6; ++m) {
    const auto t = transform_problem(s, m);
    EXPECT_NEAR(true_mse(t, m), true_mse(s, 0), 1e-12);
    EXPECT_NEAR(true_mse(t, 0), true_mse(s, m), 1e-12);
    EXPECT_EQ(gap_profile(t).best_arm, m);
    EXPECT_TRUE(transform_problem(t, m).matrix() == s.matrix());
  }
  const auto t = transform_problem(build_lb_cov(4, 0.5), 1);
  Eigen::Matrix2d want;
  want << 1, .5, .5, 1;
  EXPECT_TRUE(t.marginal({0, 1}).isApprox(want));
  EXPECT_EQ(code_of([&] { transform_problem(s, 0); }), ErrorCode::InvalidIndex);
  EXPECT_EQ(code_of([&] { transform_problem(s, 6); }), ErrorCode::InvalidIndex);
}

TEST(MatrixText, RoundTrip) {
  const auto s = build_experiment_cov(3).matrix();
  std::stringstream buf;
  write_matrix_text(buf, s);
  EXPECT_TRUE(parse_matrix_text(buf) == s);
  std::istringstream junk("3\n1 0 0\n0 1 0\n0 0 1\nextra");
  EXPECT_EQ(code_of([&] { parse_matrix_text(junk); }), ErrorCode::ParseError);
  std::istringstream shortm("3\n1 0 0\n0 1");
  EXPECT_EQ(code_of([&] { parse_matrix_text(shortm); }), ErrorCode::ParseError);
}

TEST(ResolveModel, NamesAndWarnings) {
  EXPECT_EQ(resolve_model("sigma2").model.num_arms(), 35u);
  const auto lb = resolve_model("lb:10:0.9");
  EXPECT_TRUE(lb.lower_bound_instance);
  EXPECT_EQ(lb.lb_arms, 10u);
  EXPECT_FALSE(lb.warnings.empty());
  EXPECT_EQ(code_of([] { resolve_model("lb:10"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { resolve_model("/nonexistent/matrix.txt"); }), ErrorCode::IoError);
}
