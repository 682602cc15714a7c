#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "corrbandit/covariance.hpp"
#include "corrbandit/environment.hpp"
#include "corrbandit/ground_truth.hpp"

namespace corrbandit {

inline constexpr double kSingularDeterminant = 1e-14;

/// KL(N(0, A0) || N(0, A1)) = (tr(A1^-1 A0) - k + ln(det A1 / det A0)) / 2.
/// A1 must be positive definite; a singular A0 gives +inf.
inline double kl_gaussian(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& a1) {
  if (a0.rows() != a0.cols() || a1.rows() != a1.cols() || a0.rows() != a1.rows())
    throw Error(ErrorCode::DimensionMismatch, "KL needs two square matrices of equal size");
  const auto k = static_cast<double>(a0.rows());
  Eigen::LLT<Eigen::MatrixXd> chol1(a1);
  if (chol1.info() != Eigen::Success)
    throw Error(ErrorCode::SingularMatrix, "A1 is not positive definite");
  const double logdet1 = 2.0 * chol1.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (std::exp(logdet1) < kSingularDeterminant)
    throw Error(ErrorCode::SingularMatrix, "det(A1) below threshold");
  Eigen::LLT<Eigen::MatrixXd> chol0(a0);
  if (chol0.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet0 = 2.0 * chol0.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double trace = chol1.solve(a0).trace();
  return 0.5 * (trace - k + logdet1 - logdet0);
}

namespace detail {
inline double det2(const Eigen::Matrix2d& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

inline Eigen::Matrix2d inverse2(const Eigen::Matrix2d& m) {
  const double det = det2(m);
  if (!(det > kSingularDeterminant) || m(0, 0) <= 0.0)
    throw Error(ErrorCode::SingularMatrix, "2x2 determinant " + std::to_string(det));
  Eigen::Matrix2d inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / det;
}
}  // namespace detail

/// Closed-form 2x2 version of kl_gaussian.
inline double kl_bivariate(const Eigen::Matrix2d& a0, const Eigen::Matrix2d& a1) {
  const Eigen::Matrix2d inv1 = detail::inverse2(a1);
  const double det0 = detail::det2(a0);
  if (!(det0 > 0.0)) return std::numeric_limits<double>::infinity();
  const double trace = (inv1 * a0).trace();
  return 0.5 * (trace - 2.0 + std::log(detail::det2(a1) / det0));
}

/// KL between the (i,j) marginals of an original and a transformed problem.
inline double kl_pairwise(const CovarianceModel& original, const CovarianceModel& transformed,
                          Pair p) {
  if (original.num_arms() != transformed.num_arms())
    throw Error(ErrorCode::DimensionMismatch, "models differ in arm count");
  return kl_bivariate(original.marginal(p), transformed.marginal(p));
}

/// kl^m_ij for the lower-bound instance: original vs arms 1 and m swapped.
/// `m` is 0-based (1..K-1).
inline double kl_pairwise(std::size_t num_arms, double rho, std::size_t m, Pair p) {
  const CovarianceModel original = build_lb_cov(num_arms, rho);
  return kl_pairwise(original, transform_problem(original, m), p);
}

/// Hand-derived upper bound on kl^m_ij for the lower-bound instance, used only
/// as a cross-check against the exact value. 0-based m and pair.
inline double kl_analytic_cap(double rho, std::size_t m, Pair p) {
  const bool touches_first = p.first == 0;
  const bool touches_m = p.first == m || p.second == m;
  if ((touches_first && p.second == m) || (!touches_first && !touches_m)) return 0.0;
  const double r2 = rho * rho;
  // The pair's arm outside {1, m}; e is min(other, m) in 1-based terms, minus one.
  const std::size_t other = touches_first ? p.second : (p.first == m ? p.second : p.first);
  const double e = static_cast<double>(std::min(other, m));
  if (touches_first) return 0.5 * r2 * (1.0 - std::pow(rho, 2.0 * e)) / (1.0 - r2);
  return r2 * (1.0 - std::pow(rho, e)) / (1.0 - r2);
}

/// Mean log-likelihood ratio of t draws, log N(z; 0, A0) - log N(z; 0, A1):
/// ekl_t = (1/2t) sum_s z_s^T (A1^-1 - A0^-1) z_s + (ln|A1| - ln|A0|)/2.
/// Its mean under A0 is KL(A0 || A1).
inline double empirical_kl(const PairSums& s, const Eigen::Matrix2d& a0, const Eigen::Matrix2d& a1);

inline double empirical_kl(std::span<const std::pair<double, double>> samples,
                           const Eigen::Matrix2d& a0, const Eigen::Matrix2d& a1) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "empirical KL needs t >= 1");
  PairSums s;
  for (const auto& [x, y] : samples) {
    s.sxx += x * x;
    s.syy += y * y;
    s.sxy += x * y;
  }
  s.count = samples.size();
  return empirical_kl(s, a0, a1);
}

/// Same statistic from accumulated sums.
inline double empirical_kl(const PairSums& s, const Eigen::Matrix2d& a0, const Eigen::Matrix2d& a1) {
  if (s.count == 0) throw Error(ErrorCode::EmptySamples, "empirical KL needs t >= 1");
  const Eigen::Matrix2d diff = detail::inverse2(a1) - detail::inverse2(a0);
  return 0.5 * (diff(0, 0) * s.sxx + 2.0 * diff(0, 1) * s.sxy + diff(1, 1) * s.syy) /
             static_cast<double>(s.count) +
         0.5 * std::log(detail::det2(a1) / detail::det2(a0));
}

struct LowerBoundParams {
  std::size_t num_arms = 0;
  double rho = 0.0;
  double n = 0.0;
  double u = 1.0;
  double ub_rho2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c_tilde = 0.0;
  double h_lb = 0.0;
  bool rho_in_range = false;

  /// c_tilde u max{(8/t) log(12K(K-1)t), sqrt((8/t) log(12K(K-1)t))}.
  double eps_tilde(double t) const {
    const double kk = static_cast<double>(num_arms);
    const double a = 8.0 / t * std::log(12.0 * kk * (kk - 1.0) * t);
    return c_tilde * u * std::max(a, std::sqrt(a));
  }
  double eps_tilde_n() const { return eps_tilde(n); }
};

inline LowerBoundParams make_lower_bound_params(std::size_t num_arms, double rho, double n,
                                                double u = 1.0) {
  LowerBoundParams p;
  p.num_arms = num_arms;
  p.rho = rho;
  p.n = n;
  p.u = u;
  p.ub_rho2 = lower_bound_rho2_limit(num_arms);
  p.c1 = 1.0 / (1.0 - p.ub_rho2);
  p.c2 = rho / (1.0 - p.ub_rho2);
  p.c_tilde = std::max(3.0 * p.c1, 48.0 * p.c2);
  p.rho_in_range = rho_within_lower_bound_range(num_arms, rho);
  p.h_lb = complexity_summary(gap_profile(build_lb_cov(num_arms, rho)), u).h_lb;
  return p;
}

/// Natural log of (1/6) exp(-6nK/H_lb - K(K-1)/2 n eps_tilde_n). The value
/// itself underflows to 0 for moderate n, so reports carry the log too.
inline double lower_bound_log_value(const LowerBoundParams& params, const GapProfile& gaps) {
  for (std::size_t i = 0; i < gaps.gaps.size(); ++i)
    if (i != gaps.best_arm && !(gaps.gaps[i] > 0.0))
      throw Error(ErrorCode::DegenerateGaps, "arm " + std::to_string(i + 1) + " has zero gap");
  double h_lb = 0.0;
  for (std::size_t i = 0; i < gaps.gaps.size(); ++i)
    if (i != gaps.best_arm) h_lb += 1.0 / gaps.gaps[i];
  const double kk = static_cast<double>(params.num_arms);
  const double pairs = static_cast<double>(pair_count(params.num_arms));
  return std::log(1.0 / 6.0) - 6.0 * params.n * kk / h_lb - pairs * params.n * params.eps_tilde_n();
}

inline double lower_bound_value(const LowerBoundParams& params, const GapProfile& gaps) {
  return std::exp(lower_bound_log_value(params, gaps));
}

}  // namespace corrbandit
