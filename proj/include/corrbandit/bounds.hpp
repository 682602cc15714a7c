#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "corrbandit/algorithms.hpp"
#include "corrbandit/error.hpp"

namespace corrbandit {

/// Constants of the error bounds. `c` defaults to 8 * 108 * 36^2 = 1,119,744,
/// the value the MSE-concentration argument produces once eps <= 2K; the
/// prefactors default to the stated 14K / 84K^2 / 84K^3 forms.
struct BoundConstants {
  double c = 1'119'744.0;
  double mse_prefactor = 14.0;
  double uniform_prefactor = 84.0;
  double sr_prefactor = 84.0;
};

namespace detail {
inline double capped(double log_prefactor, double exponent) {
  return std::min(1.0, std::exp(log_prefactor + exponent));
}
}  // namespace detail

/// P(|E_hat_i - E_i| > eps) <= 14K exp(-n l^2 eps^2 / (c K^5)), n samples per pair.
inline double mse_concentration_bound(double n, std::size_t num_arms, double l, double eps,
                                      const BoundConstants& k = {}) {
  const double kk = static_cast<double>(num_arms);
  return detail::capped(std::log(k.mse_prefactor * kk),
                        -n * l * l * eps * eps / (k.c * std::pow(kk, 5)));
}

/// P(error) <= 84K^2 exp(-n l^2 Delta_(1)^2 / (c K^7)) for uniform sampling.
inline double uniform_error_bound(double n, std::size_t num_arms, double l, double min_gap,
                                  const BoundConstants& k = {}) {
  if (!(min_gap > 0.0)) throw Error(ErrorCode::NonPositiveGap, "Delta_(1) must be > 0");
  const double kk = static_cast<double>(num_arms);
  return detail::capped(std::log(k.uniform_prefactor * kk * kk),
                        -n * l * l * min_gap * min_gap / (k.c * std::pow(kk, 7)));
}

/// P(error) <= 84K^3 exp(-(l^2 / (c K^5)) (n - K(K-1)/2) / (C(K) H2)) for SR.
inline double sr_error_bound(double n, std::size_t num_arms, double l, double h2,
                             const BoundConstants& k = {}) {
  if (!(h2 > 0.0) || !std::isfinite(h2))
    throw Error(ErrorCode::NonPositiveGap, "H2 must be finite and positive");
  const double kk = static_cast<double>(num_arms);
  const double usable = n - static_cast<double>(pair_count(num_arms));
  return detail::capped(std::log(k.sr_prefactor * kk * kk * kk),
                        -(l * l / (k.c * std::pow(kk, 5))) * usable / (sr_constant(num_arms) * h2));
}

/// Two-sided sample-variance tail from n draws:
/// 2 exp(-(n/8) min(eps^2 / sigma^4, eps / sigma^2)).
inline double variance_tail_bound(double n, double sigma2, double eps) {
  const double a = std::min(eps * eps / (sigma2 * sigma2), eps / sigma2);
  return detail::capped(std::log(2.0), -n / 8.0 * a);
}

/// Sample-correlation tail for eps in [0, eta]:
/// 26 exp(-(n/8) (1/(36 (1+eta))) min(l eps/3, (l eps/3)^2)).
inline double correlation_tail_bound(double n, double l, double eps, double eta) {
  const double x = l * eps / 3.0;
  return detail::capped(std::log(26.0), -n / 8.0 / (36.0 * (1.0 + eta)) * std::min(x, x * x));
}

enum class BoundKind { Uniform, SuccessiveRejects, MseConcentration };

struct BoundParams {
  double n = 0.0;
  std::size_t num_arms = 0;
  double l = 1.0;          // min_i sigma_i^2
  double min_gap = 0.0;    // Delta_(1), uniform
  double h2 = 0.0;         // SR
  double eps = 0.0;        // concentration
  BoundConstants constants{};
};

inline double theoretical_error_bound(BoundKind kind, const BoundParams& p) {
  switch (kind) {
    case BoundKind::Uniform: return uniform_error_bound(p.n, p.num_arms, p.l, p.min_gap, p.constants);
    case BoundKind::SuccessiveRejects: return sr_error_bound(p.n, p.num_arms, p.l, p.h2, p.constants);
    case BoundKind::MseConcentration:
      return mse_concentration_bound(p.n, p.num_arms, p.l, p.eps, p.constants);
  }
  return 1.0;
}

}  // namespace corrbandit
