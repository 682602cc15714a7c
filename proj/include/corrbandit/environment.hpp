#pragma once

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "corrbandit/covariance.hpp"
#include "corrbandit/pairs.hpp"
#include "corrbandit/rng.hpp"

namespace corrbandit {

/// Sufficient statistics of `count` bivariate draws from one pair.
struct PairSums {
  std::uint64_t count = 0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;

  PairSums& operator+=(const PairSums& o) {
    count += o.count;
    sxx += o.sxx;
    syy += o.syy;
    sxy += o.sxy;
    return *this;
  }
};

/// How Environment::pull produces a batch.
///  - PerDraw: `count` calls of sample_pair, summed. Bit-identical to the
///    caller doing the loop itself.
///  - Batched: the 2x2 scatter matrix of `count` i.i.d. draws is Wishart
///    distributed; it is drawn directly with the Bartlett decomposition in
///    O(1). Same distribution, different random stream.
enum class SamplingMode { PerDraw, Batched };

/// Correlated-arm environment: pulls a pair and returns bivariate Gaussian
/// samples. Single-threaded; give each replication its own instance.
class Environment {
 public:
  Environment(std::shared_ptr<const CovarianceModel> model, std::uint64_t seed,
              SamplingMode mode = SamplingMode::PerDraw)
      : model_(std::move(model)), index_(model_->num_arms()), engine_(seed), mode_(mode) {
    factors_.reserve(index_.size());
    for (const Pair& p : index_.pairs()) {
      const double si = model_->stddev(p.first);
      const double sj = model_->stddev(p.second);
      const double rho = model_->correlation(p.first, p.second);
      const double radicand = 1.0 - rho * rho;
      // Perfect correlation: drop the second Cholesky term instead of sqrt of ~0 or < 0.
      const double tail = radicand < 1e-15 ? 0.0 : sj * std::sqrt(radicand);
      factors_.push_back({si, rho * sj, tail});
    }
  }

  std::size_t num_arms() const { return model_->num_arms(); }
  const CovarianceModel& model() const { return *model_; }
  const PairIndex& pair_index() const { return index_; }
  SamplingMode mode() const { return mode_; }

  /// One draw (x_i, x_j) for pair (i, j), i < j. Consumes two standard normals.
  std::pair<double, double> sample_pair(Pair p) {
    const Factor& f = factors_[index_.index_of(p)];
    const double z1 = normal_(engine_);
    const double z2 = normal_(engine_);
    return {f.l11 * z1, f.l21 * z1 + f.l22 * z2};
  }

  /// Sufficient statistics of `count` fresh draws from pair p.
  PairSums pull(Pair p, std::uint64_t count) {
    PairSums s;
    if (count == 0) {
      index_.check(p);
      return s;
    }
    if (mode_ == SamplingMode::PerDraw || count == 1) {
      for (std::uint64_t t = 0; t < count; ++t) {
        const auto [x, y] = sample_pair(p);
        s.sxx += x * x;
        s.syy += y * y;
        s.sxy += x * y;
      }
      s.count = count;
      return s;
    }
    const Factor& f = factors_[index_.index_of(p)];
    const double n = static_cast<double>(count);
    const double a11 = boost::random::chi_squared_distribution<double>(n)(engine_);
    const double z = normal_(engine_);
    const double c2sq = boost::random::chi_squared_distribution<double>(n - 1.0)(engine_);
    const double a12 = std::sqrt(a11) * z;
    const double a22 = z * z + c2sq;
    s.count = count;
    s.sxx = f.l11 * f.l11 * a11;
    s.sxy = f.l11 * (f.l21 * a11 + f.l22 * a12);
    s.syy = f.l21 * f.l21 * a11 + 2.0 * f.l21 * f.l22 * a12 + f.l22 * f.l22 * a22;
    return s;
  }

 private:
  struct Factor {
    double l11;
    double l21;
    double l22;
  };

  std::shared_ptr<const CovarianceModel> model_;
  PairIndex index_;
  std::vector<Factor> factors_;
  Engine engine_;
  boost::random::normal_distribution<double> normal_;
  SamplingMode mode_;
};

}  // namespace corrbandit
