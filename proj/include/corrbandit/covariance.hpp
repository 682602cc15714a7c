#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "corrbandit/error.hpp"
#include "corrbandit/pairs.hpp"

namespace corrbandit {

/// Relative eigenvalue tolerance for the PSD check (scaled by max diagonal).
inline constexpr double kDefaultPsdTolerance = 1e-9;

/// Validated K x K covariance of zero-mean arms. Immutable once built.
///
/// Two validation levels exist. `validate_covariance` demands joint positive
/// semi-definiteness. `validate_pairwise_covariance` only requires every 2x2
/// marginal to be a valid covariance, which is all the pair-sampling
/// environment ever draws from; the lower-bound family needs this because it
/// is not jointly PSD for moderate K. `jointly_psd()` reports which holds.
class CovarianceModel {
 public:
  std::size_t num_arms() const { return static_cast<std::size_t>(sigma_.rows()); }
  const Eigen::MatrixXd& matrix() const { return sigma_; }

  double variance(std::size_t i) const { return sigma_(index(i), index(i)); }
  double stddev(std::size_t i) const { return std::sqrt(variance(i)); }
  double covariance(std::size_t i, std::size_t j) const { return sigma_(index(i), index(j)); }

  double correlation(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    const double si = stddev(i);
    const double sj = stddev(j);
    if (si == 0.0 || sj == 0.0)
      throw Error(ErrorCode::ZeroVariance, "correlation undefined for a zero-variance arm");
    return covariance(i, j) / (si * sj);
  }

  /// 2x2 marginal covariance of (X_first, X_second).
  Eigen::Matrix2d marginal(Pair p) const {
    Eigen::Matrix2d m;
    m << covariance(p.first, p.first), covariance(p.first, p.second),
        covariance(p.second, p.first), covariance(p.second, p.second);
    return m;
  }

  double min_variance() const { return sigma_.diagonal().minCoeff(); }
  double max_variance() const { return sigma_.diagonal().maxCoeff(); }

  /// max_i sigma_i^2 <= 1, the assumption behind the MSE concentration bound.
  bool unit_bounded() const { return unit_bounded_; }
  bool jointly_psd() const { return jointly_psd_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  friend CovarianceModel validate_covariance(const Eigen::MatrixXd&, double);
  friend CovarianceModel validate_pairwise_covariance(const Eigen::MatrixXd&, double);

  CovarianceModel(Eigen::MatrixXd sigma, double min_eig, bool psd)
      : sigma_(std::move(sigma)),
        min_eigenvalue_(min_eig),
        unit_bounded_(sigma_.diagonal().maxCoeff() <= 1.0),
        jointly_psd_(psd) {}

  Eigen::Index index(std::size_t i) const {
    if (i >= num_arms())
      throw Error(ErrorCode::InvalidArm,
                  "arm " + std::to_string(i) + " with K=" + std::to_string(num_arms()));
    return static_cast<Eigen::Index>(i);
  }

  Eigen::MatrixXd sigma_;
  double min_eigenvalue_;
  bool unit_bounded_;
  bool jointly_psd_;
};

namespace detail {

// Shape, symmetry and diagonal checks shared by both validation levels.
inline void check_structure(const Eigen::MatrixXd& raw) {
  if (raw.rows() != raw.cols())
    throw Error(ErrorCode::NotSquare, std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()));
  if (raw.rows() < 3)
    throw Error(ErrorCode::TooFewArms, "K=" + std::to_string(raw.rows()) + ", need K >= 3");
  if (!raw.allFinite()) throw Error(ErrorCode::ParseError, "matrix has non-finite entries");
  const Eigen::Index k = raw.rows();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (raw(i, i) <= 0.0)
      throw Error(ErrorCode::NonPositiveVariance, "Sigma(" + std::to_string(i + 1) + "," +
                                                      std::to_string(i + 1) + ") <= 0");
  }
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j)
      if (raw(i, j) != raw(j, i))
        throw Error(ErrorCode::NotSymmetric, "entries (" + std::to_string(i + 1) + "," +
                                                 std::to_string(j + 1) + ") differ");
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline double max_abs_correlation_excess(const Eigen::MatrixXd& raw, Eigen::Index* bad_i,
                                         Eigen::Index* bad_j) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = i + 1; j < raw.cols(); ++j) {
      const double rho = raw(i, j) / std::sqrt(raw(i, i) * raw(j, j));
      if (std::abs(rho) - 1.0 > worst) {
        worst = std::abs(rho) - 1.0;
        *bad_i = i;
        *bad_j = j;
      }
    }
  return worst;
}

}  // namespace detail

/// Strict validation: square, K >= 3, exactly symmetric, positive variances,
/// all eigenvalues >= -tol_psd * max diagonal. Asymmetry is never repaired.
inline CovarianceModel validate_covariance(const Eigen::MatrixXd& raw,
                                           double tol_psd = kDefaultPsdTolerance) {
  detail::check_structure(raw);
  const double scale = raw.diagonal().maxCoeff();
  const double min_eig = detail::min_eigenvalue(raw);
  if (min_eig < -tol_psd * scale)
    throw Error(ErrorCode::NotPSD, "min eigenvalue " + std::to_string(min_eig));
  Eigen::Index bi = 0, bj = 0;
  if (detail::max_abs_correlation_excess(raw, &bi, &bj) > tol_psd)
    throw Error(ErrorCode::NotPSD, "|rho(" + std::to_string(bi + 1) + "," +
                                       std::to_string(bj + 1) + ")| > 1");
  return CovarianceModel(raw, min_eig, true);
}

/// Pairwise validation: structure as above, and every implied correlation
/// satisfies |rho_ij| <= 1 + tol_psd. Joint PSD is measured and recorded.
inline CovarianceModel validate_pairwise_covariance(const Eigen::MatrixXd& raw,
                                                    double tol_psd = kDefaultPsdTolerance) {
  detail::check_structure(raw);
  Eigen::Index bi = 0, bj = 0;
  if (detail::max_abs_correlation_excess(raw, &bi, &bj) > tol_psd)
    throw Error(ErrorCode::NotPSD, "pair (" + std::to_string(bi + 1) + "," +
                                       std::to_string(bj + 1) + ") has |rho| > 1");
  const double min_eig = detail::min_eigenvalue(raw);
  const bool psd = min_eig >= -tol_psd * raw.diagonal().maxCoeff();
  return CovarianceModel(raw, min_eig, psd);
}

// ---------------------------------------------------------------------------
// Built-in instances

inline Eigen::Matrix4d cluster_block_m1() {
  Eigen::Matrix4d m;
  m << 1.0, 0.9, 0.9, 0.9,
       0.9, 1.0, 0.85, 0.85,
       0.9, 0.85, 1.0, 0.85,
       0.9, 0.85, 0.85, 1.0;
  return m;
}

inline Eigen::Matrix4d cluster_block_sigma3() {
  Eigen::Matrix4d m;
  m << 1.0, 0.5, 0.45, 0.5,
       0.5, 1.0, 0.45, 0.4,
       0.45, 0.45, 1.0, 0.4,
       0.5, 0.4, 0.4, 1.0;
  return m;
}

inline constexpr std::size_t kExperimentArms = 35;

/// Block-diagonal experiment covariances. With `as_printed` the identity blocks
/// keep their printed sizes (25 for id 1, 30 for id 3); otherwise every
/// instance has 35 arms.
inline CovarianceModel build_experiment_cov(int id, bool as_printed = false) {
  std::size_t tail = 0;
  Eigen::Matrix4d head;
  switch (id) {
    case 1:
      head = cluster_block_m1();
      tail = as_printed ? 25 : kExperimentArms - 4;
      break;
    case 2:
      head = cluster_block_m1();
      tail = kExperimentArms - 4;
      break;
    case 3:
      head = cluster_block_sigma3();
      tail = as_printed ? 30 : kExperimentArms - 4;
      break;
    default:
      throw Error(ErrorCode::UnknownId, "experiment id " + std::to_string(id));
  }
  const auto k = static_cast<Eigen::Index>(4 + tail);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(k, k);
  sigma.topLeftCorner<4, 4>() = head;
  if (id == 2) {
    for (Eigen::Index i = 4; i + 1 < k; ++i) {
      sigma(i, i + 1) = 0.2;
      sigma(i + 1, i) = 0.2;
    }
  }
  return validate_covariance(sigma);
}

/// Largest rho^2 for which the lower-bound construction's KL caps apply.
inline double lower_bound_rho2_limit(std::size_t num_arms) {
  if (num_arms <= 2) return 0.0;
  return 1.0 - 1.0 / std::sqrt(static_cast<double>(num_arms - 2));
}

inline bool rho_within_lower_bound_range(std::size_t num_arms, double rho) {
  return num_arms >= 3 && rho * rho <= lower_bound_rho2_limit(num_arms);
}

/// Unit-diagonal lower-bound covariance with Sigma_ij = rho^{min(i,j)}
/// (1-based exponents). Validated pairwise; see CovarianceModel::jointly_psd.
inline CovarianceModel build_lb_cov(std::size_t num_arms, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw Error(ErrorCode::RhoOutOfRange, "rho=" + std::to_string(rho) + " not in (0,1)");
  if (num_arms < 3) throw Error(ErrorCode::TooFewArms, "K=" + std::to_string(num_arms));
  const auto k = static_cast<Eigen::Index>(num_arms);
  Eigen::MatrixXd sigma(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      sigma(i, j) = i == j ? 1.0 : std::pow(rho, static_cast<double>(std::min(i, j) + 1));
  return validate_pairwise_covariance(sigma);
}

/// Relabels arms 0 and m (symmetric swap of rows and columns), so the
/// lower-bound instance's best arm moves to m.
inline CovarianceModel transform_problem(const CovarianceModel& model, std::size_t m) {
  if (m == 0 || m >= model.num_arms())
    throw Error(ErrorCode::InvalidIndex, "transformation index " + std::to_string(m + 1) +
                                             " outside 2..K");
  Eigen::MatrixXd swapped = model.matrix();
  const auto mi = static_cast<Eigen::Index>(m);
  swapped.row(0).swap(swapped.row(mi));
  swapped.col(0).swap(swapped.col(mi));
  return model.jointly_psd() ? validate_covariance(swapped) : validate_pairwise_covariance(swapped);
}

// ---------------------------------------------------------------------------
// Text I/O

/// Parses "K" followed by K rows of K numbers, whitespace separated.
inline Eigen::MatrixXd parse_matrix_text(std::istream& in) {
  long long k = 0;
  if (!(in >> k) || k <= 0) throw Error(ErrorCode::ParseError, "expected a positive arm count");
  Eigen::MatrixXd m(k, k);
  for (long long i = 0; i < k; ++i)
    for (long long j = 0; j < k; ++j)
      if (!(in >> m(i, j)))
        throw Error(ErrorCode::ParseError, "missing entry (" + std::to_string(i + 1) + "," +
                                               std::to_string(j + 1) + ")");
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::ParseError, "trailing content after matrix: " + extra);
  return m;
}

inline Eigen::MatrixXd load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_matrix_text(in);
}

inline void write_matrix_text(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

/// A model resolved from a name, plus any non-fatal warnings.
struct ResolvedModel {
  CovarianceModel model;
  std::string name;
  bool lower_bound_instance = false;
  std::size_t lb_arms = 0;
  double lb_rho = 0.0;
  std::vector<std::string> warnings;
};

/// Accepts `sigma1`, `sigma2`, `sigma3`, `lb:K:rho`, or a matrix file path.
inline ResolvedModel resolve_model(const std::string& spec, bool as_printed = false,
                                   double tol_psd = kDefaultPsdTolerance) {
  if (spec == "sigma1" || spec == "sigma2" || spec == "sigma3")
    return {build_experiment_cov(spec.back() - '0', as_printed), spec, false, 0, 0.0, {}};
  if (spec.rfind("lb:", 0) == 0) {
    const auto second = spec.find(':', 3);
    if (second == std::string::npos)
      throw Error(ErrorCode::ParseError, "expected lb:K:rho, got " + spec);
    std::size_t k = 0;
    double rho = 0.0;
    try {
      k = std::stoul(spec.substr(3, second - 3));
      rho = std::stod(spec.substr(second + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "expected lb:K:rho, got " + spec);
    }
    ResolvedModel r{build_lb_cov(k, rho), spec, true, k, rho, {}};
    if (!rho_within_lower_bound_range(k, rho))
      r.warnings.push_back("rho^2 = " + std::to_string(rho * rho) + " exceeds 1 - 1/sqrt(K-2) = " +
                           std::to_string(lower_bound_rho2_limit(k)));
    if (!r.model.jointly_psd())
      r.warnings.push_back("matrix is not jointly PSD (min eigenvalue " +
                           std::to_string(r.model.min_eigenvalue()) +
                           "); only pair marginals are sampled");
    return r;
  }
  return {validate_covariance(load_matrix_file(spec), tol_psd), spec, false, 0, 0.0, {}};
}

}  // namespace corrbandit
