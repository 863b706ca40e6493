#pragma once

#include <span>
#include <string>
#include <vector>

#include "pfest/distributions.hpp"
#include "pfest/divergences.hpp"

namespace pfest {

/// Slack constants used when coverage targets are derived from an accuracy
/// eps. Median-of-means planning solves IC_M/M <= eps/4; the sampler and
/// quantile planners solve Cov_M <= eps/3 and Cov_M <= eps/4.
namespace slack {
inline constexpr double kMomIcDivisor = 4.0;
inline constexpr double kSamplerCovDivisor = 3.0;
inline constexpr double kQuantileCovDivisor = 4.0;
inline constexpr double kIsIcDivisor = 6.0;
}  // namespace slack

/// Exact coverage profile of a pair: the distinct density-ratio values of
/// mu-charged atoms in increasing order with the nu- and mu-mass at or above
/// each. Queries use the inclusive convention Cov_M = nu(ratio >= M); singular
/// mass counts as ratio +inf.
class CoverageProfile {
 public:
  explicit CoverageProfile(const DistributionPair& pair);

  std::span<const double> thresholds() const noexcept { return thresholds_; }
  /// nu(ratio >= thresholds[j]) over mu-charged atoms, excluding singular mass.
  std::span<const double> nu_tail_masses() const noexcept { return nu_tail_; }
  std::span<const double> mu_tail_masses() const noexcept { return mu_tail_; }
  double singular_mass() const noexcept { return singular_mass_; }
  const std::string& source() const noexcept { return source_; }

  /// Cov_M = nu({dnu/dmu >= M}).
  double coverage(double M) const;
  /// IC_M = integral of Cov_t over [0, M] = E_nu[min(dnu/dmu, M)].
  double integrated_coverage(double M) const;
  /// P_mu(dnu/dmu >= M).
  double mu_tail(double M) const;
  /// E_mu[(dnu/dmu)^2 1{dnu/dmu <= M}].
  double truncated_second_moment(double M) const;

 private:
  std::size_t first_at_or_above(double M) const;

  std::vector<double> thresholds_;
  std::vector<double> nu_tail_;
  std::vector<double> mu_tail_;
  // Sum of nu_i * r_i over atoms below thresholds[j] (one extra trailing entry).
  std::vector<double> nu_r_below_;
  double singular_mass_ = 0.0;
  std::string source_;
};

double coverage(const CoverageProfile& profile, double M);
double integrated_coverage(const CoverageProfile& profile, double M);

/// Smallest M with IC_M / M <= target. IC_M / M is continuous and
/// non-increasing, so the infimum is attained. Throws SingularPairError when
/// the pair has singular mass.
double solve_ic_level(const CoverageProfile& profile, double target);

/// Median-of-means level: smallest M with IC_M / M <= eps.
double solve_M_eps(const CoverageProfile& profile, double eps);

/// Infimum of {M : Cov_M <= target}. Cov is a right-open step function, so the
/// bound holds for every M strictly above the returned level. Throws
/// SingularPairError when the singular mass alone exceeds the target.
double solve_coverage_level(const CoverageProfile& profile, double target);

/// min(1, M * D / f(M)), an upper bound on Cov_M. Requires M > 1, f(M) > 0.
double coverage_bound_fdiv(const FGenerator& f, double divergence, double M);

/// c^2/M + M * D / f(M), an upper bound on IC_M / M when f(t)/t^2 is
/// non-increasing past c. Requires M >= c >= 1.
double icov_bound_fdiv(const FGenerator& f, double divergence, double M, double c);

/// E_mu[(dnu/dmu)^2 1{dnu/dmu <= M}] computed directly on the pair.
double truncated_second_moment(const DistributionPair& pair, double M);

struct MuTailBound {
  double bound;  // Cov_M / M, clamped to [0, 1]
  double exact;  // P_mu(dnu/dmu >= M)
};

MuTailBound mu_tail_bound(const CoverageProfile& profile, double M);

struct PaleyZygmundBound {
  double bound;   // lower bound on P_mu(dnu/dmu >= 1 - eps)
  double M_used;  // coverage level that produced it
};

/// (1-u) eps / M with M the smallest level satisfying Cov_M <= u eps.
PaleyZygmundBound paley_zygmund_lower_bound(const CoverageProfile& profile, double eps, double u);

/// Divergence form: M = gamma_f(D / (u eps)). A bound of 0 is returned when
/// gamma_f is infinite there.
PaleyZygmundBound paley_zygmund_lower_bound_fdiv(const FGenerator& f, double divergence,
                                                 double eps, double u);

}  // namespace pfest
