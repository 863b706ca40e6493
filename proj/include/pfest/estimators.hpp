#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pfest/coverage.hpp"
#include "pfest/distributions.hpp"
#include "pfest/divergences.hpp"

namespace pfest {

enum class PlanSource { CoveragePlan, FDivPlan, QuantilePlan, Manual };

std::string_view to_string(PlanSource source) noexcept;

struct EstimateReport {
  double estimate = 0.0;
  std::size_t n_used = 0;
  std::size_t k_groups = 0;  // 0 for estimators without grouping
  double eps_target = 0.0;
  double delta_target = 0.0;
  PlanSource plan_source = PlanSource::Manual;
  std::optional<double> true_z;
  std::optional<double> rel_error;

  /// Records the true value and the relative error against it.
  EstimateReport& with_truth(double truth);
  /// (1 - eps) truth <= estimate <= (1 + eps) truth. Requires a truth.
  bool within(double eps) const;
};

/// Named multiplicative constants of the planners. The sample-size bounds are
/// only stated up to constants, so these defaults are a choice; the quantile
/// constant 18 is the one stated explicitly with its bound.
struct PlanConstants {
  double c1_coverage = 8.0;             // MoM plan from the integrated coverage
  double c2_fdiv = 8.0;                 // MoM plan from an f-divergence
  double c3_importance = 6.0;           // IS / SNIS
  double quantile = 18.0;               // quantile estimator
  double quantile_gamma_multiplier = 4.0;  // M = gamma_f(mult * D / eps)
  double fdiv_gamma_multiplier = 6.0;      // M = gamma_f(mult * D / eps)
  double mom_groups = 8.0;              // k = ceil(mom_groups * ln(1/delta))

  std::map<std::string, double> as_map() const;
};

inline constexpr double kQuantileAlphaDivisor = 4.0;  // alpha = eps / (4 M)

struct PlanResult {
  /// Planned sample size; saturates at UINT64_MAX when the bound overflows.
  std::uint64_t n = 1;
  /// The unrounded bound, kept so that astronomically large plans stay
  /// comparable.
  double n_real = 1.0;
  double M = 1.0;
  std::size_t k_groups = 0;
  PlanSource source = PlanSource::Manual;
  std::map<std::string, double> constants_used;
};

/// ceil(x), forgiving a relative rounding excess of 1e-12 so that bounds which
/// are exact integers do not round up by one. Saturates at UINT64_MAX.
std::uint64_t ceil_count(double x);

/// k = ceil(8 ln(1/delta)).
std::size_t mom_group_count(double delta, const PlanConstants& constants = {});

/// Median of k contiguous block means of size floor(n/k); the remainder is
/// dropped and the lower median is used when k is even.
double median_of_block_means(std::span<const double> values, std::size_t k);

EstimateReport median_of_means(std::span<const double> lambdas, double delta,
                               const PlanConstants& constants = {});
EstimateReport median_of_means(const SampleBatch& batch, double delta,
                               const PlanConstants& constants = {});

/// 1-based index ceil((1 - alpha) n), at least 1.
std::size_t quantile_rank(std::size_t n, double alpha);

/// The ceil((1 - alpha) n)-th smallest lambda with alpha = eps / (4 M).
EstimateReport quantile_estimator(std::span<const double> lambdas, double eps, double M);
EstimateReport quantile_estimator(const SampleBatch& batch, double eps, double M);

/// Plain importance-sampling mean of ratio(X_i) g(X_i). `g_values` and
/// `ratios` are indexed by atom.
EstimateReport importance_sampling(const SampleBatch& batch, std::span<const double> g_values,
                                   std::span<const double> ratios);

/// Median-of-means over the per-sample terms ratio(X_i) g(X_i).
EstimateReport importance_sampling_mom(const SampleBatch& batch, std::span<const double> g_values,
                                       std::span<const double> ratios, double delta,
                                       const PlanConstants& constants = {});

/// sum lambda_i g_i / sum lambda_i with `g_values` indexed by atom. Throws
/// UndefinedEstimateError when every lambda is zero.
EstimateReport snis(const SampleBatch& batch, std::span<const double> g_values);
/// Same on raw per-sample lambda and g values.
EstimateReport snis(std::span<const double> lambdas, std::span<const double> g_per_sample);

/// M solves IC_M/M <= eps/4; n = ceil(C1 M ln(1/delta) / eps), at least k.
PlanResult plan_n_coverage(const CoverageProfile& profile, double eps, double delta,
                           const PlanConstants& constants = {});

/// n = ceil(C2 max(gamma_f(6D/eps) ln(1/delta)/eps, c^2 ln(1/delta)/eps^2)).
/// `c` defaults to the generator's threshold. Throws InfeasiblePlanError when
/// gamma_f is infinite at the argument or D is infinite.
PlanResult plan_n_fdiv(const FGenerator& f, double divergence, double eps, double delta,
                       std::optional<double> c = std::nullopt,
                       const PlanConstants& constants = {});

/// n = ceil(18 M ln(2/delta) / eps) for a given M >= 1.
PlanResult plan_n_quantile_for_M(double M, double eps, double delta,
                                 const PlanConstants& constants = {});
/// M = max(1, inf{M : Cov_M <= eps/4}).
PlanResult plan_n_quantile(const CoverageProfile& profile, double eps, double delta,
                           const PlanConstants& constants = {});
/// M = gamma_f(4 D / eps).
PlanResult plan_n_quantile(const FGenerator& f, double divergence, double eps, double delta,
                           const PlanConstants& constants = {});

/// M solves IC_M(g nu || mu)/M <= eps delta / 6; n = ceil(C3 M / eps).
PlanResult plan_n_is(const CoverageProfile& weighted_profile, double eps, double delta,
                     const PlanConstants& constants = {});

/// Larger of the IS thresholds for nu and for g nu; n = ceil(C3 M / eps).
PlanResult plan_n_snis(const CoverageProfile& profile, const CoverageProfile& weighted_profile,
                       double eps, double delta, const PlanConstants& constants = {});

}  // namespace pfest
