#include "pfest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pfest/errors.hpp"

namespace pfest {

namespace {

constexpr double kCeilSlack = 1e-12;
constexpr std::uint64_t kCountMax = std::numeric_limits<std::uint64_t>::max();

void check_unit_open(double x, const char* what) {
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error(std::string(what) + " must lie in (0, 1)");
}

std::vector<double> per_sample(const SampleBatch& batch, std::span<const double> per_atom) {
  std::vector<double> out(batch.n());
  for (std::size_t i = 0; i < batch.n(); ++i) {
    const auto a = batch.atoms[i];
    if (a >= per_atom.size()) throw std::invalid_argument("atom index outside the per-atom table");
    out[i] = per_atom[a];
  }
  return out;
}

}  // namespace

std::string_view to_string(PlanSource source) noexcept {
  switch (source) {
    case PlanSource::CoveragePlan:
      return "coverage";
    case PlanSource::FDivPlan:
      return "fdiv";
    case PlanSource::QuantilePlan:
      return "quantile";
    case PlanSource::Manual:
      return "manual";
  }
  return "unknown";
}

EstimateReport& EstimateReport::with_truth(double truth) {
  if (!(truth > 0.0)) throw std::domain_error("true value must be positive");
  true_z = truth;
  rel_error = std::abs(estimate - truth) / truth;
  return *this;
}

bool EstimateReport::within(double eps) const {
  if (!true_z) throw std::logic_error("no true value attached to the report");
  return estimate >= (1.0 - eps) * *true_z && estimate <= (1.0 + eps) * *true_z;
}

std::map<std::string, double> PlanConstants::as_map() const {
  return {{"C1", c1_coverage},
          {"C2", c2_fdiv},
          {"C3", c3_importance},
          {"quantile", quantile},
          {"quantile_gamma_multiplier", quantile_gamma_multiplier},
          {"fdiv_gamma_multiplier", fdiv_gamma_multiplier},
          {"mom_groups", mom_groups}};
}

std::uint64_t ceil_count(double x) {
  if (std::isnan(x)) throw std::domain_error("sample-size bound is NaN");
  if (x <= 1.0) return 1;
  if (x >= 0x1.0p64) return kCountMax;
  return static_cast<std::uint64_t>(std::ceil(x * (1.0 - kCeilSlack)));
}

std::size_t mom_group_count(double delta, const PlanConstants& constants) {
  check_unit_open(delta, "delta");
  return static_cast<std::size_t>(ceil_count(constants.mom_groups * std::log(1.0 / delta)));
}

double median_of_block_means(std::span<const double> values, std::size_t k) {
  if (k == 0) throw std::invalid_argument("median of means needs at least one group");
  if (values.size() < k)
    throw std::invalid_argument("median of means: n = " + std::to_string(values.size()) +
                                " is smaller than k = " + std::to_string(k));
  const std::size_t m = values.size() / k;
  std::vector<double> means(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(j * m);
    means[j] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(m), 0.0) /
               static_cast<double>(m);
  }
  const auto mid = means.begin() + static_cast<std::ptrdiff_t>((k - 1) / 2);
  std::nth_element(means.begin(), mid, means.end());
  return *mid;
}

EstimateReport median_of_means(std::span<const double> lambdas, double delta,
                               const PlanConstants& constants) {
  const std::size_t k = mom_group_count(delta, constants);
  EstimateReport r;
  r.estimate = median_of_block_means(lambdas, k);
  r.n_used = lambdas.size();
  r.k_groups = k;
  r.delta_target = delta;
  return r;
}

EstimateReport median_of_means(const SampleBatch& batch, double delta,
                               const PlanConstants& constants) {
  return median_of_means(batch.lambdas, delta, constants);
}

std::size_t quantile_rank(std::size_t n, double alpha) {
  if (n == 0) throw std::invalid_argument("quantile rank of an empty sample");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in [0, 1)");
  const auto rank = ceil_count((1.0 - alpha) * static_cast<double>(n));
  return static_cast<std::size_t>(std::clamp<std::uint64_t>(rank, 1, n));
}

EstimateReport quantile_estimator(std::span<const double> lambdas, double eps, double M) {
  check_unit_open(eps, "eps");
  if (!(M >= 1.0)) throw std::domain_error("quantile estimator needs M >= 1");
  if (lambdas.empty()) throw std::invalid_argument("quantile estimator needs at least one sample");
  const double alpha = eps / (kQuantileAlphaDivisor * M);
  const std::size_t rank = quantile_rank(lambdas.size(), alpha);
  std::vector<double> sorted(lambdas.begin(), lambdas.end());
  const auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(sorted.begin(), nth, sorted.end());
  EstimateReport r;
  r.estimate = *nth;
  r.n_used = lambdas.size();
  r.eps_target = eps;
  r.plan_source = PlanSource::QuantilePlan;
  return r;
}

EstimateReport quantile_estimator(const SampleBatch& batch, double eps, double M) {
  return quantile_estimator(batch.lambdas, eps, M);
}

EstimateReport importance_sampling(const SampleBatch& batch, std::span<const double> g_values,
                                   std::span<const double> ratios) {
  if (g_values.size() != ratios.size())
    throw std::invalid_argument("g and ratio tables must have the same length");
  if (batch.n() == 0) throw std::invalid_argument("importance sampling needs at least one sample");
  double sum = 0.0;
  for (const auto a : batch.atoms) {
    if (a >= ratios.size()) throw std::invalid_argument("atom index outside the ratio table");
    sum += ratios[a] * g_values[a];
  }
  EstimateReport r;
  r.estimate = sum / static_cast<double>(batch.n());
  r.n_used = batch.n();
  return r;
}

EstimateReport importance_sampling_mom(const SampleBatch& batch, std::span<const double> g_values,
                                       std::span<const double> ratios, double delta,
                                       const PlanConstants& constants) {
  if (g_values.size() != ratios.size())
    throw std::invalid_argument("g and ratio tables must have the same length");
  std::vector<double> terms = per_sample(batch, ratios);
  const std::vector<double> g = per_sample(batch, g_values);
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] *= g[i];
  return median_of_means(terms, delta, constants);
}

EstimateReport snis(std::span<const double> lambdas, std::span<const double> g_per_sample) {
  if (lambdas.size() != g_per_sample.size())
    throw std::invalid_argument("lambda and g sequences must have the same length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    num += lambdas[i] * g_per_sample[i];
    den += lambdas[i];
  }
  if (!(den > 0.0)) throw UndefinedEstimateError("SNIS undefined: every lambda in the batch is zero");
  EstimateReport r;
  r.estimate = num / den;
  r.n_used = lambdas.size();
  return r;
}

EstimateReport snis(const SampleBatch& batch, std::span<const double> g_values) {
  return snis(batch.lambdas, per_sample(batch, g_values));
}

PlanResult plan_n_coverage(const CoverageProfile& profile, double eps, double delta,
                           const PlanConstants& constants) {
  check_unit_open(eps, "eps");
  check_unit_open(delta, "delta");
  PlanResult plan;
  plan.M = solve_M_eps(profile, eps / slack::kMomIcDivisor);
  plan.k_groups = mom_group_count(delta, constants);
  plan.n_real = constants.c1_coverage * plan.M * std::log(1.0 / delta) / eps;
  plan.n = std::max<std::uint64_t>(ceil_count(plan.n_real), plan.k_groups);
  plan.source = PlanSource::CoveragePlan;
  plan.constants_used = {{"C1", constants.c1_coverage},
                         {"mom_groups", constants.mom_groups},
                         {"ic_divisor", slack::kMomIcDivisor}};
  return plan;
}

PlanResult plan_n_fdiv(const FGenerator& f, double divergence, double eps, double delta,
                       std::optional<double> c, const PlanConstants& constants) {
  check_unit_open(eps, "eps");
  check_unit_open(delta, "delta");
  if (!(divergence >= 0.0)) throw std::domain_error("divergence must be nonnegative");
  if (std::isinf(divergence))
    throw InfeasiblePlanError("divergence is infinite; no finite sample size");
  const double c_used = c.value_or(f.c_threshold());
  if (!(c_used >= 1.0)) throw std::domain_error("c must be at least 1");

  const double arg = constants.fdiv_gamma_multiplier * divergence / eps;
  const double gamma = gamma_f(f, arg);
  if (std::isinf(gamma))
    throw InfeasiblePlanError("gamma_" + f.name() + "(" + std::to_string(arg) +
                              ") is infinite: f(t)/t never reaches the required level");
  const double log_term = std::log(1.0 / delta);
  PlanResult plan;
  plan.M = gamma;
  plan.k_groups = mom_group_count(delta, constants);
  plan.n_real = constants.c2_fdiv * std::max(gamma * log_term / eps, c_used * c_used * log_term / (eps * eps));
  plan.n = std::max<std::uint64_t>(ceil_count(plan.n_real), plan.k_groups);
  plan.source = PlanSource::FDivPlan;
  plan.constants_used = {{"C2", constants.c2_fdiv},
                         {"fdiv_gamma_multiplier", constants.fdiv_gamma_multiplier},
                         {"mom_groups", constants.mom_groups},
                         {"c", c_used}};
  return plan;
}

PlanResult plan_n_quantile_for_M(double M, double eps, double delta,
                                 const PlanConstants& constants) {
  check_unit_open(eps, "eps");
  check_unit_open(delta, "delta");
  if (!(M >= 1.0)) throw std::domain_error("quantile plan needs M >= 1");
  if (std::isinf(M)) throw InfeasiblePlanError("no finite coverage level for the quantile plan");
  PlanResult plan;
  plan.M = M;
  plan.n_real = constants.quantile * M * std::log(2.0 / delta) / eps;
  plan.n = ceil_count(plan.n_real);
  plan.source = PlanSource::QuantilePlan;
  plan.constants_used = {{"quantile", constants.quantile},
                         {"alpha_divisor", kQuantileAlphaDivisor}};
  return plan;
}

PlanResult plan_n_quantile(const CoverageProfile& profile, double eps, double delta,
                           const PlanConstants& constants) {
  check_unit_open(eps, "eps");
  const double level = solve_coverage_level(profile, eps / slack::kQuantileCovDivisor);
  PlanResult plan = plan_n_quantile_for_M(std::max(1.0, level), eps, delta, constants);
  plan.constants_used["cov_divisor"] = slack::kQuantileCovDivisor;
  return plan;
}

PlanResult plan_n_quantile(const FGenerator& f, double divergence, double eps, double delta,
                           const PlanConstants& constants) {
  check_unit_open(eps, "eps");
  if (!(divergence >= 0.0)) throw std::domain_error("divergence must be nonnegative");
  const double arg = constants.quantile_gamma_multiplier * divergence / eps;
  const double M = std::isinf(divergence) ? divergence : gamma_f(f, arg);
  if (std::isinf(M))
    throw InfeasiblePlanError("gamma_" + f.name() + " is infinite at the quantile-plan argument");
  PlanResult plan = plan_n_quantile_for_M(M, eps, delta, constants);
  plan.constants_used["quantile_gamma_multiplier"] = constants.quantile_gamma_multiplier;
  return plan;
}

PlanResult plan_n_is(const CoverageProfile& weighted_profile, double eps, double delta,
                     const PlanConstants& constants) {
  check_unit_open(eps, "eps");
  check_unit_open(delta, "delta");
  if (weighted_profile.singular_mass() > 0.0)
    throw SingularPairError("weighted target is not absolutely continuous w.r.t. mu");
  PlanResult plan;
  plan.M = solve_ic_level(weighted_profile, eps * delta / slack::kIsIcDivisor);
  plan.n_real = constants.c3_importance * plan.M / eps;
  plan.n = ceil_count(plan.n_real);
  plan.constants_used = {{"C3", constants.c3_importance}, {"ic_divisor", slack::kIsIcDivisor}};
  return plan;
}

PlanResult plan_n_snis(const CoverageProfile& profile, const CoverageProfile& weighted_profile,
                       double eps, double delta, const PlanConstants& constants) {
  check_unit_open(eps, "eps");
  check_unit_open(delta, "delta");
  if (profile.singular_mass() > 0.0 || weighted_profile.singular_mass() > 0.0)
    throw SingularPairError("SNIS planning needs absolutely continuous targets");
  const double target = eps * delta / slack::kIsIcDivisor;
  PlanResult plan;
  plan.M = std::max(solve_ic_level(profile, target), solve_ic_level(weighted_profile, target));
  plan.n_real = constants.c3_importance * plan.M / eps;
  plan.n = ceil_count(plan.n_real);
  plan.constants_used = {{"C3", constants.c3_importance}, {"ic_divisor", slack::kIsIcDivisor}};
  return plan;
}

}  // namespace pfest
