#include "pfest/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "pfest/errors.hpp"
#include "pfest/rng.hpp"

namespace pfest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double score(double arrival, double lambda) { return lambda > 0.0 ? arrival / lambda : kInf; }

template <class LambdaOf>
std::optional<std::uint32_t> run_race(const DistributionPair& pair, std::size_t n,
                                      std::uint64_t seed, LambdaOf lambda_of, RaceState* trace) {
  if (n == 0) throw std::invalid_argument("race needs at least one draw");
  CounterRng rng(seed);
  double arrival = 0.0;
  double best = kInf;
  std::size_t best_i = 0;
  std::uint32_t best_atom = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t atom = atom_for_uniform(pair, rng.uniform());
    arrival += rng.exponential();
    const double s = score(arrival, lambda_of(atom));
    if (trace) {
      trace->atoms.push_back(atom);
      trace->arrivals.push_back(arrival);
      trace->scores.push_back(s);
    }
    if (s < best) {
      best = s;
      best_i = i;
      best_atom = atom;
    }
  }
  if (std::isinf(best)) return std::nullopt;
  if (trace) {
    trace->best_index = best_i;
    trace->best_score = best;
  }
  return best_atom;
}

std::uint32_t or_throw(std::optional<std::uint32_t> atom, std::size_t n) {
  if (!atom)
    throw AllNullDrawsError("all " + std::to_string(n) + " draws landed on atoms with lambda = 0");
  return *atom;
}

}  // namespace

RaceResult astar_sample(const DistributionPair& pair, std::size_t n, std::uint64_t seed) {
  RaceResult result{0, {}};
  result.state.atoms.reserve(n);
  result.state.arrivals.reserve(n);
  result.state.scores.reserve(n);
  result.atom = or_throw(
      run_race(pair, n, seed, [&pair](std::uint32_t a) { return pair.lambda(a); }, &result.state),
      n);
  return result;
}

std::optional<std::uint32_t> try_race_atom(const DistributionPair& pair, std::size_t n,
                                           std::uint64_t seed) {
  const auto r = pair.ratios();
  const double z = pair.z_true();
  return run_race(pair, n, seed, [r, z](std::uint32_t a) { return z * r[a]; }, nullptr);
}

std::uint32_t race_atom(const DistributionPair& pair, std::size_t n, std::uint64_t seed) {
  return or_throw(try_race_atom(pair, n, seed), n);
}

std::uint32_t race_atom(const DistributionPair& pair, std::span<const double> lambda_by_atom,
                        std::size_t n, std::uint64_t seed) {
  if (lambda_by_atom.size() != pair.support_size())
    throw std::invalid_argument("lambda table must have one value per atom");
  return or_throw(run_race(pair, n, seed,
                           [lambda_by_atom](std::uint32_t a) { return lambda_by_atom[a]; }, nullptr),
                  n);
}

std::size_t plan_n_sampling(double M, double eps) {
  if (!(M >= 1.0) || std::isinf(M)) throw std::domain_error("sampling plan needs a finite M >= 1");
  if (!(eps > 0.0 && eps < 3.0)) throw std::domain_error("sampling plan needs 0 < eps < 3");
  const double n = 2.0 * M * std::log(3.0 / eps);
  // Same 1e-12 forgiveness as the estimator planners.
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * (1.0 - 1e-12))));
}

SamplingPlan plan_n_sampling(const CoverageProfile& profile, double eps) {
  if (!(eps > 0.0 && eps < 3.0)) throw std::domain_error("sampling plan needs 0 < eps < 3");
  const double M = std::max(1.0, solve_coverage_level(profile, eps / slack::kSamplerCovDivisor));
  return {plan_n_sampling(M, eps), M};
}

SamplingPlan plan_n_sampling(const FGenerator& f, double divergence, double eps) {
  if (!(eps > 0.0 && eps < 3.0)) throw std::domain_error("sampling plan needs 0 < eps < 3");
  if (!(divergence >= 0.0)) throw std::domain_error("divergence must be nonnegative");
  const double M = std::isinf(divergence)
                       ? kInf
                       : gamma_f(f, slack::kSamplerCovDivisor * divergence / eps);
  if (std::isinf(M)) throw InfeasiblePlanError("gamma_" + f.name() + " is infinite for the sampling plan");
  const double M1 = std::max(1.0, M);
  return {plan_n_sampling(M1, eps), M1};
}

double empirical_tv(std::span<const std::uint64_t> counts, std::span<const double> target,
                    std::uint64_t null_count) {
  if (counts.size() != target.size())
    throw std::invalid_argument("count and target vectors must have the same length");
  const auto total = std::accumulate(counts.begin(), counts.end(), null_count);
  if (total == 0) throw std::invalid_argument("no samples counted");
  double l1 = static_cast<double>(null_count) / static_cast<double>(total);
  for (std::size_t i = 0; i < counts.size(); ++i)
    l1 += std::abs(static_cast<double>(counts[i]) / static_cast<double>(total) - target[i]);
  return 0.5 * l1;
}

}  // namespace pfest
