#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pfest/coverage.hpp"
#include "pfest/distributions.hpp"
#include "pfest/divergences.hpp"

namespace pfest {

/// Trace of one exponential race.
struct RaceState {
  std::vector<std::uint32_t> atoms;  // X_i
  std::vector<double> arrivals;      // N_i, running sums of Exp(1) increments
  std::vector<double> scores;        // N_i / lambda(X_i); +inf where lambda = 0
  std::size_t best_index = 0;
  double best_score = 0.0;
};

struct RaceResult {
  std::uint32_t atom;
  RaceState state;
};

/// Runs the race over n draws from mu and returns the draw with the smallest
/// score, ties going to the earliest draw. Throws AllNullDrawsError when every
/// drawn atom has lambda = 0.
RaceResult astar_sample(const DistributionPair& pair, std::size_t n, std::uint64_t seed);

/// Same race without the trace; returns only the selected atom. Consumes the
/// random stream identically to `astar_sample`.
std::uint32_t race_atom(const DistributionPair& pair, std::size_t n, std::uint64_t seed);

/// As `race_atom`, but reports an all-null race as nullopt instead of throwing.
std::optional<std::uint32_t> try_race_atom(const DistributionPair& pair, std::size_t n,
                                           std::uint64_t seed);

/// Race over explicit per-atom lambda values instead of the pair's own.
std::uint32_t race_atom(const DistributionPair& pair, std::span<const double> lambda_by_atom,
                        std::size_t n, std::uint64_t seed);

/// n = max(1, ceil(2 M ln(3/eps))). Requires M >= 1 and 0 < eps < 3.
std::size_t plan_n_sampling(double M, double eps);

/// Sampling plan with M = max(1, inf{M : Cov_M <= eps/3}).
struct SamplingPlan {
  std::size_t n;
  double M;
};
SamplingPlan plan_n_sampling(const CoverageProfile& profile, double eps);

/// Divergence form: Cov_M <= eps/3 holds once f(M)/M >= 3D/eps, so
/// M = gamma_f(3D/eps). Throws InfeasiblePlanError when that is infinite.
SamplingPlan plan_n_sampling(const FGenerator& f, double divergence, double eps);

/// Half the L1 distance between empirical frequencies and a probability vector.
/// `null_count` races that selected nothing count as mass outside the target.
double empirical_tv(std::span<const std::uint64_t> counts, std::span<const double> target,
                    std::uint64_t null_count = 0);

}  // namespace pfest
