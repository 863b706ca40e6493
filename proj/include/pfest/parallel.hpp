#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <vector>

#include <omp.h>

#include "pfest/distributions.hpp"

namespace pfest {

enum class Execution { Serial, Parallel };

/// Worker count for parallel loops: omp_get_max_threads(), capped by a
/// positive integer in PFEST_THREADS. Malformed values are ignored.
int thread_count();

/// Applies `fn(trial)` for trial = 0..trials-1 and returns the results in
/// trial order. The parallel path writes into preallocated slots, so the
/// output never depends on scheduling. The first exception thrown by any trial
/// is rethrown after the loop.
template <class Fn>
auto map_trials(std::size_t trials, Execution exec, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(trials);
  if (exec == Execution::Serial) {
    for (std::size_t t = 0; t < trials; ++t) out[t] = fn(t);
    return out;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::int64_t t = 0; t < count; ++t) {
    try {
      out[static_cast<std::size_t>(t)] = fn(static_cast<std::size_t>(t));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

struct RaceCounts {
  std::vector<std::uint64_t> counts;  // per atom
  std::uint64_t null_races = 0;       // races whose draws all had lambda = 0
};

/// Per-atom counts of the atoms selected by `races` exponential races of
/// length n, race t seeded with derive_seed(master_seed, t).
RaceCounts race_frequencies(const DistributionPair& pair, std::size_t n, std::uint64_t races,
                            std::uint64_t master_seed, Execution exec);

/// Number of trials in which median-of-means on n fresh draws lands within
/// (1 +- eps) Z. Trial t draws with derive_seed(master_seed, t).
std::uint64_t mom_successes(const DistributionPair& pair, std::size_t n, double delta, double eps,
                            std::uint64_t trials, std::uint64_t master_seed, Execution exec);

}  // namespace pfest
