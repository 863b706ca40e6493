#include "pfest/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "pfest/estimators.hpp"
#include "pfest/rng.hpp"
#include "pfest/sampler.hpp"

namespace pfest {

int thread_count() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("PFEST_THREADS")) {
    int cap = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, cap);
    if (ec == std::errc() && ptr == end && cap > 0) n = std::min(n, cap);
  }
  return std::max(n, 1);
}

RaceCounts race_frequencies(const DistributionPair& pair, std::size_t n, std::uint64_t races,
                            std::uint64_t master_seed, Execution exec) {
  if (n == 0) throw std::invalid_argument("race needs at least one draw");
  const std::size_t k = pair.support_size();
  RaceCounts out{std::vector<std::uint64_t>(k, 0), 0};
  const auto count = static_cast<std::int64_t>(races);
  if (exec == Execution::Serial) {
    for (std::int64_t t = 0; t < count; ++t) {
      const auto atom = try_race_atom(pair, n, derive_seed(master_seed, static_cast<std::uint64_t>(t)));
      if (atom)
        ++out.counts[*atom];
      else
        ++out.null_races;
    }
    return out;
  }
#pragma omp parallel num_threads(thread_count())
  {
    std::vector<std::uint64_t> local(k + 1, 0);  // last slot: null races
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < count; ++t) {
      const auto atom = try_race_atom(pair, n, derive_seed(master_seed, static_cast<std::uint64_t>(t)));
      ++local[atom ? *atom : k];
    }
#pragma omp critical(pfest_race_merge)
    {
      for (std::size_t a = 0; a < k; ++a) out.counts[a] += local[a];
      out.null_races += local[k];
    }
  }
  return out;
}

std::uint64_t mom_successes(const DistributionPair& pair, std::size_t n, double delta, double eps,
                            std::uint64_t trials, std::uint64_t master_seed, Execution exec) {
  const double z = pair.z_true();
  const auto hits = map_trials(trials, exec, [&](std::size_t t) -> std::uint8_t {
    const auto batch = sample(pair, n, derive_seed(master_seed, t));
    const double est = median_of_means(batch, delta).estimate;
    return est >= (1.0 - eps) * z && est <= (1.0 + eps) * z;
  });
  return static_cast<std::uint64_t>(std::count(hits.begin(), hits.end(), std::uint8_t{1}));
}

}  // namespace pfest
