#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfest/config.hpp"
#include "pfest/csv.hpp"
#include "pfest/distributions.hpp"
#include "pfest/estimators.hpp"
#include "pfest/parallel.hpp"

namespace pfest {

/// Name of the timing column; it is the only nondeterministic column.
inline constexpr const char* kWallclockColumn = "wallclock_ms";

/// Largest n a success-curve row will simulate; larger plans are reported
/// without trials.
inline constexpr std::uint64_t kMaxSimulatedN = 50'000'000;

/// An empirical minimal-n probe passes when the success frequency is at least
/// 1 - delta - kProbeSuccessSlack.
inline constexpr double kProbeSuccessSlack = 0.05;

/// Pair for the configured family; missing optional parameters default to
/// z = 1, spread = 1, seed = 0, k = 1 (identity).
DistributionPair make_family_pair(const ExperimentConfig& config);

struct TrialOutcome {
  double estimate = 0.0;
  double rel_error = 0.0;
  bool success = false;
};

/// The estimand each method targets: Z for mom and quantile, nu_g for snis
/// and is.
double method_truth(const DistributionPair& pair, const std::string& method,
                    std::span<const double> g);

/// Sample size plan for `method` under `plan` ("coverage" or "fdiv"). Throws
/// InfeasiblePlanError when no finite plan exists.
PlanResult plan_for_method(const DistributionPair& pair, const std::string& method,
                           const std::string& plan, const std::optional<FGenerator>& f, double eps,
                           double delta, std::span<const double> g);

/// Runs `trials` independent estimations with n samples each; trial t uses
/// derive_seed(master_seed, t). Success is (1 +- eps) truth, except for the
/// quantile method whose event is [(1 - eps) Z, M Z].
std::vector<TrialOutcome> run_estimator_trials(const DistributionPair& pair,
                                               const std::string& method, std::size_t n,
                                               double eps, double delta, double M,
                                               std::span<const double> g, std::uint64_t trials,
                                               std::uint64_t master_seed, Execution exec);

/// Empirical TV of `races` races of length n against nu; null races count as
/// mass outside the support of nu.
double sampler_tv(const DistributionPair& pair, std::size_t n, std::uint64_t races,
                  std::uint64_t master_seed, Execution exec);

/// Smallest n >= start with pass(n), by doubling then bisection. Assumes pass
/// is monotone; nullopt when nothing up to `cap` passes.
std::optional<std::size_t> find_minimal_n(const std::function<bool(std::size_t)>& pass,
                                          std::size_t start, std::size_t cap);

/// Number of probes in the window [n, 2n) that a stable pass must clear.
inline constexpr std::size_t kStabilityWindow = 8;

/// Smallest n >= start whose pass holds at n + floor(n i / window) for every
/// i < window. Lattice effects (for example median-of-means landing exactly on
/// Z for one block size) can make pass(n) true at isolated n; requiring the
/// whole window filters those out.
std::optional<std::size_t> find_stable_minimal_n(const std::function<bool(std::size_t)>& pass,
                                                 std::size_t start, std::size_t cap,
                                                 std::size_t window = kStabilityWindow);

/// Least-squares slope of y on x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

CsvTable run_success_curve(const ExperimentConfig& config, Execution exec = Execution::Parallel);
CsvTable run_phase_transition(const ExperimentConfig& config, Execution exec = Execution::Parallel);
CsvTable run_sampling_vs_counting(const ExperimentConfig& config,
                                  Execution exec = Execution::Parallel);
/// Dispatches on config.experiment.
CsvTable run_experiment(const ExperimentConfig& config, Execution exec = Execution::Parallel);

/// Writes the table; an empty table is written header-only.
void emit_csv(const CsvTable& table, const std::string& path);

/// Copy of the table with one column removed (metadata kept).
CsvTable without_column(const CsvTable& table, std::string_view name);

}  // namespace pfest
