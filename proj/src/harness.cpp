#include "pfest/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pfest/coverage.hpp"
#include "pfest/errors.hpp"
#include "pfest/rng.hpp"
#include "pfest/sampler.hpp"

namespace pfest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kSamplerSearchCap = std::size_t{1} << 20;
constexpr std::size_t kEstimatorSearchCap = std::size_t{1} << 24;

double param(const ExperimentConfig& c, const std::string& key, double fallback) {
  const auto it = c.family_params.find(key);
  return it == c.family_params.end() ? fallback : it->second;
}

std::size_t count_param(const ExperimentConfig& c, const std::string& key, double fallback) {
  const double v = param(c, key, fallback);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
    throw std::invalid_argument("param." + key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

std::string params_label(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [key, value] : c.family_params) {
    if (!out.empty()) out += ';';
    out += key + "=" + format_double(value);
  }
  return out;
}

std::string count_text(std::uint64_t n) { return std::to_string(n); }

std::string ms_text(std::chrono::steady_clock::duration d) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << std::chrono::duration<double, std::milli>(d).count();
  return out.str();
}

void add_common_metadata(CsvTable& table, const ExperimentConfig& c) {
  table.metadata.emplace_back("experiment", std::string(to_string(c.experiment)));
  table.metadata.emplace_back("family", std::string(to_string(c.family)));
  table.metadata.emplace_back("params", params_label(c));
  table.metadata.emplace_back("master_seed", std::to_string(c.master_seed));
  table.metadata.emplace_back("delta", format_double(c.delta));
  for (const auto& [name, value] : PlanConstants{}.as_map())
    table.metadata.emplace_back("const." + name, format_double(value));
  table.metadata.emplace_back("const.alpha_divisor", format_double(kQuantileAlphaDivisor));
  table.metadata.emplace_back("const.mom_ic_divisor", format_double(slack::kMomIcDivisor));
  table.metadata.emplace_back("const.sampler_cov_divisor", format_double(slack::kSamplerCovDivisor));
  table.metadata.emplace_back("const.quantile_cov_divisor",
                              format_double(slack::kQuantileCovDivisor));
  table.metadata.emplace_back("const.is_ic_divisor", format_double(slack::kIsIcDivisor));
  table.metadata.emplace_back("nondeterministic_columns", kWallclockColumn);
}

std::optional<FGenerator> single_generator(const ExperimentConfig& c) {
  if (c.f_names.empty()) return std::nullopt;
  return parse_generator(c.f_names.front());
}

}  // namespace

DistributionPair make_family_pair(const ExperimentConfig& c) {
  const double z = param(c, "z", 1.0);
  switch (c.family) {
    case Family::BernoulliPair:
      return make_bernoulli_pair(param(c, "p", kNaN), param(c, "eps", kNaN), z);
    case Family::TwoPointMu:
      return make_twopoint_mu_pair(param(c, "p", kNaN), z);
    case Family::PointMass:
      return make_pointmass_pair(param(c, "q", kNaN), z);
    case Family::RandomFinite: {
      const double seed = param(c, "seed", 0.0);
      if (!(seed >= 0.0) || seed != std::floor(seed) || seed >= 0x1.0p64)
        throw std::invalid_argument("param.seed must be a nonnegative integer");
      return make_random_pair(count_param(c, "k", kNaN), param(c, "spread", 1.0), z,
                              static_cast<std::uint64_t>(seed));
    }
    case Family::Identity: {
      const std::size_t k = count_param(c, "k", 1.0);
      const std::vector<double> w(k, 1.0 / static_cast<double>(k));
      return make_finite_pair(w, w, z, "identity(k=" + std::to_string(k) + ")");
    }
  }
  throw std::logic_error("unhandled family");
}

double method_truth(const DistributionPair& pair, const std::string& method,
                    std::span<const double> g) {
  if (method == "mom" || method == "quantile") return pair.z_true();
  if (method == "snis" || method == "is") {
    if (g.size() != pair.support_size())
      throw std::invalid_argument("g needs one value per atom (" +
                                  std::to_string(pair.support_size()) + ")");
    double nu_g = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) nu_g += pair.nu_weights()[i] * g[i];
    if (!(nu_g > 0.0)) throw std::domain_error("E_nu[g] must be positive");
    return nu_g;
  }
  throw std::invalid_argument("unknown method '" + method + "'");
}

PlanResult plan_for_method(const DistributionPair& pair, const std::string& method,
                           const std::string& plan, const std::optional<FGenerator>& f, double eps,
                           double delta, std::span<const double> g) {
  if (plan != "coverage" && plan != "fdiv")
    throw std::invalid_argument("unknown plan '" + plan + "'");
  if (plan == "fdiv" && !f) throw std::invalid_argument("plan fdiv needs a divergence generator");
  const CoverageProfile profile(pair);

  if (method == "mom") {
    if (plan == "coverage") return plan_n_coverage(profile, eps, delta);
    return plan_n_fdiv(*f, f_divergence(pair, *f), eps, delta);
  }
  if (method == "quantile") {
    if (plan == "coverage") return plan_n_quantile(profile, eps, delta);
    return plan_n_quantile(*f, f_divergence(pair, *f), eps, delta);
  }
  if (method == "is" || method == "snis") {
    if (plan != "coverage") throw std::invalid_argument(method + " is planned from coverage only");
    method_truth(pair, method, g);
    const CoverageProfile weighted(make_weighted_pair(pair, g));
    if (method == "is") return plan_n_is(weighted, eps, delta);
    return plan_n_snis(profile, weighted, eps, delta);
  }
  throw std::invalid_argument("unknown method '" + method + "'");
}

std::vector<TrialOutcome> run_estimator_trials(const DistributionPair& pair,
                                               const std::string& method, std::size_t n,
                                               double eps, double delta, double M,
                                               std::span<const double> g, std::uint64_t trials,
                                               std::uint64_t master_seed, Execution exec) {
  const double truth = method_truth(pair, method, g);
  const auto ratios = pair.ratios();
  return map_trials(trials, exec, [&](std::size_t t) {
    const SampleBatch batch = sample(pair, n, derive_seed(master_seed, t));
    EstimateReport report;
    bool success = false;
    if (method == "mom") {
      report = median_of_means(batch, delta);
    } else if (method == "quantile") {
      report = quantile_estimator(batch, eps, M);
    } else if (method == "snis") {
      report = snis(batch, g);
    } else {
      report = importance_sampling(batch, g, ratios);
    }
    report.with_truth(truth);
    if (method == "quantile")
      success = report.estimate >= (1.0 - eps) * truth && report.estimate <= M * truth;
    else
      success = report.within(eps);
    return TrialOutcome{report.estimate, *report.rel_error, success};
  });
}

double sampler_tv(const DistributionPair& pair, std::size_t n, std::uint64_t races,
                  std::uint64_t master_seed, Execution exec) {
  const RaceCounts rc = race_frequencies(pair, n, races, master_seed, exec);
  return empirical_tv(rc.counts, pair.nu_weights(), rc.null_races);
}

std::optional<std::size_t> find_minimal_n(const std::function<bool(std::size_t)>& pass,
                                          std::size_t start, std::size_t cap) {
  if (start == 0) throw std::invalid_argument("search must start at n >= 1");
  if (start > cap) return std::nullopt;
  if (pass(start)) return start;
  std::size_t lo = start;
  std::size_t hi = start;
  while (true) {
    if (hi >= cap) return std::nullopt;
    hi = std::min(cap, hi * 2);
    if (pass(hi)) break;
    lo = hi;
  }
  // pass(hi) holds and pass(lo) fails.
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (pass(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::optional<std::size_t> find_stable_minimal_n(const std::function<bool(std::size_t)>& pass,
                                                 std::size_t start, std::size_t cap,
                                                 std::size_t window) {
  if (window == 0) throw std::invalid_argument("stability window must be positive");
  return find_minimal_n(
      [&](std::size_t n) {
        for (std::size_t i = 0; i < window; ++i)
          if (!pass(n + n * i / window)) return false;
        return true;
      },
      start, cap);
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope fit needs two or more paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope fit needs distinct x values");
  return sxy / sxx;
}

CsvTable run_success_curve(const ExperimentConfig& config, Execution exec) {
  config.validate();
  const DistributionPair pair = make_family_pair(config);
  const auto f = single_generator(config);
  CsvTable table;
  add_common_metadata(table, config);
  table.metadata.emplace_back("method", config.method);
  table.metadata.emplace_back("plan", config.plan);
  table.header = {"family", "params", "method", "plan", "eps", "delta", "M", "n_planned",
                  "n_used", "trials", "successes", "success_freq", "mean_rel_error", "reason",
                  kWallclockColumn};

  for (std::size_t r = 0; r < config.eps_grid.size(); ++r) {
    const auto started = std::chrono::steady_clock::now();
    const double eps = config.eps_grid[r];
    std::string M_text, n_planned_text, n_used_text, successes_text, reason;
    double success_freq = kNaN, mean_rel = kNaN;
    double M = 1.0;
    std::optional<std::uint64_t> n_used;
    try {
      const PlanResult plan = plan_for_method(pair, config.method, config.plan, f, eps,
                                              config.delta, config.g);
      M = plan.M;
      M_text = format_double(plan.M);
      n_planned_text = count_text(plan.n);
      n_used = plan.n;
    } catch (const InfeasiblePlanError& e) {
      reason = std::string("infeasible: ") + e.what();
    }
    if (config.n_override) n_used = *config.n_override;
    if (n_used && *n_used > kMaxSimulatedN) {
      reason = "n exceeds simulation cap " + std::to_string(kMaxSimulatedN);
      n_used.reset();
    }
    if (n_used) {
      n_used_text = count_text(*n_used);
      const auto outcomes =
          run_estimator_trials(pair, config.method, static_cast<std::size_t>(*n_used), eps,
                               config.delta, std::max(1.0, M), config.g, config.trials,
                               derive_seed(config.master_seed, r), exec);
      std::uint64_t hits = 0;
      double rel_sum = 0.0;
      for (const auto& o : outcomes) {
        hits += o.success ? 1 : 0;
        rel_sum += o.rel_error;
      }
      successes_text = count_text(hits);
      success_freq = static_cast<double>(hits) / static_cast<double>(config.trials);
      mean_rel = rel_sum / static_cast<double>(config.trials);
    }
    table.rows.push_back({std::string(to_string(config.family)), params_label(config),
                          config.method, config.plan, format_double(eps),
                          format_double(config.delta), M_text, n_planned_text, n_used_text,
                          std::to_string(config.trials), successes_text,
                          format_double(success_freq), format_double(mean_rel), reason,
                          ms_text(std::chrono::steady_clock::now() - started)});
  }
  return table;
}

CsvTable run_phase_transition(const ExperimentConfig& config, Execution exec) {
  config.validate();
  std::optional<DistributionPair> pair;
  if (!config.divergence) pair = make_family_pair(config);

  struct Cell {
    std::string f_name;
    double eps;
  };
  std::vector<Cell> cells;
  for (const auto& name : config.f_names)
    for (double eps : config.eps_grid) cells.push_back({name, eps});

  CsvTable table;
  add_common_metadata(table, config);
  table.header = {"f", "regime", "divergence", "eps", "gamma_arg", "M", "n_planned", "n_real",
                  "log_n", "feasible", "reason", kWallclockColumn};
  const auto rows = map_trials(cells.size(), exec, [&](std::size_t i) {
    const auto started = std::chrono::steady_clock::now();
    const FGenerator f = parse_generator(cells[i].f_name);
    const double eps = cells[i].eps;
    const double D = config.divergence ? *config.divergence : f_divergence(*pair, f);
    const PlanConstants constants;
    std::vector<std::string> row = {f.name(), std::string(to_string(classify_regime(f))),
                                    format_double(D), format_double(eps),
                                    format_double(constants.fdiv_gamma_multiplier * D / eps)};
    try {
      const PlanResult plan = plan_n_fdiv(f, D, eps, config.delta);
      row.insert(row.end(), {format_double(plan.M), count_text(plan.n), format_double(plan.n_real),
                             format_double(std::log(plan.n_real)), "1", ""});
    } catch (const InfeasiblePlanError& e) {
      row.insert(row.end(), {"", "", "", "", "0", std::string("infeasible: ") + e.what()});
    }
    row.push_back(ms_text(std::chrono::steady_clock::now() - started));
    return row;
  });
  table.rows.assign(rows.begin(), rows.end());
  return table;
}

CsvTable run_sampling_vs_counting(const ExperimentConfig& config, Execution exec) {
  config.validate();
  const DistributionPair pair = make_family_pair(config);
  const CoverageProfile profile(pair);
  const double pass_level = 1.0 - config.delta - kProbeSuccessSlack;

  CsvTable table;
  add_common_metadata(table, config);
  table.metadata.emplace_back("probe_trials", std::to_string(config.probe_trials));
  table.metadata.emplace_back("probe_success_slack", format_double(kProbeSuccessSlack));
  table.metadata.emplace_back("stability_window", std::to_string(kStabilityWindow));
  table.header = {"family", "params", "eps", "sampler_M", "sampler_n_planned",
                  "sampler_n_empirical", "sampler_tv", "estimator_M", "estimator_n_planned",
                  "estimator_n_empirical", "estimator_success", "ratio_planned",
                  "ratio_empirical", kWallclockColumn};

  for (std::size_t r = 0; r < config.eps_grid.size(); ++r) {
    const auto started = std::chrono::steady_clock::now();
    const double eps = config.eps_grid[r];
    const std::uint64_t row_seed = derive_seed(config.master_seed, r);
    const std::uint64_t sampler_seed = derive_seed(row_seed, 1);
    const std::uint64_t estimator_seed = derive_seed(row_seed, 2);

    const SamplingPlan splan = plan_n_sampling(profile, eps);
    const PlanResult eplan = plan_n_coverage(profile, eps, config.delta);

    auto tv_at = [&](std::size_t n) {
      return sampler_tv(pair, n, config.probe_trials, derive_seed(sampler_seed, n), exec);
    };
    auto success_at = [&](std::size_t n) {
      return static_cast<double>(mom_successes(pair, n, config.delta, eps, config.probe_trials,
                                               derive_seed(estimator_seed, n), exec)) /
             static_cast<double>(config.probe_trials);
    };
    const auto s_min = find_stable_minimal_n([&](std::size_t n) { return tv_at(n) <= eps; }, 1,
                                             kSamplerSearchCap);
    const auto e_min =
        find_stable_minimal_n([&](std::size_t n) { return success_at(n) >= pass_level; },
                              mom_group_count(config.delta), kEstimatorSearchCap);

    auto opt_text = [](const std::optional<std::size_t>& v) {
      return v ? std::to_string(*v) : std::string();
    };
    const double ratio_planned = static_cast<double>(eplan.n) / static_cast<double>(splan.n);
    const double ratio_empirical = (s_min && e_min) ? static_cast<double>(*e_min) /
                                                          static_cast<double>(*s_min)
                                                    : kNaN;
    table.rows.push_back({std::string(to_string(config.family)), params_label(config),
                          format_double(eps), format_double(splan.M), std::to_string(splan.n),
                          opt_text(s_min), s_min ? format_double(tv_at(*s_min)) : "",
                          format_double(eplan.M), count_text(eplan.n), opt_text(e_min),
                          e_min ? format_double(success_at(*e_min)) : "",
                          format_double(ratio_planned), format_double(ratio_empirical),
                          ms_text(std::chrono::steady_clock::now() - started)});
  }
  return table;
}

CsvTable run_experiment(const ExperimentConfig& config, Execution exec) {
  switch (config.experiment) {
    case ExperimentKind::SuccessCurve:
      return run_success_curve(config, exec);
    case ExperimentKind::PhaseTransition:
      return run_phase_transition(config, exec);
    case ExperimentKind::SamplingVsCounting:
      return run_sampling_vs_counting(config, exec);
  }
  throw std::logic_error("unhandled experiment kind");
}

void emit_csv(const CsvTable& table, const std::string& path) { write_csv_file(table, path); }

CsvTable without_column(const CsvTable& table, std::string_view name) {
  const std::size_t col = table.column(name);
  CsvTable out;
  out.metadata = table.metadata;
  out.header = table.header;
  out.header.erase(out.header.begin() + static_cast<std::ptrdiff_t>(col));
  out.rows.reserve(table.rows.size());
  for (auto row : table.rows) {
    row.erase(row.begin() + static_cast<std::ptrdiff_t>(col));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace pfest
