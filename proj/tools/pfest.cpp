#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfest/config.hpp"
#include "pfest/coverage.hpp"
#include "pfest/csv.hpp"
#include "pfest/distributions.hpp"
#include "pfest/divergences.hpp"
#include "pfest/errors.hpp"
#include "pfest/estimators.hpp"
#include "pfest/harness.hpp"
#include "pfest/parallel.hpp"
#include "pfest/rng.hpp"
#include "pfest/sampler.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

using namespace pfest;

struct GridRange {
  double from, to;
  std::size_t steps;
};

GridRange parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 3) throw std::invalid_argument("grid must look like M0:M1:steps");
  GridRange g{parse_double(parts[0]), parse_double(parts[1]), 0};
  const double steps = parse_double(parts[2]);
  if (!(steps >= 1.0) || steps != std::floor(steps)) throw std::invalid_argument("grid steps must be a positive integer");
  g.steps = static_cast<std::size_t>(steps);
  if (!(g.from >= 0.0) || !(g.to >= g.from)) throw std::invalid_argument("grid needs 0 <= M0 <= M1");
  return g;
}

// "coverage" or "fdiv:<generator>".
std::pair<std::string, std::optional<FGenerator>> parse_plan(const std::string& text) {
  if (text == "coverage") return {"coverage", std::nullopt};
  if (text.starts_with("fdiv:")) return {"fdiv", parse_generator(text.substr(5))};
  throw std::invalid_argument("plan must be coverage or fdiv:<generator>");
}

void emit(const CsvTable& table, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << format_csv(table);
  else
    emit_csv(table, out);
}

int cmd_coverage(const std::string& pair_path, const std::string& grid_text, const std::string& out) {
  const DistributionPair pair = load_pair(pair_path);
  const CoverageProfile profile(pair);
  const GridRange grid = parse_grid(grid_text);
  CsvTable table;
  table.metadata.emplace_back("pair", pair.name());
  table.header = {"M", "cov", "icov", "icov_over_M", "trunc_second_moment"};
  for (std::size_t i = 0; i < grid.steps; ++i) {
    const double M = grid.steps == 1 ? grid.from
                                     : grid.from + (grid.to - grid.from) * static_cast<double>(i) /
                                                       static_cast<double>(grid.steps - 1);
    const double ic = profile.integrated_coverage(M);
    table.rows.push_back({format_double(M), format_double(profile.coverage(M)), format_double(ic),
                          M > 0.0 ? format_double(ic / M) : "nan",
                          format_double(profile.truncated_second_moment(M))});
  }
  emit(table, out);
  return kExitOk;
}

int cmd_plan(const std::string& pair_path, const std::string& method, const std::string& plan_text,
             double eps, double delta, const std::vector<double>& g) {
  const DistributionPair pair = load_pair(pair_path);
  if (method == "sample") {
    const SamplingPlan plan = [&] {
      const auto [kind, f] = parse_plan(plan_text);
      if (kind == "fdiv") return plan_n_sampling(*f, f_divergence(pair, *f), eps);
      return plan_n_sampling(CoverageProfile(pair), eps);
    }();
    std::cout << "method=sample n=" << plan.n << " M=" << format_double(plan.M)
              << " eps=" << format_double(eps) << '\n';
    return kExitOk;
  }
  const auto [kind, f] = parse_plan(plan_text);
  const PlanResult plan = plan_for_method(pair, method, kind, f, eps, delta, g);
  std::cout << "method=" << method << " plan=" << plan_text << " n=" << plan.n
            << " n_real=" << format_double(plan.n_real) << " M=" << format_double(plan.M)
            << " k=" << plan.k_groups << " eps=" << format_double(eps)
            << " delta=" << format_double(delta);
  for (const auto& [name, value] : plan.constants_used) std::cout << ' ' << name << '=' << format_double(value);
  std::cout << '\n';
  return kExitOk;
}

int cmd_estimate(const std::string& pair_path, const std::string& method, const std::string& plan_text,
                 double eps, double delta, std::uint64_t seed, std::optional<std::uint64_t> n_opt,
                 std::uint64_t trials, const std::string& csv_path, const std::vector<double>& g) {
  const DistributionPair pair = load_pair(pair_path);
  const auto [kind, f] = parse_plan(plan_text);
  double M = 1.0;
  std::uint64_t n = 0;
  std::string source = "manual";
  if (n_opt) {
    n = *n_opt;
    if (method == "quantile") M = plan_for_method(pair, method, kind, f, eps, delta, g).M;
  } else {
    const PlanResult plan = plan_for_method(pair, method, kind, f, eps, delta, g);
    n = plan.n;
    M = plan.M;
    source = kind;
  }
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (n > kMaxSimulatedN)
    throw std::invalid_argument("planned n = " + std::to_string(n) + " exceeds the simulation cap");

  const auto outcomes = run_estimator_trials(pair, method, static_cast<std::size_t>(n), eps, delta,
                                             std::max(1.0, M), g, trials, seed, Execution::Parallel);
  const double truth = method_truth(pair, method, g);
  std::size_t hits = 0;
  for (const auto& o : outcomes) hits += o.success;
  const auto& first = outcomes.front();
  std::cout << "method=" << method << " plan=" << source << " n=" << n;
  if (method == "mom") std::cout << " k=" << mom_group_count(delta);
  std::cout << " M=" << format_double(M) << " eps=" << format_double(eps)
            << " delta=" << format_double(delta) << " estimate=" << format_double(first.estimate)
            << " truth=" << format_double(truth) << " rel_error=" << format_double(first.rel_error)
            << " success=" << (first.success ? 1 : 0);
  if (trials > 1)
    std::cout << " trials=" << trials << " success_freq="
              << format_double(static_cast<double>(hits) / static_cast<double>(trials));
  std::cout << '\n';

  if (!csv_path.empty()) {
    CsvTable table;
    table.metadata.emplace_back("method", method);
    table.metadata.emplace_back("seed", std::to_string(seed));
    table.header = {"trial", "n", "estimate", "rel_error", "success"};
    for (std::size_t t = 0; t < outcomes.size(); ++t)
      table.rows.push_back({std::to_string(t), std::to_string(n), format_double(outcomes[t].estimate),
                            format_double(outcomes[t].rel_error), outcomes[t].success ? "1" : "0"});
    emit(table, csv_path);
  }
  return kExitOk;
}

int cmd_sample(const std::string& pair_path, double eps, std::uint64_t seed,
               std::optional<std::uint64_t> n_opt, std::optional<std::uint64_t> trials) {
  const DistributionPair pair = load_pair(pair_path);
  std::size_t n = 0;
  if (n_opt) {
    n = static_cast<std::size_t>(*n_opt);
  } else {
    n = plan_n_sampling(CoverageProfile(pair), eps).n;
  }
  if (!trials) {
    const RaceResult r = astar_sample(pair, n, seed);
    std::cout << "atom=" << r.atom << " n=" << n << " seed=" << seed
              << " best_index=" << r.state.best_index << '\n';
    return kExitOk;
  }
  const RaceCounts rc = race_frequencies(pair, n, *trials, seed, Execution::Parallel);
  const double tv = empirical_tv(rc.counts, pair.nu_weights(), rc.null_races);
  const double slack = 3.0 * std::sqrt(static_cast<double>(pair.support_size()) /
                                        static_cast<double>(*trials));
  std::cout << "n=" << n << " trials=" << *trials << " tv=" << format_double(tv)
            << " eps=" << format_double(eps) << " mc_slack=" << format_double(slack)
            << " null_races=" << rc.null_races << " counts=";
  for (std::size_t a = 0; a < rc.counts.size(); ++a) std::cout << (a ? "," : "") << rc.counts[a];
  std::cout << '\n';
  return kExitOk;
}

int cmd_experiment(const std::string& config_path, std::string out, bool serial) {
  const ExperimentConfig config = load_config(config_path);
  if (out.empty()) out = config.output_path;
  const CsvTable table = run_experiment(config, serial ? Execution::Serial : Execution::Parallel);
  emit(table, out);
  return kExitOk;
}

int cmd_make_pair(const std::string& family, const std::vector<std::string>& params,
                  const std::string& out) {
  ExperimentConfig c;
  c.family = parse_family(family);
  for (const auto& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--param expects key=value");
    c.family_params[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1));
  }
  c.eps_grid = {0.5};
  c.validate();
  const DistributionPair pair = make_family_pair(c);
  if (out.empty() || out == "-")
    std::cout << to_json(pair) << '\n';
  else
    save_pair(pair, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pfest: coverage-planned partition-function estimation and sampling"};
  app.require_subcommand(1);

  std::string pair_path, grid = "0:10:101", out, method = "mom", plan = "coverage", csv_path,
                         config_path, family;
  double eps = 0.1, delta = 0.1;
  std::uint64_t seed = 0, trials = 1;
  std::optional<std::uint64_t> n_opt, sample_trials;
  std::vector<double> g;
  std::vector<std::string> params;
  bool serial = false;

  auto* coverage = app.add_subcommand("coverage", "Exact coverage profile of a pair on an M grid");
  coverage->add_option("--pair", pair_path, "Pair JSON file")->required();
  coverage->add_option("--grid", grid, "M0:M1:steps")->capture_default_str();
  coverage->add_option("--out", out, "CSV output path (default stdout)");

  auto* plan_cmd = app.add_subcommand("plan", "Planned sample size");
  plan_cmd->add_option("--pair", pair_path, "Pair JSON file")->required();
  plan_cmd->add_option("--method", method, "mom|quantile|snis|is|sample")
      ->check(CLI::IsMember({"mom", "quantile", "snis", "is", "sample"}))
      ->capture_default_str();
  plan_cmd->add_option("--plan", plan, "coverage|fdiv:<generator>")->capture_default_str();
  plan_cmd->add_option("--eps", eps)->capture_default_str();
  plan_cmd->add_option("--delta", delta)->capture_default_str();
  plan_cmd->add_option("--g", g, "Per-atom weighting function")->delimiter(',');

  auto* estimate = app.add_subcommand("estimate", "Run an estimator on fresh draws");
  estimate->add_option("--pair", pair_path, "Pair JSON file")->required();
  estimate->add_option("--method", method, "mom|quantile|snis|is")
      ->check(CLI::IsMember({"mom", "quantile", "snis", "is"}))
      ->capture_default_str();
  estimate->add_option("--plan", plan, "coverage|fdiv:<generator>")->capture_default_str();
  estimate->add_option("--eps", eps)->capture_default_str();
  estimate->add_option("--delta", delta)->capture_default_str();
  estimate->add_option("--seed", seed)->capture_default_str();
  estimate->add_option("--n", n_opt, "Override the planned sample size");
  estimate->add_option("--trials", trials, "Independent repetitions")->check(CLI::PositiveNumber);
  estimate->add_option("--csv", csv_path, "Per-trial CSV output");
  estimate->add_option("--g", g, "Per-atom weighting function")->delimiter(',');

  auto* sample_cmd = app.add_subcommand("sample", "Exponential-race sampling");
  sample_cmd->add_option("--pair", pair_path, "Pair JSON file")->required();
  sample_cmd->add_option("--eps", eps)->capture_default_str();
  sample_cmd->add_option("--seed", seed)->capture_default_str();
  sample_cmd->add_option("--n", n_opt, "Override the planned race length");
  sample_cmd->add_option("--trials", sample_trials, "Run this many races and report empirical TV")
      ->check(CLI::PositiveNumber);

  auto* experiment = app.add_subcommand("experiment", "Run an experiment config");
  experiment->add_option("--config", config_path, "Config file")->required();
  experiment->add_option("--out", out, "CSV output path (default: config output, else stdout)");
  experiment->add_flag("--serial", serial, "Use the serial reference kernels");

  auto* make_pair = app.add_subcommand("make-pair", "Write a pair JSON for a built-in family");
  make_pair->add_option("--family", family, "bernoulli|twopoint|pointmass|random|identity")->required();
  make_pair->add_option("--param", params, "key=value family parameter");
  make_pair->add_option("--out", out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*coverage) return cmd_coverage(pair_path, grid, out);
    if (*plan_cmd) return cmd_plan(pair_path, method, plan, eps, delta, g);
    if (*estimate)
      return cmd_estimate(pair_path, method, plan, eps, delta, seed, n_opt, trials, csv_path, g);
    if (*sample_cmd) return cmd_sample(pair_path, eps, seed, n_opt, sample_trials);
    if (*experiment) return cmd_experiment(config_path, out, serial);
    if (*make_pair) return cmd_make_pair(family, params, out);
  } catch (const InfeasiblePlanError& e) {
    std::cerr << "pfest: infeasible plan: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "pfest: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
