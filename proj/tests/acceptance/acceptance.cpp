// Acceptance gate: one line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "../support/random_pairs.hpp"
#include "pfest/coverage.hpp"
#include "pfest/divergences.hpp"
#include "pfest/errors.hpp"
#include "pfest/estimators.hpp"
#include "pfest/harness.hpp"
#include "pfest/parallel.hpp"
#include "pfest/rng.hpp"
#include "pfest/sampler.hpp"

using namespace pfest;

namespace {

// Tolerances and budgets.
constexpr double kExactSlack = 1e-10;
constexpr double kQuadratureRel = 1e-4;
constexpr int kQuadraturePoints = 10'000;
constexpr double kSuccessFloor = 0.87;
constexpr double kLowerBoundMatch = 0.05;
constexpr double kLowerBoundMomCeiling = 2.0 / 3.0;
constexpr double kSlopeRelTol = 0.20;
constexpr double kRenyiSlopeLo = 1.8, kRenyiSlopeHi = 2.2;
constexpr double kSeparationRatio = 5.0;
constexpr double kScaleRelTol = 1e-12;
constexpr std::uint64_t kTrials = 500;
constexpr std::uint64_t kRaces = 1'000'000;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double success_frequency(const std::vector<TrialOutcome>& v) {
  return static_cast<double>(std::count_if(v.begin(), v.end(), [](const auto& o) { return o.success; })) /
         static_cast<double>(v.size());
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
  return g;
}

double max_finite_ratio(const DistributionPair& p) {
  double top = 1.0;
  for (double r : p.ratios())
    if (std::isfinite(r)) top = std::max(top, r);
  return top;
}

Outcome exact_inequalities() {
  const std::vector<FGenerator> fs = {FGenerator::chi_squared(), FGenerator::kl(), FGenerator::renyi(1.5),
                                      FGenerator::renyi(3.0)};
  std::uint64_t checks = 0, fails[4] = {0, 0, 0, 0};
  double worst[4] = {-INFINITY, -INFINITY, -INFINITY, -INFINITY};
  auto record = [&](int which, double lhs, double rhs) {
    ++checks;
    worst[which] = std::max(worst[which], lhs - rhs);
    if (lhs > rhs + kExactSlack) ++fails[which];
  };
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto pair = gen::random_pair(s, 64);
    const CoverageProfile prof(pair);
    const auto grid = geometric_grid(0.05, 2.0 * max_finite_ratio(pair) + 2.0, 50);
    std::vector<double> D(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) D[i] = f_divergence(pair, fs[i]);
    for (double M : grid) {
      const double ic = prof.integrated_coverage(M);
      // Both sides as mu-expectations: E[(r 1{r <= M})^2] <= E[r min(r, M)].
      double trunc = 0.0, ic_mu = 0.0;
      for (const auto& a : oracle::atoms(pair)) {
        if (!(a.mu > 0)) continue;
        if (a.ratio <= M) trunc += a.mu * a.ratio * a.ratio;
        ic_mu += a.mu * a.ratio * std::min(a.ratio, M);
      }
      record(0, trunc, ic_mu);
      if (M <= 1.0) continue;
      const double cov = oracle::cov(pair, M);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        if (!std::isfinite(D[i])) continue;
        record(1, cov, std::min(1.0, M * D[i] / fs[i](M)));
        if (fs[i].declared_regime() == Regime::Superquadratic) continue;
        record(2, ic / M, icov_bound_fdiv(fs[i], D[i], M, 1.0));
      }
    }
    if (!pair.absolutely_continuous()) continue;
    for (double eps : {0.1, 0.25, 0.5})
      for (double u : {0.25, 0.5, 0.75})
        record(3, paley_zygmund_lower_bound(prof, eps, u).bound, oracle::mu_prob_ratio_at_least(pair, 1 - eps));
  }
  const bool ok = fails[0] + fails[1] + fails[2] + fails[3] == 0;
  return {ok, fmt("%llu checks; violations a=%llu b=%llu c=%llu d=%llu; worst excess %.2e %.2e %.2e %.2e",
                  static_cast<unsigned long long>(checks), static_cast<unsigned long long>(fails[0]),
                  static_cast<unsigned long long>(fails[1]), static_cast<unsigned long long>(fails[2]),
                  static_cast<unsigned long long>(fails[3]), worst[0], worst[1], worst[2], worst[3])};
}

Outcome profile_identities() {
  double worst_rel = 0.0;
  std::uint64_t monotone_fails = 0, grids = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto pair = gen::random_pair(1000 + s, 64);
    const CoverageProfile prof(pair);
    // On (0, M_half] IC_M / M >= 1/2, so the midpoint error bound M / (2 points)
    // on a monotone step function is at most 1e-4 relative.
    const double m_half = solve_ic_level(prof, 0.5);
    const int n_grid = 50;
    double prev_cov = INFINITY, prev_icm = INFINITY;
    for (int i = 1; i <= n_grid; ++i) {
      const double M = m_half * i / n_grid;
      const double h = M / kQuadraturePoints;
      double quad = 0.0;
      for (int j = 0; j < kQuadraturePoints; ++j) quad += prof.coverage((j + 0.5) * h);
      quad *= h;
      const double ic = prof.integrated_coverage(M);
      worst_rel = std::max(worst_rel, std::abs(ic - quad) / ic);
      const double cov = prof.coverage(M);
      if (cov > prev_cov || ic / M > prev_icm * (1 + 1e-15)) ++monotone_fails;
      prev_cov = cov;
      prev_icm = ic / M;
    }
    // Wide grid for monotonicity only.
    prev_cov = prev_icm = INFINITY;
    for (double M : geometric_grid(1e-3, 4.0 * max_finite_ratio(pair), 200)) {
      const double cov = prof.coverage(M), icm = prof.integrated_coverage(M) / M;
      if (cov > prev_cov || icm > prev_icm * (1 + 1e-15)) ++monotone_fails;
      prev_cov = cov;
      prev_icm = icm;
    }
    grids += 2;
  }
  return {worst_rel <= kQuadratureRel && monotone_fails == 0,
          fmt("worst quadrature rel err %.3e (tol %.0e); monotonicity violations %llu over %llu grids", worst_rel,
              kQuadratureRel, static_cast<unsigned long long>(monotone_fails), static_cast<unsigned long long>(grids))};
}

Outcome estimator_guarantee() {
  const auto pair = make_bernoulli_pair(0.5, 0.25, 1.0);
  const double eps = 0.25, delta = 0.1;
  const auto plan = plan_n_coverage(CoverageProfile(pair), eps, delta);
  const auto out = run_estimator_trials(pair, "mom", plan.n, eps, delta, plan.M, {}, kTrials, 31, Execution::Parallel);
  const double freq = success_frequency(out);
  return {freq >= kSuccessFloor, fmt("M=%g n=%llu k=%zu success %.3f (floor %.2f)", plan.M,
                                     static_cast<unsigned long long>(plan.n), plan.k_groups, freq, kSuccessFloor)};
}

Outcome quantile_guarantee() {
  const auto pair = make_twopoint_mu_pair(0.25, 1.0);
  const double eps = 0.5, delta = 0.1;
  const auto plan = plan_n_quantile(CoverageProfile(pair), eps, delta);
  const auto out =
      run_estimator_trials(pair, "quantile", plan.n, eps, delta, plan.M, {}, kTrials, 32, Execution::Parallel);
  const double freq = success_frequency(out);
  const bool ok = plan.M == 4.0 && plan.n == 432 && freq >= kSuccessFloor;
  return {ok, fmt("M=%g n=%llu; estimate in [(1-eps)Z, MZ] with freq %.3f (floor %.2f)", plan.M,
                  static_cast<unsigned long long>(plan.n), freq, kSuccessFloor)};
}

Outcome sampler_guarantee() {
  const auto pair = make_bernoulli_pair(0.5, 0.25, 1.0);
  const CoverageProfile prof(pair);
  const double slack = 3.0 * std::sqrt(2.0 / static_cast<double>(kRaces));
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 50;
  for (double eps : {0.3, 0.1, 0.03}) {
    const auto plan = plan_n_sampling(prof, eps);
    const double tv = sampler_tv(pair, plan.n, kRaces, seed++, Execution::Parallel);
    // plan.M is the infimum level; the coverage bound holds at every M above it.
    const double above = std::nextafter(plan.M, INFINITY);
    ok = ok && tv <= eps + slack && prof.coverage(above) <= eps / 3 && prof.coverage(plan.M) > eps / 3 &&
         plan.n == plan_n_sampling(above, eps);
    detail += fmt("eps=%g M=%g n=%zu tv=%.4f; ", eps, plan.M, plan.n, tv);
  }
  return {ok, detail + fmt("tolerance eps+%.4f", slack)};
}

Outcome lower_bound_demo() {
  const auto f = FGenerator::chi_squared();
  const double eps = 0.1, C = 3.0;
  const double p = 2 * eps / gamma_f(f, C / (2 * eps));
  const auto pair = make_bernoulli_pair(p, eps, 1.0);
  const double D = f_divergence(pair, f);
  const auto n = static_cast<std::size_t>(std::floor(std::log(1.5) / (2 * p)));
  const double bound = std::exp(-2.0 * static_cast<double>(n) * p);
  const double exact = std::pow(1 - p, static_cast<double>(n));

  const auto zero_high = map_trials(kTrials * 20, Execution::Parallel, [&](std::size_t t) {
    const auto b = sample(pair, n, derive_seed(61, t));
    return std::count(b.atoms.begin(), b.atoms.end(), 1u) == 0 ? 1 : 0;
  });
  const double zero_freq =
      static_cast<double>(std::accumulate(zero_high.begin(), zero_high.end(), 0)) / static_cast<double>(zero_high.size());

  // Accuracy eps/2 keeps the two candidate answers' intervals disjoint.
  const double delta = 1.0 / 3.0;
  const auto out = run_estimator_trials(pair, "mom", n, eps / 2, delta, 1.0, {}, kTrials, 62, Execution::Parallel);
  const double mom = success_frequency(out);
  const bool ok = D <= C + f(1 - eps) && std::abs(zero_freq - exact) <= kLowerBoundMatch &&
                  zero_freq >= bound - kLowerBoundMatch && mom < kLowerBoundMomCeiling;
  return {ok, fmt("chi2 D=%.3f<=%.3f p=%.5f n=%zu; P(no high) emp %.3f exact %.3f bound %.3f; MoM success %.3f",
                  D, C + f(1 - eps), p, n, zero_freq, exact, bound, mom)};
}

Outcome phase_transition() {
  const std::vector<double> eps_grid = {0.5, 0.25, 0.1, 0.05, 0.02};
  const double delta = 0.1, D = 0.1;
  const PlanConstants k;
  bool ok = true;
  std::string detail;

  // TV: gamma is infinite once 6D/eps >= f'(inf) = 1/2.
  const auto tv = FGenerator::total_variation();
  int tv_mismatch = 0;
  for (double d : {D, 0.01})
    for (double eps : eps_grid) {
      const bool below_threshold = eps <= k.fdiv_gamma_multiplier * d / tv.f_prime_at_inf();
      bool infeasible = false;
      try {
        plan_n_fdiv(tv, d, eps, delta);
      } catch (const InfeasiblePlanError&) {
        infeasible = true;
      }
      if (infeasible != below_threshold) ++tv_mismatch;
    }
  ok = ok && tv_mismatch == 0;
  detail += fmt("tv mismatches %d; ", tv_mismatch);

  std::vector<double> inv_eps, log_inv_eps, log_n_kl, log_n_r3;
  for (double eps : eps_grid) {
    inv_eps.push_back(1 / eps);
    log_inv_eps.push_back(std::log(1 / eps));
    log_n_kl.push_back(std::log(plan_n_fdiv(FGenerator::kl(), D, eps, delta).n_real));
    log_n_r3.push_back(std::log(plan_n_fdiv(FGenerator::renyi(3.0), D, eps, delta).n_real));
  }
  const double kl_slope = least_squares_slope(inv_eps, log_n_kl);
  const double kl_target = k.fdiv_gamma_multiplier * D;
  const bool kl_ok = std::abs(kl_slope - kl_target) <= kSlopeRelTol * kl_target;
  const std::size_t last = eps_grid.size() - 1;
  const double r3_slope = (log_n_r3[last] - log_n_r3[last - 1]) / (log_inv_eps[last] - log_inv_eps[last - 1]);
  const bool r3_ok = r3_slope >= kRenyiSlopeLo && r3_slope <= kRenyiSlopeHi;
  ok = ok && kl_ok && r3_ok;
  detail += fmt("kl slope %.3f vs %.3f; renyi3 tail slope %.3f", kl_slope, kl_target, r3_slope);
  return {ok, detail};
}

Outcome separation() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::SamplingVsCounting;
  c.family = Family::TwoPointMu;
  c.family_params = {{"p", 0.25}};
  c.eps_grid = {0.2, 0.1, 0.05};
  c.delta = 0.1;
  c.probe_trials = 400;
  c.master_seed = 80;
  const auto t = run_sampling_vs_counting(c);
  bool ok = true;
  double prev = 0.0;
  std::string detail;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const double ratio = parse_double(row[t.column("ratio_empirical")]);
    ok = ok && std::isfinite(ratio) && ratio > prev;
    prev = ratio;
    detail += fmt("eps=%s sampler n=%s estimator n=%s ratio %.1f; ", row[t.column("eps")].c_str(),
                  row[t.column("sampler_n_empirical")].c_str(), row[t.column("estimator_n_empirical")].c_str(),
                  ratio);
  }
  ok = ok && prev >= kSeparationRatio;
  return {ok, detail + fmt("floor %.0f at the smallest eps", kSeparationRatio)};
}

Outcome snis_guarantee() {
  const auto pair = make_bernoulli_pair(0.5, 0.25, 1.0);
  const std::vector<double> g = {0.0, 1.0};
  const double eps = 0.25, delta = 0.1;
  const double nu_g = method_truth(pair, "snis", g);
  const auto plan = plan_for_method(pair, "snis", "coverage", std::nullopt, eps, delta, g);
  const auto out = run_estimator_trials(pair, "snis", plan.n, eps, delta, plan.M, g, kTrials, 90, Execution::Parallel);
  const double freq = success_frequency(out);

  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto rp = gen::random_pair(s, 32);
    std::vector<double> gv(rp.support_size());
    CounterRng rng(derive_seed(91, s));
    for (auto& x : gv) x = rng.uniform() + 0.01;
    const auto batch = sample(rp, 1000, derive_seed(92, s));
    std::vector<double> lam(batch.lambdas), gs(batch.atoms.size());
    for (std::size_t i = 0; i < gs.size(); ++i) gs[i] = gv[batch.atoms[i]];
    const double base = snis(lam, gs).estimate;
    const double c = std::exp(20.0 * (rng.uniform() - 0.5));
    for (auto& l : lam) l *= c;
    worst = std::max(worst, std::abs(snis(lam, gs).estimate - base) / std::abs(base));
  }
  const bool ok = std::abs(nu_g - 0.625) < 1e-15 && freq >= kSuccessFloor && worst <= kScaleRelTol;
  return {ok, fmt("nu_g=%g M=%g n=%llu success %.3f; scale invariance worst rel %.2e", nu_g, plan.M,
                  static_cast<unsigned long long>(plan.n), freq, worst)};
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "pfest_acceptance";
  std::filesystem::create_directories(dir);
  std::vector<std::string> configs = {
      "experiment = success_curve\nfamily = bernoulli\nparam.p = 0.5\nparam.eps = 0.25\neps_grid = 0.25, 0.1\n"
      "trials = 100\nmaster_seed = 12\n",
      "experiment = success_curve\nfamily = random\nparam.k = 20\nparam.seed = 3\nmethod = snis\n"
      "g = 1,0,1,0,1,0,1,0,1,0,1,0,1,0,1,0,1,0,1,0\neps_grid = 0.3\ntrials = 50\nmaster_seed = 13\n",
      "experiment = phase_transition\nfamily = identity\nf = kl, tv, renyi:alpha=3\ndivergence = 0.1\n"
      "eps_grid = 0.5, 0.1, 0.02\n",
      "experiment = sampling_vs_counting\nfamily = twopoint\nparam.p = 0.25\neps_grid = 0.2, 0.1\n"
      "probe_trials = 100\nmaster_seed = 14\n"};
  auto body = [&](const ExperimentConfig& c, Execution exec, const std::string& name) {
    const auto path = (dir / name).string();
    emit_csv(run_experiment(c, exec), path);
    return format_csv(without_column(read_csv_file(path), kWallclockColumn));
  };
  int mismatches = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto c = parse_config(configs[i]);
    const auto a = body(c, Execution::Parallel, "a.csv");
    const auto b = body(c, Execution::Parallel, "b.csv");
    const auto s = body(c, Execution::Serial, "s.csv");
    if (a != b || a != s) ++mismatches;
  }
  std::filesystem::remove_all(dir);
  return {mismatches == 0, fmt("%zu configs, rerun and serial/parallel mismatches %d", configs.size(), mismatches)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact inequalities", 10, exact_inequalities},
      {2, "profile identities", 5, profile_identities},
      {3, "median-of-means guarantee", 60, estimator_guarantee},
      {4, "quantile guarantee", 60, quantile_guarantee},
      {5, "sampler guarantee", 120, sampler_guarantee},
      {6, "lower-bound demonstration", 60, lower_bound_demo},
      {7, "phase transition", 5, phase_transition},
      {8, "sampling vs counting", 120, separation},
      {9, "snis guarantee", 60, snis_guarantee},
      {10, "determinism", 120, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs <= c.budget_s;
    failures += pass ? 0 : 1;
    std::printf("[%s] criterion %d (%s): %s [%.2fs / %.0fs]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
