#include <gtest/gtest.h>

#include <cmath>

#include "../support/random_pairs.hpp"
#include "pfest/coverage.hpp"
#include "pfest/errors.hpp"
#include "pfest/estimators.hpp"
#include "pfest/parallel.hpp"
#include "pfest/rng.hpp"
#include "pfest/sampler.hpp"

using namespace pfest;

TEST(Race, TraceInvariants) {
  const auto pair = gen::random_pair(5, 12);
  const auto r = astar_sample(pair, 40, 17);
  ASSERT_EQ(r.state.arrivals.size(), 40u);
  for (std::size_t i = 1; i < 40; ++i) EXPECT_GT(r.state.arrivals[i], r.state.arrivals[i - 1]);
  const auto best = std::min_element(r.state.scores.begin(), r.state.scores.end());
  EXPECT_EQ(r.state.best_index, static_cast<std::size_t>(best - r.state.scores.begin()));
  EXPECT_EQ(r.state.best_score, *best);
  EXPECT_EQ(r.atom, r.state.atoms[r.state.best_index]);
  for (std::size_t i = 0; i < 40; ++i)
    EXPECT_DOUBLE_EQ(r.state.scores[i], r.state.arrivals[i] / pair.lambda(r.state.atoms[i]));
}

TEST(Race, LightweightKernelMatchesTrace) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto pair = gen::random_pair(s, 20);
    EXPECT_EQ(race_atom(pair, 15, s), astar_sample(pair, 15, s).atom);
  }
}

TEST(Race, IdentityPairFirstDrawWins) {
  const std::vector<double> w = {0.1, 0.2, 0.7};
  const auto pair = make_finite_pair(w, w, 3.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = astar_sample(pair, 25, s);
    EXPECT_EQ(r.state.best_index, 0u);
  }
}

TEST(Race, ZeroLambdaAtomsNeverSelected) {
  const auto pair = make_twopoint_mu_pair(0.25, 1.0);
  int null_races = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto atom = try_race_atom(pair, 5, s);
    if (atom)
      EXPECT_EQ(*atom, 1u);
    else
      ++null_races;
  }
  // P(no draw hits atom 1) = 0.75^5 = 0.237.
  EXPECT_NEAR(null_races / 2000.0, std::pow(0.75, 5), 0.03);
  EXPECT_THROW(
      {
        for (std::uint64_t s = 0; s < 100; ++s) race_atom(pair, 1, s);
      },
      AllNullDrawsError);
}

TEST(Race, ScaleInvariance) {
  const auto pair = gen::random_pair(8, 30);
  std::vector<double> scaled(pair.support_size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = 1000.0 * pair.lambda(i);
  for (std::uint64_t s = 0; s < 2000; ++s)
    EXPECT_EQ(race_atom(pair, 10, s), race_atom(pair, scaled, 10, s)) << s;
  const auto other_z = pair.with_z(1e-3);
  for (std::uint64_t s = 0; s < 2000; ++s) EXPECT_EQ(race_atom(pair, 10, s), race_atom(other_z, 10, s));
}

TEST(Race, Errors) {
  const auto pair = make_bernoulli_pair(0.5, 0.1, 1.0);
  EXPECT_THROW(astar_sample(pair, 0, 1), std::invalid_argument);
  EXPECT_THROW(race_atom(pair, std::vector<double>{1.0}, 3, 1), std::invalid_argument);
}

TEST(Race, BernoulliEmpiricalTv) {
  const auto pair = make_bernoulli_pair(0.5, 0.25, 1.0);
  const auto plan = plan_n_sampling(CoverageProfile(pair), 0.05);
  const auto rc = race_frequencies(pair, plan.n, 1'000'000, 2, Execution::Parallel);
  EXPECT_LE(empirical_tv(rc.counts, pair.nu_weights()), 0.05 + 0.005);
}

TEST(SamplingPlan, WorkedExamples) {
  EXPECT_EQ(plan_n_sampling(1.0, 0.3), 5u);
  EXPECT_EQ(plan_n_sampling(4.0, 0.03), 37u);
  EXPECT_EQ(plan_n_sampling(1.0, 2.999), 1u);
  EXPECT_THROW(plan_n_sampling(1.0, 3.0), std::domain_error);
  EXPECT_THROW(plan_n_sampling(0.5, 0.1), std::domain_error);
  EXPECT_EQ(plan_n_sampling(4.0, 0.1), 28u);
}

TEST(SamplingPlan, FromProfileAndDivergence) {
  const auto tp = plan_n_sampling(CoverageProfile(make_twopoint_mu_pair(0.25, 1.0)), 0.1);
  EXPECT_EQ(tp.M, 4.0);
  EXPECT_EQ(tp.n, 28u);
  const auto bern = plan_n_sampling(CoverageProfile(make_bernoulli_pair(0.5, 0.25, 1.0)), 0.1);
  EXPECT_EQ(bern.M, 1.25);
  EXPECT_EQ(bern.n, 9u);
  const auto chi2 = FGenerator::chi_squared();
  const auto f = plan_n_sampling(chi2, 0.0625, 0.1);
  EXPECT_NEAR(f.M, gamma_f(chi2, 3 * 0.0625 / 0.1), 1e-12);
  EXPECT_THROW(plan_n_sampling(FGenerator::total_variation(), 0.5, 0.1), InfeasiblePlanError);
}

TEST(SamplingPlan, SeparationFromEstimation) {
  // Planned estimator n over planned sampler n grows without bound.
  const CoverageProfile prof(make_twopoint_mu_pair(0.25, 1.0));
  double prev = 0;
  for (double eps : {0.2, 0.1, 0.05, 0.02, 0.01, 0.005}) {
    const double ratio = static_cast<double>(plan_n_coverage(prof, eps, 0.1).n) /
                         static_cast<double>(plan_n_sampling(prof, eps).n);
    EXPECT_GT(ratio, prev * 1.5);
    prev = ratio;
  }
}

TEST(EmpiricalTv, Arithmetic) {
  const std::vector<std::uint64_t> c = {3, 1};
  const std::vector<double> t = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(empirical_tv(c, t), 0.25);
  EXPECT_DOUBLE_EQ(empirical_tv(c, t, 4), 0.5 * (std::abs(3 / 8.0 - 0.5) + std::abs(1 / 8.0 - 0.5) + 0.5));
  EXPECT_THROW(empirical_tv(std::vector<std::uint64_t>{0, 0}, t), std::invalid_argument);
}

TEST(Parallel, FrequenciesMatchSerial) {
  const auto pair = gen::random_pair(21, 40);
  const auto a = race_frequencies(pair, 12, 50'000, 3, Execution::Serial);
  const auto b = race_frequencies(pair, 12, 50'000, 3, Execution::Parallel);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.null_races, b.null_races);
  const auto tp = make_twopoint_mu_pair(0.3, 1.0);
  const auto c = race_frequencies(tp, 3, 20'000, 4, Execution::Serial);
  const auto d = race_frequencies(tp, 3, 20'000, 4, Execution::Parallel);
  EXPECT_EQ(c.counts, d.counts);
  EXPECT_EQ(c.null_races, d.null_races);
  EXPECT_GT(c.null_races, 0u);
}

TEST(Parallel, MapTrialsOrderedAndRethrows) {
  const auto serial = map_trials(1000, Execution::Serial, [](std::size_t t) { return mix64(t); });
  const auto par = map_trials(1000, Execution::Parallel, [](std::size_t t) { return mix64(t); });
  EXPECT_EQ(serial, par);
  EXPECT_THROW(map_trials(100, Execution::Parallel,
                          [](std::size_t t) -> int {
                            if (t == 37) throw std::runtime_error("boom");
                            return 0;
                          }),
               std::runtime_error);
}

TEST(Parallel, MomSuccessesMatchSerial) {
  const auto pair = make_bernoulli_pair(0.5, 0.25, 1.0);
  EXPECT_EQ(mom_successes(pair, 200, 0.1, 0.1, 300, 9, Execution::Serial),
            mom_successes(pair, 200, 0.1, 0.1, 300, 9, Execution::Parallel));
}

TEST(Parallel, ThreadCapFromEnvironment) {
  setenv("PFEST_THREADS", "1", 1);
  EXPECT_EQ(thread_count(), 1);
  setenv("PFEST_THREADS", "garbage", 1);
  EXPECT_GE(thread_count(), 1);
  setenv("PFEST_THREADS", "-3", 1);
  EXPECT_GE(thread_count(), 1);
  unsetenv("PFEST_THREADS");
  EXPECT_EQ(thread_count(), std::max(1, omp_get_max_threads()));
}
