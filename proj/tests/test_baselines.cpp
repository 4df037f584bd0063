#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcplan/baselines.hpp"
#include "mcplan/gape.hpp"

using namespace mcplan;

namespace {
GeneratorConfig env(uint64_t seed, int S = 20, int K = 3, int B = 2, double sparsity = 0.5) {
  GeneratorConfig g;
  g.num_states = S;
  g.num_actions = K;
  g.branching = B;
  g.reward_sparsity = sparsity;
  g.seed = seed;
  return g;
}

double run_regret(const std::string& algo, const TabularMdp& mdp, int64_t n, uint64_t seed) {
  BudgetConfig b;
  b.total_calls = n;
  b.gamma = 0.7;
  b.seed = derive_seed(seed, 2);
  ForwardModel model(mdp, derive_seed(seed, 1));
  RunRecord rec;
  if (algo == "kl_olop")
    rec = kl_olop_plan(model, 0, b);
  else if (algo == "brue")
    rec = brue_plan(model, 0, b);
  else if (algo == "uct")
    rec = uct_plan(model, 0, b);
  else
    rec = gape_fixed_budget_plan(model, 0, b, 0.1);
  const auto split = budget_split(n, 0.7);
  if (algo != "gape") {
    CHECK(model.calls() == split.episodes * split.horizon);  // exact budget accounting
    CHECK(rec.oracle_calls == model.calls());
  } else {
    CHECK(model.calls() <= split.episodes * split.horizon);
  }
  const ExactValues ev = exact_value_iteration(mdp, split.horizon, 0.7);
  return simple_regret(ev, 0, rec.recommended);
}
}  // namespace

TEST_CASE("budget_split: worked example, integer maximality, degenerate floor") {
  const auto [tau, horizon] = budget_split(1000, 0.7);
  CHECK(tau == 143);
  CHECK(horizon == 7);

  // tau is the exact maximizer: tau fits, tau + 1 does not.
  const double denom = 2.0 * std::log(1.0 / 0.7);
  for (int64_t n : {10, 100, 1000, 9999, 100000}) {
    const auto split = budget_split(n, 0.7);
    CHECK(double(split.episodes) * std::log(double(split.episodes)) / denom <= double(n));
    CHECK(double(split.episodes + 1) * std::log(double(split.episodes + 1)) / denom > double(n));
    CHECK(split.horizon >= 1);
    // Consumed calls exceed the budget by less than one step per episode.
    CHECK(split.episodes * split.horizon <= n + split.episodes);
  }

  CHECK(budget_split(1, 0.7).horizon == 1);  // tau = 1 forces the floor
  CHECK_THROWS_AS(budget_split(0, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(budget_split(10, 1.0), std::invalid_argument);
}

TEST_CASE("sparse sampling budget matches the Table 3 values") {
  CHECK(sparse_sampling_budget(6, 2, 5, 1.0) == doctest::Approx(7.776e9).epsilon(1e-12));
  CHECK(sparse_sampling_budget(8, 2, 5, 0.5) == doctest::Approx(1.31072e13).epsilon(1e-12));
  CHECK(sparse_sampling_budget(10, 2, 5, 0.2) == doctest::Approx(2.5e16).epsilon(1e-12));
}

TEST_CASE("sparse sampling: deterministic MDP, H=1 reduction, call accounting") {
  // B = 1 with deterministic rewards: the estimate is exact.
  GeneratorConfig g = env(5, 10, 2, 1, 0.0);
  TabularMdp mdp = generate_random_mdp(g);
  for (size_t i = 0; i < mdp.reward_means.size(); ++i)
    mdp.reward_means[i] = (i % 3 == 0) ? 1.0 : 0.0;  // Bernoulli(1) or (0): no noise
  const int H = 3;
  ForwardModel model(mdp, 9);
  const auto result = sparse_sampling_plan(model, 0, H, 1, 0.7);
  const ExactValues ev = exact_value_iteration(mdp, H, 0.7);
  for (Action a = 0; a < 2; ++a)
    CHECK(result.root_q[a] == doctest::Approx(ev.q_value(1, 0, a)).epsilon(1e-12));
  CHECK(double(result.calls) == sparse_sampling_call_count(H, 2, 1));

  // H = 1: the estimate is the mean of C reward draws.
  const TabularMdp m2 = generate_random_mdp(env(6));
  ForwardModel fm(m2, 17);
  const auto r1 = sparse_sampling_plan(fm, 0, 1, 50, 0.7);
  CHECK(double(r1.calls) == sparse_sampling_call_count(1, 3, 50));
  for (Action a = 0; a < 3; ++a) {
    CHECK(r1.root_q[a] >= 0.0);
    CHECK(r1.root_q[a] <= 1.0);
  }
}

TEST_CASE("sparse sampling concentrates on the exact Q at the root") {
  // S=5, K=2, B=2, H=2, C=200: |Qhat - Q| <= 0.15 in at least 95% of seeds.
  int ok = 0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    const TabularMdp mdp = generate_random_mdp(env(200 + i, 5, 2, 2, 0.6));
    const ExactValues ev = exact_value_iteration(mdp, 2, 0.7);
    ForwardModel model(mdp, derive_seed(200 + i, 3));
    const auto result = sparse_sampling_plan(model, 0, 2, 200, 0.7);
    bool close = true;
    for (Action a = 0; a < 2; ++a)
      close = close && std::abs(result.root_q[a] - ev.q_value(1, 0, a)) <= 0.15;
    ok += close;
  }
  CHECK(ok >= 95);
}

TEST_CASE("kl-olop: tiny budgets and deterministic-MDP agreement with gape") {
  // Budget so small that tau = 1: one uniform pass, recommends action 0.
  const TabularMdp mdp = generate_random_mdp(env(31));
  ForwardModel model(mdp, 5);
  BudgetConfig b;
  b.total_calls = 1;
  b.gamma = 0.7;
  const RunRecord rec = kl_olop_plan(model, 0, b);
  CHECK(rec.recommended == 0);
  CHECK(rec.tau == 1);

  // On a deterministic MDP open-loop equals closed-loop: with a healthy
  // budget the recommendation matches MDP-GapE's on the same instance.
  const TabularMdp det = generate_random_mdp(env(32, 15, 3, 1, 0.8));
  ForwardModel m1(det, 7);
  BudgetConfig big;
  big.total_calls = 30000;
  big.gamma = 0.7;
  const RunRecord olop = kl_olop_plan(m1, 0, big);

  const auto split = budget_split(big.total_calls, big.gamma);
  GapeConfig cfg;
  cfg.eps = 0.05;
  cfg.delta = 0.1;
  cfg.gamma = 0.7;
  cfg.horizon = split.horizon;
  cfg.thresholds = {ThresholdKind::practical, 0.1, split.horizon, 1, 3, 0.0};
  cfg.max_episodes = split.episodes;
  GapePlanner planner(cfg, 3, 1, 0);
  ForwardModel m2(det, 7);
  const RunRecord gape = planner.plan(m2);
  CHECK(olop.recommended == gape.recommended);
}

TEST_CASE("single-action degenerate cases") {
  const TabularMdp mdp = generate_random_mdp(env(41, 10, 1));
  BudgetConfig b;
  b.total_calls = 500;
  b.gamma = 0.7;
  ForwardModel m1(mdp, 1), m2(mdp, 2), m3(mdp, 3);
  CHECK(kl_olop_plan(m1, 0, b).recommended == 0);
  CHECK(brue_plan(m2, 0, b).recommended == 0);
  CHECK(uct_plan(m3, 0, b).recommended == 0);
}

TEST_CASE("brue matches pure Monte-Carlo evaluation when H=1") {
  // total_calls = 2 gives tau = 2, H = 1: two uniform root draws.
  const TabularMdp mdp = generate_random_mdp(env(51, 8, 2));
  BudgetConfig b;
  b.total_calls = 2;
  b.gamma = 0.7;
  b.seed = 99;
  ForwardModel model(mdp, 4);
  const RunRecord rec = brue_plan(model, 0, b);
  CHECK(budget_split(2, 0.7).horizon == 1);
  CHECK(model.calls() == rec.oracle_calls);
  CHECK(rec.recommended >= 0);
  CHECK(rec.recommended < 2);
}

TEST_CASE("uct: one-episode tie-break and determinism") {
  const TabularMdp mdp = generate_random_mdp(env(61));
  BudgetConfig b;
  b.total_calls = 1;
  b.gamma = 0.7;
  ForwardModel model(mdp, 8);
  const RunRecord rec = uct_plan(model, 0, b);
  CHECK(rec.tau == 1);
  CHECK(rec.recommended == 0);  // unvisited-first tie-break

  BudgetConfig b2;
  b2.total_calls = 5000;
  b2.gamma = 0.7;
  b2.seed = 77;
  ForwardModel ma(mdp, 9), mb(mdp, 9);
  CHECK(uct_plan(ma, 0, b2).recommended == uct_plan(mb, 0, b2).recommended);
}

TEST_CASE("all budget baselines improve with budget within CI overlap") {
  // Mean regret must not increase from the low to the high budget beyond
  // the 95% confidence margin of the difference.
  for (const std::string algo : {"kl_olop", "brue", "uct", "gape"}) {
    const int reps = 50;
    std::vector<double> lo(reps), hi(reps);
    for (int i = 0; i < reps; ++i) {
      const TabularMdp mdp = generate_random_mdp(env(700 + i));
      lo[i] = run_regret(algo, mdp, 300, 900 + i);
      hi[i] = run_regret(algo, mdp, 30000, 900 + i);
    }
    auto mean_se = [&](const std::vector<double>& xs) {
      double m = 0.0;
      for (double x : xs) m += x;
      m /= xs.size();
      double var = 0.0;
      for (double x : xs) var += (x - m) * (x - m);
      var /= xs.size() > 1 ? xs.size() - 1 : 1;
      return std::pair{m, std::sqrt(var / xs.size())};
    };
    const auto [mean_lo, se_lo] = mean_se(lo);
    const auto [mean_hi, se_hi] = mean_se(hi);
    INFO(algo, ": ", mean_lo, " -> ", mean_hi);
    CHECK(mean_hi <= mean_lo + 1.96 * std::sqrt(se_lo * se_lo + se_hi * se_hi));
  }
  // The strong-trend planners must strictly improve.
  for (const std::string algo : {"brue", "gape"}) {
    double mean_lo = 0.0, mean_hi = 0.0;
    const int reps = 50;
    for (int i = 0; i < reps; ++i) {
      const TabularMdp mdp = generate_random_mdp(env(700 + i));
      mean_lo += run_regret(algo, mdp, 300, 900 + i);
      mean_hi += run_regret(algo, mdp, 30000, 900 + i);
    }
    CHECK(mean_hi < mean_lo);
  }
}

TEST_CASE("budget-mode gape beats kl-olop in the high-budget regime") {
  const int64_t budget = 30000;
  double gape_mean = 0.0, olop_mean = 0.0;
  const int reps = 100;
  for (int i = 0; i < reps; ++i) {
    const TabularMdp mdp = generate_random_mdp(env(1500 + i));
    gape_mean += run_regret("gape", mdp, budget, 2500 + i);
    olop_mean += run_regret("kl_olop", mdp, budget, 2500 + i);
  }
  gape_mean /= reps;
  olop_mean /= reps;
  INFO("gape ", gape_mean, " vs kl_olop ", olop_mean);
  CHECK(gape_mean <= olop_mean);
}

TEST_CASE("zero-gap MDP gives zero regret for every baseline") {
  GeneratorConfig g = env(81, 10, 3, 2, 0.0);  // all rewards zero
  const TabularMdp mdp = generate_random_mdp(g);
  for (const std::string algo : {"kl_olop", "brue", "uct", "gape"}) {
    CHECK(run_regret(algo, mdp, 2000, 5) == 0.0);
  }
}
