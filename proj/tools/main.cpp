// mcplan: Monte-Carlo planning runs and benchmark campaigns for tabular MDPs.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcplan/harness.hpp"

using namespace mcplan;

namespace {

EnvSpec resolve_env(const std::string& name) {
  if (name == "paper") return paper_env();
  if (name == "desk") return desk_env();
  throw CLI::ValidationError("--env", "unknown preset (use paper or desk)");
}

std::string default_out_dir() {
  const char* env = std::getenv("MCPLAN_OUT");
  return env && *env ? env : "out";
}

int cmd_generate(int32_t states, int32_t actions, int32_t branching, double sparsity,
                 uint64_t seed, const std::string& granularity, const std::string& out) {
  GeneratorConfig cfg;
  cfg.num_states = states;
  cfg.num_actions = actions;
  cfg.branching = branching;
  cfg.reward_sparsity = sparsity;
  cfg.seed = seed;
  cfg.granularity = granularity == "transition" ? SparsityGranularity::transition
                                                : SparsityGranularity::state_action;
  const TabularMdp mdp = generate_random_mdp(cfg);
  save_mdp(mdp, out);
  std::printf("wrote %s: S=%d K=%d B=%d sparsity=%g seed=%llu\n", out.c_str(), states, actions,
              branching, sparsity, static_cast<unsigned long long>(seed));
  return 0;
}

int cmd_plan(double eps, double gamma, double delta, const std::string& env_name,
             const std::string& mdp_path, uint64_t seed, const std::string& thresholds,
             int horizon, State root, int64_t max_episodes, bool diagnostics,
             const std::string& out) {
  TabularMdp mdp;
  EnvSpec env;
  if (!mdp_path.empty()) {
    mdp = load_mdp(mdp_path);
    env.states = mdp.num_states;
    env.actions = mdp.num_actions;
    env.branching = mdp.branching;
  } else {
    env = resolve_env(env_name);
    GeneratorConfig g;
    g.num_states = env.states;
    g.num_actions = env.actions;
    g.branching = env.branching;
    g.reward_sparsity = env.sparsity;
    g.granularity = env.granularity;
    g.seed = seed;
    mdp = generate_random_mdp(g);
  }

  const int H = horizon > 0 ? horizon : planning_horizon(eps, gamma);
  GapeConfig cfg;
  cfg.eps = eps;
  cfg.delta = delta;
  cfg.gamma = gamma;
  cfg.horizon = H;
  cfg.max_episodes = max_episodes;
  cfg.record_diagnostics = diagnostics;
  cfg.thresholds.kind =
      thresholds == "theoretical" ? ThresholdKind::theoretical : ThresholdKind::practical;
  cfg.thresholds.delta = delta;
  cfg.thresholds.horizon = H;
  cfg.thresholds.branching = mdp.branching;
  cfg.thresholds.num_actions = mdp.num_actions;

  const uint64_t episode_seed = derive_seed(seed, 1);
  ForwardModel model(mdp, episode_seed);
  GapePlanner planner(cfg, mdp.num_actions, mdp.branching, root);
  RunRecord rec = planner.plan(model);
  rec.mdp_seed = seed;
  rec.episode_seed = episode_seed;

  const ExactValues values = exact_value_iteration(mdp, H, gamma);
  rec.simple_regret = simple_regret(values, root, rec.recommended);

  std::printf("a_hat=%d tau=%lld n=%lld regret=%.6g stop=%s H=%d\n", rec.recommended,
              static_cast<long long>(rec.tau), static_cast<long long>(rec.oracle_calls),
              rec.simple_regret, rec.stop_reason.c_str(), H);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << nlohmann::json(rec).dump(2) << "\n";
  }
  return 0;
}

int cmd_campaign(const std::string& config_path, std::string out_dir, int threads) {
  Campaign campaign = load_campaign(config_path);
  if (threads > 0) campaign.threads = threads;
  if (out_dir.empty()) out_dir = default_out_dir();
  const CampaignResult result = run_campaign(campaign);
  write_campaign_outputs(result, out_dir);

  for (const GroupSummary& g : result.groups)
    std::printf("%s eps_or_budget=%g reps=%d max_regret=%.4g mean_regret=%.4g median_n=%.4g "
                "max_n=%.4g\n",
                g.algorithm.c_str(), g.eps_or_budget, g.replications, g.max_regret,
                g.mean_regret, g.median_n, g.max_n);
  if (!std::isnan(result.slope_log_mean))
    std::printf("scaling slope: mean-log fit %.4f, log-mean fit %.4f\n", result.slope_mean_log,
                result.slope_log_mean);
  for (const CoverageRow& row : result.coverage)
    std::printf("%s m=%d delta=%g trials=%d length=%d violation_rate=%.4g\n", row.kind.c_str(),
                row.support, row.delta, row.trials, row.length, row.violation_rate);
  std::printf("outputs in %s\n", out_dir.c_str());
  return 0;
}

int cmd_verify_concentration(double delta, int trials, int length, uint64_t seed,
                             const std::string& out) {
  Campaign campaign;
  campaign.mode = CampaignMode::concentration;
  campaign.delta_grid = {delta};
  campaign.trials = trials;
  campaign.stream_length = length;
  campaign.base_seed = seed;
  const CampaignResult result = run_concentration_suite(campaign);
  bool ok = true;
  for (const CoverageRow& row : result.coverage) {
    const bool pass = row.violation_rate <= row.delta;
    ok = ok && pass;
    std::printf("%-16s m=%d delta=%g violation_rate=%.4g  %s\n", row.kind.c_str(), row.support,
                row.delta, row.violation_rate, pass ? "ok" : "VIOLATED");
  }
  if (!out.empty()) write_coverage_csv(result, out);
  return ok ? 0 : 1;
}

int cmd_nss(int horizon, int branching, int actions, double eps) {
  std::printf("%.4g\n", sparse_sampling_budget(horizon, branching, actions, eps));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo planning benchmarks on tabular MDPs"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Generate a random MDP and write it as JSON");
  int32_t g_states = 200, g_actions = 5, g_branching = 2;
  double g_sparsity = 0.5;
  uint64_t g_seed = 1;
  std::string g_granularity = "state_action", g_out = "mdp.json";
  generate->add_option("--states,--S", g_states, "number of states");
  generate->add_option("--actions,--K", g_actions, "number of actions");
  generate->add_option("--B", g_branching, "successors per (state, action)");
  generate->add_option("--sparsity", g_sparsity, "fraction with nonzero reward");
  generate->add_option("--seed", g_seed, "generator seed");
  generate->add_option("--granularity", g_granularity, "state_action | transition");
  generate->add_option("--out", g_out, "output path");

  // plan
  auto* plan = app.add_subcommand("plan", "One fixed-confidence planning run");
  double p_eps = 1.0, p_gamma = 0.7, p_delta = 0.1;
  std::string p_env = "paper", p_mdp, p_thresholds = "practical", p_out;
  uint64_t p_seed = 1;
  int p_horizon = 0;
  State p_root = 0;
  int64_t p_max_episodes = 10'000'000;
  bool p_diag = false;
  plan->add_option("--eps", p_eps, "accuracy tolerance");
  plan->add_option("--gamma", p_gamma, "discount factor");
  plan->add_option("--delta", p_delta, "risk level");
  plan->add_option("--env", p_env, "environment preset: paper | desk");
  plan->add_option("--mdp", p_mdp, "planning MDP file (overrides --env)");
  plan->add_option("--seed", p_seed, "replication seed");
  plan->add_option("--thresholds", p_thresholds, "practical | theoretical");
  plan->add_option("--H", p_horizon, "explicit horizon (required when gamma = 1)");
  plan->add_option("--root", p_root, "planning root state");
  plan->add_option("--max-episodes", p_max_episodes, "episode safety cap");
  plan->add_flag("--diagnostics", p_diag, "record per-episode diagnostics");
  plan->add_option("--out", p_out, "write the run record JSON here");

  // campaign
  auto* campaign = app.add_subcommand("campaign", "Run a campaign from a config file");
  std::string c_config, c_out;
  int c_threads = 0;
  campaign->add_option("--config", c_config, "campaign JSON")->required();
  campaign->add_option("--out", c_out, "output directory (default $MCPLAN_OUT or ./out)");
  campaign->add_option("--threads", c_threads, "worker threads (0 = hardware)");

  // verify
  auto* verify = app.add_subcommand("verify", "Statistical self-checks");
  auto* concentration =
      verify->add_subcommand("concentration", "Coverage of the deviation inequalities");
  double v_delta = 0.1;
  int v_trials = 1000, v_length = 1000;
  uint64_t v_seed = 1;
  std::string v_out;
  concentration->add_option("--delta", v_delta, "risk level");
  concentration->add_option("--trials", v_trials, "independent streams per cell");
  concentration->add_option("--length", v_length, "stream length");
  concentration->add_option("--seed", v_seed, "base seed");
  concentration->add_option("--out", v_out, "write coverage.csv here");
  verify->require_subcommand(1);

  // nss
  auto* nss = app.add_subcommand("nss", "Sparse Sampling budget n_SS = H^5 (BK)^H / eps^2");
  int n_horizon = 6, n_branching = 2, n_actions = 5;
  double n_eps = 1.0;
  nss->add_option("--H", n_horizon, "horizon");
  nss->add_option("--B", n_branching, "branching factor");
  nss->add_option("--K", n_actions, "number of actions");
  nss->add_option("--eps", n_eps, "accuracy tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed())
      return cmd_generate(g_states, g_actions, g_branching, g_sparsity, g_seed, g_granularity,
                          g_out);
    if (plan->parsed())
      return cmd_plan(p_eps, p_gamma, p_delta, p_env, p_mdp, p_seed, p_thresholds, p_horizon,
                      p_root, p_max_episodes, p_diag, p_out);
    if (campaign->parsed()) return cmd_campaign(c_config, c_out, c_threads);
    if (verify->parsed()) {
      if (concentration->parsed())
        return cmd_verify_concentration(v_delta, v_trials, v_length, v_seed, v_out);
    }
    if (nss->parsed()) return cmd_nss(n_horizon, n_branching, n_actions, n_eps);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return 1;
  }
  return 2;
}
