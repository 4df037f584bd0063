#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcplan/baselines.hpp"
#include "mcplan/confidence.hpp"
#include "mcplan/gape.hpp"
#include "mcplan/mdp.hpp"
#include "mcplan/run_record.hpp"

namespace mcplan {

enum class CampaignMode { fixed_confidence, scaling, fixed_budget, concentration };

struct EnvSpec {
  int32_t states = 200;
  int32_t actions = 5;
  int32_t branching = 2;
  double sparsity = 0.5;
  SparsityGranularity granularity = SparsityGranularity::state_action;
};

struct AlgoSpec {
  std::string name = "gape";  // gape | kl_olop | brue | uct
  double gamma = 0.7;
  double delta = 0.1;
  std::string thresholds = "practical";  // theoretical | practical
  double uct_exploration = 1.0;
  int64_t max_episodes = 10'000'000;
  int horizon_override = 0;  // > 0 forces H (needed when gamma = 1)
};

/// One experiment: environment family, algorithms, grid, replications.
/// Replication seeds derive deterministically from base_seed + index; the
/// MDP and episode streams are decoupled so each is independently
/// reproducible.
struct Campaign {
  CampaignMode mode = CampaignMode::fixed_confidence;
  EnvSpec env;
  std::vector<AlgoSpec> algos = {AlgoSpec{}};
  std::vector<double> eps_grid;       // fixed_confidence / scaling
  std::vector<int64_t> budget_grid;   // fixed_budget
  int replications = 50;
  uint64_t base_seed = 1;
  State root_state = 0;
  int threads = 0;  // 0 = hardware concurrency
  // concentration mode:
  std::vector<double> delta_grid = {0.05, 0.1};
  std::vector<int> support_grid = {2, 3, 5};  // categorical m values
  int trials = 1000;
  int stream_length = 1000;

  void validate() const;
};

Campaign load_campaign(const std::string& path);
Campaign campaign_from_json(const nlohmann::json& j);
nlohmann::json campaign_to_json(const Campaign& c);

/// One results.csv row.
struct RunRow {
  std::string algorithm;
  double eps_or_budget = 0.0;
  uint64_t seed = 0;
  int64_t tau = 0;
  int64_t n = 0;
  double regret = 0.0;
  std::string stop_reason;
};

/// One summary.csv row: aggregates of a (algorithm, eps_or_budget) group.
struct GroupSummary {
  std::string algorithm;
  double eps_or_budget = 0.0;
  int replications = 0;
  double max_regret = 0.0;
  double mean_regret = 0.0;
  double regret_ci_lo = 0.0;  // 95% normal approximation
  double regret_ci_hi = 0.0;
  double median_n = 0.0;
  double max_n = 0.0;
  double mean_n = 0.0;
  double mean_log_n = 0.0;
  double correctness_rate = 0.0;  // fraction with regret <= eps
  double n_ss = 0.0;              // Sparse Sampling reference budget
};

struct CoverageRow {
  std::string kind;
  int support = 0;
  double delta = 0.0;
  int trials = 0;
  int length = 0;
  double violation_rate = 0.0;
};

struct CampaignResult {
  std::vector<RunRow> rows;
  std::vector<GroupSummary> groups;
  std::vector<CoverageRow> coverage;
  // Scaling fit: least squares of y versus log(1/eps). slope_mean_log uses
  // y = mean log n; slope_log_mean uses y = log mean n (the slope of the
  // average-n curve on a log axis).
  double slope_mean_log = std::numeric_limits<double>::quiet_NaN();
  double slope_log_mean = std::numeric_limits<double>::quiet_NaN();
  nlohmann::json config_echo;
};

CampaignResult run_fixed_confidence(const Campaign& campaign);
CampaignResult run_scaling(const Campaign& campaign);
CampaignResult run_fixed_budget(const Campaign& campaign);
CampaignResult run_concentration_suite(const Campaign& campaign);
CampaignResult run_campaign(const Campaign& campaign);  // dispatch on mode

/// results.csv / summary.csv / coverage.csv writers. Every file starts with
/// a '# config: {...}' echo line; numeric cells are emitted with %.17g so
/// reruns are byte-identical.
void write_results_csv(const CampaignResult& result, const std::string& path);
void write_summary_csv(const CampaignResult& result, const std::string& path);
void write_coverage_csv(const CampaignResult& result, const std::string& path);
void write_campaign_outputs(const CampaignResult& result, const std::string& out_dir);

/// The environment of the experiments: S=200, K=5, B=2, sparsity 0.5 over
/// transitions. Desk preset: S=50, K=3, B=2.
EnvSpec paper_env();
EnvSpec desk_env();

/// The planner configuration a fixed-confidence replication runs with;
/// shared by the harness, the CLI and the replay checks.
GapeConfig make_gape_config(const EnvSpec& env, const AlgoSpec& algo, double eps,
                            bool diagnostics = false);

/// Runs one fixed-confidence MDP-GapE replication: generates the MDP,
/// derives H from eps (unless overridden), plans, and scores the regret.
RunRecord run_single_gape(const EnvSpec& env, const AlgoSpec& algo, double eps, uint64_t mdp_seed,
                          State root_state, bool diagnostics = false);

GeneratorConfig env_generator(const EnvSpec& env, uint64_t seed);

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace mcplan
