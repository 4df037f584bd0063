#include "mcplan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace mcplan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = threads > 0 ? threads : int(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& t : pool) t.join();
}

GeneratorConfig to_generator(const EnvSpec& env, uint64_t seed) {
  GeneratorConfig g;
  g.num_states = env.states;
  g.num_actions = env.actions;
  g.branching = env.branching;
  g.reward_sparsity = env.sparsity;
  g.granularity = env.granularity;
  g.seed = seed;
  return g;
}

ThresholdKind parse_threshold_kind(const std::string& name) {
  if (name == "theoretical") return ThresholdKind::theoretical;
  if (name == "practical") return ThresholdKind::practical;
  throw std::invalid_argument("unknown thresholds kind: " + name);
}

int effective_horizon(const AlgoSpec& algo, double eps) {
  if (algo.horizon_override > 0) return algo.horizon_override;
  return planning_horizon(eps, algo.gamma);
}

double quantile_median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const size_t m = xs.size();
  if (m == 0) return kNaN;
  return m % 2 == 1 ? xs[m / 2] : 0.5 * (xs[m / 2 - 1] + xs[m / 2]);
}

GroupSummary summarize(const std::string& algorithm, double eps_or_budget, double eps_for_rate,
                       double n_ss, const std::vector<RunRow>& rows) {
  GroupSummary g;
  g.algorithm = algorithm;
  g.eps_or_budget = eps_or_budget;
  g.n_ss = n_ss;
  std::vector<double> ns;
  double regret_sq = 0.0;
  for (const RunRow& r : rows) {
    if (std::isnan(r.regret)) continue;  // failed replication, recorded but not aggregated
    ++g.replications;
    g.max_regret = std::max(g.max_regret, r.regret);
    g.mean_regret += r.regret;
    regret_sq += r.regret * r.regret;
    ns.push_back(double(r.n));
    g.max_n = std::max(g.max_n, double(r.n));
    g.mean_n += double(r.n);
    g.mean_log_n += std::log(std::max(1.0, double(r.n)));
    if (r.regret <= eps_for_rate) g.correctness_rate += 1.0;
  }
  if (g.replications > 0) {
    g.mean_regret /= g.replications;
    g.mean_n /= g.replications;
    g.mean_log_n /= g.replications;
    g.correctness_rate /= g.replications;
    g.median_n = quantile_median(ns);
    const double var =
        std::max(0.0, regret_sq / g.replications - g.mean_regret * g.mean_regret);
    const double half = 1.96 * std::sqrt(var / g.replications);
    g.regret_ci_lo = g.mean_regret - half;
    g.regret_ci_hi = g.mean_regret + half;
  }
  return g;
}

}  // namespace

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("least_squares_slope: need matching samples, >= 2 points");
  const size_t m = xs.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < m; ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

EnvSpec paper_env() {
  EnvSpec env;
  env.states = 200;
  env.actions = 5;
  env.branching = 2;
  env.sparsity = 0.5;
  env.granularity = SparsityGranularity::transition;
  return env;
}

EnvSpec desk_env() {
  EnvSpec env;
  env.states = 50;
  env.actions = 3;
  env.branching = 2;
  env.sparsity = 0.5;
  env.granularity = SparsityGranularity::transition;
  return env;
}

void Campaign::validate() const {
  if (replications < 1) throw std::invalid_argument("Campaign: replications must be >= 1");
  if (algos.empty()) throw std::invalid_argument("Campaign: need at least one algorithm");
  switch (mode) {
    case CampaignMode::fixed_confidence:
      if (eps_grid.empty()) throw std::invalid_argument("Campaign: eps_grid required");
      break;
    case CampaignMode::scaling:
      if (eps_grid.size() < 3)
        throw std::invalid_argument("Campaign: scaling needs at least 3 eps values");
      break;
    case CampaignMode::fixed_budget:
      if (budget_grid.empty()) throw std::invalid_argument("Campaign: budget_grid required");
      break;
    case CampaignMode::concentration:
      if (delta_grid.empty() || trials < 1 || stream_length < 1)
        throw std::invalid_argument("Campaign: bad concentration settings");
      break;
  }
}

GeneratorConfig env_generator(const EnvSpec& env, uint64_t seed) { return to_generator(env, seed); }

GapeConfig make_gape_config(const EnvSpec& env, const AlgoSpec& algo, double eps,
                            bool diagnostics) {
  const int H = effective_horizon(algo, eps);
  GapeConfig cfg;
  cfg.eps = eps;
  cfg.delta = algo.delta;
  cfg.gamma = algo.gamma;
  cfg.horizon = H;
  cfg.max_episodes = algo.max_episodes;
  cfg.record_diagnostics = diagnostics;
  cfg.thresholds.kind = parse_threshold_kind(algo.thresholds);
  cfg.thresholds.delta = algo.delta;
  cfg.thresholds.horizon = H;
  cfg.thresholds.branching = env.branching;
  cfg.thresholds.num_actions = env.actions;
  return cfg;
}

RunRecord run_single_gape(const EnvSpec& env, const AlgoSpec& algo, double eps, uint64_t mdp_seed,
                          State root_state, bool diagnostics) {
  const TabularMdp mdp = generate_random_mdp(to_generator(env, mdp_seed));
  const GapeConfig cfg = make_gape_config(env, algo, eps, diagnostics);
  const int H = cfg.horizon;

  const uint64_t episode_seed = derive_seed(mdp_seed, 1);
  ForwardModel model(mdp, episode_seed);
  GapePlanner planner(cfg, env.actions, env.branching, root_state);
  RunRecord rec = planner.plan(model);
  rec.mdp_seed = mdp_seed;
  rec.episode_seed = episode_seed;

  const ExactValues values = exact_value_iteration(mdp, H, algo.gamma);
  rec.simple_regret = simple_regret(values, root_state, rec.recommended);
  return rec;
}

namespace {

CampaignResult run_eps_grid(const Campaign& campaign) {
  campaign.validate();
  const AlgoSpec& algo = campaign.algos.front();
  if (algo.name != "gape")
    throw std::invalid_argument("fixed-confidence campaigns run the gape planner");

  CampaignResult result;
  result.config_echo = campaign_to_json(campaign);
  const int reps = campaign.replications;
  const int cells = int(campaign.eps_grid.size()) * reps;
  result.rows.resize(cells);

  parallel_for(cells, campaign.threads, [&](int cell) {
    const int e = cell / reps;
    const int rep = cell % reps;
    const double eps = campaign.eps_grid[e];
    const uint64_t seed = campaign.base_seed + uint64_t(rep);
    RunRow row;
    row.algorithm = algo.name;
    row.eps_or_budget = eps;
    row.seed = seed;
    try {
      const RunRecord rec = run_single_gape(campaign.env, algo, eps, seed, campaign.root_state);
      row.tau = rec.tau;
      row.n = rec.oracle_calls;
      row.regret = rec.simple_regret;
      row.stop_reason = rec.stop_reason;
    } catch (const std::exception& ex) {
      row.regret = kNaN;
      row.stop_reason = std::string("error: ") + ex.what();
    }
    result.rows[cell] = std::move(row);
  });

  for (size_t e = 0; e < campaign.eps_grid.size(); ++e) {
    const double eps = campaign.eps_grid[e];
    const std::vector<RunRow> group(result.rows.begin() + e * reps,
                                    result.rows.begin() + (e + 1) * reps);
    const int H = effective_horizon(algo, eps);
    const double n_ss =
        sparse_sampling_budget(H, campaign.env.branching, campaign.env.actions, eps);
    result.groups.push_back(summarize(algo.name, eps, eps, n_ss, group));
  }
  return result;
}

}  // namespace

CampaignResult run_fixed_confidence(const Campaign& campaign) { return run_eps_grid(campaign); }

CampaignResult run_scaling(const Campaign& campaign) {
  CampaignResult result = run_eps_grid(campaign);
  std::vector<double> xs, y_mean_log, y_log_mean;
  for (const GroupSummary& g : result.groups) {
    xs.push_back(std::log(1.0 / g.eps_or_budget));
    y_mean_log.push_back(g.mean_log_n);
    y_log_mean.push_back(std::log(g.mean_n));
  }
  result.slope_mean_log = least_squares_slope(xs, y_mean_log);
  result.slope_log_mean = least_squares_slope(xs, y_log_mean);
  return result;
}

CampaignResult run_fixed_budget(const Campaign& campaign) {
  campaign.validate();
  for (const AlgoSpec& algo : campaign.algos)
    if (algo.name != "gape" && algo.name != "kl_olop" && algo.name != "brue" &&
        algo.name != "uct")
      throw std::invalid_argument("unknown fixed-budget algorithm: " + algo.name);

  CampaignResult result;
  result.config_echo = campaign_to_json(campaign);
  const int reps = campaign.replications;
  const int per_algo = int(campaign.budget_grid.size()) * reps;
  const int cells = int(campaign.algos.size()) * per_algo;
  result.rows.resize(cells);

  parallel_for(cells, campaign.threads, [&](int cell) {
    const int a = cell / per_algo;
    const int b = (cell % per_algo) / reps;
    const int rep = cell % reps;
    const AlgoSpec& algo = campaign.algos[a];
    const int64_t budget = campaign.budget_grid[b];
    const uint64_t mdp_seed = campaign.base_seed + uint64_t(rep);

    RunRow row;
    row.algorithm = algo.name;
    row.eps_or_budget = double(budget);
    row.seed = mdp_seed;
    try {
      const TabularMdp mdp = generate_random_mdp(to_generator(campaign.env, mdp_seed));
      BudgetConfig bc;
      bc.total_calls = budget;
      bc.gamma = algo.gamma;
      bc.uct_exploration = algo.uct_exploration;
      bc.seed = derive_seed(mdp_seed, 100 + uint64_t(a) * campaign.budget_grid.size() + b);
      ForwardModel model(mdp, derive_seed(mdp_seed, 1 + uint64_t(a) * campaign.budget_grid.size() + b));

      RunRecord rec;
      if (algo.name == "gape")
        rec = gape_fixed_budget_plan(model, campaign.root_state, bc, algo.delta);
      else if (algo.name == "kl_olop")
        rec = kl_olop_plan(model, campaign.root_state, bc);
      else if (algo.name == "brue")
        rec = brue_plan(model, campaign.root_state, bc);
      else
        rec = uct_plan(model, campaign.root_state, bc);

      const int H = budget_split(budget, algo.gamma).horizon;
      const ExactValues values = exact_value_iteration(mdp, H, algo.gamma);
      row.tau = rec.tau;
      row.n = rec.oracle_calls;
      row.regret = simple_regret(values, campaign.root_state, rec.recommended);
      row.stop_reason = rec.stop_reason;
    } catch (const std::exception& ex) {
      row.regret = kNaN;
      row.stop_reason = std::string("error: ") + ex.what();
    }
    result.rows[cell] = std::move(row);
  });

  for (size_t a = 0; a < campaign.algos.size(); ++a)
    for (size_t b = 0; b < campaign.budget_grid.size(); ++b) {
      const auto first = result.rows.begin() + a * per_algo + b * reps;
      const std::vector<RunRow> group(first, first + reps);
      // In budget mode "correct" means the exact best action was returned.
      result.groups.push_back(summarize(campaign.algos[a].name,
                                        double(campaign.budget_grid[b]), 0.0, 0.0, group));
    }
  return result;
}

CampaignResult run_concentration_suite(const Campaign& campaign) {
  campaign.validate();
  CampaignResult result;
  result.config_echo = campaign_to_json(campaign);

  struct Cell {
    CoverageKind kind;
    int support;
    double delta;
  };
  std::vector<Cell> cells;
  for (double delta : campaign.delta_grid) {
    for (int m : campaign.support_grid) cells.push_back({CoverageKind::categorical, m, delta});
    cells.push_back({CoverageKind::bounded_mean, 0, delta});
    cells.push_back({CoverageKind::count_martingale, 0, delta});
  }

  result.coverage.resize(cells.size());
  parallel_for(int(cells.size()), campaign.threads, [&](int i) {
    CoverageConfig cfg;
    cfg.kind = cells[i].kind;
    cfg.support = std::max(2, cells[i].support);
    cfg.delta = cells[i].delta;
    cfg.trials = campaign.trials;
    cfg.stream_length = campaign.stream_length;
    cfg.seed = derive_seed(campaign.base_seed, uint64_t(i));
    CoverageRow row;
    row.kind = cells[i].kind == CoverageKind::bounded_mean      ? "bounded_mean"
               : cells[i].kind == CoverageKind::categorical     ? "categorical"
                                                                : "count_martingale";
    row.support = cells[i].support;
    row.delta = cells[i].delta;
    row.trials = campaign.trials;
    row.length = campaign.stream_length;
    row.violation_rate = coverage_test(cfg);
    result.coverage[i] = std::move(row);
  });
  return result;
}

CampaignResult run_campaign(const Campaign& campaign) {
  switch (campaign.mode) {
    case CampaignMode::fixed_confidence:
      return run_fixed_confidence(campaign);
    case CampaignMode::scaling:
      return run_scaling(campaign);
    case CampaignMode::fixed_budget:
      return run_fixed_budget(campaign);
    case CampaignMode::concentration:
      return run_concentration_suite(campaign);
  }
  throw std::logic_error("run_campaign: unknown mode");
}

namespace {

const char* mode_name(CampaignMode mode) {
  switch (mode) {
    case CampaignMode::fixed_confidence: return "fixed_confidence";
    case CampaignMode::scaling: return "scaling";
    case CampaignMode::fixed_budget: return "fixed_budget";
    case CampaignMode::concentration: return "concentration";
  }
  return "?";
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

nlohmann::json campaign_to_json(const Campaign& c) {
  nlohmann::json algos = nlohmann::json::array();
  for (const AlgoSpec& a : c.algos)
    algos.push_back({{"name", a.name},
                     {"params",
                      {{"gamma", a.gamma},
                       {"delta", a.delta},
                       {"thresholds", a.thresholds},
                       {"uct_exploration", a.uct_exploration},
                       {"max_episodes", a.max_episodes},
                       {"horizon_override", a.horizon_override}}}});
  return {{"mode", mode_name(c.mode)},
          {"env",
           {{"states", c.env.states},
            {"actions", c.env.actions},
            {"branching", c.env.branching},
            {"sparsity", c.env.sparsity},
            {"sparsity_granularity",
             c.env.granularity == SparsityGranularity::transition ? "transition"
                                                                  : "state_action"}}},
          {"algo", algos},
          {"eps_grid", c.eps_grid},
          {"budget_grid", c.budget_grid},
          {"replications", c.replications},
          {"seed", c.base_seed},
          {"root_state", c.root_state},
          {"threads", c.threads},
          {"delta_grid", c.delta_grid},
          {"support_grid", c.support_grid},
          {"trials", c.trials},
          {"stream_length", c.stream_length}};
}

Campaign campaign_from_json(const nlohmann::json& j) {
  Campaign c;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "fixed_confidence")
    c.mode = CampaignMode::fixed_confidence;
  else if (mode == "scaling")
    c.mode = CampaignMode::scaling;
  else if (mode == "fixed_budget")
    c.mode = CampaignMode::fixed_budget;
  else if (mode == "concentration")
    c.mode = CampaignMode::concentration;
  else
    throw std::invalid_argument("unknown campaign mode: " + mode);

  if (j.contains("env")) {
    const auto& env = j.at("env");
    if (env.is_string()) {
      const std::string name = env.get<std::string>();
      if (name == "paper")
        c.env = paper_env();
      else if (name == "desk")
        c.env = desk_env();
      else
        throw std::invalid_argument("unknown env preset: " + name);
    } else {
      c.env.states = env.value("states", c.env.states);
      c.env.actions = env.value("actions", c.env.actions);
      c.env.branching = env.value("branching", c.env.branching);
      c.env.sparsity = env.value("sparsity", c.env.sparsity);
      const std::string g = env.value("sparsity_granularity", "state_action");
      c.env.granularity = g == "transition" ? SparsityGranularity::transition
                                            : SparsityGranularity::state_action;
    }
  }
  if (j.contains("algo")) {
    c.algos.clear();
    for (const auto& item : j.at("algo")) {
      AlgoSpec a;
      a.name = item.at("name").get<std::string>();
      if (item.contains("params")) {
        const auto& p = item.at("params");
        a.gamma = p.value("gamma", a.gamma);
        a.delta = p.value("delta", a.delta);
        a.thresholds = p.value("thresholds", a.thresholds);
        a.uct_exploration = p.value("uct_exploration", a.uct_exploration);
        a.max_episodes = p.value("max_episodes", a.max_episodes);
        a.horizon_override = p.value("horizon_override", a.horizon_override);
      }
      c.algos.push_back(std::move(a));
    }
  }
  c.eps_grid = j.value("eps_grid", c.eps_grid);
  c.budget_grid = j.value("budget_grid", c.budget_grid);
  c.replications = j.value("replications", c.replications);
  c.base_seed = j.value("seed", c.base_seed);
  c.root_state = j.value("root_state", c.root_state);
  c.threads = j.value("threads", c.threads);
  c.delta_grid = j.value("delta_grid", c.delta_grid);
  c.support_grid = j.value("support_grid", c.support_grid);
  c.trials = j.value("trials", c.trials);
  c.stream_length = j.value("stream_length", c.stream_length);
  c.validate();
  return c;
}

Campaign load_campaign(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_campaign: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return campaign_from_json(j);
}

void write_results_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
  out << "# config: " << result.config_echo.dump() << "\n";
  out << "algorithm,eps_or_budget,seed,tau,n,regret,stop_reason\n";
  for (const RunRow& r : result.rows)
    out << r.algorithm << ',' << fmt(r.eps_or_budget) << ',' << r.seed << ',' << r.tau << ','
        << r.n << ',' << fmt(r.regret) << ',' << r.stop_reason << "\n";
}

void write_summary_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
  out << "# config: " << result.config_echo.dump() << "\n";
  out << "algorithm,eps_or_budget,replications,max_regret,mean_regret,regret_ci_lo,"
         "regret_ci_hi,median_n,max_n,mean_n,mean_log_n,correctness_rate,n_ss,"
         "slope_mean_log,slope_log_mean\n";
  for (const GroupSummary& g : result.groups)
    out << g.algorithm << ',' << fmt(g.eps_or_budget) << ',' << g.replications << ','
        << fmt(g.max_regret) << ',' << fmt(g.mean_regret) << ',' << fmt(g.regret_ci_lo) << ','
        << fmt(g.regret_ci_hi) << ',' << fmt(g.median_n) << ',' << fmt(g.max_n) << ','
        << fmt(g.mean_n) << ',' << fmt(g.mean_log_n) << ',' << fmt(g.correctness_rate) << ','
        << fmt(g.n_ss) << ',' << fmt(result.slope_mean_log) << ',' << fmt(result.slope_log_mean)
        << "\n";
}

void write_coverage_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_coverage_csv: cannot open " + path);
  out << "# config: " << result.config_echo.dump() << "\n";
  out << "kind,support,delta,trials,length,violation_rate\n";
  for (const CoverageRow& r : result.coverage)
    out << r.kind << ',' << r.support << ',' << fmt(r.delta) << ',' << r.trials << ','
        << r.length << ',' << fmt(r.violation_rate) << "\n";
}

void write_campaign_outputs(const CampaignResult& result, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  {
    std::ofstream out(dir / "campaign_config.json");
    out << result.config_echo.dump(2) << "\n";
  }
  if (!result.rows.empty() || result.coverage.empty()) {
    write_results_csv(result, (dir / "results.csv").string());
    write_summary_csv(result, (dir / "summary.csv").string());
  }
  if (!result.coverage.empty()) write_coverage_csv(result, (dir / "coverage.csv").string());
}

}  // namespace mcplan
