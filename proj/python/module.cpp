#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcplan/harness.hpp"

namespace py = pybind11;
using namespace mcplan;

namespace {

ThresholdKind threshold_kind(const std::string& name) {
  if (name == "theoretical") return ThresholdKind::theoretical;
  if (name == "practical") return ThresholdKind::practical;
  if (name == "fixed_budget") return ThresholdKind::fixed_budget;
  throw std::invalid_argument("unknown threshold kind: " + name);
}

CoverageKind coverage_kind(const std::string& name) {
  if (name == "bounded_mean") return CoverageKind::bounded_mean;
  if (name == "categorical") return CoverageKind::categorical;
  if (name == "count_martingale") return CoverageKind::count_martingale;
  throw std::invalid_argument("unknown coverage kind: " + name);
}

py::dict record_to_dict(const RunRecord& rec) {
  py::dict d;
  d["algorithm"] = rec.algorithm;
  d["recommended_action"] = rec.recommended;
  d["tau"] = rec.tau;
  d["oracle_calls"] = rec.oracle_calls;
  d["stop_reason"] = rec.stop_reason;
  d["simple_regret"] = rec.simple_regret;
  d["mdp_seed"] = rec.mdp_seed;
  d["episode_seed"] = rec.episode_seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mcplan, m) {
  m.doc() = "Monte-Carlo planning in tabular MDPs: MDP-GapE, baselines, benchmarks";

  py::class_<GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init([](int states, int actions, int branching, double sparsity, uint64_t seed,
                       const std::string& granularity) {
             GeneratorConfig cfg;
             cfg.num_states = states;
             cfg.num_actions = actions;
             cfg.branching = branching;
             cfg.reward_sparsity = sparsity;
             cfg.seed = seed;
             cfg.granularity = granularity == "transition" ? SparsityGranularity::transition
                                                           : SparsityGranularity::state_action;
             return cfg;
           }),
           py::arg("states"), py::arg("actions"), py::arg("branching"), py::arg("sparsity"),
           py::arg("seed"), py::arg("granularity") = "state_action")
      .def_readonly("num_states", &GeneratorConfig::num_states)
      .def_readonly("num_actions", &GeneratorConfig::num_actions)
      .def_readonly("branching", &GeneratorConfig::branching)
      .def_readonly("reward_sparsity", &GeneratorConfig::reward_sparsity)
      .def_readonly("seed", &GeneratorConfig::seed);

  py::class_<TabularMdp>(m, "TabularMdp")
      .def_readonly("num_states", &TabularMdp::num_states)
      .def_readonly("num_actions", &TabularMdp::num_actions)
      .def_readonly("branching", &TabularMdp::branching)
      .def_readonly("successors", &TabularMdp::successors)
      .def_readonly("trans_probs", &TabularMdp::trans_probs)
      .def_readonly("reward_means", &TabularMdp::reward_means)
      .def("validate", &TabularMdp::validate)
      .def("save", &save_mdp);

  m.def("load_mdp", &load_mdp, py::arg("path"));
  m.def("generate_random_mdp", &generate_random_mdp, py::arg("config"));

  py::class_<ForwardModel>(m, "ForwardModel")
      .def(py::init<const TabularMdp&, uint64_t>(), py::arg("mdp"), py::arg("seed"),
           py::keep_alive<1, 2>())
      .def("sample_step", &ForwardModel::sample_step, py::arg("state"), py::arg("action"))
      .def_property_readonly("calls", &ForwardModel::calls);

  py::class_<ExactValues>(m, "ExactValues")
      .def_readonly("horizon", &ExactValues::horizon)
      .def_readonly("discount", &ExactValues::discount)
      .def("q", &ExactValues::q_value, py::arg("h"), py::arg("state"), py::arg("action"))
      .def("v", &ExactValues::state_value, py::arg("h"), py::arg("state"))
      .def("gap", &ExactValues::gap, py::arg("h"), py::arg("state"), py::arg("action"))
      .def("best_action", &ExactValues::best_action, py::arg("h"), py::arg("state"))
      .def("min_root_gap", &ExactValues::min_root_gap, py::arg("root_state"));

  m.def("exact_value_iteration", &exact_value_iteration, py::arg("mdp"), py::arg("horizon"),
        py::arg("discount"));
  m.def("simple_regret", &simple_regret, py::arg("values"), py::arg("root_state"),
        py::arg("action"));
  m.def("planning_horizon", &planning_horizon, py::arg("eps"), py::arg("gamma"));

  m.def("kl_bernoulli", &kl_bernoulli, py::arg("u"), py::arg("v"));
  m.def("kl_ucb_upper", &kl_ucb_upper, py::arg("p_hat"), py::arg("level"));
  m.def("kl_ucb_lower", &kl_ucb_lower, py::arg("p_hat"), py::arg("level"));
  m.def(
      "kl_categorical",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        return kl_categorical(p, q);
      },
      py::arg("p"), py::arg("q"));
  m.def(
      "max_over_kl_ball",
      [](const std::vector<double>& p_hat, double radius, const std::vector<double>& values) {
        const KlBallSolution sol = max_over_kl_ball({p_hat, radius, values});
        return std::pair{sol.value, sol.q};
      },
      py::arg("p_hat"), py::arg("radius"), py::arg("values"));
  m.def(
      "min_over_kl_ball",
      [](const std::vector<double>& p_hat, double radius, const std::vector<double>& values) {
        const KlBallSolution sol = min_over_kl_ball({p_hat, radius, values});
        return std::pair{sol.value, sol.q};
      },
      py::arg("p_hat"), py::arg("radius"), py::arg("values"));

  py::class_<ThresholdSpec>(m, "ThresholdSpec")
      .def(py::init([](const std::string& kind, double delta, int horizon, int branching,
                       int num_actions, double budget_episodes) {
             ThresholdSpec t;
             t.kind = threshold_kind(kind);
             t.delta = delta;
             t.horizon = horizon;
             t.branching = branching;
             t.num_actions = num_actions;
             t.budget_episodes = budget_episodes;
             t.validate();
             return t;
           }),
           py::arg("kind"), py::arg("delta"), py::arg("horizon"), py::arg("branching"),
           py::arg("num_actions"), py::arg("budget_episodes") = 0.0)
      .def("reward", &ThresholdSpec::reward, py::arg("n"))
      .def("transition", &ThresholdSpec::transition, py::arg("n"))
      .def("count", &ThresholdSpec::count)
      .def("master", &ThresholdSpec::master, py::arg("n"));

  m.def(
      "coverage_test",
      [](const std::string& kind, int trials, int stream_length, double delta, uint64_t seed,
         int support, double mean, double beta_scale) {
        CoverageConfig cfg;
        cfg.kind = coverage_kind(kind);
        cfg.trials = trials;
        cfg.stream_length = stream_length;
        cfg.delta = delta;
        cfg.seed = seed;
        cfg.support = support;
        cfg.mean = mean;
        cfg.beta_scale = beta_scale;
        return coverage_test(cfg);
      },
      py::arg("kind"), py::arg("trials"), py::arg("stream_length"), py::arg("delta"),
      py::arg("seed") = 0, py::arg("support") = 3, py::arg("mean") = 0.3,
      py::arg("beta_scale") = 1.0);

  m.def(
      "plan",
      [](const TabularMdp& mdp, State root_state, double eps, double delta, double gamma,
         int horizon, const std::string& thresholds, uint64_t seed, int64_t max_episodes) {
        const int H = horizon > 0 ? horizon : planning_horizon(eps, gamma);
        GapeConfig cfg;
        cfg.eps = eps;
        cfg.delta = delta;
        cfg.gamma = gamma;
        cfg.horizon = H;
        cfg.max_episodes = max_episodes;
        cfg.thresholds.kind = threshold_kind(thresholds);
        cfg.thresholds.delta = delta;
        cfg.thresholds.horizon = H;
        cfg.thresholds.branching = mdp.branching;
        cfg.thresholds.num_actions = mdp.num_actions;
        ForwardModel model(mdp, seed);
        GapePlanner planner(cfg, mdp.num_actions, mdp.branching, root_state);
        RunRecord rec = planner.plan(model);
        rec.episode_seed = seed;
        const ExactValues values = exact_value_iteration(mdp, H, gamma);
        rec.simple_regret = simple_regret(values, root_state, rec.recommended);
        return record_to_dict(rec);
      },
      py::arg("mdp"), py::arg("root_state"), py::arg("eps"), py::arg("delta") = 0.1,
      py::arg("gamma") = 0.7, py::arg("horizon") = 0, py::arg("thresholds") = "practical",
      py::arg("seed") = 1, py::arg("max_episodes") = int64_t{10'000'000});

  m.def("budget_split", [](int64_t total_calls, double gamma) {
    const BudgetSplit split = budget_split(total_calls, gamma);
    return std::pair{split.episodes, split.horizon};
  });
  m.def("sparse_sampling_budget", &sparse_sampling_budget, py::arg("horizon"),
        py::arg("branching"), py::arg("num_actions"), py::arg("eps"));
  m.def(
      "sparse_sampling_plan",
      [](const TabularMdp& mdp, State root_state, int horizon, int samples_per_node, double gamma,
         uint64_t seed) {
        ForwardModel model(mdp, seed);
        const SparseSamplingResult r =
            sparse_sampling_plan(model, root_state, horizon, samples_per_node, gamma);
        py::dict d;
        d["best"] = r.best;
        d["root_q"] = r.root_q;
        d["calls"] = r.calls;
        return d;
      },
      py::arg("mdp"), py::arg("root_state"), py::arg("horizon"), py::arg("samples_per_node"),
      py::arg("gamma"), py::arg("seed") = 1);

  const auto budget_planner = [](const std::string& algo) {
    return [algo](const TabularMdp& mdp, State root_state, int64_t total_calls, double gamma,
                  uint64_t seed, double uct_exploration, double delta) {
      BudgetConfig b;
      b.total_calls = total_calls;
      b.gamma = gamma;
      b.seed = derive_seed(seed, 2);
      b.uct_exploration = uct_exploration;
      ForwardModel model(mdp, derive_seed(seed, 1));
      RunRecord rec;
      if (algo == "kl_olop")
        rec = kl_olop_plan(model, root_state, b);
      else if (algo == "brue")
        rec = brue_plan(model, root_state, b);
      else if (algo == "uct")
        rec = uct_plan(model, root_state, b);
      else
        rec = gape_fixed_budget_plan(model, root_state, b, delta);
      return record_to_dict(rec);
    };
  };
  for (const char* algo : {"kl_olop", "brue", "uct"})
    m.def((std::string(algo) + "_plan").c_str(), budget_planner(algo), py::arg("mdp"),
          py::arg("root_state"), py::arg("total_calls"), py::arg("gamma") = 0.7,
          py::arg("seed") = 1, py::arg("uct_exploration") = 1.0, py::arg("delta") = 0.1);
  m.def("gape_fixed_budget_plan", budget_planner("gape"), py::arg("mdp"), py::arg("root_state"),
        py::arg("total_calls"), py::arg("gamma") = 0.7, py::arg("seed") = 1,
        py::arg("uct_exploration") = 1.0, py::arg("delta") = 0.1);

  m.def(
      "run_campaign",
      [](const std::string& config_json, const std::string& out_dir) {
        const Campaign campaign = campaign_from_json(nlohmann::json::parse(config_json));
        const CampaignResult result = run_campaign(campaign);
        if (!out_dir.empty()) write_campaign_outputs(result, out_dir);
        py::dict d;
        py::list groups;
        for (const GroupSummary& g : result.groups) {
          py::dict gg;
          gg["algorithm"] = g.algorithm;
          gg["eps_or_budget"] = g.eps_or_budget;
          gg["replications"] = g.replications;
          gg["max_regret"] = g.max_regret;
          gg["mean_regret"] = g.mean_regret;
          gg["median_n"] = g.median_n;
          gg["max_n"] = g.max_n;
          gg["correctness_rate"] = g.correctness_rate;
          gg["n_ss"] = g.n_ss;
          groups.append(gg);
        }
        d["groups"] = groups;
        d["slope_mean_log"] = result.slope_mean_log;
        d["slope_log_mean"] = result.slope_log_mean;
        py::list coverage;
        for (const CoverageRow& row : result.coverage) {
          py::dict cc;
          cc["kind"] = row.kind;
          cc["support"] = row.support;
          cc["delta"] = row.delta;
          cc["violation_rate"] = row.violation_rate;
          coverage.append(cc);
        }
        d["coverage"] = coverage;
        return d;
      },
      py::arg("config_json"), py::arg("out_dir") = "");

  m.attr("__version__") = "0.1.0";
}
