"""Smoke tests for the python bindings."""

import math

import pytest

import mcplan


def test_version():
    assert mcplan.__version__


def test_generate_and_plan():
    cfg = mcplan.GeneratorConfig(states=20, actions=3, branching=2, sparsity=0.5, seed=7)
    mdp = mcplan.generate_random_mdp(cfg)
    mdp.validate()
    assert mdp.num_states == 20
    assert len(mdp.reward_means) == 60

    rec = mcplan.plan(mdp, root_state=0, eps=0.5, delta=0.1, gamma=0.7, seed=3)
    assert rec["stop_reason"] in ("converged", "budget")
    assert rec["oracle_calls"] == rec["tau"] * mcplan.planning_horizon(0.5, 0.7)
    assert 0.0 <= rec["simple_regret"] <= 0.5 or rec["stop_reason"] == "budget"

    rec2 = mcplan.plan(mdp, root_state=0, eps=0.5, delta=0.1, gamma=0.7, seed=3)
    assert rec2 == rec  # deterministic given the seed


def test_forward_model_counts_calls():
    cfg = mcplan.GeneratorConfig(states=5, actions=2, branching=1, sparsity=0.0, seed=1)
    mdp = mcplan.generate_random_mdp(cfg)
    model = mcplan.ForwardModel(mdp, 9)
    next_state, reward = model.sample_step(0, 1)
    assert 0 <= next_state < 5
    assert reward == 0.0
    assert model.calls == 1


def test_exact_values_and_regret():
    cfg = mcplan.GeneratorConfig(states=10, actions=3, branching=2, sparsity=0.8, seed=2)
    mdp = mcplan.generate_random_mdp(cfg)
    values = mcplan.exact_value_iteration(mdp, 4, 0.7)
    best = values.best_action(1, 0)
    assert mcplan.simple_regret(values, 0, best) == 0.0
    assert values.gap(1, 0, best) == 0.0


def test_kl_helpers():
    assert mcplan.kl_bernoulli(0.5, 0.5) == 0.0
    assert mcplan.kl_ucb_upper(0.0, math.log(2.0)) == pytest.approx(0.5, abs=1e-9)
    assert mcplan.kl_categorical([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0))
    value, q = mcplan.max_over_kl_ball([1.0, 0.0], math.log(2.0), [0.0, 1.0])
    assert value == pytest.approx(0.5, abs=1e-9)
    assert q[1] == pytest.approx(0.5, abs=1e-9)


def test_horizon_and_nss():
    assert mcplan.planning_horizon(1.0, 0.7) == 6
    assert mcplan.sparse_sampling_budget(6, 2, 5, 1.0) == pytest.approx(7.776e9)


def test_thresholds():
    thr = mcplan.ThresholdSpec("theoretical", 0.1, 6, 2, 5)
    assert thr.reward(0.0) == pytest.approx(math.log(3e7) + 1.0)
    assert thr.master(10.0) >= thr.count()


def test_budget_baselines():
    cfg = mcplan.GeneratorConfig(states=15, actions=3, branching=2, sparsity=0.5, seed=11)
    mdp = mcplan.generate_random_mdp(cfg)
    tau, horizon = mcplan.budget_split(1000, 0.7)
    assert (tau, horizon) == (143, 7)
    for plan in (mcplan.kl_olop_plan, mcplan.brue_plan, mcplan.uct_plan,
                 mcplan.gape_fixed_budget_plan):
        rec = plan(mdp, 0, 1000, gamma=0.7, seed=5)
        assert 0 <= rec["recommended_action"] < 3


def test_coverage():
    rate = mcplan.coverage_test("bounded_mean", trials=100, stream_length=200, delta=0.1, seed=3)
    assert 0.0 <= rate <= 0.1


def test_campaign(tmp_path):
    config = {
        "mode": "fixed_confidence",
        "env": {"states": 12, "actions": 2, "branching": 2, "sparsity": 0.5},
        "eps_grid": [1.0],
        "replications": 3,
        "seed": 2,
        "threads": 2,
    }
    import json

    out = mcplan.run_campaign(json.dumps(config), str(tmp_path / "out"))
    assert out["groups"][0]["replications"] == 3
    assert (tmp_path / "out" / "results.csv").exists()
    assert (tmp_path / "out" / "summary.csv").exists()
