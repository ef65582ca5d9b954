from dataclasses import replace

import numpy as np
import pytest

from famus.config import ConfigError, LinkParams, MobilityParams, SimConfig
from famus.contract import TypeGrid, best_response, optimal_contract, verify_ic_ir
from famus.controller import ControllerParams, expected_cluster_cost
from famus.engine import Trace, World, release_schedule, run, simulate, step, sweep
from famus.fairness import queue_step

SMALL = SimConfig(num_clients=60, horizon=250, warmup=50, seed=4)


def test_release_schedule_examples():
    assert [t for t in range(35) if release_schedule(t, 1.0, 0.1)] == [0, 10, 20, 30]
    assert all(release_schedule(t, 0.1, 0.1) for t in range(5))
    for T in (1, 9, 10, 11, 57):
        count = sum(release_schedule(t, 1.0, 0.1) for t in range(T))
        assert count == (T - 1) * 1 // 10 + 1
    with pytest.raises(ValueError):
        release_schedule(0, 1.0, 0.3)


def test_invalid_config_raises_before_simulation():
    with pytest.raises(ConfigError) as err:
        run(replace(SMALL, num_tasks=12))
    assert any("K <= N" in p for p in err.value.problems)


def test_warmup_only_run_is_empty_but_builds_grid():
    res = simulate(replace(SMALL, horizon=50))
    assert len(res.trace) == 0
    assert len(res.summary.grid) == SMALL.num_types


def test_determinism():
    a = simulate(replace(SMALL, policy="fixed")).trace
    b = simulate(replace(SMALL, policy="fixed")).trace
    for name in ("queue", "cluster_cost", "participants", "rewards", "delegated"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_idle_between_releases_without_holding():
    res = simulate(replace(SMALL, hold_tasks=False))
    tr = res.trace
    off = ~tr.release
    assert np.all(tr.delegated[off] == 0)
    # idle servers accrue eps * g
    q_next = queue_step(tr.queue[off][:-1], tr.reputation[off][:-1], 0, SMALL.epsilon)
    idx = np.flatnonzero(off)[:-1]
    consecutive = np.flatnonzero(np.diff(tr.slots)[idx] == 1)
    np.testing.assert_allclose(tr.queue[idx[consecutive] + 1], q_next[consecutive])


def test_held_tasks_persist_over_period():
    tr = simulate(SMALL).trace
    start = np.flatnonzero(tr.release)[0]
    block = tr.delegated[start:start + 10]
    assert np.all(block == block[0])
    assert block[0].sum() == SMALL.num_tasks


def test_queue_replay_matches_eq():
    tr = simulate(SMALL).trace
    replay = queue_step(tr.queue[:-1], tr.reputation[:-1], tr.delegated[:-1], SMALL.epsilon)
    np.testing.assert_allclose(tr.queue[1:], replay, rtol=0, atol=1e-12)


def test_drift_bound_every_slot():
    for policy in ("famus", "random", "fixed"):
        tr = simulate(replace(SMALL, policy=policy)).trace
        assert np.all(tr.drift <= tr.drift_bound + 1e-9)


def test_summary_is_mean_of_stream():
    res = simulate(SMALL)
    assert res.summary.avg_cost == pytest.approx(res.trace.cost.mean())
    # realized cost is the sum of cluster costs with the eq-9 terms
    tr = res.trace
    cost = SMALL.mu1 * tr.accuracy_loss + SMALL.mu2 * (tr.delegated * 1.0 + tr.rewards)
    np.testing.assert_allclose(tr.cluster_cost, cost)


def test_participants_are_top_type_and_paid_top_reward():
    cfg = SMALL
    world = World(cfg)
    for _ in range(cfg.warmup):
        step(world)
    if world.grid is None:
        world.finish_warmup()
    assert verify_ic_ir(world.menu, world.grid)
    top = 1.0 / world.grid.top
    tr = Trace.allocate(100, cfg.num_servers)
    for i in range(100):
        step(world, tr, i)
    np.testing.assert_allclose(tr.rewards, tr.participants * top)


def test_no_selection_under_idle_server():
    tr = simulate(SMALL).trace
    assert np.all(tr.offered[tr.delegated == 0] == 0)
    assert np.all(tr.participants <= tr.offered)


def test_expected_equals_realized_with_exact_degenerate_belief():
    # static clients and no fading: every type is deterministic, the belief
    # is exact and one-hot, and expected and realized costs coincide
    cfg = replace(SMALL, mobility=MobilityParams(memory=1.0, mean_speed=0.0, speed_std=0.0),
                  link=LinkParams(fading=False))
    tr = simulate(cfg).trace
    assert tr.participants.sum() > 0
    np.testing.assert_allclose(tr.expected_cost, tr.cost, rtol=1e-12)


def test_expected_payment_matches_monte_carlo():
    # with a non-degenerate exact belief the payment term agrees in mean
    rng = np.random.default_rng(0)
    pi = rng.uniform(0, 1, 15)
    d = rng.uniform(1, 10, 15)
    gamma_top = 40.0
    grid = TypeGrid((10.0, gamma_top))
    menu = optimal_contract(grid)
    params = ControllerParams(mu1=0.0, mu2=1.0)
    expected = expected_cluster_cost(pi, d, gamma_top, False, 0.0, params)
    levels = (rng.random((20_000, 15)) < pi).astype(int)  # exact belief: top with prob. pi
    paid = np.array([[menu.r[best_response(menu, i, grid)] for i in (0, 1)]])[0][levels]
    draws = paid.sum(axis=1)
    se = draws.std() / np.sqrt(draws.size)
    assert abs(draws.mean() - expected) < 4 * se


def test_uniform_contract_scenario():
    res = simulate(replace(SMALL, scenario="uniform-contract"))
    assert len(res.summary.grid) == 1
    assert res.trace.participants.sum() > 0


def test_jfi_fixed_policy_is_k_over_n():
    res = simulate(replace(SMALL, policy="fixed", horizon=450))
    assert res.summary.jfi == pytest.approx(SMALL.num_tasks / SMALL.num_servers, abs=0.02)


def test_sweep_shapes():
    rows = sweep(replace(SMALL, horizon=80), "gamma", [10, 20], seeds=2)
    assert [r.value for r in rows] == [10, 20]
    assert all(len(r.per_seed_cost) == 2 and r.cost_se >= 0 for r in rows)
    one = sweep(replace(SMALL, horizon=80), "M", [30], seeds=1)
    assert len(one) == 1 and one[0].cost_se == 0.0
    with pytest.raises(ConfigError):
        sweep(SMALL, "K", [1])
    with pytest.raises(ConfigError):
        sweep(SMALL, "M", [])
