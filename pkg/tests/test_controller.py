import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from famus.controller import (
    ControllerParams,
    DelegationAction,
    accuracy_loss,
    brute_force_delegation,
    brute_force_subset,
    delegate_famus,
    delegation_objective,
    expected_cluster_cost,
    server_objective,
    solve_client_subset,
)

P = ControllerParams()


def test_accuracy_loss_examples():
    assert accuracy_loss(0.1, 1.0, 0.1) == pytest.approx(1.1)
    assert accuracy_loss(1e18, 1.0, 0.1) == pytest.approx(0.1, abs=1e-8)
    a, b = accuracy_loss(50.0, 1.0, 0.1) - 0.1, accuracy_loss(100.0, 1.0, 0.1) - 0.1
    assert b == pytest.approx(a / math.sqrt(2))
    assert accuracy_loss(0.0, 1.0, 0.1) == pytest.approx(1.1)  # sentinel default
    assert accuracy_loss(0.0, 1.0, 0.1, sentinel=3.0) == 3.0
    with pytest.raises(ValueError):
        accuracy_loss(-1.0, 1.0, 0.1)


def test_expected_cluster_cost_examples():
    assert expected_cluster_cost([], [], 2.0, False, 1.0, P) == pytest.approx(P.mu1 * 1.1)
    got = expected_cluster_cost([1.0], [100.0], 2.0, True, 1.0, P)
    assert got == pytest.approx(0.9 * 1.5 + 0.1 * (1 / math.sqrt(1000) + 0.1))
    p2 = ControllerParams(mu2=1.8)
    pay1 = expected_cluster_cost([1.0], [100.0], 2.0, True, 1.0, P) - P.mu1 * accuracy_loss(100, 1, 0.1)
    pay2 = expected_cluster_cost([1.0], [100.0], 2.0, True, 1.0, p2) - P.mu1 * accuracy_loss(100, 1, 0.1)
    assert pay2 == pytest.approx(2 * pay1)


def test_subset_examples():
    empty = solve_client_subset([], [], P)
    assert empty.selected == () and empty.objective == pytest.approx(P.balance * P.mu1 * P.sentinel)
    # one candidate whose price exceeds its loss reduction
    w, c = [1.0], [100.0]
    assert solve_client_subset(w, c, P).selected == ()
    # and one that is worth it
    assert solve_client_subset([10.0], [0.01], P).selected == (0,)


def test_subset_drops_zero_weight():
    sel = solve_client_subset([0.0, 5.0, 0.0], [0.0, 0.01, 0.0], P)
    assert sel.selected == (1,)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 12), st.integers(0, 2**32 - 1))
def test_subset_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    p = ControllerParams(balance=rng.uniform(0, 60), mu1=rng.uniform(0, 1), mu2=rng.uniform(0, 1))
    pi = rng.uniform(0, 1, n) * (rng.random(n) < 0.8)
    d = rng.uniform(1, 200, n)
    g = rng.uniform(0.1, 100)
    w, c = pi * d, p.balance * p.mu2 * pi / g
    got = solve_client_subset(w, c, p)
    ref = brute_force_subset(w, c, p)
    assert got.objective == pytest.approx(ref.objective, abs=1e-9, rel=1e-12)


def test_server_objective_terms():
    od, oi = server_objective(queue=3.0, reputation_value=0.5, selection_objective=2.0, fee=1.0, params=P)
    assert od == pytest.approx(0.9 * 10 * 1.0 - 3.0 + 2.0)
    assert oi == pytest.approx(3.0 * 0.8 * 0.5 + 10 * 0.1 * 1.1)
    od, oi = server_objective(1e9, 0.5, 2.0, 1.0, P)
    assert od < oi
    zero_v = ControllerParams(balance=0.0)
    od, oi = server_objective(2.0, 0.5, 0.0, 1.0, zero_v)
    assert (od, oi) == (pytest.approx(-2.0), pytest.approx(2.0 * 0.8 * 0.5))


def test_two_server_hand_instance():
    # servers differ only in queue; Omega is the sum of the chosen branches
    q = np.array([4.0, 1.0])
    g = np.array([0.5, 0.5])
    sel = [1.0, 1.5]
    rows = [server_objective(q[i], g[i], sel[i], 1.0, P) for i in range(2)]
    od, oi = np.array(rows).T
    act = delegate_famus(od, oi, 1, q)
    assert act.servers == (0,)
    expected = (0.9 * 10 - 4.0 + 1.0) + (1.0 * 0.8 * 0.5 + 10 * 0.1 * 1.1)
    assert delegation_objective(act, od, oi) == pytest.approx(expected)


def test_delegate_examples():
    od, oi = np.array([-1.0, 5.0, -2.0]), np.zeros(3)
    assert delegate_famus(od, oi, 2).servers == (0, 2)
    act = delegate_famus(od, oi, 2)
    assert act.matrix[0, 2] == 1 and act.matrix[1, 0] == 1  # task k -> k-th chosen server
    assert delegate_famus(np.array([9.0, 9.0, 9.0]), np.zeros(3), 3).servers == (0, 1, 2)
    assert delegate_famus(od, oi, 3, force_assign_all=False).servers == (0, 2)
    with pytest.raises(ValueError):
        delegate_famus(od, oi, 4)


def test_delegate_tie_break():
    od = np.zeros(3)
    oi = np.zeros(3)
    assert delegate_famus(od, oi, 1, queues=[1.0, 5.0, 5.0]).servers == (1,)
    assert delegate_famus(od, oi, 1).servers == (0,)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10), st.data())
def test_delegate_matches_exhaustive(n, data):
    k = data.draw(st.integers(0, n))
    vals = st.lists(st.floats(-100, 100), min_size=n, max_size=n)
    od, oi = np.array(data.draw(vals)), np.array(data.draw(vals))
    force = data.draw(st.booleans())
    act = delegate_famus(od, oi, k, None, force)
    _, best = brute_force_delegation(od, oi, k, force)
    assert delegation_objective(act, od, oi) == pytest.approx(best, abs=1e-9)


def test_delegation_action_constraints():
    with pytest.raises(ValueError):
        DelegationAction(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DelegationAction(np.array([[1, 0], [1, 0]]))
    with pytest.raises(ValueError):
        DelegationAction(np.array([[2, 0]]))
    assert DelegationAction.none(2, 3).servers == ()


def test_params_validation():
    with pytest.raises(ValueError):
        ControllerParams(balance=-1)
    with pytest.raises(ValueError):
        ControllerParams(slot_len=2.0, tau=1.0)
