import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from famus.config import ConfigError, MobilityParams
from famus.mobility import (
    Area,
    ClientState,
    cluster_membership,
    gauss_markov_velocity,
    init_ppp,
    reflect,
    step_gauss_markov,
    step_population,
)

AREA = Area(100.0, 200.0, 2, 5)


def test_ppp_positions_inside_area():
    clients = init_ppp(AREA, 200, seed=3)
    assert len(clients) == 200
    pos = np.array([c.position for c in clients])
    assert AREA.contains(pos).all()


def test_ppp_empty_and_deterministic():
    assert init_ppp(AREA, 0, seed=1) == []
    a = [c.position for c in init_ppp(AREA, 50, seed=11)]
    b = [c.position for c in init_ppp(AREA, 50, seed=11)]
    assert a == b


def test_zero_size_area_rejected():
    with pytest.raises(ConfigError):
        Area(0.0, 10.0)


def test_full_memory_without_noise_keeps_velocity():
    v = np.array([[0.3, -0.7]])
    out = gauss_markov_velocity(v, np.array([[1.0, 0.0]]), memory=1.0, noise=np.zeros((1, 2)))
    np.testing.assert_array_equal(out, v)


def test_zero_memory_forgets_previous_velocity():
    noise = np.array([[0.1, 0.2]])
    mean = np.array([[1.0, 0.0]])
    a = gauss_markov_velocity(np.array([[5.0, 5.0]]), mean, 0.0, noise)
    b = gauss_markov_velocity(np.array([[-9.0, 2.0]]), mean, 0.0, noise)
    np.testing.assert_allclose(a, mean + noise)
    np.testing.assert_array_equal(a, b)


def test_linear_motion_with_unit_memory():
    area = Area(100.0, 100.0)
    c = ClientState(0, (10.0, 10.0), (1.0, 2.0), (1.0, 2.0), memory=1.0)
    nxt = step_gauss_markov(c, 0.5, np.random.default_rng(0), area, speed_std=0.0)
    assert nxt.position == pytest.approx((10.5, 11.0))
    assert nxt.velocity == pytest.approx((1.0, 2.0))


def test_boundary_reflection():
    area = Area(10.0, 10.0)
    c = ClientState(0, (9.9, 5.0), (2.0, 0.0), (2.0, 0.0), memory=1.0)
    nxt = step_gauss_markov(c, 0.1, np.random.default_rng(0), area, speed_std=0.0)
    assert nxt.position[0] == pytest.approx(9.9)
    assert nxt.velocity[0] == pytest.approx(-2.0)
    assert area.contains(np.array(nxt.position))


def test_reflect_handles_several_widths():
    pos, vel = reflect(np.array([[25.0, -3.0]]), np.array([[1.0, -1.0]]), Area(10.0, 10.0))
    np.testing.assert_allclose(pos, [[5.0, 3.0]])
    np.testing.assert_allclose(vel, [[1.0, 1.0]])  # two x-crossings keep direction


def test_step_requires_positive_dt():
    with pytest.raises(ValueError):
        step_population(np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2)), AREA, 0.0,
                        np.random.default_rng(0), MobilityParams())


def test_all_in_one_cell():
    pts = np.array([[1.0, 1.0], [20.0, 30.0], [49.0, 39.0]])
    members = cluster_membership(pts, AREA)
    assert members[0] == {0, 1, 2}
    assert all(not members[n] for n in range(1, 10))


def test_shared_edge_goes_to_smaller_index():
    assert AREA.locate(np.array([50.0, 10.0])) == 0
    assert AREA.locate(np.array([50.0001, 10.0])) == 1
    assert AREA.locate(np.array([10.0, 40.0])) == 0
    assert AREA.locate(np.array([0.0, 0.0])) == 0
    assert AREA.locate(np.array([100.0, 200.0])) == 9


def test_partition_against_point_in_rectangle():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        p = rng.uniform(0, 1, 2) * [100.0, 200.0]
        hits = [n for n in range(10) if _inside(p, AREA.rect(n), n)]
        assert hits == [int(AREA.locate(p))]


def _inside(p, rect, n):
    x0, y0, x1, y1 = rect
    # half-open on the low side except on the outer boundary
    lo_x = p[0] > x0 or (x0 == 0 and p[0] == 0)
    lo_y = p[1] > y0 or (y0 == 0 and p[1] == 0)
    return lo_x and lo_y and p[0] <= x1 and p[1] <= y1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 60))
def test_membership_is_partition(seed, count):
    clients = init_ppp(AREA, count, seed)
    members = cluster_membership(clients, AREA)
    all_ids = [m for s in members.values() for m in s]
    assert sorted(all_ids) == list(range(count))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_trajectory_stays_inside(seed):
    rng = np.random.default_rng(seed)
    params = MobilityParams(speed_std=3.0)
    clients = init_ppp(AREA, 20, seed, params)
    pos = np.array([c.position for c in clients])
    vel = np.array([c.velocity for c in clients])
    mean = vel.copy()
    for _ in range(200):
        pos, vel, mean = step_population(pos, vel, mean, AREA, 1.0, rng, params)
        assert AREA.contains(pos).all()
