import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from famus.channel import (
    ClientProfile,
    bandwidth_share,
    channel_gain,
    costs_vectorized,
    participation_cost,
    pathloss,
    shannon_rate,
)
from famus.contract import TypeGrid


def test_cost_examples():
    # rates enter in Mbit/s: R = 2 Mbit/s
    rep = participation_cost(ClientProfile(alpha=1.0, beta=1.0, data_size=3.0), 2e6)
    assert rep.cost == pytest.approx(5.0)
    assert rep.type_value == pytest.approx(0.2)
    rep = participation_cost(ClientProfile(alpha=1.0, beta=0.0, data_size=3.0), 1e6)
    assert rep.cost == pytest.approx(1.0) and rep.type_value == pytest.approx(1.0)


def test_type_index_from_grid():
    grid = TypeGrid((0.1, 0.2, 0.5))
    rep = participation_cost(ClientProfile(1.0, 1.0, 3.0), 2e6, grid)
    assert rep.type_index == 1  # 0.1 < 0.2 <= 0.2
    rep = participation_cost(ClientProfile(1.0, 0.0, 1.0), 1e5, grid)  # type 10 clipped to top
    assert rep.type_index == 2


def test_bandwidth_share():
    assert bandwidth_share(10e6, 5) == pytest.approx(2e6)
    assert bandwidth_share(10e6, 1) == pytest.approx(10e6)
    with pytest.raises(ValueError):
        bandwidth_share(10e6, 0)


def test_shannon_rate_known_value():
    # SNR = 1 -> one bit per Hz
    assert shannon_rate(1e6, 1.0, 1e-6, 1e-12) == pytest.approx(1e6)
    with pytest.raises(ValueError):
        shannon_rate(0.0, 1.0, 1.0, 1.0)


def test_distance_clamp_and_no_fading_is_deterministic():
    assert pathloss(0.0, 1e-3, 3.0) == pytest.approx(1e-3)
    g1 = channel_gain((0, 0), (10, 0), None, 1e-3, 3.0)
    g2 = channel_gain((0, 0), (10, 0), np.random.default_rng(1), 1e-3, 3.0, fading=False)
    assert g1 == g2 == pytest.approx(1e-6)


def test_rayleigh_power_has_unit_mean():
    rng = np.random.default_rng(0)
    g = channel_gain(np.zeros(2), np.tile([1.0, 0.0], (200_000, 1)), rng, 1.0, 3.0)
    assert g.mean() == pytest.approx(1.0, abs=0.01)


@given(st.floats(1e3, 1e8), st.floats(1e-3, 10), st.floats(1e-15, 1e-3), st.floats(1.01, 10))
def test_rate_monotone_in_gain_and_power(b, p, g, k):
    n0 = 4e-21
    r = shannon_rate(b, p, g, n0)
    assert r >= 0
    assert shannon_rate(b, p, g * k, n0) > r
    assert shannon_rate(b, p * k, g, n0) > r


def test_cost_monotone_over_random_profiles():
    rng = np.random.default_rng(7)
    alpha = rng.uniform(1e-4, 1e-2, 1000)
    beta = rng.uniform(0, 1e-2, 1000)
    d = rng.uniform(1, 100, 1000)
    r = rng.uniform(1e5, 1e8, 1000)
    c = costs_vectorized(alpha, beta, d, r)
    assert np.all(costs_vectorized(alpha, beta, d, r * 1.5) > c)
    assert np.all(costs_vectorized(alpha, beta + 1e-3, d * 1.5, r) > c)
    order = np.argsort(c)
    assert np.all(np.diff((1 / c)[order]) <= 0)


def test_invalid_profile():
    with pytest.raises(ValueError):
        ClientProfile(alpha=0.0, beta=1.0, data_size=1.0)
    with pytest.raises(ValueError):
        ClientProfile(alpha=1.0, beta=1.0, data_size=0.0)
