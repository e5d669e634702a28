import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chddp.costs import (GoalCost, SwitchSchedule, TrackingCost, _FixedSwitch, count_switches, mode_sequence,
                         pseudo_huber, pseudo_huber_derivs, switching_cost, switching_derivs, wrapped_error)
from chddp.dynamics import BoxPusher, DubinsGears
from oracles import fd_grad_hess


def test_pseudo_huber_asymptote():
    assert pseudo_huber(1e6, 1.0) / 1e6 == pytest.approx(1.0, abs=1e-6)


def test_pseudo_huber_small_is_quadratic():
    assert pseudo_huber(1e-8, 0.1) == pytest.approx(0.5e-16, rel=1e-9)
    with pytest.raises(ValueError):
        pseudo_huber(1.0, 0.0)


def test_switching_one_hot_zero():
    for na in (2, 3, 4, 7):
        for a in range(na):
            p = np.zeros(na)
            p[a] = 1.0
            assert switching_cost(p, 123.0) == 0.0


def test_switching_uniform_four_modes():
    expected = 4 * (math.sqrt(17) - 1)
    assert switching_cost(np.full(4, 0.25), 1.0, 0.25) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(12.4924, abs=1e-4)


def test_switching_nonnegative_and_zero_only_at_vertices():
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(4) * 0.5, size=10_000)
    vals = np.array([switching_cost(p, 1.0) for p in P])
    assert np.all(vals > 0)
    assert all(switching_cost(e, 1.0) == 0.0 for e in np.eye(4))


def test_schedule_growth_and_cap():
    s = SwitchSchedule(0.1, 1.2, 1e3)
    assert s.value == 0.1 and not s.done
    s.advance()
    assert s.value == pytest.approx(0.12)
    while s.advance():
        pass
    assert s.value == 1e3 and s.done
    with pytest.raises(ValueError):
        SwitchSchedule(0.1, 1.0, 1e3)


def test_mode_sequence_and_switches():
    us = np.array([[0.3, 0.9, 0.1], [0.3, 0.2, 0.8], [0.1, 0.4, 0.6], [0.0, 1.0, 0.0]])
    np.testing.assert_array_equal(mode_sequence(us, 1), [0, 1, 1, 0])
    assert count_switches([0, 1, 1, 0]) == 2
    assert count_switches([3]) == 0


def test_wrapped_error():
    pos, ang = wrapped_error([1.0, 1.0, math.pi - 0.1], [1.0, 2.0, -math.pi + 0.1])
    assert pos == pytest.approx(1.0)
    assert ang == pytest.approx(0.2)


def _rel(a, b):
    return np.abs(a - b).max() / max(1.0, np.abs(b).max())


def _sample_weights(rng, na, p_th):
    # stay clear of the branch switch at p_th, where the penalty jumps
    while True:
        p = rng.dirichlet(np.ones(na))
        if np.all(np.abs(p - p_th) > 1e-3):
            return p


@pytest.mark.parametrize("model", [BoxPusher(), DubinsGears()], ids=lambda m: m.name)
def test_cost_derivatives_match_finite_differences(model):
    rng = np.random.default_rng(4)
    m, na = model.m, model.n_modes
    ref = rng.uniform(-2, 2, size=(5, 3))
    track = TrackingCost(ref, m, na, _FixedSwitch(3.0), alpha_h=0.1, w_u=0.1)
    goal = GoalCost([1.0, 2.0, 0.5], m, na, _FixedSwitch(3.0))
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(-2, 2, 3)
        u = np.concatenate([rng.uniform(model.spec.u_lower, model.spec.u_upper), _sample_weights(rng, na, 1 / na)])
        t = int(rng.integers(0, 4))
        for cost in (track, goal):
            z = np.concatenate([x, u])
            _, lx, lu, lxx, luu, lux = cost.running_derivs(x, u, t)
            g, H = fd_grad_hess(lambda v: cost.running(v[:3], v[3:], t), z)
            worst = max(worst, _rel(np.concatenate([lx, lu]), g))
            worst = max(worst, _rel(lxx, H[:3, :3]), _rel(luu, H[3:, 3:]), _rel(lux, H[3:, :3]))
            _, fx, fxx = cost.final_derivs(x)
            g, H = fd_grad_hess(cost.final, x)
            worst = max(worst, _rel(fx, g), _rel(fxx, H))
    assert worst <= 1e-5


@given(st.floats(-50, 50), st.floats(0.05, 5))
def test_pseudo_huber_derivs(z, alpha):
    val, d1, d2 = pseudo_huber_derivs(np.array([z]), alpha)
    h = 1e-6 * max(1.0, abs(z))
    fd = (pseudo_huber(z + h, alpha) - pseudo_huber(z - h, alpha)) / (2 * h)
    assert val[0] == pytest.approx(pseudo_huber(z, alpha), rel=1e-12, abs=1e-300)
    assert d1[0] == pytest.approx(fd, rel=1e-5, abs=1e-8)
    assert 0 < d2[0] <= 1.0


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=6).filter(lambda w: sum(w) > 0.1))
def test_switching_derivs_consistent(w):
    p = np.array(w) / sum(w)
    val, g, H = switching_derivs(p, 2.0, 1.0 / len(p))
    assert val == pytest.approx(switching_cost(p, 2.0))
    assert np.all(H >= 0)
