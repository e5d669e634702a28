import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chddp.dynamics import BoxPusher, DubinsGears, RelaxedDynamics, make_model
from chddp.kernels import wrap
from oracles import central_diff_jacobian

MODELS = [BoxPusher(), DubinsGears()]


def wrapped_diff(a, b):
    d = np.asarray(a) - np.asarray(b)
    d[2] = wrap(d[2])
    return d


def random_point(model, rng):
    x = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3.0, 3.0)])
    u = rng.uniform(model.spec.u_lower, model.spec.u_upper)
    p = rng.dirichlet(np.ones(model.n_modes))
    return x, np.concatenate([u, p])


def test_box_straight_push():
    np.testing.assert_allclose(BoxPusher().step_mode([0, 0, 0], [1, 0], 0), [0.1, 0, 0], atol=1e-15)


def test_box_zero_speed_is_stationary():
    x = np.array([1.0, -2.0, 0.4])
    for a in range(4):
        np.testing.assert_array_equal(BoxPusher().step_mode(x, [0.0, 0.9], a), x)


def test_box_side_face_example():
    psi = math.radians(70)
    out = BoxPusher(c_omega=2.0, dt=0.1).step_mode([0, 0, 0], [1, psi], 1)
    # direct evaluation of the update formula
    expected = [0.1 * math.cos(math.pi / 2 + psi), 0.1 * math.sin(math.pi / 2 + psi), 0.2 * math.sin(psi)]
    np.testing.assert_allclose(out, expected, atol=1e-15)
    np.testing.assert_allclose(out, [-0.09397, 0.03420, 0.18794], atol=1e-5)


def test_dubins_two_gear_mix():
    m = DubinsGears(speeds=(1.0, 2.0))
    np.testing.assert_allclose(m.step_hybrid([0, 0, 0], [0.0, 0.5, 0.5]), [0.15, 0, 0], atol=1e-15)


def test_identical_modes_ignore_weights():
    m = DubinsGears(speeds=(1.0, 1.0, 1.0))
    x = np.array([0.3, 0.1, 1.0])
    a = m.step_hybrid(x, [0.4, 0.2, 0.3, 0.5])
    b = m.step_hybrid(x, [0.4, 1.0, 0.0, 0.0])
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_mode_out_of_range():
    with pytest.raises(IndexError):
        BoxPusher().step_mode([0, 0, 0], [1, 0], 4)


def test_theta_wrapped():
    out = DubinsGears().step_mode([0, 0, math.pi - 0.01], [1.5], 1)
    assert -math.pi < out[2] <= math.pi
    assert out[2] < 0


def test_make_model_registry():
    assert isinstance(make_model("box_pusher", {"c_omega": 3.0}), BoxPusher)
    assert make_model("box_pusher", {"c_omega": 3.0}).params()["c_omega"] == 3.0
    with pytest.raises(ValueError):
        make_model("unicycle")


def test_relaxed_bounds_layout():
    d = RelaxedDynamics(BoxPusher())
    np.testing.assert_allclose(d.lower, [0, -math.radians(70), 0, 0, 0, 0])
    np.testing.assert_allclose(d.upper, [1, math.radians(70), 1, 1, 1, 1])
    assert d.simplex == slice(2, 6)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_one_hot_matches_mode_step(model):
    rng = np.random.default_rng(3)
    for _ in range(50):
        x, uh = random_point(model, rng)
        for a in range(model.n_modes):
            p = np.zeros(model.n_modes)
            p[a] = 1.0
            np.testing.assert_allclose(model.step_hybrid(x, np.concatenate([uh[:model.m], p])),
                                       model.step_mode(x, uh[:model.m], a), atol=1e-12)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_linearize_matches_finite_differences(model):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        x, uh = random_point(model, rng)
        A, B = model.linearize(x, uh)
        Afd = central_diff_jacobian(lambda z: model.step_hybrid(z, uh), x, 1e-6, wrapped_diff)
        Bfd = central_diff_jacobian(lambda v: model.step_hybrid(x, v), uh, 1e-6, wrapped_diff)
        for J, Jfd in ((A, Afd), (B, Bfd)):
            worst = max(worst, np.abs(J - Jfd).max() / max(1.0, np.abs(Jfd).max()))
    assert worst <= 1e-6


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_propagate_matches_repeated_steps(model):
    x = np.array([0.5, -0.2, 2.9])
    u = model.spec.u_upper * 0.7
    seg = model.propagate(x, u, 1, 6)
    ref = x
    for row in seg:
        ref = model.step_mode(ref, u, 1)
        np.testing.assert_allclose(row, ref, atol=1e-12)


weights = st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4).map(lambda w: np.array(w) / sum(w))


@given(weights, weights, st.floats(0, 1))
def test_affine_in_weights(p1, p2, alpha):
    model = BoxPusher()
    x = np.array([0.2, 0.3, 0.1])
    u = np.array([0.8, 0.4])
    mix = model.step_hybrid(x, np.concatenate([u, alpha * p1 + (1 - alpha) * p2]))
    sep = alpha * model.step_hybrid(x, np.concatenate([u, p1])) + (1 - alpha) * model.step_hybrid(
        x, np.concatenate([u, p2]))
    np.testing.assert_allclose(mix, sep, atol=1e-12)
