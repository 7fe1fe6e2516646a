"""Flow-map correctness against closed forms and an independent integrator."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

import koopcheck as kc
from koopcheck import integrate
from koopcheck.errors import FiniteEscapeError


def bistable_closed_form(x0: float, t: float) -> float:
    s = np.sign(x0)
    if x0 == 0.0:
        return 0.0
    q = x0 * x0 * np.exp(2 * t)
    return s * np.sqrt(q / (1.0 - x0 * x0 + q))


def test_linear_decay_matches_exponential():
    lin = kc.make_system("linear1d")
    x = integrate.flow(lin, [1.0], 1.0, tol=1e-10)
    assert abs(x[0] - np.exp(-1.0)) < 1e-6


def test_time_zero_is_identity():
    du = kc.make_system("duffing")
    x0 = np.array([0.3, -0.7])
    assert np.array_equal(integrate.flow(du, x0, 0.0), x0)


def test_bistable_approaches_attractor():
    bi = kc.make_system("bistable")
    x = integrate.flow(bi, [0.5], 10.0, tol=1e-12)
    assert abs(x[0] - 1.0) < 1e-4


@pytest.mark.parametrize("x0", [0.2, 0.5, -0.9, 1.7])
def test_bistable_closed_form(x0):
    bi = kc.make_system("bistable")
    x = integrate.flow(bi, [x0], 2.0, tol=1e-12)
    assert abs(x[0] - bistable_closed_form(x0, 2.0)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(
    x0=st.floats(-1.5, 1.5),
    y0=st.floats(-1.5, 1.5),
    s=st.floats(0.01, 1.0),
    t=st.floats(0.01, 1.0),
)
def test_semigroup_property(x0, y0, s, t):
    du = kc.make_system("duffing")
    tol = 1e-9
    a = integrate.flow(du, integrate.flow(du, [x0, y0], s, tol), t, tol)
    b = integrate.flow(du, [x0, y0], s + t, tol)
    assert np.max(np.abs(a - b)) <= 10 * tol * max(1.0, np.max(np.abs(b)))


def test_against_independent_integrator():
    du = kc.make_system("duffing")
    mine = integrate.flow(du, [1.3, -0.4], 5.0, 1e-10)
    ref = solve_ivp(
        lambda t, y: [y[1], y[0] - y[0] ** 3 - 0.5 * y[1]],
        (0.0, 5.0),
        [1.3, -0.4],
        rtol=1e-12,
        atol=1e-12,
    )
    assert np.max(np.abs(ref.y[:, -1] - mine)) < 1e-8


def test_backward_integration():
    lin = kc.make_system("linear1d")
    x = integrate.flow(lin, [1.0], -1.0, tol=1e-10)
    assert abs(x[0] - np.e) < 1e-6


def test_escape_raises_report_not_crash():
    unstable = kc.make_system("linear1d", {"a": 5.0})
    with pytest.raises(FiniteEscapeError) as err:
        integrate.flow(unstable, [1.0], 10.0, 1e-9)
    assert 0 < err.value.t_reached < 10.0
    assert err.value.bound == integrate.ESCAPE_BOUND


def test_batch_matches_single(rng):
    du = kc.make_system("duffing")
    x0 = rng.uniform(-1.5, 1.5, (20, 2))
    batch, status = integrate.flow_batch(du, x0, 3.0, 1e-9)
    assert np.all(status == integrate.STATUS_RUNNING)
    for k in range(len(x0)):
        single = integrate.flow(du, x0[k], 3.0, 1e-9)
        assert np.max(np.abs(batch[k] - single)) < 1e-12


@pytest.mark.skipif(
    "compiled" not in integrate.available_backends(), reason="extension not built"
)
def test_backends_agree(rng):
    du = kc.make_system("duffing")
    x0 = rng.uniform(-1.5, 1.5, (10, 2))
    a, _ = integrate.flow_batch(du, x0, 5.0, 1e-10, backend="compiled")
    b, _ = integrate.flow_batch(du, x0, 5.0, 1e-10, backend="python")
    assert np.max(np.abs(a - b)) < 1e-10


def test_path_sampling_consistent_with_endpoint():
    bi = kc.make_system("bistable")
    times = np.array([0.5, 1.0, 2.0])
    path, status = integrate.flow_path(bi, np.array([[0.4]]), times, 1e-10)
    assert status[0] == integrate.STATUS_RUNNING
    end = integrate.flow(bi, [0.4], 2.0, 1e-10)
    assert abs(path[0, -1, 0] - end[0]) < 1e-9


def test_generic_rhs_linear():
    a = np.array([[-2.0]])

    def rhs(y):
        return y @ a.T

    states, status = integrate.integrate_rhs(rhs, np.array([[1.0]]), np.array([1.0]), 1e-10)
    assert abs(states[0, -1, 0] - np.exp(-2.0)) < 1e-7
