"""Vector-field registry, fixed points, basins, and snapshot sampling."""

from __future__ import annotations

import numpy as np
import pytest

import koopcheck as kc
from koopcheck import integrate
from koopcheck.errors import DimensionError, UnknownSystemError
from koopcheck.systems import (
    ESCAPED,
    basin_grid,
    classify_basin,
    classify_basin_batch,
    find_fixed_points,
    sample_snapshot_pairs,
    simulate_trajectory,
)


def test_eval_examples():
    bi = kc.make_system("bistable")
    assert kc.eval_vector_field(bi, np.array([1.0]))[0] == 0.0
    du = kc.make_system("duffing")
    assert np.array_equal(kc.eval_vector_field(du, np.zeros(2)), np.zeros(2))
    lin = kc.make_system("linear1d")
    assert kc.eval_vector_field(lin, np.array([2.0]))[0] == -2.0


def test_registry_contents():
    names = kc.registered_systems()
    for expected in ("linear1d", "linear2d", "harmonic", "bistable", "duffing",
                     "duffing_undamped", "bistable_controlled"):
        assert expected in names


def test_unknown_system_and_bad_dimension():
    with pytest.raises(UnknownSystemError):
        kc.make_system("lorenz")
    with pytest.raises(UnknownSystemError):
        kc.make_system("duffing", {"mass": 1.0})
    du = kc.make_system("duffing")
    with pytest.raises(DimensionError):
        kc.eval_vector_field(du, np.array([1.0]))
    cb = kc.make_system("bistable_controlled")
    with pytest.raises(DimensionError):
        kc.eval_vector_field(cb, np.array([1.0]), np.array([0.0, 1.0]))


def test_bistable_fixed_points():
    bi = kc.make_system("bistable")
    fps, dropped = find_fixed_points(bi, np.array([[-2.0], [0.1], [2.0], [1.9]]))
    assert dropped == 0
    locations = [round(float(fp.location[0]), 6) for fp in fps]
    assert locations == [-1.0, 0.0, 1.0]
    assert [fp.stability_class for fp in fps] == ["stable", "unstable", "stable"]
    assert all(fp.residual_norm <= 1e-10 for fp in fps)


def test_duffing_fixed_point_classification():
    du = kc.make_system("duffing")
    fps, _ = find_fixed_points(du, np.array([[-1.4, 0.2], [0.05, 0.0], [1.3, -0.1]]))
    by_class = {fp.stability_class for fp in fps}
    assert by_class == {"stable", "saddle"}
    saddle = next(fp for fp in fps if fp.stability_class == "saddle")
    assert np.max(np.abs(saddle.location)) < 1e-8


def test_linear_fixed_point_stable():
    lin = kc.make_system("linear1d")
    fps, _ = find_fixed_points(lin, np.array([[0.7]]))
    assert len(fps) == 1 and fps[0].stability_class == "stable"


def test_singular_jacobian_seed_dropped():
    bi = kc.make_system("bistable")
    fps, dropped = find_fixed_points(bi, np.array([[1.0 / np.sqrt(3.0)]]))
    assert dropped == 1 and fps == []


def test_fd_jacobian_fallback():
    from dataclasses import replace

    bi = kc.make_system("bistable")
    no_jac = replace(bi, _jac=None)
    J = no_jac.jacobian(np.array([0.5]))
    assert abs(J[0, 0] - (1 - 3 * 0.25)) < 1e-7


def test_classify_basin_examples():
    bi = kc.make_system("bistable")
    fps, _ = find_fixed_points(bi, np.array([[-2.0], [0.1], [2.0]]))
    plus = next(i for i, fp in enumerate(fps) if abs(fp.location[0] - 1) < 1e-6)
    minus = next(i for i, fp in enumerate(fps) if abs(fp.location[0] + 1) < 1e-6)
    origin = next(i for i, fp in enumerate(fps) if abs(fp.location[0]) < 1e-6)
    assert classify_basin(bi, np.array([0.5]), fps) == plus
    assert classify_basin(bi, np.array([-0.5]), fps) == minus
    assert classify_basin(bi, np.array([0.0]), fps) == origin


def test_classify_basin_escape_flag():
    grow = kc.make_system("linear1d", {"a": 2.0})
    fps, _ = find_fixed_points(grow, np.array([[0.2]]))
    labels = classify_basin_batch(grow, np.array([[1.5]]), fps, horizon=20.0)
    assert labels[0] == ESCAPED


def test_basin_labels_flow_invariant(rng):
    bi = kc.make_system("bistable")
    fps, _ = find_fixed_points(bi, np.array([[-2.0], [0.1], [2.0]]))
    x0 = rng.uniform(-1.8, 1.8, (25, 1))
    before = classify_basin_batch(bi, x0, fps)
    moved, status = integrate.flow_batch(bi, x0, 1.0, 1e-9)
    after = classify_basin_batch(bi, moved, fps)
    ok = status == integrate.STATUS_RUNNING
    assert np.all(before[ok] == after[ok])


def test_basin_grid_counts(ctx):
    grid = ctx.basins("bistable")
    assert len(grid.labels) == 401
    assert set(grid.attractor_labels) == {0, 2}
    # grid point at exactly 0 converges to the repelling fixed point
    mid = np.flatnonzero(np.all(grid.grid_points == 0.0, axis=1))
    assert grid.labels[mid[0]] == 1


def test_snapshot_pairs_contract():
    bi = kc.make_system("bistable")
    region = np.array([[-2.0, 2.0]])
    pairs = sample_snapshot_pairs(bi, region, 100, 0.1, seed=42, tol=1e-10)
    assert pairs.dt == 0.1
    assert pairs.x_states.shape == (100, 1)
    again = sample_snapshot_pairs(bi, region, 100, 0.1, seed=42, tol=1e-10)
    assert np.array_equal(pairs.x_states, again.x_states)
    assert np.array_equal(pairs.y_states, again.y_states)
    for k in (0, 17, 99):
        ref = integrate.flow(bi, pairs.x_states[k], 0.1, 1e-10)
        assert np.max(np.abs(pairs.y_states[k] - ref)) <= 1e-8


def test_snapshot_pairs_resample_on_escape():
    grow = kc.make_system("linear1d", {"a": 5.0})
    region = np.array([[-2.0, 2.0]])
    pairs = sample_snapshot_pairs(grow, region, 200, 3.0, seed=3, tol=1e-9)
    assert pairs.resample_count > 0
    assert np.all(np.abs(pairs.y_states) <= integrate.ESCAPE_BOUND)


def test_trajectory_csv_header():
    du = kc.make_system("duffing")
    traj = simulate_trajectory(du, np.array([0.5, 0.0]), 1.0, n_samples=5)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,x1,x2"
    assert len(lines) == 6


def test_basin_grid_invariants(ctx):
    grid = ctx.basins("duffing")
    assert len(grid.labels) == len(grid.grid_points) == 101 * 101
    resolved = grid.attractor_mask
    assert resolved.sum() > 10000
