"""Per-theorem numerical checks on their oracle and fitted examples."""

from __future__ import annotations

import numpy as np
import pytest

import koopcheck as kc
from koopcheck.checks import (
    check_basin_constancy,
    check_blowup_near_stable_point,
    check_closed_orbit_spectrum,
    check_escape_time,
    check_exit_when_bounded_away,
    check_fixed_point_zero,
    check_level_set_invariance,
    check_zero_on_invariant_manifold,
    pick_invariant_pair,
    run_all_checks,
    verify_eigen_evolution,
)
from koopcheck.config import default_config
from koopcheck.koopman import compose_eigenpairs
from koopcheck.oracles import BISTABLE_DECAYING, BISTABLE_GROWING
from koopcheck.reports import INCONCLUSIVE, SUPPORTED, VIOLATED, canonical_json
from koopcheck.rng import sample_box, substream


def test_eigen_evolution_oracle():
    pair = BISTABLE_GROWING.as_eigenpair()
    bi = kc.make_system("bistable")
    report = verify_eigen_evolution(
        pair, bi, np.array([[0.5]]), np.array([0.2]), tol=1e-6
    )
    assert report.verdict == SUPPORTED
    assert report.statistics["max_deviation"] <= 1e-6


def test_eigen_evolution_time_zero():
    pair = BISTABLE_DECAYING.as_eigenpair()
    bi = kc.make_system("bistable")
    report = verify_eigen_evolution(pair, bi, np.array([[0.6]]), np.array([0.0]), tol=1e-12)
    assert report.statistics["max_deviation"] == 0.0


def test_fixed_point_zero_oracles():
    bi = kc.make_system("bistable")
    from koopcheck.systems import find_fixed_points

    fps, _ = find_fixed_points(bi, np.array([[-2.0], [0.1], [2.0]]))
    report = check_fixed_point_zero(
        [BISTABLE_GROWING.as_eigenpair(), BISTABLE_DECAYING.as_eigenpair()],
        fps,
        tol_lambda=1e-3,
        tol_phi=1e-10,
    )
    assert report.verdict == SUPPORTED
    # growing oracle undefined at +-1; decaying oracle undefined at 0
    assert report.statistics["n_not_applicable"] == 3.0


def test_fixed_point_zero_excludes_rate_zero():
    invariant = compose_eigenpairs(
        BISTABLE_GROWING.as_eigenpair(), BISTABLE_DECAYING.as_eigenpair(), 2, 1
    )
    report = check_fixed_point_zero([invariant], [], tol_lambda=1e-3, tol_phi=1e-10)
    assert report.verdict == INCONCLUSIVE


def test_level_set_invariance_oracle(ctx):
    cfg = default_config()["checks"]["theorem4"]
    pair = BISTABLE_DECAYING.as_eigenpair()
    rng = substream(7, "t4-test")
    lo = 1.0 / np.sqrt(2.0)
    starts = np.concatenate(
        [lo + (2 - lo) * rng.random(40), -(lo + (2 - lo) * rng.random(40))]
    )[:, None]
    report = check_level_set_invariance(
        pair, kc.make_system("bistable"), 1.0, starts, cfg["horizon"], 1e-6, n_times=60
    )
    assert report.verdict == SUPPORTED
    assert report.statistics["max_relative_exceedance"] <= 1e-6


def test_level_set_excludes_outside_starts():
    pair = BISTABLE_DECAYING.as_eigenpair()
    starts = np.array([[0.2]])  # |phi(0.2)| = 24 > c: theorem hypotheses unmet
    report = check_level_set_invariance(
        pair, kc.make_system("bistable"), 1.0, starts, 2.0, 1e-6
    )
    assert report.verdict == INCONCLUSIVE
    assert report.statistics["n_excluded"] == 1.0


def test_level_set_composed_invariant_constant():
    invariant = compose_eigenpairs(
        BISTABLE_GROWING.as_eigenpair(), BISTABLE_DECAYING.as_eigenpair(), 2, 1
    )
    rng = substream(12, "t4-composed")
    starts = (0.1 + 0.8 * rng.random(30))[:, None]
    report = check_level_set_invariance(
        invariant, kc.make_system("bistable"), 1.0, starts, 3.0, 1e-6, n_times=40
    )
    assert report.verdict == SUPPORTED
    assert report.statistics["max_relative_exceedance"] <= 1e-9


def test_escape_time_oracle_bound():
    pair = BISTABLE_GROWING.as_eigenpair()
    rng = substream(3, "t3-test")
    region = np.array([[0.1, 0.9]])
    starts = sample_box(rng, region, 60)
    report = check_escape_time(
        pair, kc.make_system("bistable"), region, starts, tol=0.01, grid_steps=3000
    )
    assert report.verdict == SUPPORTED
    assert abs(report.statistics["epsilon"] - 0.1005037815) < 1e-6
    assert abs(report.statistics["phi_sup"] - 2.0647416048) < 1e-6
    assert abs(report.statistics["t_bound"] - 3.0225170) < 1e-4
    assert report.statistics["max_exit_time"] <= report.statistics["t_bound"] * 1.01


def test_escape_time_start_outside_is_instant():
    pair = BISTABLE_GROWING.as_eigenpair()
    region = np.array([[0.1, 0.9]])
    report = check_escape_time(
        pair, kc.make_system("bistable"), region, np.array([[1.5]]), tol=0.01,
        grid_steps=500,
    )
    assert report.verdict == SUPPORTED
    assert report.statistics["max_exit_time"] == 0.0


def test_escape_time_bound_shrinks_with_region():
    pair = BISTABLE_GROWING.as_eigenpair()
    bi = kc.make_system("bistable")
    wide = check_escape_time(pair, bi, np.array([[0.1, 0.9]]), np.array([[0.5]]), 0.01,
                             grid_steps=500)
    narrow = check_escape_time(pair, bi, np.array([[0.4, 0.6]]), np.array([[0.5]]), 0.01,
                               grid_steps=500)
    assert narrow.statistics["t_bound"] < wide.statistics["t_bound"]


def test_escape_time_rejects_decaying_rate():
    report = check_escape_time(
        BISTABLE_DECAYING.as_eigenpair(),
        kc.make_system("bistable"),
        np.array([[0.1, 0.9]]),
        np.array([[0.5]]),
        0.01,
    )
    assert report.verdict == INCONCLUSIVE


def test_basin_constancy_degenerate_constant(ctx):
    constant = compose_eigenpairs(
        BISTABLE_GROWING.as_eigenpair(), BISTABLE_DECAYING.as_eigenpair(), 0, 0
    )
    report = check_basin_constancy(constant, ctx.basins("bistable"), 0.05)
    assert report.verdict == INCONCLUSIVE


def test_basin_constancy_fitted_bistable(ctx):
    basins = ctx.basins("bistable")
    pair = pick_invariant_pair(
        ctx.eigenpairs("bistable"), basins, ctx.dictionary("bistable")
    )
    report = check_basin_constancy(pair, basins, 0.05, ctx.dictionary("bistable"))
    assert report.verdict == SUPPORTED
    assert report.statistics["accuracy"] >= 0.99


def test_zero_on_manifold_oracle_cases():
    growing = BISTABLE_GROWING.as_eigenpair()
    supported = check_zero_on_invariant_manifold(
        growing, np.array([[0.0]]), "stable", 1e-10, region_sup=1.33, bound_cap=100.0
    )
    assert supported.verdict == SUPPORTED

    decaying = BISTABLE_DECAYING.as_eigenpair()
    near_zero = np.linspace(0.01, 0.99, 60)[:, None]
    control = check_zero_on_invariant_manifold(
        decaying, near_zero, "unstable", 0.1, region_sup=3.0, bound_cap=300.0
    )
    assert control.verdict == INCONCLUSIVE
    assert any("unbounded" in note for note in control.notes)

    mismatch = check_zero_on_invariant_manifold(
        decaying, near_zero, "stable", 0.1, region_sup=3.0, bound_cap=300.0
    )
    assert mismatch.verdict == INCONCLUSIVE


def test_closed_orbit_inapplicable_for_damped(ctx):
    report = check_closed_orbit_spectrum(
        ctx.model("duffing"), np.array([[1.0, 0.0]]), 0.05, 0.05, closed_orbits=False
    )
    assert report.verdict == INCONCLUSIVE


def test_closed_orbit_harmonic(ctx):
    pairs = ctx.eigenpairs("harmonic")
    assert max(abs(p.lam.real) for p in pairs) <= 1e-6


def test_blowup_table():
    pair = BISTABLE_GROWING.as_eigenpair()
    radii = np.array([0.1, 0.03, 0.01, 0.003, 0.001])
    report = check_blowup_near_stable_point(pair, np.array([1.0]), radii, threshold=10.0)
    assert report.verdict == SUPPORTED
    assert abs(report.statistics["abs_phi_minus_r0.01"] - 7.017924) < 1e-5
    assert abs(report.statistics["abs_phi_minus_r0.001"] - 22.343906) < 1e-5
    assert report.statistics["monotone_growth"] == 1.0


def test_blowup_threshold_failure():
    pair = BISTABLE_GROWING.as_eigenpair()
    radii = np.array([0.3, 0.2, 0.1])
    report = check_blowup_near_stable_point(pair, np.array([1.0]), radii, threshold=50.0)
    assert report.verdict == VIOLATED


def test_exit_when_bounded_away():
    pair = BISTABLE_DECAYING.as_eigenpair()
    rng = substream(5, "exit-test")
    region = np.array([[0.5, 0.9]])
    starts = sample_box(rng, region, 40)
    report = check_exit_when_bounded_away(
        pair, kc.make_system("bistable"), region, starts, horizon=10.0, grid_steps=1000
    )
    assert report.verdict == SUPPORTED
    assert abs(report.statistics["epsilon"] - 0.2345679) < 1e-6
    assert abs(report.statistics["phi_sup"] - 3.0) < 1e-9
    assert report.statistics["n_no_exit"] == 0.0


def test_exit_inconclusive_for_invariant():
    invariant = compose_eigenpairs(
        BISTABLE_GROWING.as_eigenpair(), BISTABLE_DECAYING.as_eigenpair(), 2, 1
    )
    report = check_exit_when_bounded_away(
        invariant, kc.make_system("bistable"), np.array([[0.5, 0.9]]),
        np.array([[0.6]]), horizon=5.0,
    )
    assert report.verdict == INCONCLUSIVE


def test_exit_growing_oracle_region():
    pair = BISTABLE_GROWING.as_eigenpair()
    rng = substream(6, "exit-grow")
    region = np.array([[0.1, 0.9]])
    starts = sample_box(rng, region, 30)
    report = check_exit_when_bounded_away(
        pair, kc.make_system("bistable"), region, starts, horizon=10.0, grid_steps=1000
    )
    assert report.verdict == SUPPORTED


def test_run_all_checks_count_and_order(ctx):
    reports = run_all_checks(ctx.config)
    assert [r.theorem_id for r in reports] == [
        "lemma1", "theorem2", "theorem3", "theorem4",
        "corollary5", "exit_theorem", "lemma6", "theorem8",
    ]


def test_run_all_checks_deterministic():
    cfg = default_config()
    doc1 = canonical_json([r.to_dict() for r in run_all_checks(cfg)])
    doc2 = canonical_json([r.to_dict() for r in run_all_checks(cfg)])
    assert doc1 == doc2


def test_run_all_checks_only_filter():
    reports = run_all_checks(default_config(), only="theorem2")
    assert len(reports) == 1 and reports[0].theorem_id == "theorem2"
    with pytest.raises(Exception):
        run_all_checks(default_config(), only="lemma99")


def test_check_error_captured(monkeypatch):
    import koopcheck.checks as checks_mod

    def boom(ctx):
        raise RuntimeError("synthetic failure")

    registry = tuple(
        (cid, boom if cid == "theorem2" else fn) for cid, fn in checks_mod.CHECK_REGISTRY
    )
    monkeypatch.setattr(checks_mod, "CHECK_REGISTRY", registry)
    reports = checks_mod.run_all_checks(default_config(), only="theorem2")
    assert reports[0].verdict == INCONCLUSIVE
    assert any("synthetic failure" in note for note in reports[0].notes)
