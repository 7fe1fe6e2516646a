"""Numerical verification of the spectral stability and continuity results.

Each check turns one theorem-style statement into a sampled test with
explicit tolerances and produces a ``TheoremReport``.  ``run_all_checks``
drives the registered suite from a validated config; any internal error is
captured in that check's report instead of aborting the run.
"""

from __future__ import annotations

import numpy as np

from . import integrate
from .dictionaries import (
    Dictionary,
    build_indicator_augmented,
    build_monomial_dictionary,
    build_rbf_dictionary,
)
from .errors import KoopcheckError
from .fields import VectorFieldSpec, make_system
from .koopman import Eigenpair, KoopmanModel, eig, fit_edmd
from .oracles import registered_oracles
from .reports import (
    INCONCLUSIVE,
    SUPPORTED,
    VIOLATED,
    TheoremReport,
    merge_reports,
    stable_hash,
)
from .rng import sample_box, substream
from .systems import (
    BasinGrid,
    FixedPoint,
    SnapshotPairs,
    basin_grid,
    find_fixed_points,
    sample_snapshot_pairs,
)

LAMBDA_ZERO_TOL = 1e-3  # |lam| below this counts as an invariant (rate-zero) pair
_REAL_PART_FLOOR = 1e-9
_PHI_FLOOR = 1e-12
_MAX_COUNTEREXAMPLES = 50


def _eval(pair: Eigenpair, dictionary: Dictionary | None, pts: np.ndarray) -> np.ndarray:
    return pair.eval_many(dictionary, pts)


def _dense_box_sample(region: np.ndarray, n: int) -> np.ndarray:
    region = np.atleast_2d(np.asarray(region, dtype=float))
    d = region.shape[0]
    per_axis = max(2, int(round(n ** (1.0 / d))))
    axes = [np.linspace(region[j, 0], region[j, 1], per_axis) for j in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _inside_box(region: np.ndarray, pts: np.ndarray) -> np.ndarray:
    region = np.atleast_2d(np.asarray(region, dtype=float))
    pts = np.atleast_2d(pts)
    return np.all((pts >= region[:, 0]) & (pts <= region[:, 1]), axis=1)


def verify_eigen_evolution(
    pair: Eigenpair,
    spec: VectorFieldSpec,
    starts: np.ndarray,
    times: np.ndarray,
    tol: float,
    dictionary: Dictionary | None = None,
    flow_tol: float = 1e-10,
) -> TheoremReport:
    """Deviation of phi(F^t x) from e^{lam t} phi(x), relative to 1 + |phi(x)|."""
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    times = np.asarray(times, dtype=float)
    in_dom = pair.in_domain(starts)
    starts = starts[in_dom]
    tolerances = {"tol": float(tol)}
    inputs = stable_hash(
        {"check": "eigen-evolution", "n": len(starts), "times": times.tolist(), "tol": tol}
    )
    if len(starts) == 0:
        return TheoremReport("eigen_evolution", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["no starts inside the eigenfunction domain"])
    order = np.argsort(times)
    times_sorted = times[order]
    paths, status = integrate.flow_path(spec, starts, times_sorted, flow_tol)
    phi0 = _eval(pair, dictionary, starts)
    escaped = status != integrate.STATUS_RUNNING
    max_dev = 0.0
    skipped_domain = 0
    counter: list[dict] = []
    for k, t in enumerate(times_sorted):
        pts = paths[:, k, :]
        ok = ~escaped & pair.in_domain(pts)
        skipped_domain += int(np.sum(~pair.in_domain(pts) & ~escaped))
        if not np.any(ok):
            continue
        pred = np.exp(pair.lam * t) * phi0[ok]
        dev = np.abs(_eval(pair, dictionary, pts[ok]) - pred) / (1.0 + np.abs(phi0[ok]))
        worst = float(np.max(dev))
        max_dev = max(max_dev, worst)
        for i in np.flatnonzero(dev > tol)[:_MAX_COUNTEREXAMPLES]:
            counter.append(
                {"point": starts[ok][i].tolist(), "t": float(t), "deviation": float(dev[i])}
            )
    stats = {
        "max_deviation": max_dev,
        "n_starts": float(len(starts)),
        "n_escaped": float(np.sum(escaped)),
        "n_domain_skipped": float(skipped_domain),
    }
    verdict = SUPPORTED if max_dev <= tol else VIOLATED
    return TheoremReport("eigen_evolution", verdict, stats, counter[:_MAX_COUNTEREXAMPLES],
                         tolerances, inputs)


def check_fixed_point_zero(
    pairs: list[Eigenpair],
    fixed_points: list[FixedPoint] | tuple[FixedPoint, ...],
    tol_lambda: float,
    tol_phi: float,
    dictionary: Dictionary | None = None,
) -> TheoremReport:
    """Nonzero-rate eigenfunctions must vanish at every fixed point."""
    tolerances = {"tol_lambda": float(tol_lambda), "tol_phi": float(tol_phi)}
    inputs = stable_hash({"check": "lemma1", "n_pairs": len(pairs), "tols": tolerances})
    tested = [p for p in pairs if abs(p.lam) > tol_lambda]
    if not tested:
        return TheoremReport("lemma1", INCONCLUSIVE, {"n_tested": 0.0}, [], tolerances, inputs,
                             ["no pairs with |lam| above tol_lambda"])
    locations = np.vstack([fp.location for fp in fixed_points])
    counter = []
    worst = 0.0
    not_applicable = 0
    for pi, pair in enumerate(tested):
        dom = pair.in_domain(locations)
        not_applicable += int(np.sum(~dom))
        if not np.any(dom):
            continue
        vals = np.abs(_eval(pair, dictionary, locations[dom]))
        worst = max(worst, float(np.max(vals)))
        for i in np.flatnonzero(vals > tol_phi):
            counter.append(
                {
                    "point": locations[dom][i].tolist(),
                    "pair_index": pi,
                    "lam_re": float(pair.lam.real),
                    "deviation": float(vals[i]),
                }
            )
    stats = {
        "n_tested": float(len(tested)),
        "max_abs_phi_at_fixed_points": worst,
        "n_not_applicable": float(not_applicable),
    }
    verdict = SUPPORTED if not counter else VIOLATED
    return TheoremReport("lemma1", verdict, stats, counter[:_MAX_COUNTEREXAMPLES],
                         tolerances, inputs)


def check_level_set_invariance(
    pair: Eigenpair,
    spec: VectorFieldSpec,
    c: float,
    starts: np.ndarray,
    horizon: float,
    drift_tol: float,
    n_times: int = 100,
    dictionary: Dictionary | None = None,
    flow_tol: float = 1e-10,
) -> TheoremReport:
    """Trajectories entering the sublevel set {|phi| <= c} must stay inside."""
    tolerances = {"drift_tol": float(drift_tol), "c": float(c)}
    inputs = stable_hash({"check": "theorem4", "c": c, "horizon": horizon, "n": len(starts)})
    if c <= 0:
        raise KoopcheckError("level c must be positive")
    if pair.lam.real > _REAL_PART_FLOOR:
        return TheoremReport("theorem4", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["requires Re lam <= 0"])
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    dom = pair.in_domain(starts)
    phi0 = np.full(len(starts), np.inf)
    phi0[dom] = np.abs(_eval(pair, dictionary, starts[dom]))
    member = phi0 <= c
    excluded = int(np.sum(~member))
    starts = starts[member]
    if len(starts) == 0:
        return TheoremReport("theorem4", INCONCLUSIVE, {"n_excluded": float(excluded)}, [],
                             tolerances, inputs, ["no starts inside the level set"])
    times = np.linspace(0.0, horizon, n_times + 1)[1:]
    paths, status = integrate.flow_path(spec, starts, times, flow_tol)
    alive = status == integrate.STATUS_RUNNING
    max_exceed = 0.0
    counter = []
    for k in range(len(times)):
        pts = paths[:, k, :]
        ok = alive & pair.in_domain(pts)
        if not np.any(ok):
            continue
        vals = np.abs(_eval(pair, dictionary, pts[ok]))
        exceed = (vals - c) / c
        worst_idx = int(np.argmax(exceed))
        max_exceed = max(max_exceed, float(exceed[worst_idx]))
        for i in np.flatnonzero(exceed > drift_tol)[:_MAX_COUNTEREXAMPLES]:
            counter.append(
                {"point": starts[ok][i].tolist(), "t": float(times[k]),
                 "deviation": float(exceed[i])}
            )
    stats = {
        "max_relative_exceedance": max_exceed,
        "n_starts": float(len(starts)),
        "n_excluded_outside": float(excluded),
        "n_escaped": float(np.sum(~alive)),
    }
    verdict = SUPPORTED if max_exceed <= drift_tol else VIOLATED
    return TheoremReport("theorem4", verdict, stats, counter[:_MAX_COUNTEREXAMPLES],
                         tolerances, inputs)


def check_escape_time(
    pair: Eigenpair,
    spec: VectorFieldSpec,
    region: np.ndarray,
    starts: np.ndarray,
    tol: float,
    dictionary: Dictionary | None = None,
    dense_samples: int = 1001,
    grid_steps: int = 4000,
    flow_tol: float = 1e-10,
) -> TheoremReport:
    """Growth-rate pairs bound the time any trajectory can linger in a region.

    The bound T = ln(C / eps) / Re lam uses eps, C estimated from a dense
    sample of the region; every start must leave by T * (1 + tol).
    """
    region = np.atleast_2d(np.asarray(region, dtype=float))
    tolerances = {"tol": float(tol)}
    inputs = stable_hash({"check": "theorem3", "region": region.tolist(), "n": len(starts)})
    if pair.lam.real <= _REAL_PART_FLOOR:
        return TheoremReport("theorem3", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["requires Re lam > 0"])
    dense = _dense_box_sample(region, dense_samples)
    dense = dense[pair.in_domain(dense)]
    vals = np.abs(_eval(pair, dictionary, dense))
    if len(vals) == 0 or np.min(vals) < _PHI_FLOOR:
        return TheoremReport("theorem3", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["|phi| not bounded away from zero on the region"])
    eps, cap = float(np.min(vals)), float(np.max(vals))
    t_bound = float(np.log(cap / eps) / pair.lam.real)
    deadline = t_bound * (1.0 + tol)
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    inside0 = _inside_box(region, starts)
    exit_times = np.zeros(len(starts))
    times = np.linspace(0.0, deadline, grid_steps + 1)[1:]
    paths, status = integrate.flow_path(spec, starts[inside0], times, flow_tol)
    member = _inside_box(
        region, paths.reshape(-1, region.shape[0])
    ).reshape(paths.shape[0], len(times))
    counter = []
    idx_inside = np.flatnonzero(inside0)
    for row, si in enumerate(idx_inside):
        outside = np.flatnonzero(~member[row])
        if len(outside) == 0:
            exit_times[si] = np.inf
            counter.append({"point": starts[si].tolist(), "deviation": float(deadline)})
        else:
            exit_times[si] = times[outside[0]]
    finite = exit_times[np.isfinite(exit_times)]
    stats = {
        "epsilon": eps,
        "phi_sup": cap,
        "t_bound": t_bound,
        "max_exit_time": float(np.max(finite)) if len(finite) else 0.0,
        "n_starts": float(len(starts)),
        "n_no_exit": float(len(counter)),
    }
    verdict = SUPPORTED if not counter else VIOLATED
    return TheoremReport(
        "theorem3", verdict, stats, counter[:_MAX_COUNTEREXAMPLES], tolerances, inputs,
        ["time bound computed with the real part of the rate"],
    )


def check_basin_constancy(
    pair: Eigenpair,
    basins: BasinGrid,
    separation_tol: float,
    dictionary: Dictionary | None = None,
) -> TheoremReport:
    """Rate-zero eigenfunctions should be constant per basin, distinct across.

    Reports the pooled within-basin spread, the between-basin gap, and the
    accuracy of classifying basins by thresholding Re phi.
    """
    tolerances = {"separation_tol": float(separation_tol)}
    inputs = stable_hash({"check": "lemma6", "n_grid": int(len(basins.labels))})
    labels = basins.attractor_labels
    if len(labels) < 2:
        return TheoremReport("lemma6", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["fewer than two resolved basins"])
    mask = basins.attractor_mask
    pts = basins.grid_points[mask]
    labs = basins.labels[mask]
    phi = np.real(_eval(pair, dictionary, pts))
    means = {lab: float(np.mean(phi[labs == lab])) for lab in labels}
    sq = 0.0
    for lab in labels:
        sq += float(np.sum((phi[labs == lab] - means[lab]) ** 2))
    sigma_w = float(np.sqrt(sq / len(phi)))
    gaps = [
        abs(means[a] - means[b]) for i, a in enumerate(labels) for b in labels[i + 1:]
    ]
    delta = float(min(gaps))
    if delta < 1e-12:
        return TheoremReport(
            "lemma6", INCONCLUSIVE,
            {"sigma_within": sigma_w, "delta_between": delta}, [], tolerances, inputs,
            ["degenerate: no separation between basin means"],
        )
    centers = np.array([means[lab] for lab in labels])
    predicted = np.array(labels)[np.argmin(np.abs(phi[:, None] - centers[None, :]), axis=1)]
    accuracy = float(np.mean(predicted == labs))
    bad = np.flatnonzero(np.abs(phi - np.array([means[lab] for lab in labs])) > separation_tol * delta)
    counter = [
        {"point": pts[i].tolist(), "deviation": float(phi[i] - means[labs[i]])}
        for i in bad[:_MAX_COUNTEREXAMPLES]
    ]
    stats = {
        "sigma_within": sigma_w,
        "delta_between": delta,
        "accuracy": accuracy,
        "n_points": float(len(phi)),
        "n_basins": float(len(labels)),
    }
    verdict = SUPPORTED if sigma_w <= separation_tol * delta else VIOLATED
    return TheoremReport("lemma6", verdict, stats, counter, tolerances, inputs)


def check_zero_on_invariant_manifold(
    pair: Eigenpair,
    manifold_samples: np.ndarray,
    direction: str,
    tol: float,
    region_sup: float,
    bound_cap: float,
    dictionary: Dictionary | None = None,
) -> TheoremReport:
    """Bounded eigenfunctions vanish on the matching invariant manifold."""
    tolerances = {"tol": float(tol), "bound_cap": float(bound_cap)}
    samples = np.atleast_2d(np.asarray(manifold_samples, dtype=float))
    inputs = stable_hash({"check": "corollary5", "direction": direction, "n": len(samples)})
    if direction not in ("stable", "unstable"):
        raise KoopcheckError("direction must be 'stable' or 'unstable'")
    want_positive = direction == "stable"
    if want_positive and pair.lam.real <= _REAL_PART_FLOOR:
        return TheoremReport("corollary5", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["stable-manifold case requires Re lam > 0"])
    if not want_positive and pair.lam.real >= -_REAL_PART_FLOOR:
        return TheoremReport("corollary5", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["unstable-manifold case requires Re lam < 0"])
    dom = pair.in_domain(samples)
    vals = np.abs(_eval(pair, dictionary, samples[dom]))
    if len(vals) == 0:
        return TheoremReport("corollary5", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["no manifold samples in the eigenfunction domain"])
    sup_m = float(np.max(vals))
    if not np.isfinite(sup_m) or sup_m > bound_cap:
        return TheoremReport(
            "corollary5", INCONCLUSIVE,
            {"manifold_sup": sup_m, "region_sup": float(region_sup)}, [], tolerances, inputs,
            ["precondition failed: |phi| unbounded on the manifold samples"],
        )
    limit = tol * region_sup
    counter = [
        {"point": samples[dom][i].tolist(), "deviation": float(vals[i])}
        for i in np.flatnonzero(vals > limit)[:_MAX_COUNTEREXAMPLES]
    ]
    stats = {
        "manifold_sup": sup_m,
        "region_sup": float(region_sup),
        "ratio": sup_m / region_sup if region_sup > 0 else np.inf,
        "n_samples": float(len(vals)),
    }
    verdict = SUPPORTED if not counter else VIOLATED
    return TheoremReport("corollary5", verdict, stats, counter, tolerances, inputs)


def check_closed_orbit_spectrum(
    model: KoopmanModel,
    orbit_samples: np.ndarray,
    tol_re: float,
    tol_phi: float,
    closed_orbits: bool = True,
) -> TheoremReport:
    """On closed-orbit systems, off-axis pairs must vanish along orbits."""
    tolerances = {"tol_re": float(tol_re), "tol_phi": float(tol_phi)}
    inputs = stable_hash({"check": "theorem8", "n_orbit": int(np.atleast_2d(orbit_samples).shape[0])})
    if not closed_orbits:
        return TheoremReport("theorem8", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["system has no bounded closed trajectories"])
    pairs = eig(model)
    orbit = np.atleast_2d(np.asarray(orbit_samples, dtype=float))
    counter = []
    n_off_axis = 0
    worst_ratio = 0.0
    for pi, pair in enumerate(pairs):
        if abs(pair.lam.real) <= tol_re:
            continue
        n_off_axis += 1
        vals = np.abs(pair.eval_many(model.dictionary, orbit))
        sup_orbit = float(np.max(vals))
        worst_ratio = max(worst_ratio, sup_orbit)
        if sup_orbit > tol_phi:
            i = int(np.argmax(vals))
            counter.append(
                {"point": orbit[i].tolist(), "pair_index": pi,
                 "lam_re": float(pair.lam.real), "deviation": sup_orbit}
            )
    re_parts = np.array([abs(p.lam.real) for p in pairs])
    stats = {
        "n_pairs": float(len(pairs)),
        "n_off_axis": float(n_off_axis),
        "fraction_on_axis": float(np.mean(re_parts <= tol_re)) if len(pairs) else 0.0,
        "max_abs_re": float(np.max(re_parts)) if len(pairs) else 0.0,
        "max_orbit_ratio": worst_ratio,
    }
    verdict = SUPPORTED if not counter else VIOLATED
    return TheoremReport("theorem8", verdict, stats, counter[:_MAX_COUNTEREXAMPLES],
                         tolerances, inputs)


def check_blowup_near_stable_point(
    pair: Eigenpair,
    fixed_point: np.ndarray,
    radii: np.ndarray,
    threshold: float,
    dictionary: Dictionary | None = None,
) -> TheoremReport:
    """|phi| must grow without bound on approach to an attracting point."""
    tolerances = {"threshold": float(threshold)}
    radii = np.asarray(radii, dtype=float)
    x_star = np.atleast_1d(np.asarray(fixed_point, dtype=float))
    inputs = stable_hash({"check": "theorem2", "radii": radii.tolist()})
    if pair.lam.real <= _REAL_PART_FLOOR:
        return TheoremReport("theorem2", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["requires Re lam > 0"])
    if np.any(np.diff(radii) >= 0):
        raise KoopcheckError("radii must be strictly decreasing")
    stats: dict[str, float] = {}
    sides = {}
    for sign, tag in ((-1.0, "minus"), (1.0, "plus")):
        pts = x_star[None, :] + sign * radii[:, None] * np.eye(len(x_star))[0]
        vals = np.abs(_eval(pair, dictionary, pts))
        sides[tag] = vals
        for r, v in zip(radii, vals):
            stats[f"abs_phi_{tag}_r{r:g}"] = float(v)
    monotone = all(bool(np.all(np.diff(v) > 0)) for v in sides.values())
    peak = float(max(np.max(v) for v in sides.values()))
    stats["monotone_growth"] = float(monotone)
    stats["peak"] = peak
    counter = []
    if not monotone:
        counter.append({"point": x_star.tolist(), "deviation": 0.0,
                        "note": "growth not monotone in shrinking radius"})
    if peak < threshold:
        counter.append({"point": x_star.tolist(), "deviation": peak,
                        "note": "peak below configured threshold"})
    verdict = SUPPORTED if not counter else VIOLATED
    return TheoremReport("theorem2", verdict, stats, counter, tolerances, inputs)


def check_exit_when_bounded_away(
    pair: Eigenpair,
    spec: VectorFieldSpec,
    region: np.ndarray,
    starts: np.ndarray,
    horizon: float,
    dictionary: Dictionary | None = None,
    dense_samples: int = 1001,
    grid_steps: int = 2000,
    flow_tol: float = 1e-10,
) -> TheoremReport:
    """If phi is pinned in [eps, C] on M and Re lam != 0, trajectories leave M."""
    region = np.atleast_2d(np.asarray(region, dtype=float))
    tolerances = {"horizon": float(horizon)}
    inputs = stable_hash({"check": "exit", "region": region.tolist(), "n": len(starts)})
    if abs(pair.lam.real) <= _REAL_PART_FLOOR:
        return TheoremReport("exit_theorem", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["requires Re lam != 0"])
    dense = _dense_box_sample(region, dense_samples)
    dense = dense[pair.in_domain(dense)]
    raw = _eval(pair, dictionary, dense)
    if len(raw) == 0 or np.max(np.abs(raw.imag)) > 1e-9 * (1 + np.max(np.abs(raw))) or np.min(
        raw.real
    ) < _PHI_FLOOR:
        return TheoremReport("exit_theorem", INCONCLUSIVE, {}, [], tolerances, inputs,
                             ["phi is not real-positive and bounded away from 0 on M"])
    eps, cap = float(np.min(raw.real)), float(np.max(raw.real))
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    inside0 = _inside_box(region, starts)
    times = np.linspace(0.0, horizon, grid_steps + 1)[1:]
    paths, _ = integrate.flow_path(spec, starts[inside0], times, flow_tol)
    member = _inside_box(region, paths.reshape(-1, region.shape[0])).reshape(
        paths.shape[0], len(times)
    )
    exit_times = np.zeros(len(starts))
    counter = []
    for row, si in enumerate(np.flatnonzero(inside0)):
        outside = np.flatnonzero(~member[row])
        if len(outside) == 0:
            exit_times[si] = np.inf
            counter.append({"point": starts[si].tolist(), "deviation": float(horizon)})
        else:
            exit_times[si] = times[outside[0]]
    finite = exit_times[np.isfinite(exit_times)]
    stats = {
        "epsilon": eps,
        "phi_sup": cap,
        "max_exit_time": float(np.max(finite)) if len(finite) else 0.0,
        "n_starts": float(len(starts)),
        "n_no_exit": float(len(counter)),
    }
    verdict = SUPPORTED if not counter else VIOLATED
    return TheoremReport("exit_theorem", verdict, stats, counter[:_MAX_COUNTEREXAMPLES],
                         tolerances, inputs)


def pick_invariant_pair(
    pairs: list[Eigenpair],
    basins: BasinGrid,
    dictionary: Dictionary,
    lambda_tol: float = LAMBDA_ZERO_TOL,
) -> Eigenpair | None:
    """The rate-zero candidate with the widest between-basin separation."""
    labels = basins.attractor_labels
    mask = basins.attractor_mask
    pts = basins.grid_points[mask]
    labs = basins.labels[mask]
    best, best_gap = None, -1.0
    for pair in pairs:
        near_zero = (
            abs(pair.lam_discrete - 1.0) <= lambda_tol
            if pair.lam_discrete is not None
            else abs(pair.lam) <= lambda_tol
        )
        if not near_zero:
            continue
        phi = np.real(pair.eval_many(dictionary, pts))
        means = [float(np.mean(phi[labs == lab])) for lab in labels]
        gap = min(
            abs(means[i] - means[j])
            for i in range(len(means))
            for j in range(i + 1, len(means))
        )
        if gap > best_gap:
            best, best_gap = pair, gap
    return best


class SuiteContext:
    """Lazily built shared systems, grids, and fitted models for one config."""

    def __init__(self, config: dict):
        self.config = config
        self.seed = int(config["master_seed"])
        self.tol = float(config["integrator"]["tol"])
        self._cache: dict[str, object] = {}

    def _memo(self, key: str, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # systems ------------------------------------------------------------
    def system(self, name: str) -> VectorFieldSpec:
        params = {}
        if name == "duffing":
            params = {"delta": self.config["systems"]["duffing_delta"]}
        elif name == "linear2d":
            a1, a2 = self.config["systems"]["linear2d_rates"]
            params = {"a1": a1, "a2": a2}
        return self._memo(f"system:{name}", lambda: make_system(name, params))

    def region(self, name: str) -> np.ndarray:
        sys_cfg = self.config["systems"]
        if self.system(name).dimension == 1:
            return np.array([sys_cfg["region_1d"]], dtype=float)
        return np.array(sys_cfg["region_2d"], dtype=float)

    def fixed_points(self, name: str):
        def build():
            spec = self.system(name)
            region = self.region(name)
            seeds = _dense_box_sample(region, 9 ** spec.dimension)
            fps, _ = find_fixed_points(spec, seeds)
            return fps

        return self._memo(f"fps:{name}", build)

    def basins(self, name: str) -> BasinGrid:
        def build():
            cfg = self.config["basins"]
            spec = self.system(name)
            resolution = (
                (cfg["bistable_resolution"],)
                if spec.dimension == 1
                else tuple(cfg["duffing_resolution"])
            )
            return basin_grid(
                spec,
                self.region(name),
                resolution,
                self.fixed_points(name),
                horizon=cfg["horizon"],
                capture_radius=cfg["capture_radius"],
                tol=self.tol,
            )

        return self._memo(f"basins:{name}", build)

    # dictionaries and fits ----------------------------------------------
    def dictionary(self, fit_name: str) -> Dictionary:
        def build():
            cfg = self.config["fits"][fit_name]
            system = cfg["system"]
            spec = self.system(system)
            if cfg["kind"] == "monomial":
                return build_monomial_dictionary(spec.dimension, cfg["max_degree"])
            if cfg["kind"] == "monomial+indicator":
                base = build_monomial_dictionary(spec.dimension, cfg["max_degree"])
                return build_indicator_augmented(base, self.basins(system))
            rng = substream(self.seed, f"rbf-centers-{fit_name}")
            centers = sample_box(rng, self.region(system), cfg["rbf_centers"])
            base = build_rbf_dictionary(centers, cfg["rbf_shape"])
            return build_indicator_augmented(base, self.basins(system))

        return self._memo(f"dict:{fit_name}", build)

    def snapshot_pairs(self, fit_name: str, holdout: bool = False):
        def build():
            cfg = self.config["fits"][fit_name]
            system = cfg["system"]
            tag = "holdout" if holdout else "train"
            rng = substream(self.seed, f"pairs-{fit_name}-{tag}")
            seed = int(rng.integers(0, 2**31 - 1))
            n = cfg["n_samples"] // 4 if holdout else cfg["n_samples"]
            pairs = sample_snapshot_pairs(
                self.system(system), self.region(system), n, cfg["dt"], seed, tol=self.tol
            )
            margin = cfg.get("boundary_margin", 0.0)
            source = self.dictionary(fit_name).indicator_source
            if margin > 0 and source is not None:
                # indicator labels are untrusted near the basin boundary; keep
                # only pairs whose endpoints both clear the margin
                keep = (source.boundary_clearance(pairs.x_states) >= margin) & (
                    source.boundary_clearance(pairs.y_states) >= margin
                )
                pairs = SnapshotPairs(
                    x_states=pairs.x_states[keep],
                    y_states=pairs.y_states[keep],
                    dt=pairs.dt,
                    seed=pairs.seed,
                    region=pairs.region,
                    resample_count=pairs.resample_count,
                )
            return pairs

        return self._memo(f"pairs:{fit_name}:{holdout}", build)

    def holdout_deviation(self, fit_name: str, pair: Eigenpair) -> float:
        """Max single-step evolution deviation of one pair on held-out pairs."""
        hold = self.snapshot_pairs(fit_name, holdout=True)
        dictionary = self.dictionary(fit_name)
        px = dictionary.eval_many(hold.x_states)
        py = dictionary.eval_many(hold.y_states)
        phx, phy = px @ pair.w, py @ pair.w
        return float(np.max(np.abs(phy - pair.lam_discrete * phx) / (1.0 + np.abs(phx))))

    def model(self, fit_name: str) -> KoopmanModel:
        def build():
            cfg = self.config["fits"][fit_name]
            return fit_edmd(self.snapshot_pairs(fit_name), self.dictionary(fit_name),
                            cfg["gamma"])

        return self._memo(f"model:{fit_name}", build)

    def eigenpairs(self, fit_name: str) -> list[Eigenpair]:
        return self._memo(f"eig:{fit_name}", lambda: eig(self.model(fit_name)))

    def oracles(self):
        return self._memo("oracles", lambda: registered_oracles(self.seed))


# ---------------------------------------------------------------------------
# registered suite


def _run_lemma1(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["lemma1"]
    fps = ctx.fixed_points("bistable")
    fitted = check_fixed_point_zero(
        ctx.eigenpairs("bistable"),
        fps,
        cfg["tol_lambda_fitted"],
        cfg["tol_phi_fitted"],
        ctx.dictionary("bistable"),
    )
    fitted.theorem_id = "lemma1.fitted"
    oracles = ctx.oracles()
    oracle_pairs = [oracles["bistable-growing"].as_eigenpair(),
                    oracles["bistable-decaying"].as_eigenpair()]
    oracle = check_fixed_point_zero(
        oracle_pairs, fps, cfg["tol_lambda_oracle"], cfg["tol_phi_oracle"]
    )
    oracle.theorem_id = "lemma1.oracle"
    return merge_reports("lemma1", [fitted, oracle])


def _run_theorem2(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["theorem2"]
    pair = ctx.oracles()["bistable-growing"].as_eigenpair()
    return check_blowup_near_stable_point(
        pair, np.array([1.0]), np.array(cfg["radii"], dtype=float), cfg["threshold"]
    )


def _run_theorem3(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["theorem3"]
    pair = ctx.oracles()["bistable-growing"].as_eigenpair()
    rng = substream(ctx.seed, "theorem3-starts")
    region = np.array([cfg["region"]], dtype=float)
    starts = sample_box(rng, region, cfg["n_starts"])
    return check_escape_time(
        pair,
        ctx.system("bistable"),
        region,
        starts,
        cfg["tol"],
        dense_samples=cfg["dense_samples"],
        grid_steps=cfg["grid_steps"],
        flow_tol=ctx.tol,
    )


def _run_theorem4(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["theorem4"]
    pair = ctx.oracles()["bistable-decaying"].as_eigenpair()
    rng = substream(ctx.seed, "theorem4-starts")
    half = cfg["n_starts"] // 2
    lo = 1.0 / np.sqrt(2.0)
    right = lo + (2.0 - lo) * rng.random(half)
    left = -(lo + (2.0 - lo) * rng.random(cfg["n_starts"] - half))
    starts = np.concatenate([right, left])[:, None]
    return check_level_set_invariance(
        pair,
        ctx.system("bistable"),
        cfg["c"],
        starts,
        cfg["horizon"],
        cfg["drift_tol"],
        n_times=cfg["n_times"],
        flow_tol=ctx.tol,
    )


def _trace_unstable_manifold(ctx: SuiteContext, offset: float, horizon: float) -> np.ndarray:
    """Forward shooting from small offsets along the saddle's unstable direction."""
    spec = ctx.system("duffing")
    fps = ctx.fixed_points("duffing")
    saddle = next(fp for fp in fps if fp.stability_class == "saddle")
    jac = spec.jacobian(saddle.location)
    vals, vecs = np.linalg.eig(jac)
    direction = np.real(vecs[:, int(np.argmax(np.real(vals)))])
    direction = direction / np.linalg.norm(direction)
    starts = np.vstack(
        [saddle.location + offset * direction, saddle.location - offset * direction]
    )
    times = np.linspace(0.0, horizon, 200)[1:]
    paths, _ = integrate.flow_path(spec, starts, times, ctx.tol)
    return paths.reshape(-1, spec.dimension)


def _run_corollary5(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["corollary5"]
    oracles = ctx.oracles()

    growing = oracles["bistable-growing"].as_eigenpair()
    region_sup = float(
        np.max(np.abs(growing.eval_many(None, np.linspace(-0.8, 0.8, 401)[:, None])))
    )
    oracle_part = check_zero_on_invariant_manifold(
        growing, np.array([[0.0]]), "stable", 1e-10, region_sup,
        bound_cap=cfg["bound_cap_factor"] * region_sup,
    )
    oracle_part.theorem_id = "corollary5.oracle"

    decaying = oracles["bistable-decaying"].as_eigenpair()
    near_zero = np.linspace(0.01, 0.99, 99)[:, None]
    sup_dec = float(
        np.max(np.abs(decaying.eval_many(None, np.linspace(0.5, 2.0, 301)[:, None])))
    )
    negative_control = check_zero_on_invariant_manifold(
        decaying, near_zero, "unstable", cfg["tol_fitted"], sup_dec,
        bound_cap=cfg["bound_cap_factor"] * sup_dec,
    )
    negative_control.theorem_id = "corollary5.unbounded_control"
    if negative_control.verdict == INCONCLUSIVE:
        # the control exists to show the boundedness precondition firing; an
        # inconclusive outcome here is the expected (passing) behaviour
        negative_control.notes.append(
            "negative control behaved as expected: boundedness precondition fired"
        )
        negative_control.verdict = SUPPORTED
    else:
        negative_control.verdict = VIOLATED
        negative_control.notes.append(
            "negative control failed: unbounded oracle was not rejected"
        )

    manifold = _trace_unstable_manifold(ctx, cfg["manifold_offset"], cfg["manifold_horizon"])
    pairs = ctx.eigenpairs("duffing")
    lo, hi = cfg["rate_band"]
    candidates = [p for p in pairs if lo <= p.lam.real <= hi]
    fitted_part = None
    if candidates:
        # best-resolved genuinely decaying mode: smallest holdout deviation
        best = min(candidates, key=lambda p: ctx.holdout_deviation("duffing", p))
        fitted_part = check_zero_on_invariant_manifold(
            best, manifold, "unstable", cfg["tol_fitted"], 1.0,
            bound_cap=cfg["bound_cap_factor"], dictionary=ctx.dictionary("duffing"),
        )
        fitted_part.theorem_id = "corollary5.fitted"
        fitted_part.notes.append(
            f"tolerance {cfg['tol_fitted']} chosen empirically; tested pair rate "
            f"{best.lam.real:.4f}{best.lam.imag:+.4f}j"
        )
    parts = [oracle_part, negative_control] + ([fitted_part] if fitted_part else [])
    return merge_reports("corollary5", parts)


def _run_exit_theorem(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["exit_theorem"]
    pair = ctx.oracles()["bistable-decaying"].as_eigenpair()
    rng = substream(ctx.seed, "exit-starts")
    region = np.array([cfg["region"]], dtype=float)
    starts = sample_box(rng, region, cfg["n_starts"])
    return check_exit_when_bounded_away(
        pair,
        ctx.system("bistable"),
        region,
        starts,
        cfg["horizon"],
        grid_steps=cfg["grid_steps"],
        flow_tol=ctx.tol,
    )


def _run_lemma6(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["lemma6"]
    parts = []
    for fit_name in ("bistable", "duffing"):
        basins = ctx.basins(fit_name)
        pair = pick_invariant_pair(
            ctx.eigenpairs(fit_name), basins, ctx.dictionary(fit_name), cfg["lambda_tol"]
        )
        if pair is None:
            part = TheoremReport(f"lemma6.{fit_name}", INCONCLUSIVE, {}, [],
                                 {"lambda_tol": cfg["lambda_tol"]}, "",
                                 ["no rate-zero eigenpair found"])
        else:
            part = check_basin_constancy(
                pair, basins, cfg["separation_tol"], ctx.dictionary(fit_name)
            )
            part.theorem_id = f"lemma6.{fit_name}"
        parts.append(part)
    return merge_reports("lemma6", parts)


def _run_theorem8(ctx: SuiteContext) -> TheoremReport:
    cfg = ctx.config["checks"]["theorem8"]
    parts = []

    harmonic_pairs = ctx.eigenpairs("harmonic")
    max_re = max(abs(p.lam.real) for p in harmonic_pairs)
    harmonic_part = TheoremReport(
        "theorem8.harmonic",
        SUPPORTED if max_re <= cfg["axis_tol"] else VIOLATED,
        {"max_abs_re": float(max_re), "n_pairs": float(len(harmonic_pairs))},
        [] if max_re <= cfg["axis_tol"] else [{"point": [], "deviation": float(max_re)}],
        {"axis_tol": cfg["axis_tol"]},
        stable_hash({"check": "theorem8-harmonic"}),
    )
    parts.append(harmonic_part)

    spec = ctx.system("duffing_undamped")
    times = np.linspace(0.0, cfg["orbit_time"], cfg["orbit_samples"] + 1)[1:]
    starts = np.array(cfg["orbit_starts"], dtype=float)
    paths, _ = integrate.flow_path(spec, starts, times, ctx.tol)
    orbit = paths.reshape(-1, spec.dimension)
    undamped_part = check_closed_orbit_spectrum(
        ctx.model("duffing_undamped"), orbit, cfg["tol_re"], cfg["tol_phi"],
        closed_orbits=spec.closed_orbits,
    )
    undamped_part.theorem_id = "theorem8.duffing_undamped"
    parts.append(undamped_part)
    return merge_reports("theorem8", parts)


CHECK_REGISTRY: tuple[tuple[str, object], ...] = (
    ("lemma1", _run_lemma1),
    ("theorem2", _run_theorem2),
    ("theorem3", _run_theorem3),
    ("theorem4", _run_theorem4),
    ("corollary5", _run_corollary5),
    ("exit_theorem", _run_exit_theorem),
    ("lemma6", _run_lemma6),
    ("theorem8", _run_theorem8),
)


def run_all_checks(config: dict, only: str | None = None) -> list[TheoremReport]:
    """Run the registered checks in fixed order; errors become reports."""
    ctx = SuiteContext(config)
    ids = [cid for cid, _ in CHECK_REGISTRY]
    if only is not None and only not in ids:
        raise KoopcheckError(f"unknown check id {only!r}; known: {ids}")
    reports = []
    for check_id, runner in CHECK_REGISTRY:
        if only is not None and check_id != only:
            continue
        try:
            reports.append(runner(ctx))
        except Exception as exc:  # captured, never aborts the suite
            reports.append(
                TheoremReport(
                    check_id,
                    INCONCLUSIVE,
                    {},
                    [],
                    {},
                    stable_hash({"check": check_id, "error": True}),
                    [f"internal error: {type(exc).__name__}: {exc}"],
                )
            )
    return reports


def aggregate_verdict(reports: list[TheoremReport]) -> str:
    if any(r.verdict == VIOLATED for r in reports):
        return VIOLATED
    if all(r.verdict == SUPPORTED for r in reports):
        return SUPPORTED
    return INCONCLUSIVE
