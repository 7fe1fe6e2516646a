"""Fixed points, basins of attraction, and snapshot sampling.

All procedures are deterministic given the system spec and a seed; batch
work is ordered by input index so results never depend on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import integrate
from .errors import KoopcheckError
from .fields import VectorFieldSpec, eval_vector_field
from .rng import sample_box

UNRESOLVED = -1
ESCAPED = -2

NEWTON_MAX_ITER = 50
DEDUP_TOL = 1e-8
HYPERBOLIC_TOL = 1e-6


@dataclass(frozen=True)
class FixedPoint:
    location: np.ndarray
    jacobian_eigenvalues: np.ndarray
    stability_class: str  # stable | unstable | saddle | non-hyperbolic
    residual_norm: float


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    integrator_tolerance: float

    def to_csv(self) -> str:
        d = self.states.shape[1]
        header = "t," + ",".join(f"x{i + 1}" for i in range(d))
        lines = [header]
        for t, row in zip(self.times, self.states):
            lines.append(",".join(repr(float(v)) for v in (t, *row)))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BasinGrid:
    grid_points: np.ndarray            # (P, d)
    labels: np.ndarray                 # (P,) fixed-point index, UNRESOLVED or ESCAPED
    fixed_points: tuple[FixedPoint, ...]
    horizon: float
    capture_radius: float

    @property
    def attractor_labels(self) -> tuple[int, ...]:
        """Indices of stable fixed points that actually captured grid points."""
        stable = {i for i, fp in enumerate(self.fixed_points) if fp.stability_class == "stable"}
        present = sorted(set(self.labels.tolist()) & stable)
        return tuple(present)

    @property
    def attractor_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.labels), dtype=bool)
        for lab in self.attractor_labels:
            mask |= self.labels == lab
        return mask


@dataclass(frozen=True)
class SnapshotPairs:
    x_states: np.ndarray
    y_states: np.ndarray
    dt: float
    seed: int
    region: np.ndarray
    resample_count: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.x_states.shape != self.y_states.shape:
            raise ValueError("x and y snapshot blocks must have equal shapes")


def classify_stability(eigenvalues: np.ndarray, tol: float = HYPERBOLIC_TOL) -> str:
    re = np.real(eigenvalues)
    if np.any(np.abs(re) < tol):
        return "non-hyperbolic"
    if np.all(re < 0):
        return "stable"
    if np.all(re > 0):
        return "unstable"
    return "saddle"


def find_fixed_points(
    spec: VectorFieldSpec,
    seeds: np.ndarray,
    tol: float = 1e-10,
) -> tuple[list[FixedPoint], int]:
    """Newton roots of f from the given seeds, deduplicated and classified.

    Returns (fixed_points, dropped_count); non-convergent seeds are dropped.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    roots: list[np.ndarray] = []
    dropped = 0
    for seed in seeds:
        x = seed.copy()
        ok = False
        for _ in range(NEWTON_MAX_ITER):
            fx = eval_vector_field(spec, x)
            if np.max(np.abs(fx)) <= tol:
                ok = True
                break
            J = spec.jacobian(x)
            try:
                step = np.linalg.solve(J, fx)
            except np.linalg.LinAlgError:
                break
            x = x - step
            if not np.all(np.isfinite(x)):
                break
        if not ok:
            dropped += 1
            continue
        if any(np.max(np.abs(x - r)) <= DEDUP_TOL for r in roots):
            continue
        roots.append(x)

    roots.sort(key=lambda r: tuple(r))
    out = []
    for r in roots:
        eigs = np.linalg.eigvals(spec.jacobian(r))
        eigs = eigs[np.lexsort((np.imag(eigs), np.real(eigs)))]
        out.append(
            FixedPoint(
                location=r,
                jacobian_eigenvalues=eigs,
                stability_class=classify_stability(eigs),
                residual_norm=float(np.linalg.norm(eval_vector_field(spec, r))),
            )
        )
    return out, dropped


def classify_basin(
    spec: VectorFieldSpec,
    x0: np.ndarray,
    fixed_points: list[FixedPoint] | tuple[FixedPoint, ...],
    horizon: float = 50.0,
    capture_radius: float = 1e-2,
    tol: float = integrate.DEFAULT_TOL,
) -> int:
    """Index of the fixed point whose capture ball holds F^horizon(x0)."""
    labels = classify_basin_batch(spec, np.atleast_2d(x0), fixed_points, horizon, capture_radius, tol)
    return int(labels[0])


def classify_basin_batch(
    spec: VectorFieldSpec,
    x0: np.ndarray,
    fixed_points: list[FixedPoint] | tuple[FixedPoint, ...],
    horizon: float = 50.0,
    capture_radius: float = 1e-2,
    tol: float = integrate.DEFAULT_TOL,
) -> np.ndarray:
    if horizon <= 0 or capture_radius <= 0:
        raise ValueError("horizon and capture_radius must be positive")
    ends, status = integrate.flow_batch(spec, x0, horizon, tol)
    labels = np.full(len(ends), UNRESOLVED, dtype=np.int64)
    labels[status == integrate.STATUS_ESCAPED] = ESCAPED
    ok = status == integrate.STATUS_RUNNING
    for i, fp in enumerate(fixed_points):
        near = ok & (np.linalg.norm(ends - fp.location[None, :], axis=1) <= capture_radius)
        labels[near & (labels == UNRESOLVED)] = i
    return labels


def basin_grid(
    spec: VectorFieldSpec,
    region: np.ndarray,
    resolution: tuple[int, ...],
    fixed_points: list[FixedPoint] | tuple[FixedPoint, ...],
    horizon: float = 50.0,
    capture_radius: float = 1e-2,
    tol: float = integrate.DEFAULT_TOL,
) -> BasinGrid:
    """Label a regular grid over an axis-aligned box by simulation."""
    region = np.asarray(region, dtype=float)
    axes = [np.linspace(region[j, 0], region[j, 1], resolution[j]) for j in range(len(resolution))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    labels = classify_basin_batch(spec, pts, fixed_points, horizon, capture_radius, tol)
    return BasinGrid(
        grid_points=pts,
        labels=labels,
        fixed_points=tuple(fixed_points),
        horizon=horizon,
        capture_radius=capture_radius,
    )


def sample_snapshot_pairs(
    spec: VectorFieldSpec,
    region: np.ndarray,
    n: int,
    dt: float,
    seed: int,
    tol: float = integrate.DEFAULT_TOL,
    max_resample_rounds: int = 50,
) -> SnapshotPairs:
    """n pairs (x, F^dt(x)) with x uniform in the box; escapes are resampled."""
    if n <= 0:
        raise ValueError("n must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")
    region = np.asarray(region, dtype=float)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    xs = sample_box(rng, region, n)
    ys, status = integrate.flow_batch(spec, xs, dt, tol)
    resamples = 0
    rounds = 0
    while np.any(status != integrate.STATUS_RUNNING):
        rounds += 1
        if rounds > max_resample_rounds:
            raise KoopcheckError("snapshot sampling kept escaping; shrink the region or dt")
        bad = np.flatnonzero(status != integrate.STATUS_RUNNING)
        resamples += len(bad)
        xs[bad] = sample_box(rng, region, len(bad))
        ys[bad], status[bad] = integrate.flow_batch(spec, xs[bad], dt, tol)
    return SnapshotPairs(
        x_states=xs, y_states=ys, dt=dt, seed=seed, region=region, resample_count=resamples
    )


def simulate_trajectory(
    spec: VectorFieldSpec,
    x0: np.ndarray,
    t: float,
    n_samples: int = 201,
    tol: float = integrate.DEFAULT_TOL,
) -> Trajectory:
    """Trajectory sampled on a uniform time grid; negative ``t`` runs backward."""
    x0 = np.asarray(x0, dtype=float)
    ts = np.linspace(0.0, abs(t), n_samples)
    if t == 0.0:
        states = np.repeat(x0[None, :], n_samples, axis=0)
        return Trajectory(times=ts, states=states, integrator_tolerance=tol)
    if t < 0.0:
        states = np.empty((n_samples, spec.dimension))
        states[0] = x0
        for i, ti in enumerate(ts[1:], start=1):
            states[i] = integrate.flow(spec, x0, -ti, tol)
        return Trajectory(times=-ts, states=states, integrator_tolerance=tol)
    states, status = integrate.flow_path(spec, x0[None, :], ts, tol)
    if status[0] != integrate.STATUS_RUNNING:
        raise KoopcheckError("trajectory escaped or failed; reduce t or move x0")
    return Trajectory(times=ts, states=states[0], integrator_tolerance=tol)
