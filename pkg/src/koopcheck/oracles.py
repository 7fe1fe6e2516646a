"""Closed-form eigenpairs used as ground truth in the theorem checks.

Each oracle is validated at registration: the generator relation
f . grad(phi) = lam * phi must hold within 1e-8 at 1000 seeded points of the
oracle's validation region, with the derivative taken by independent central
differences.  Validation regions stay away from singularities so the finite
difference itself is accurate at that tolerance.

Oracle callables take point arrays of shape (m, d) and return complex (m,).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import KoopcheckError
from .fields import VectorFieldSpec, make_system
from .koopman import Eigenpair
from .rng import substream

VALIDATION_TOL = 1e-8
VALIDATION_POINTS = 1000
_FD_STEP = float(np.cbrt(np.finfo(float).eps))


@dataclass(frozen=True)
class AnalyticOracle:
    """A closed-form eigenpair of a registered system."""

    system: str
    expression_id: str
    lam: complex
    fn: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray], np.ndarray]
    validation_intervals: tuple[tuple[float, float], ...]

    def as_eigenpair(self) -> Eigenpair:
        return Eigenpair(
            lam=self.lam,
            source="analytic-oracle",
            fn=lambda pts: self.fn(np.atleast_2d(np.asarray(pts, dtype=float))),
            domain=lambda pts: self.domain(np.atleast_2d(np.asarray(pts, dtype=float))),
        )

    def spec(self) -> VectorFieldSpec:
        return make_system(self.system)


def _growing_fn(pts: np.ndarray) -> np.ndarray:
    x = pts[:, 0]
    return (x / np.sqrt(np.abs(1.0 - x * x))).astype(complex)


def _growing_domain(pts: np.ndarray) -> np.ndarray:
    x = pts[:, 0]
    return np.abs(1.0 - x * x) > 1e-9


def _decaying_fn(pts: np.ndarray) -> np.ndarray:
    x = pts[:, 0]
    return ((1.0 - x * x) / (x * x)).astype(complex)


def _decaying_domain(pts: np.ndarray) -> np.ndarray:
    return np.abs(pts[:, 0]) > 1e-9


BISTABLE_GROWING = AnalyticOracle(
    system="bistable",
    expression_id="ratio-sqrt",
    lam=1.0 + 0.0j,
    fn=_growing_fn,
    domain=_growing_domain,
    validation_intervals=((-0.8, 0.8), (1.25, 2.0), (-2.0, -1.25)),
)

BISTABLE_DECAYING = AnalyticOracle(
    system="bistable",
    expression_id="inverse-square",
    lam=-2.0 + 0.0j,
    fn=_decaying_fn,
    domain=_decaying_domain,
    validation_intervals=((0.5, 2.0), (-2.0, -0.5)),
)


def linear_coordinate_oracle(system: str, axis: int = 0, parameters=None) -> AnalyticOracle:
    """phi = x_axis with rate equal to the diagonal entry of the linear system."""
    spec = make_system(system, parameters)
    jac = spec.jacobian(np.zeros(spec.dimension))
    if not np.allclose(jac, np.diag(np.diag(jac))):
        raise KoopcheckError("coordinate oracle requires a diagonal linear system")
    lam = complex(jac[axis, axis])
    return AnalyticOracle(
        system=system,
        expression_id=f"coordinate-{axis}",
        lam=lam,
        fn=lambda pts: pts[:, axis].astype(complex),
        domain=lambda pts: np.ones(pts.shape[0], dtype=bool),
        validation_intervals=((-2.0, 2.0),),
    )


def _sample_validation_points(oracle: AnalyticOracle, seed: int, n: int, d: int) -> np.ndarray:
    rng = substream(seed, f"oracle-validate-{oracle.system}-{oracle.expression_id}")
    intervals = np.asarray(oracle.validation_intervals, dtype=float)
    pts = np.empty((n, d))
    for j in range(d):
        pick = rng.integers(0, len(intervals), size=n)
        u = rng.random(n)
        widths = intervals[:, 1] - intervals[:, 0]
        pts[:, j] = intervals[pick, 0] + u * widths[pick]
    return pts


def fd_generator_mismatch(oracle: AnalyticOracle, pts: np.ndarray) -> np.ndarray:
    """|f(x) . grad phi(x) - lam phi(x)| with the gradient by central differences."""
    spec = oracle.spec()
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    grad = np.zeros(pts.shape, dtype=complex)
    for j in range(pts.shape[1]):
        h = _FD_STEP * np.maximum(1.0, np.abs(pts[:, j]))
        up, dn = pts.copy(), pts.copy()
        up[:, j] += h
        dn[:, j] -= h
        grad[:, j] = (oracle.fn(up) - oracle.fn(dn)) / (2.0 * h)
    f = spec.rhs_batch(pts, np.zeros(spec.control_arity))
    return np.abs(np.sum(f * grad, axis=1) - oracle.lam * oracle.fn(pts))


def validate_oracle(
    oracle: AnalyticOracle,
    seed: int = 0,
    n: int = VALIDATION_POINTS,
    tol: float = VALIDATION_TOL,
) -> float:
    """Max generator mismatch over seeded points; raises when above ``tol``."""
    spec = oracle.spec()
    pts = _sample_validation_points(oracle, seed, n, spec.dimension)
    mism = fd_generator_mismatch(oracle, pts)
    worst = float(np.max(mism))
    if worst > tol:
        raise KoopcheckError(
            f"oracle {oracle.expression_id} failed generator validation: {worst:.3e} > {tol:g}"
        )
    return worst


def registered_oracles(seed: int = 0) -> dict[str, AnalyticOracle]:
    """The validated oracle table used by the check suite."""
    table = {
        "bistable-growing": BISTABLE_GROWING,
        "bistable-decaying": BISTABLE_DECAYING,
        "linear1d-coordinate": linear_coordinate_oracle("linear1d"),
    }
    for oracle in table.values():
        validate_oracle(oracle, seed=seed)
    return table
