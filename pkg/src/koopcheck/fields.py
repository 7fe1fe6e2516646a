"""Benchmark vector fields.

Each registered system carries a vectorized right-hand side, an analytic
Jacobian, and a small integer id used by the compiled integrator kernel.
The python callables operate on arrays of shape (m, d) so the fallback
integrator can advance many trajectories at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionError, UnknownSystemError

Rhs = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
Jac = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class VectorFieldSpec:
    """A concrete benchmark system: name, dimension, parameters, control arity."""

    name: str
    dimension: int
    parameters: Mapping[str, float]
    control_arity: int
    sys_id: int
    closed_orbits: bool
    _rhs: Rhs = field(repr=False)
    _jac: Jac | None = field(repr=False)

    def param_vector(self) -> np.ndarray:
        """Parameters in registry order, as consumed by the compiled kernel."""
        order = _REGISTRY[self.name].param_order
        return np.array([self.parameters[k] for k in order], dtype=float)

    def rhs_batch(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """f(x, u) for x of shape (m, d); u of shape (control_arity,)."""
        return self._rhs(x, self.param_vector(), u)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Analytic Jacobian at a single point, or central differences if absent."""
        x = np.asarray(x, dtype=float)
        u = np.zeros(self.control_arity)
        if self._jac is not None:
            return self._jac(x, self.param_vector(), u)
        return fd_jacobian(self, x)


def fd_jacobian(spec: VectorFieldSpec, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the autonomous field at ``x``."""
    x = np.asarray(x, dtype=float)
    d = spec.dimension
    u = np.zeros(spec.control_arity)
    J = np.empty((d, d))
    for j in range(d):
        h = step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (eval_vector_field(spec, xp, u) - eval_vector_field(spec, xm, u)) / (2 * h)
    return J


@dataclass(frozen=True)
class _Entry:
    dimension: int
    control_arity: int
    sys_id: int
    closed_orbits: bool
    param_order: tuple[str, ...]
    defaults: Mapping[str, float]
    rhs: Rhs
    jac: Jac | None


def _rhs_linear1d(x, p, u):
    return p[0] * x


def _jac_linear1d(x, p, u):
    return np.array([[p[0]]])


def _rhs_linear1d_controlled(x, p, u):
    return p[0] * x + u[0]


def _rhs_linear2d(x, p, u):
    out = np.empty_like(x)
    out[:, 0] = p[0] * x[:, 0]
    out[:, 1] = p[1] * x[:, 1]
    return out


def _jac_linear2d(x, p, u):
    return np.diag([p[0], p[1]])


def _rhs_harmonic(x, p, u):
    out = np.empty_like(x)
    out[:, 0] = x[:, 1]
    out[:, 1] = -x[:, 0]
    return out


def _jac_harmonic(x, p, u):
    return np.array([[0.0, 1.0], [-1.0, 0.0]])


def _rhs_bistable(x, p, u):
    return x - x**3


def _jac_bistable(x, p, u):
    return np.array([[1.0 - 3.0 * x[0] ** 2]])


def _rhs_bistable_controlled(x, p, u):
    return x - x**3 + u[0]


def _rhs_duffing(x, p, u):
    out = np.empty_like(x)
    out[:, 0] = x[:, 1]
    out[:, 1] = x[:, 0] - x[:, 0] ** 3 - p[0] * x[:, 1]
    return out


def _jac_duffing(x, p, u):
    return np.array([[0.0, 1.0], [1.0 - 3.0 * x[0] ** 2, -p[0]]])


def _rhs_duffing_undamped(x, p, u):
    out = np.empty_like(x)
    out[:, 0] = x[:, 1]
    out[:, 1] = x[:, 0] - x[:, 0] ** 3
    return out


def _jac_duffing_undamped(x, p, u):
    return np.array([[0.0, 1.0], [1.0 - 3.0 * x[0] ** 2, 0.0]])


_REGISTRY: dict[str, _Entry] = {
    "linear1d": _Entry(1, 0, 0, False, ("a",), {"a": -1.0}, _rhs_linear1d, _jac_linear1d),
    "linear2d": _Entry(
        2, 0, 1, False, ("a1", "a2"), {"a1": -1.0, "a2": -2.0}, _rhs_linear2d, _jac_linear2d
    ),
    "harmonic": _Entry(2, 0, 2, True, (), {}, _rhs_harmonic, _jac_harmonic),
    "bistable": _Entry(1, 0, 3, False, (), {}, _rhs_bistable, _jac_bistable),
    "duffing": _Entry(2, 0, 4, False, ("delta",), {"delta": 0.5}, _rhs_duffing, _jac_duffing),
    "duffing_undamped": _Entry(
        2, 0, 5, True, (), {}, _rhs_duffing_undamped, _jac_duffing_undamped
    ),
    "bistable_controlled": _Entry(
        1, 1, 6, False, (), {}, _rhs_bistable_controlled, _jac_bistable
    ),
    "linear1d_controlled": _Entry(
        1, 1, 7, False, ("a",), {"a": -1.0}, _rhs_linear1d_controlled, _jac_linear1d
    ),
}


def registered_systems() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def make_system(name: str, parameters: Mapping[str, float] | None = None) -> VectorFieldSpec:
    """Instantiate a registered system, overriding default parameters by name."""
    try:
        entry = _REGISTRY[name]
    except KeyError:
        raise UnknownSystemError(f"unknown system {name!r}; known: {sorted(_REGISTRY)}") from None
    params = dict(entry.defaults)
    for key, value in (parameters or {}).items():
        if key not in params:
            raise UnknownSystemError(f"system {name!r} has no parameter {key!r}")
        params[key] = float(value)
    return VectorFieldSpec(
        name=name,
        dimension=entry.dimension,
        parameters=params,
        control_arity=entry.control_arity,
        sys_id=entry.sys_id,
        closed_orbits=entry.closed_orbits,
        _rhs=entry.rhs,
        _jac=entry.jac,
    )


def eval_vector_field(
    spec: VectorFieldSpec, x: np.ndarray, u: np.ndarray | None = None
) -> np.ndarray:
    """Evaluate f(x) (or f(x, u)) at a single state."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dimension,):
        raise DimensionError(f"expected state of shape ({spec.dimension},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DimensionError("state must be finite")
    u_arr = np.zeros(spec.control_arity) if u is None else np.asarray(u, dtype=float)
    if u_arr.shape != (spec.control_arity,):
        raise DimensionError(
            f"expected control of shape ({spec.control_arity},), got {u_arr.shape}"
        )
    return spec.rhs_batch(x[None, :], u_arr)[0]
