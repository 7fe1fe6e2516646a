"""Flow maps for the benchmark systems.

A compiled Dormand-Prince kernel handles the registered fields when the
extension built; a vectorized numpy implementation of the same scheme is the
fallback and also serves arbitrary python right-hand sides (lifted rollouts).
Backend choice is made at import and can be forced with the environment
variable ``KOOPCHECK_BACKEND=python|compiled``.
"""

from __future__ import annotations

import os
from typing import Callable, Sequence

import numpy as np

from . import _rk45_np
from .errors import FiniteEscapeError, IntegrationError
from .fields import VectorFieldSpec

try:
    from . import _rk45 as _compiled
except ImportError:  # pragma: no cover - build-dependent
    _compiled = None

_FORCED = os.environ.get("KOOPCHECK_BACKEND", "").strip().lower()
if _FORCED == "python":
    _compiled = None
elif _FORCED == "compiled" and _compiled is None:  # pragma: no cover
    raise ImportError("KOOPCHECK_BACKEND=compiled but the extension is not built")

DEFAULT_TOL = 1e-9
ESCAPE_BOUND = 1e6

STATUS_RUNNING = _rk45_np.STATUS_RUNNING
STATUS_ESCAPED = _rk45_np.STATUS_ESCAPED
STATUS_FAILED = _rk45_np.STATUS_FAILED


def active_backend() -> str:
    return "python" if _compiled is None else "compiled"


def available_backends() -> tuple[str, ...]:
    return ("python",) if _compiled is None else ("python", "compiled")


def _run_paths(
    spec: VectorFieldSpec,
    x0: np.ndarray,
    times: np.ndarray,
    tol: float,
    u: np.ndarray | None,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Core dispatcher: states (m, k, d), status (m,), t_reached (m,)."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or (len(times) > 1 and np.any(np.diff(times) <= 0)):
        raise ValueError("sample times must be strictly increasing")
    if np.any(times < 0):
        raise ValueError("sample times must be non-negative; use flow(..., t<0) for backward runs")
    if tol <= 0:
        raise ValueError("tol must be positive")
    u_arr = np.zeros(spec.control_arity) if u is None else np.asarray(u, dtype=float)
    if u_arr.shape != (spec.control_arity,):
        raise ValueError(f"control vector must have length {spec.control_arity}")

    use = backend or active_backend()
    if use == "compiled" and _compiled is not None:
        u_scalar = float(u_arr[0]) if spec.control_arity else 0.0
        return _compiled.rk45_batch_path(
            spec.sys_id,
            np.ascontiguousarray(spec.param_vector()),
            u_scalar,
            1.0,
            np.ascontiguousarray(x0),
            np.ascontiguousarray(times),
            tol,
            tol,
            ESCAPE_BOUND,
        )

    def fn(y: np.ndarray) -> np.ndarray:
        return spec.rhs_batch(y, u_arr)

    return _rk45_np.solve_batch_path(fn, x0, times, tol, tol, ESCAPE_BOUND)


def _backward(spec: VectorFieldSpec, u: np.ndarray | None):
    """Time-reversed field wrapper used for negative-time flows."""
    u_arr = np.zeros(spec.control_arity) if u is None else np.asarray(u, dtype=float)

    def fn(y: np.ndarray) -> np.ndarray:
        return -spec.rhs_batch(y, u_arr)

    return fn


def flow(
    spec: VectorFieldSpec,
    x0: Sequence[float] | np.ndarray,
    t: float,
    tol: float = DEFAULT_TOL,
    u: np.ndarray | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """F^t(x0) for a single state; negative ``t`` integrates backward."""
    x0 = np.asarray(x0, dtype=float)
    if t == 0.0:
        return x0.copy()
    if t < 0.0:
        if backend is None and _compiled is not None:
            params = np.ascontiguousarray(spec.param_vector())
            u_scalar = float(u[0]) if (u is not None and spec.control_arity) else 0.0
            states, status, treach = _compiled.rk45_batch_path(
                spec.sys_id, params, u_scalar, -1.0,
                np.ascontiguousarray(np.atleast_2d(x0)),
                np.array([-t]), tol, tol, ESCAPE_BOUND,
            )
        else:
            states, status, treach = _rk45_np.solve_batch_path(
                _backward(spec, u), np.atleast_2d(x0), np.array([-t]), tol, tol, ESCAPE_BOUND
            )
        _raise_on_bad(status[0], treach[0], states[0, -1], forward=False)
        return states[0, -1]
    states, status, treach = _run_paths(spec, np.atleast_2d(x0), np.array([t]), tol, u, backend)
    _raise_on_bad(status[0], treach[0], states[0, -1], forward=True)
    return states[0, -1]


def _raise_on_bad(status: int, t_reached: float, state: np.ndarray, forward: bool) -> None:
    if status == STATUS_ESCAPED:
        t = t_reached if forward else -t_reached
        raise FiniteEscapeError(t, state, ESCAPE_BOUND)
    if status == STATUS_FAILED:
        raise IntegrationError(f"adaptive step failed near t={t_reached:.6g}")


def flow_batch(
    spec: VectorFieldSpec,
    x0: np.ndarray,
    t: float,
    tol: float = DEFAULT_TOL,
    u: np.ndarray | None = None,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """F^t applied to every row of ``x0``; returns (states, status).

    Escapes do not raise here; callers inspect the status vector.
    """
    states, status, _ = _run_paths(spec, x0, np.array([t]), tol, u, backend)
    return states[:, -1, :], status


def flow_path(
    spec: VectorFieldSpec,
    x0: np.ndarray,
    times: np.ndarray,
    tol: float = DEFAULT_TOL,
    u: np.ndarray | None = None,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample trajectories from every row of ``x0`` at the given times.

    Returns (states (m, k, d), status (m,)).
    """
    states, status, _ = _run_paths(spec, x0, times, tol, u, backend)
    return states, status


def integrate_rhs(
    fn: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    times: np.ndarray,
    tol: float = DEFAULT_TOL,
    escape_bound: float = ESCAPE_BOUND,
) -> tuple[np.ndarray, np.ndarray]:
    """Adaptive integration of an arbitrary batch right-hand side.

    Always uses the numpy backend; used for lifted (linear) rollouts where the
    field is not one of the registered systems.
    """
    states, status, _ = _rk45_np.solve_batch_path(
        fn, y0, np.asarray(times, dtype=float), tol, tol, escape_bound
    )
    return states, status
