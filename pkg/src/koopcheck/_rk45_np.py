"""Pure-numpy adaptive Dormand-Prince 5(4) integrator.

Advances a whole batch of trajectories at once while keeping one independent
step-size controller per trajectory, so each trajectory follows exactly the
same accept/reject sequence it would follow in a scalar loop.  The compiled
kernel in ``_rk45.pyx`` implements the identical tableau and controller.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

# Dormand-Prince 5(4) tableau; the fifth-order solution is propagated, the
# embedded fourth-order difference drives step control (FSAL: 7th stage).
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -0.2  # -1 / (order(4) + 1)

STATUS_RUNNING = 0
STATUS_DONE = 1  # reserved for callers; the solver itself leaves finished rows RUNNING
STATUS_ESCAPED = 2
STATUS_FAILED = 3

_MAX_ATTEMPTS = 10_000_000


def _rms(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean(v * v, axis=-1))


def initial_step(
    fn: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    f0: np.ndarray,
    t_span: float,
    rtol: float,
    atol: float,
) -> np.ndarray:
    """Hairer-style starting step, vectorized over the batch."""
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.where(d1 > 0, d1, 1.0))
    y1 = y0 + h0[:, None] * f0
    f1 = fn(y1)
    d2 = _rms((f1 - f0) / scale) / h0
    dm = np.maximum(d1, d2)
    h1 = np.where(
        dm <= 1e-15,
        np.maximum(1e-6, h0 * 1e-3),
        (0.01 / np.where(dm > 0, dm, 1.0)) ** 0.2,
    )
    return np.minimum(np.minimum(100.0 * h0, h1), t_span)


class BatchRK45:
    """Batch of independent adaptive trajectories under a shared vector field.

    ``fn`` maps states of shape (m, d) to derivatives of shape (m, d).  All
    trajectories share a common clock: ``advance_to`` integrates every
    still-running trajectory from its current time to the target time.
    """

    def __init__(
        self,
        fn: Callable[[np.ndarray], np.ndarray],
        y0: np.ndarray,
        rtol: float,
        atol: float,
        escape_bound: float = 1e6,
    ):
        y0 = np.atleast_2d(np.asarray(y0, dtype=float))
        self.fn = fn
        self.m, self.d = y0.shape
        self.t = np.zeros(self.m)
        self.y = y0.copy()
        self.rtol = float(rtol)
        self.atol = float(atol)
        self.escape_bound = float(escape_bound)
        self.status = np.full(self.m, STATUS_RUNNING, dtype=np.int64)
        bad0 = ~np.all(np.isfinite(y0), axis=1) | (np.max(np.abs(y0), axis=1) > self.escape_bound)
        self.status[bad0] = STATUS_ESCAPED
        self.f = fn(self.y)
        self.h_abs = np.zeros(self.m)
        self._rejected = np.zeros(self.m, dtype=bool)
        self._h_init = False

    def _ensure_h(self, t_target: float) -> None:
        if not self._h_init:
            self.h_abs = initial_step(self.fn, self.y, self.f, t_target, self.rtol, self.atol)
            self._h_init = True

    def advance_to(self, t_target: float) -> None:
        """Integrate all running trajectories to ``t_target`` (>= current time)."""
        self._ensure_h(t_target)
        pending = (self.status == STATUS_RUNNING) & (self.t < t_target)
        attempts = 0
        while np.any(pending):
            attempts += 1
            if attempts > _MAX_ATTEMPTS:
                self.status[pending] = STATUS_FAILED
                break
            idx = np.flatnonzero(pending)
            t = self.t[idx]
            y = self.y[idx]
            min_step = 10.0 * np.abs(np.nextafter(t, np.inf) - t)
            h_abs = np.maximum(self.h_abs[idx], min_step)
            # land exactly on the target when the controller step would cross it
            final = h_abs >= (t_target - t)
            t_new = np.where(final, t_target, t + h_abs)
            h = t_new - t

            K = np.empty((len(idx), 7, self.d))
            K[:, 0] = self.f[idx]
            for s in range(1, 6):
                ys = y + h[:, None] * np.einsum("mkd,k->md", K[:, :s], A[s, :s])
                K[:, s] = self.fn(ys)
            y_new = y + h[:, None] * np.einsum("mkd,k->md", K[:, :6], B)
            K[:, 6] = self.fn(y_new)
            err = h[:, None] * np.einsum("mkd,k->md", K, E)
            scale = self.atol + np.maximum(np.abs(y), np.abs(y_new)) * self.rtol
            err_norm = _rms(err / scale)
            err_norm = np.where(np.isfinite(err_norm), err_norm, np.inf)

            accept = err_norm < 1.0
            with np.errstate(divide="ignore", over="ignore"):
                raw = SAFETY * err_norm**ERROR_EXPONENT
            grow = np.where(err_norm == 0.0, MAX_FACTOR, np.minimum(MAX_FACTOR, raw))
            grow = np.where(self._rejected[idx], np.minimum(1.0, grow), grow)
            shrink = np.maximum(MIN_FACTOR, raw)

            acc_idx = idx[accept]
            if acc_idx.size:
                ya = y_new[accept]
                self.t[acc_idx] = t_new[accept]
                self.y[acc_idx] = ya
                self.f[acc_idx] = K[accept, 6]
                self.h_abs[acc_idx] = h[accept] * grow[accept]
                self._rejected[acc_idx] = False
                bad = ~np.all(np.isfinite(ya), axis=1) | (
                    np.max(np.abs(ya), axis=1) > self.escape_bound
                )
                if np.any(bad):
                    self.status[acc_idx[bad]] = STATUS_ESCAPED
            rej_idx = idx[~accept]
            if rej_idx.size:
                new_h = h[~accept] * shrink[~accept]
                self.h_abs[rej_idx] = new_h
                self._rejected[rej_idx] = True
                too_small = new_h < min_step[~accept]
                if np.any(too_small):
                    self.status[rej_idx[too_small]] = STATUS_FAILED

            pending = (self.status == STATUS_RUNNING) & (self.t < t_target)


def solve_batch_path(
    fn: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    times: np.ndarray,
    rtol: float,
    atol: float,
    escape_bound: float = 1e6,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample every trajectory at the given strictly increasing times >= 0.

    Returns ``(states, status, t_reached)`` where states has shape
    (m, len(times), d); escaped or failed trajectories carry their last
    accepted state in all later slots.
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    times = np.asarray(times, dtype=float)
    solver = BatchRK45(fn, y0, rtol, atol, escape_bound)
    out = np.empty((solver.m, len(times), solver.d))
    for j, t in enumerate(times):
        if t > 0.0:
            solver.advance_to(float(t))
        out[:, j] = solver.y
    return out, solver.status.copy(), solver.t.copy()
