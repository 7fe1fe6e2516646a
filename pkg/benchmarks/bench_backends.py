"""Timing comparison of the compiled integrator kernel vs the numpy fallback.

Run from the repository root:

    python benchmarks/bench_backends.py

The hottest workloads are basin-grid labeling (many trajectories over a long
horizon) and snapshot-pair generation; both are dominated by the adaptive
stepper, which is what the compiled kernel accelerates.
"""

from __future__ import annotations

import time

import numpy as np

import koopcheck as kc
from koopcheck import integrate


def timeit(fn, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def grid_points(n_side: int) -> np.ndarray:
    axis = np.linspace(-2.0, 2.0, n_side)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def main() -> None:
    backends = integrate.available_backends()
    print(f"available backends: {', '.join(backends)} (active: {integrate.active_backend()})")
    if "compiled" not in backends:
        print("compiled kernel not built; showing the python backend only")

    duffing = kc.make_system("duffing")
    bistable = kc.make_system("bistable")

    workloads = [
        (
            "single duffing trajectory, horizon 50, tol 1e-9",
            lambda backend: integrate.flow(duffing, [1.3, -0.4], 50.0, 1e-9, backend=backend),
        ),
        (
            "bistable batch 401, horizon 50 (basin labels)",
            lambda backend: integrate.flow_batch(
                bistable, np.linspace(-2, 2, 401)[:, None], 50.0, 1e-9, backend=backend
            ),
        ),
        (
            "duffing grid 101x101, horizon 50 (basin labels)",
            lambda backend: integrate.flow_batch(
                duffing, grid_points(101), 50.0, 1e-9, backend=backend
            ),
        ),
        (
            "duffing snapshot block 8000 x dt 0.25",
            lambda backend: integrate.flow_batch(
                duffing,
                np.random.default_rng(0).uniform(-2, 2, (8000, 2)),
                0.25,
                1e-9,
                backend=backend,
            ),
        ),
    ]

    header = f"{'workload':<48} " + "".join(f"{b:>12} " for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, runner in workloads:
        times = {b: timeit(lambda b=b: runner(b)) for b in backends}
        row = f"{name:<48} " + "".join(f"{times[b]:>11.3f}s " for b in backends)
        if len(backends) == 2:
            row += f"{times['python'] / times['compiled']:>8.1f}x"
        print(row)

    # correctness spot check: both backends agree on a chaotic-ish trajectory
    if len(backends) == 2:
        a = integrate.flow(duffing, [1.3, -0.4], 20.0, 1e-10, backend="compiled")
        b = integrate.flow(duffing, [1.3, -0.4], 20.0, 1e-10, backend="python")
        print(f"\nbackend agreement at t=20: max deviation {np.max(np.abs(a - b)):.2e}")


if __name__ == "__main__":
    main()
