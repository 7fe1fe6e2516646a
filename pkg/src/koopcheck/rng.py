"""Deterministic sub-stream derivation from a single master seed.

Every random draw in the package flows from ``substream(master, name)`` so
that reports are reproducible and individual components can be re-run in
isolation without disturbing each other's streams.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(master_seed: int, name: str) -> np.random.Generator:
    """Return a ``Generator`` keyed by (master seed, stream name)."""
    tag = zlib.crc32(name.encode("utf-8"))
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(tag,))
    return np.random.default_rng(seq)


def sample_box(rng: np.random.Generator, region: np.ndarray, n: int) -> np.ndarray:
    """Uniform sample of ``n`` points from an axis-aligned box.

    ``region`` has shape (d, 2) with rows (lo, hi).
    """
    region = np.asarray(region, dtype=float)
    lo, hi = region[:, 0], region[:, 1]
    return lo + (hi - lo) * rng.random((n, region.shape[0]))
