"""Observable dictionaries with analytic gradients.

Entries are descriptors (constant, monomial multi-index, Gaussian bump,
basin indicator); evaluation is vectorized over points.  Indicator entries
realize discontinuity capacity: they are piecewise constant with gradient
defined as zero away from basin boundaries, so generator regressions must
sample off the boundaries.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np
from scipy.spatial import cKDTree

from .errors import DictionaryError
from .systems import BasinGrid

SIZE_CAP = 5000


@dataclass(frozen=True)
class IndicatorSource:
    """Nearest-neighbour lookup table built from a labeled basin grid."""

    points: np.ndarray           # (P, d) resolved grid points only
    labels: np.ndarray           # (P,) attractor label per point
    label_values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "_tree", None)

    def lookup(self, x: np.ndarray) -> np.ndarray:
        if self._tree is None:
            object.__setattr__(self, "_tree", cKDTree(self.points))
        _, idx = self._tree.query(np.atleast_2d(x))
        return self.labels[idx]

    def boundary_clearance(self, x: np.ndarray) -> np.ndarray:
        """Distance margin between the nearest label and the nearest other label.

        Small values mean the nearest-neighbour label is uncertain; callers
        drop such points from regression samples to keep indicator columns
        exactly flow-invariant.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dists = np.full((x.shape[0], len(self.label_values)), np.inf)
        for j, lab in enumerate(self.label_values):
            tree = cKDTree(self.points[self.labels == lab])
            dists[:, j], _ = tree.query(x)
        dists.sort(axis=1)
        return dists[:, 1] - dists[:, 0]

    @classmethod
    def from_basin_grid(cls, basins: BasinGrid) -> "IndicatorSource":
        mask = basins.attractor_mask
        labels = basins.attractor_labels
        if len(labels) < 2:
            raise DictionaryError("indicator augmentation needs >= 2 resolved basins")
        return cls(
            points=basins.grid_points[mask],
            labels=basins.labels[mask],
            label_values=labels,
        )


@dataclass(frozen=True)
class Entry:
    kind: str                      # constant | monomial | gaussian | indicator
    powers: tuple[int, ...] = ()
    center: tuple[float, ...] = ()
    shape: float = 0.0
    label: int = -1

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant"}
        if self.kind == "monomial":
            return {"kind": "monomial", "powers": list(self.powers)}
        if self.kind == "gaussian":
            return {"kind": "gaussian", "center": list(self.center), "shape": self.shape}
        return {"kind": "indicator", "label": self.label}


class Dictionary:
    """Ordered set of scalar observables over R^d."""

    def __init__(self, dimension: int, entries: tuple[Entry, ...], indicator_source=None):
        self.dimension = dimension
        self.entries = entries
        self.indicator_source = indicator_source
        if any(e.kind == "indicator" for e in entries) and indicator_source is None:
            raise DictionaryError("indicator entries require an indicator source")

    @property
    def size(self) -> int:
        return len(self.entries)

    def eval_many(self, x: np.ndarray) -> np.ndarray:
        """Values at points of shape (m, d) -> (m, N)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dimension:
            raise DictionaryError(f"points must have dimension {self.dimension}")
        if not np.all(np.isfinite(x)):
            raise DictionaryError("points must be finite")
        m = x.shape[0]
        out = np.empty((m, self.size))
        nearest = None
        for j, e in enumerate(self.entries):
            if e.kind == "constant":
                out[:, j] = 1.0
            elif e.kind == "monomial":
                out[:, j] = np.prod(x ** np.asarray(e.powers), axis=1)
            elif e.kind == "gaussian":
                dist2 = np.sum((x - np.asarray(e.center)) ** 2, axis=1)
                out[:, j] = np.exp(-e.shape * dist2)
            else:
                if nearest is None:
                    nearest = self.indicator_source.lookup(x)
                out[:, j] = (nearest == e.label).astype(float)
        return out

    def eval_one(self, x: np.ndarray) -> np.ndarray:
        return self.eval_many(np.atleast_2d(x))[0]

    def grad_many(self, x: np.ndarray) -> np.ndarray:
        """Gradients at points of shape (m, d) -> (m, N, d).

        Indicator gradients are zero by definition away from boundaries.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m, d = x.shape
        out = np.zeros((m, self.size, d))
        for j, e in enumerate(self.entries):
            if e.kind == "monomial":
                powers = np.asarray(e.powers)
                for axis in range(d):
                    p = powers[axis]
                    if p == 0:
                        continue
                    rest = powers.copy()
                    rest[axis] = p - 1
                    out[:, j, axis] = p * np.prod(x**rest, axis=1)
            elif e.kind == "gaussian":
                diff = x - np.asarray(e.center)
                val = np.exp(-e.shape * np.sum(diff**2, axis=1))
                out[:, j, :] = -2.0 * e.shape * diff * val[:, None]
        return out

    def grad_one(self, x: np.ndarray) -> np.ndarray:
        return self.grad_many(np.atleast_2d(x))[0]

    def describe(self) -> dict:
        desc: dict = {
            "dimension": self.dimension,
            "entries": [e.describe() for e in self.entries],
        }
        if self.indicator_source is not None:
            desc["indicator_source"] = {
                "points": [[float(v) for v in row] for row in self.indicator_source.points],
                "labels": [int(v) for v in self.indicator_source.labels],
                "label_values": list(self.indicator_source.label_values),
            }
        return desc

    @property
    def content_hash(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @classmethod
    def from_descriptor(cls, desc: dict) -> "Dictionary":
        entries = []
        for e in desc["entries"]:
            if e["kind"] == "constant":
                entries.append(Entry("constant"))
            elif e["kind"] == "monomial":
                entries.append(Entry("monomial", powers=tuple(int(p) for p in e["powers"])))
            elif e["kind"] == "gaussian":
                entries.append(
                    Entry("gaussian", center=tuple(float(c) for c in e["center"]),
                          shape=float(e["shape"]))
                )
            elif e["kind"] == "indicator":
                entries.append(Entry("indicator", label=int(e["label"])))
            else:
                raise DictionaryError(f"unknown entry kind {e['kind']!r}")
        source = None
        if "indicator_source" in desc:
            s = desc["indicator_source"]
            source = IndicatorSource(
                points=np.asarray(s["points"], dtype=float),
                labels=np.asarray(s["labels"], dtype=np.int64),
                label_values=tuple(int(v) for v in s["label_values"]),
            )
        return cls(int(desc["dimension"]), tuple(entries), source)


def _graded_lex_powers(d: int, max_degree: int) -> list[tuple[int, ...]]:
    all_powers: list[tuple[int, ...]] = []
    for degree in range(max_degree + 1):
        block = set()
        for combo in combinations_with_replacement(range(d), degree):
            p = [0] * d
            for axis in combo:
                p[axis] += 1
            block.add(tuple(p))
        all_powers.extend(sorted(block, reverse=True))
    return all_powers


def build_monomial_dictionary(
    d: int, max_degree: int, include_constant: bool = True
) -> Dictionary:
    """All monomials of total degree <= max_degree in graded-lex order."""
    if max_degree < 1:
        raise DictionaryError("max_degree must be >= 1")
    if comb(d + max_degree, d) > SIZE_CAP:
        raise DictionaryError(f"dictionary size would exceed cap {SIZE_CAP}")
    entries = []
    for powers in _graded_lex_powers(d, max_degree):
        if sum(powers) == 0:
            if include_constant:
                entries.append(Entry("constant"))
        else:
            entries.append(Entry("monomial", powers=powers))
    return Dictionary(d, tuple(entries))


def build_rbf_dictionary(
    centers: np.ndarray, shape: float, include_constant: bool = True
) -> Dictionary:
    """Gaussian bumps exp(-shape * ||x - c||^2), optionally with a constant."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] == 0:
        raise DictionaryError("centers must be non-empty")
    if shape <= 0:
        raise DictionaryError("shape must be positive")
    entries: list[Entry] = []
    if include_constant:
        entries.append(Entry("constant"))
    for c in centers:
        entries.append(Entry("gaussian", center=tuple(float(v) for v in c), shape=float(shape)))
    return Dictionary(centers.shape[1], tuple(entries))


def build_indicator_augmented(base: Dictionary, basins: BasinGrid) -> Dictionary:
    """Base entries plus one indicator per resolved attractor basin."""
    if any(e.kind == "indicator" for e in base.entries):
        raise DictionaryError("dictionary already carries indicator entries")
    source = IndicatorSource.from_basin_grid(basins)
    extra = tuple(Entry("indicator", label=lab) for lab in source.label_values)
    return Dictionary(base.dimension, base.entries + extra, source)


def eval_dictionary(dictionary: Dictionary, x: np.ndarray) -> np.ndarray:
    return dictionary.eval_one(np.asarray(x, dtype=float))


def eval_dictionary_gradient(dictionary: Dictionary, x: np.ndarray) -> np.ndarray:
    return dictionary.grad_one(np.asarray(x, dtype=float))
