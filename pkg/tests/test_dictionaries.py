"""Dictionary construction, evaluation, and analytic gradients."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koopcheck.dictionaries import (
    Dictionary,
    build_indicator_augmented,
    build_monomial_dictionary,
    build_rbf_dictionary,
    eval_dictionary,
    eval_dictionary_gradient,
)
from koopcheck.errors import DictionaryError

FD_STEP = 1e-5


def fd_gradient(dictionary: Dictionary, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros((dictionary.size, len(x)))
    for j in range(len(x)):
        up, dn = x.copy(), x.copy()
        up[j] += FD_STEP
        dn[j] -= FD_STEP
        out[:, j] = (dictionary.eval_one(up) - dictionary.eval_one(dn)) / (2 * FD_STEP)
    return out


def test_monomial_counts_and_order():
    d1 = build_monomial_dictionary(1, 3)
    assert d1.size == 4
    assert [e.describe() for e in d1.entries] == [
        {"kind": "constant"},
        {"kind": "monomial", "powers": [1]},
        {"kind": "monomial", "powers": [2]},
        {"kind": "monomial", "powers": [3]},
    ]
    d2 = build_monomial_dictionary(2, 2)
    assert d2.size == 6
    powers = [e.powers for e in d2.entries if e.kind == "monomial"]
    assert powers == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_monomial_degenerate_and_cap():
    with pytest.raises(DictionaryError):
        build_monomial_dictionary(3, 0)
    with pytest.raises(DictionaryError):
        build_monomial_dictionary(2, 150)


def test_monomial_eval_example():
    d = build_monomial_dictionary(1, 3)
    assert np.array_equal(eval_dictionary(d, np.array([2.0])), [1.0, 2.0, 4.0, 8.0])


def test_rbf_counts_and_values():
    centers = np.linspace(-1, 1, 10)[:, None]
    d = build_rbf_dictionary(centers, 1.0)
    assert d.size == 11
    vals = eval_dictionary(d, centers[3])
    assert vals[0] == 1.0  # constant entry
    assert abs(vals[4] - 1.0) < 1e-12  # at its own center
    with pytest.raises(DictionaryError):
        build_rbf_dictionary(centers, 0.0)
    with pytest.raises(DictionaryError):
        build_rbf_dictionary(np.empty((0, 1)), 1.0)


def test_indicator_augmentation(ctx):
    basins = ctx.basins("bistable")
    base = build_monomial_dictionary(1, 2)
    d = build_indicator_augmented(base, basins)
    assert d.size == base.size + 2
    deep = eval_dictionary(d, np.array([-1.5]))[-2:]
    assert set(deep.tolist()) == {0.0, 1.0}
    # indicators partition: exactly one active anywhere
    for x in (-1.9, -0.3, 0.2, 1.7):
        ind = eval_dictionary(d, np.array([x]))[-2:]
        assert ind.sum() == 1.0
    with pytest.raises(DictionaryError):
        build_indicator_augmented(d, basins)


def test_gradient_examples():
    d = build_monomial_dictionary(1, 2)
    grad = eval_dictionary_gradient(d, np.array([3.0]))
    assert grad[0, 0] == 0.0          # constant
    assert grad[1, 0] == 1.0          # x
    assert grad[2, 0] == 6.0          # x^2 -> 2x
    g = build_rbf_dictionary(np.array([[0.0]]), 1.0, include_constant=False)
    val = eval_dictionary_gradient(g, np.array([1.0]))[0, 0]
    fd = fd_gradient(g, np.array([1.0]))[0, 0]
    assert abs(val - (-2.0 * np.exp(-1.0))) < 1e-12
    assert abs(val - fd) < 1e-8


def test_gradient_matches_finite_differences(rng):
    centers = rng.uniform(-1.5, 1.5, (6, 2))
    smooth = build_rbf_dictionary(centers, 0.8)
    mono = build_monomial_dictionary(2, 4)
    for dictionary in (smooth, mono):
        pts = rng.uniform(-1.5, 1.5, (100, 2))
        analytic = dictionary.grad_many(pts)
        for k in range(0, 100, 7):
            fd = fd_gradient(dictionary, pts[k])
            scale = np.maximum(np.abs(fd), 1.0)
            assert np.max(np.abs(analytic[k] - fd) / scale) < 1e-6


def test_indicator_gradient_zero(ctx):
    basins = ctx.basins("bistable")
    d = build_indicator_augmented(build_monomial_dictionary(1, 2), basins)
    grad = eval_dictionary_gradient(d, np.array([0.8]))
    assert np.all(grad[-2:] == 0.0)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-1.8, 1.8), y=st.floats(-1.8, 1.8))
def test_monomial_gradient_property(x, y):
    d = build_monomial_dictionary(2, 3)
    pt = np.array([x, y])
    analytic = d.grad_one(pt)
    fd = fd_gradient(d, pt)
    assert np.max(np.abs(analytic - fd) / np.maximum(np.abs(fd), 1.0)) < 1e-6


def test_descriptor_roundtrip(ctx):
    basins = ctx.basins("bistable")
    d = build_indicator_augmented(build_monomial_dictionary(1, 3), basins)
    clone = Dictionary.from_descriptor(d.describe())
    assert clone.content_hash == d.content_hash
    x = np.array([[0.3], [-1.2]])
    assert np.array_equal(clone.eval_many(x), d.eval_many(x))


def test_eval_rejects_bad_input():
    d = build_monomial_dictionary(2, 2)
    with pytest.raises(DictionaryError):
        d.eval_many(np.array([[1.0, 2.0, 3.0]]))
    with pytest.raises(DictionaryError):
        d.eval_many(np.array([[np.nan, 0.0]]))
