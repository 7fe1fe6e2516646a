"""Regression fits, eigenpairs, composition and the spectrum mapping."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import koopcheck as kc
from koopcheck import integrate
from koopcheck.dictionaries import Dictionary, Entry, build_monomial_dictionary
from koopcheck.errors import DictionaryMismatchError, FitError, RankDeficientError
from koopcheck.koopman import (
    KoopmanModel,
    compose_eigenpairs,
    discretize_spectrum,
    eig,
    eval_eigenfunction,
    fit_edmd,
    fit_generator_edmd,
    residual,
)
from koopcheck.oracles import BISTABLE_DECAYING, BISTABLE_GROWING
from koopcheck.systems import SnapshotPairs, sample_snapshot_pairs

REGION_1D = np.array([[-2.0, 2.0]])


def exact_pairs(system: str, n: int, dt: float, seed: int = 11) -> SnapshotPairs:
    spec = kc.make_system(system)
    region = REGION_1D if spec.dimension == 1 else np.array([[-2.0, 2.0]] * spec.dimension)
    return sample_snapshot_pairs(spec, region, n, dt, seed, tol=1e-12)


def test_edmd_linear_single_observable():
    d = Dictionary(1, (Entry("monomial", powers=(1,)),))
    model = fit_edmd(exact_pairs("linear1d", 200, 0.1), d, gamma=0.0)
    assert abs(model.matrix[0, 0] - np.exp(-0.1)) < 1e-6
    assert model.residual < 1e-9


def test_edmd_linear_with_constant():
    d = build_monomial_dictionary(1, 1)
    model = fit_edmd(exact_pairs("linear1d", 200, 0.1), d, gamma=0.0)
    expected = np.diag([1.0, np.exp(-0.1)])
    assert np.max(np.abs(model.matrix - expected)) < 1e-6


def test_edmd_invariant_under_duplication():
    d = build_monomial_dictionary(1, 2)
    pairs = exact_pairs("linear1d", 150, 0.1)
    doubled = SnapshotPairs(
        np.vstack([pairs.x_states, pairs.x_states]),
        np.vstack([pairs.y_states, pairs.y_states]),
        pairs.dt,
        pairs.seed,
        pairs.region,
    )
    m1 = fit_edmd(pairs, d, gamma=0.0)
    m2 = fit_edmd(doubled, d, gamma=0.0)
    assert np.max(np.abs(m1.matrix - m2.matrix)) < 1e-10


def test_rank_deficient_requires_ridge():
    duplicated = Dictionary(1, (Entry("monomial", powers=(1,)), Entry("monomial", powers=(1,))))
    pairs = exact_pairs("linear1d", 100, 0.1)
    with pytest.raises(RankDeficientError):
        fit_edmd(pairs, duplicated, gamma=0.0)
    model = fit_edmd(pairs, duplicated, gamma=1e-8)
    assert np.all(np.isfinite(model.matrix))


def test_generator_monomial_ladder(rng):
    lin = kc.make_system("linear1d")
    d = Dictionary(
        1,
        tuple(Entry("monomial", powers=(k,)) for k in (1, 2, 3)),
    )
    samples = rng.uniform(-2, 2, (200, 1))
    model = fit_generator_edmd(samples, lin, d, gamma=0.0)
    assert np.max(np.abs(model.matrix - np.diag([-1.0, -2.0, -3.0]))) < 1e-8


def test_generator_bistable_row(rng):
    bi = kc.make_system("bistable")
    d = build_monomial_dictionary(1, 5)
    model = fit_generator_edmd(rng.uniform(-2, 2, (300, 1)), bi, d, gamma=0.0)
    row_x = model.matrix[1]
    expected = np.zeros(6)
    expected[1], expected[3] = 1.0, -1.0
    assert np.max(np.abs(row_x - expected)) < 1e-8
    assert np.max(np.abs(model.matrix[0])) < 1e-10  # constant row


def test_eig_diagonal_generator(rng):
    lin = kc.make_system("linear1d")
    d = Dictionary(1, tuple(Entry("monomial", powers=(k,)) for k in (1, 2, 3)))
    model = fit_generator_edmd(rng.uniform(-2, 2, (200, 1)), lin, d, gamma=0.0)
    pairs = eig(model)
    assert [round(p.lam.real, 6) for p in pairs] == [-1.0, -2.0, -3.0]
    # eigenfunctions are the monomials themselves up to positive scale
    x = np.array([[0.7]])
    for p, power in zip(pairs, (1, 2, 3)):
        value = p.eval_many(d, x)[0]
        assert abs(value.imag) < 1e-12
        assert value.real > 0
        ratio = p.eval_many(d, np.array([[1.4]]))[0].real / value.real
        assert abs(ratio - 2.0**power) < 1e-8


def test_eig_discrete_log_mapping():
    d = build_monomial_dictionary(1, 1)
    model = fit_edmd(exact_pairs("linear1d", 200, 0.1), d, gamma=0.0)
    pairs = eig(model)
    lams = sorted(round(p.lam.real, 6) for p in pairs)
    assert lams == [-1.0, 0.0]
    for p in pairs:
        assert p.lam_discrete is not None


def test_finite_section_eigenrelation(ctx):
    model = ctx.model("bistable")
    for p in ctx.eigenpairs("bistable"):
        lhs = p.w @ model.matrix
        rhs = p.lam_discrete * p.w
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * np.linalg.norm(p.w)


def test_eig_conjugate_pairs(ctx):
    pairs = ctx.eigenpairs("harmonic")
    lams = np.array([p.lam for p in pairs])
    complex_ones = lams[np.abs(lams.imag) > 1e-8]
    for lam in complex_ones:
        assert np.min(np.abs(complex_ones - np.conj(lam))) < 1e-8


def test_eig_sorting_deterministic(ctx):
    pairs = ctx.eigenpairs("duffing")
    keys = [(-p.lam.real, abs(p.lam.imag)) for p in pairs]
    assert keys == sorted(keys)


def test_defective_matrix_flagged():
    d = build_monomial_dictionary(1, 1)
    jordan = np.array([[1.0, 1.0], [0.0, 1.0]])
    model = KoopmanModel(
        matrix=jordan, dictionary=d, dt=0.1, gamma=0.0, residual=0.0,
        sample_x=np.array([[0.5]]), psi_train=d.eval_many(np.array([[0.5]])),
    )
    pairs = eig(model)
    assert all(p.defective for p in pairs)


def test_eval_eigenfunction_examples(ctx):
    d = build_monomial_dictionary(1, 1)
    model = fit_edmd(exact_pairs("linear1d", 200, 0.1), d, gamma=0.0)
    pair = [p for p in eig(model) if abs(p.lam.real + 1) < 1e-6][0]
    # phi is proportional to x: evaluating at 0.5 gives half the value at 1.0
    half = eval_eigenfunction(pair, d, np.array([0.5]))
    full = eval_eigenfunction(pair, d, np.array([1.0]))
    assert abs(half - 0.5 * full) < 1e-10
    oracle = BISTABLE_GROWING.as_eigenpair()
    assert abs(eval_eigenfunction(oracle, None, np.array([0.9])) - 2.064742) < 1e-5
    with pytest.raises(DictionaryMismatchError):
        eval_eigenfunction(pair, build_monomial_dictionary(1, 2), np.array([0.5]))


def test_compose_square_of_linear(rng):
    lin = kc.make_system("linear1d")
    d = build_monomial_dictionary(1, 2)
    sample = rng.uniform(-2, 2, (100, 1))
    model = fit_generator_edmd(sample, lin, d, gamma=0.0)
    pairs = eig(model)
    p_x = [p for p in pairs if abs(p.lam.real + 1) < 1e-8][0]
    composed = compose_eigenpairs(p_x, p_x, 2, 0, dictionary=d, sample=sample)
    assert abs(composed.lam.real + 2.0) < 1e-10
    assert composed.w is not None and composed.compose_residual < 1e-8
    # generator check: f . grad(x^2) = -2 x^2 for xdot = -x
    x = np.array([[0.6]])
    assert abs(composed.eval_many(d, x)[0] - p_x.eval_many(d, x)[0] ** 2) < 1e-12


def test_compose_trivial_and_oracle_invariant():
    trivial = compose_eigenpairs(
        BISTABLE_GROWING.as_eigenpair(), BISTABLE_DECAYING.as_eigenpair(), 0, 0
    )
    assert trivial.lam == 0
    assert trivial.eval_many(None, np.array([[0.3]]))[0] == 1.0 + 0.0j

    composed = compose_eigenpairs(
        BISTABLE_GROWING.as_eigenpair(), BISTABLE_DECAYING.as_eigenpair(), 2, 1
    )
    assert composed.lam == 0
    xs = np.array([[0.2], [0.5], [0.9], [-0.4]])
    assert np.allclose(composed.eval_many(None, xs), 1.0)
    outside = composed.eval_many(None, np.array([[1.5]]))[0]
    assert abs(outside + 1.0) < 1e-12


def test_compose_rejects_mixed_context(ctx):
    fitted = ctx.eigenpairs("bistable")[0]
    oracle = BISTABLE_GROWING.as_eigenpair()
    with pytest.raises(DictionaryMismatchError):
        compose_eigenpairs(fitted, oracle, 1, 1)


def test_discretize_spectrum_examples():
    assert abs(discretize_spectrum(-1.0, 0.1) - 0.9048374180359595) < 1e-12
    assert discretize_spectrum(0.0, 0.1) == 1.0
    z = discretize_spectrum(1.0, 0.1)
    assert abs(z - 1.1051709180756477) < 1e-12 and abs(z) > 1


@settings(max_examples=50, deadline=None)
@given(re=st.floats(-5, 5), im=st.floats(-5, 5), dt=st.floats(0.01, 2.0))
def test_discretize_stability_mapping(re, im, dt):
    z = discretize_spectrum(complex(re, im), dt)
    if re < -1e-12:
        assert abs(z) < 1.0
    elif re > 1e-12:
        assert abs(z) > 1.0
    else:
        assert abs(abs(z) - 1.0) < 1e-9


def test_residual_op():
    d = build_monomial_dictionary(1, 2)
    train = exact_pairs("linear1d", 200, 0.1, seed=1)
    hold = exact_pairs("linear1d", 100, 0.1, seed=2)
    model = fit_edmd(train, d, gamma=0.0)
    r = residual(model, hold)
    assert 0.0 <= r < 1e-6
    zero = KoopmanModel(
        matrix=np.zeros((3, 3)), dictionary=d, dt=0.1, gamma=0.0, residual=1.0,
        sample_x=train.x_states, psi_train=d.eval_many(train.x_states),
    )
    assert abs(residual(zero, hold) - 1.0) < 1e-9
    empty = SnapshotPairs(np.empty((0, 1)), np.empty((0, 1)), 0.1, 0, REGION_1D)
    with pytest.raises(FitError):
        residual(model, empty)


def test_evolution_property_linear():
    d = build_monomial_dictionary(1, 3)
    model = fit_edmd(exact_pairs("linear1d", 300, 0.1), d, gamma=0.0)
    lin = kc.make_system("linear1d")
    xs = np.linspace(-1.5, 1.5, 21)[:, None]
    ys, _ = integrate.flow_batch(lin, xs, 0.1, 1e-12)
    for p in eig(model):
        lhs = p.eval_many(d, ys)
        rhs = np.exp(p.lam * 0.1) * p.eval_many(d, xs)
        assert np.max(np.abs(lhs - rhs)) <= 1e-6


def _match_spectra(gen_lams, disc_lams, dt):
    """Greedy nearest matching of e^{lam_g dt} against discrete eigenvalues."""
    remaining = list(disc_lams)
    worst = 0.0
    matches = []
    for lg in gen_lams:
        target = np.exp(lg * dt)
        dist = [abs(target - ld) for ld in remaining]
        j = int(np.argmin(dist))
        worst = max(worst, dist[j])
        matches.append((lg, remaining.pop(j)))
    return worst, matches


@pytest.mark.parametrize("system,degree", [("linear1d", 5), ("linear2d", 2), ("harmonic", 3)])
def test_spectrum_mapping_linear_benchmarks(system, degree, rng):
    spec = kc.make_system(system)
    d = build_monomial_dictionary(spec.dimension, degree)
    dt = 0.1
    pairs = exact_pairs(system, 500, dt, seed=23)
    disc = fit_edmd(pairs, d, gamma=0.0)
    gen = fit_generator_edmd(pairs.x_states, spec, d, gamma=0.0)
    gen_lams = [p.lam for p in eig(gen)]
    disc_lams = [p.lam_discrete for p in eig(disc)]
    worst, matches = _match_spectra(gen_lams, disc_lams, dt)
    assert worst <= 1e-4
    for lg, ld in matches:
        if abs(lg.real) > 1e-6:
            assert np.sign(lg.real) == np.sign(abs(ld) - 1.0)


def test_model_artifact_roundtrip(ctx):
    from koopcheck.artifacts import (
        artifact_dictionary,
        artifact_eigenpairs,
        model_artifact,
    )

    model = ctx.model("bistable")
    artifact = model_artifact("bistable", model, "deadbeef")
    clone_dict = artifact_dictionary(artifact)
    assert clone_dict.content_hash == model.dictionary.content_hash
    clones = artifact_eigenpairs(artifact)
    originals = ctx.eigenpairs("bistable")
    assert len(clones) == len(originals)
    x = np.array([[0.4], [-1.2]])
    for a, b in zip(clones, originals):
        if np.isfinite(b.lam.real):
            assert abs(a.lam - b.lam) < 1e-12
        else:
            assert a.lam == b.lam  # exact-zero discrete multiplier maps to -inf rate
        assert np.max(np.abs(a.eval_many(clone_dict, x) - b.eval_many(model.dictionary, x))) < 1e-12
