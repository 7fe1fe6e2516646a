"""Discrete-time and generator regressions on observable dictionaries.

Both fits solve the same ridge-regularized least squares through an SVD
(rank-revealing); eigenpairs come from left eigenvectors so the fitted
matrix acts on coefficient rows exactly as the operator acts on functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .dictionaries import Dictionary
from .errors import (
    DefectiveMatrixError,
    DictionaryMismatchError,
    FitError,
    RankDeficientError,
)
from .fields import VectorFieldSpec
from .systems import SnapshotPairs

EIGVEC_COND_LIMIT = 1e12
RIDGE_SCALE = 1e-10


def default_ridge(psi: np.ndarray) -> float:
    """Scale-free conditioning floor: trace of the Gram matrix over N."""
    n_entries = psi.shape[1]
    return RIDGE_SCALE * float(np.sum(psi * psi)) / n_entries


def ridge_lstsq(design: np.ndarray, targets: np.ndarray, gamma: float) -> tuple[np.ndarray, float]:
    """Minimize ||targets - design @ W||_F^2 + gamma ||W||_F^2 via SVD.

    Returns (W, relative_residual).  With gamma == 0 a rank-deficient design
    raises instead of silently producing a minimum-norm solution.
    """
    if gamma < 0:
        raise FitError("ridge gamma must be non-negative")
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    if gamma == 0.0:
        cutoff = max(design.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        if s.size == 0 or s[-1] <= cutoff:
            raise RankDeficientError(
                "design matrix is rank deficient; pass a positive ridge gamma"
            )
        inv = 1.0 / s
    else:
        inv = s / (s * s + gamma)
    w = vt.T @ (inv[:, None] * (u.T @ targets))
    denom = np.linalg.norm(targets)
    resid = float(np.linalg.norm(targets - design @ w) / denom) if denom > 0 else 0.0
    return w, resid


@dataclass
class KoopmanModel:
    """Finite-section discrete-time operator matrix on a dictionary."""

    matrix: np.ndarray
    dictionary: Dictionary
    dt: float
    gamma: float
    residual: float
    sample_x: np.ndarray = field(repr=False)
    psi_train: np.ndarray = field(repr=False)

    @property
    def is_discrete(self) -> bool:
        return True


@dataclass
class GeneratorModel:
    """Finite-section generator matrix on a dictionary."""

    matrix: np.ndarray
    dictionary: Dictionary
    gamma: float
    residual: float
    sample_x: np.ndarray = field(repr=False)
    psi_train: np.ndarray = field(repr=False)

    @property
    def is_discrete(self) -> bool:
        return False


def fit_edmd(pairs: SnapshotPairs, dictionary: Dictionary, gamma: float | None = None) -> KoopmanModel:
    """K minimizing sum ||psi(y) - K psi(x)||^2 + gamma ||K||_F^2."""
    psi_x = dictionary.eval_many(pairs.x_states)
    psi_y = dictionary.eval_many(pairs.y_states)
    g = default_ridge(psi_x) if gamma is None else float(gamma)
    w, resid = ridge_lstsq(psi_x, psi_y, g)
    return KoopmanModel(
        matrix=w.T,
        dictionary=dictionary,
        dt=pairs.dt,
        gamma=g,
        residual=resid,
        sample_x=pairs.x_states,
        psi_train=psi_x,
    )


def generator_targets(
    samples: np.ndarray, spec: VectorFieldSpec, dictionary: Dictionary
) -> np.ndarray:
    """Chain-rule targets: row k, column i holds f(x_k) . grad psi_i(x_k)."""
    grads = dictionary.grad_many(samples)
    f = spec.rhs_batch(np.atleast_2d(samples), np.zeros(spec.control_arity))
    return np.einsum("mnd,md->mn", grads, f)


def fit_generator_edmd(
    samples: np.ndarray,
    spec: VectorFieldSpec,
    dictionary: Dictionary,
    gamma: float | None = None,
) -> GeneratorModel:
    """L regressing the generator images of the dictionary onto itself."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    psi_x = dictionary.eval_many(samples)
    targets = generator_targets(samples, spec, dictionary)
    g = default_ridge(psi_x) if gamma is None else float(gamma)
    w, resid = ridge_lstsq(psi_x, targets, g)
    return GeneratorModel(
        matrix=w.T,
        dictionary=dictionary,
        gamma=g,
        residual=resid,
        sample_x=samples,
        psi_train=psi_x,
    )


@dataclass
class Eigenpair:
    """Eigenvalue plus an evaluable eigenfunction phi.

    Coefficient pairs evaluate as w . psi(x); oracle and composed pairs carry
    a callable instead.  ``lam`` is always the continuous-time rate; discrete
    models retain ``lam_discrete`` to avoid log-branch ambiguity.
    """

    lam: complex
    source: str  # discrete | generator | composed | analytic-oracle
    lam_discrete: complex | None = None
    w: np.ndarray | None = None
    dict_hash: str | None = None
    normalization: float = 1.0
    defective: bool = False
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    domain: Callable[[np.ndarray], np.ndarray] | None = None
    compose_residual: float | None = None

    def eval_many(self, dictionary: Dictionary | None, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.w is not None:
            if dictionary is None:
                raise DictionaryMismatchError("coefficient pair needs its dictionary")
            if self.dict_hash is not None and dictionary.content_hash != self.dict_hash:
                raise DictionaryMismatchError("dictionary does not match this eigenpair")
            return dictionary.eval_many(x) @ self.w
        if self.fn is None:
            raise ValueError("eigenpair has neither coefficients nor a callable")
        return np.asarray(self.fn(x), dtype=complex)

    def in_domain(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.domain is None:
            return np.ones(x.shape[0], dtype=bool)
        return np.asarray(self.domain(x), dtype=bool)


def eval_eigenfunction(pair: Eigenpair, dictionary: Dictionary | None, x: np.ndarray) -> complex:
    return complex(pair.eval_many(dictionary, np.atleast_2d(x))[0])


def _canonical_phase(w: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(w)))
    pivot = w[j]
    if pivot == 0:
        return w
    return w * (np.conj(pivot) / abs(pivot))


def _sort_key(pair: Eigenpair):
    w = pair.w if pair.w is not None else np.array([0.0])
    return (
        -pair.lam.real,
        abs(pair.lam.imag),
        tuple(float(v) for pair_part in (w.real, w.imag) for v in pair_part),
    )


def eig(model: KoopmanModel | GeneratorModel) -> list[Eigenpair]:
    """Left-eigenvector eigenpairs, sup-normalized over the training sample.

    Discrete eigenvalues are mapped to rates by the principal logarithm.
    Defective matrices fall back to Schur vectors with every pair flagged.
    """
    a = model.matrix
    vals, vecs = np.linalg.eig(a.T)
    defective = False
    if vecs.shape[0] > 0 and np.linalg.cond(vecs) > EIGVEC_COND_LIMIT:
        defective = True
        t, z = scipy.linalg.schur(a.T, output="complex")
        vals = np.diag(t)
        vecs = z
    pairs = []
    for i in range(len(vals)):
        w = vecs[:, i].astype(complex)
        phi_train = model.psi_train @ w
        sup = float(np.max(np.abs(phi_train))) if len(phi_train) else 1.0
        if sup > 0:
            w = w / sup
        w = _canonical_phase(w)
        if model.is_discrete:
            lam_d = complex(vals[i])
            lam = np.log(lam_d) / model.dt if lam_d != 0 else complex("-inf")
            pair = Eigenpair(
                lam=complex(lam),
                lam_discrete=lam_d,
                w=w,
                dict_hash=model.dictionary.content_hash,
                source="discrete",
                normalization=sup,
                defective=defective,
            )
        else:
            pair = Eigenpair(
                lam=complex(vals[i]),
                w=w,
                dict_hash=model.dictionary.content_hash,
                source="generator",
                normalization=sup,
                defective=defective,
            )
        pairs.append(pair)
    pairs.sort(key=_sort_key)
    return pairs


def compose_eigenpairs(
    p1: Eigenpair,
    p2: Eigenpair,
    r: int,
    s: int,
    dictionary: Dictionary | None = None,
    sample: np.ndarray | None = None,
) -> Eigenpair:
    """Pointwise power product (phi1^r phi2^s, r lam1 + s lam2).

    If both pairs live on the same dictionary and a sample is given, a
    coefficient vector is recovered by least squares; it is attached only
    when the product genuinely lies in the span.
    """
    if r < 0 or s < 0:
        raise ValueError("powers must be non-negative")
    coeff_context = p1.w is not None and p2.w is not None
    if coeff_context and p1.dict_hash != p2.dict_hash:
        raise DictionaryMismatchError("cannot compose pairs from different dictionaries")
    if not coeff_context and (p1.fn is None or p2.fn is None) and not (r == 0 and s == 0):
        if (p1.w is None) != (p2.w is None):
            raise DictionaryMismatchError(
                "cannot compose a coefficient pair with a callable pair"
            )

    lam = r * p1.lam + s * p2.lam

    def fn(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.ones(x.shape[0], dtype=complex)
        if r:
            out = out * p1.eval_many(dictionary, x) ** r
        if s:
            out = out * p2.eval_many(dictionary, x) ** s
        return out

    def domain(x: np.ndarray) -> np.ndarray:
        return p1.in_domain(x) & p2.in_domain(x)

    composed = Eigenpair(lam=complex(lam), source="composed", fn=fn, domain=domain)
    if coeff_context and dictionary is not None and sample is not None:
        psi = dictionary.eval_many(sample)
        values = fn(sample)
        coeffs, resid = ridge_lstsq(psi.astype(complex), values[:, None], 0.0)
        composed.compose_residual = resid
        if resid <= 1e-8:
            composed.w = coeffs[:, 0]
            composed.dict_hash = dictionary.content_hash
    return composed


def discretize_spectrum(lam_continuous: complex, dt: float) -> complex:
    """Map a continuous-time rate to the discrete multiplier e^{lam dt}."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return complex(np.exp(complex(lam_continuous) * dt))


def residual(
    model: KoopmanModel | GeneratorModel,
    holdout: SnapshotPairs | np.ndarray,
    spec: VectorFieldSpec | None = None,
) -> float:
    """Relative prediction error on held-out data (disjointness is the caller's job)."""
    if isinstance(holdout, SnapshotPairs):
        if not model.is_discrete:
            raise FitError("snapshot holdout applies to discrete models")
        if holdout.x_states.shape[0] == 0:
            raise FitError("holdout is empty")
        psi_x = model.dictionary.eval_many(holdout.x_states)
        psi_y = model.dictionary.eval_many(holdout.y_states)
        pred = psi_x @ model.matrix.T
        return float(np.linalg.norm(psi_y - pred) / np.linalg.norm(psi_y))
    samples = np.atleast_2d(np.asarray(holdout, dtype=float))
    if samples.shape[0] == 0:
        raise FitError("holdout is empty")
    if model.is_discrete:
        raise FitError("generator holdout requires a GeneratorModel")
    if spec is None:
        raise FitError("generator holdout requires the system spec")
    psi_x = model.dictionary.eval_many(samples)
    targets = generator_targets(samples, spec, model.dictionary)
    pred = psi_x @ model.matrix.T
    return float(np.linalg.norm(targets - pred) / np.linalg.norm(targets))
