"""Model artifact serialization: fitted matrices plus eigenpair tables as JSON."""

from __future__ import annotations

import json

import numpy as np

from .dictionaries import Dictionary
from .errors import KoopcheckError
from .koopman import Eigenpair, GeneratorModel, KoopmanModel, eig
from .reports import canonical_json

ARTIFACT_SCHEMA_VERSION = 1


def _complex_dict(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def model_artifact(
    fit_name: str,
    model: KoopmanModel | GeneratorModel,
    config_hash: str,
) -> dict:
    """JSON-ready artifact: matrix row-major at full precision, eigenpair list."""
    pairs = eig(model)
    artifact = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "config_hash": config_hash,
        "fit_name": fit_name,
        "kind": "discrete" if model.is_discrete else "generator",
        "dt": model.dt if model.is_discrete else None,
        "gamma": model.gamma,
        "residual": model.residual,
        "matrix": [[float(v) for v in row] for row in model.matrix],
        "dictionary": model.dictionary.describe(),
        "training_region": _training_region(model),
        "eigenpairs": [
            {
                "lam": _complex_dict(p.lam),
                "lam_discrete": _complex_dict(p.lam_discrete)
                if p.lam_discrete is not None
                else None,
                "w": [[float(c.real), float(c.imag)] for c in p.w],
                "normalization": p.normalization,
                "defective": p.defective,
                "source": p.source,
            }
            for p in pairs
        ],
    }
    return artifact


def _training_region(model) -> list:
    lo = np.min(model.sample_x, axis=0)
    hi = np.max(model.sample_x, axis=0)
    return [[float(a), float(b)] for a, b in zip(lo, hi)]


def artifact_json(artifact: dict) -> str:
    return canonical_json(artifact)


def load_artifact(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        artifact = json.load(handle)
    if artifact.get("schema_version") != ARTIFACT_SCHEMA_VERSION:
        raise KoopcheckError(f"unsupported artifact schema in {path}")
    return artifact


def artifact_dictionary(artifact: dict) -> Dictionary:
    return Dictionary.from_descriptor(artifact["dictionary"])


def artifact_eigenpairs(artifact: dict) -> list[Eigenpair]:
    dictionary = artifact_dictionary(artifact)
    pairs = []
    for entry in artifact["eigenpairs"]:
        # non-finite parts are serialized as repr strings; float() restores them
        lam = complex(float(entry["lam"]["re"]), float(entry["lam"]["im"]))
        lam_d = (
            complex(float(entry["lam_discrete"]["re"]), float(entry["lam_discrete"]["im"]))
            if entry["lam_discrete"] is not None
            else None
        )
        w = np.array([complex(re, im) for re, im in entry["w"]])
        pairs.append(
            Eigenpair(
                lam=lam,
                lam_discrete=lam_d,
                w=w,
                dict_hash=dictionary.content_hash,
                source=entry["source"],
                normalization=entry["normalization"],
                defective=entry["defective"],
            )
        )
    return pairs
