"""Model (de)serialization: a self-describing JSON document per model.

Fields: ``states``, ``dim``, ``transition`` (row-major), ``means``,
``covariances`` (row-major per state), optional ``stationary``.  Floats are
written in shortest round-trip form, so save/load reproduces every numeric
field bit for bit.  The stationary vector is recomputed and validated on
load; models with an unreachable (zero-probability) state are rejected
because the registration normalizations divide by state masses.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .gaussians import Gaussian
from .hmm import GmmHmm, TransitionMatrix, stationary_distribution

FORMAT_VERSION = 1


def model_to_dict(model: GmmHmm) -> dict:
    return {
        "format": "awhmm-model",
        "version": FORMAT_VERSION,
        "states": model.n_states,
        "dim": model.dim,
        "transition": model.trans.t.ravel().tolist(),
        "means": [e.mean.tolist() for e in model.emissions],
        "covariances": [e.cov.ravel().tolist() for e in model.emissions],
        "stationary": model.stationary.tolist(),
    }


def model_from_dict(doc: dict) -> GmmHmm:
    try:
        m = int(doc["states"])
        d = int(doc["dim"])
        trans = np.asarray(doc["transition"], dtype=float).reshape(m, m)
        means = [np.asarray(mu, dtype=float) for mu in doc["means"]]
        covs = [np.asarray(c, dtype=float).reshape(d, d) for c in doc["covariances"]]
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInputError(f"malformed model document: {exc}") from exc
    if len(means) != m or len(covs) != m:
        raise InvalidInputError(
            f"expected {m} means and covariances, got {len(means)}/{len(covs)}"
        )
    tm = TransitionMatrix(trans)
    pi = stationary_distribution(tm)
    if "stationary" in doc and doc["stationary"] is not None:
        stated = np.asarray(doc["stationary"], dtype=float)
        if stated.shape != pi.shape or np.max(np.abs(stated - pi)) > 1e-6:
            raise InvalidInputError("stated stationary vector disagrees with T")
    # the eigen solve can report ~1e-13 for a truly transient state
    if pi.min() <= 1e-10:
        raise InvalidInputError(
            f"state {int(np.argmin(pi))} has zero stationary mass"
        )
    emissions = tuple(Gaussian(mu, c) for mu, c in zip(means, covs))
    return GmmHmm(tm, emissions, pi)


def save_model(model: GmmHmm, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path: str | Path) -> GmmHmm:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(doc)
