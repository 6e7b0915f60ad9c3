"""Estimator-variance toy comparison between Gaussian W2 and KL.

Re-estimates a reference Gaussian from repeated small batches and tracks the
spread of the closed-form distances to a sweep of target Gaussians: a sweep
of shifted means or a sweep of scaled variances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..errors import InvalidInputError
from ..gaussians import Gaussian, kl_gaussian, sample, w2_gaussian

VARIANTS = ("mean-shift", "var-scale")
N_TARGETS = 10


@dataclass(frozen=True)
class ToyResult:
    variant: str
    index: NDArray          # target index i = 1..10
    w2_mean: NDArray
    w2_std: NDArray
    kl_mean: NDArray
    kl_std: NDArray


def _targets(variant: str) -> list[Gaussian]:
    eye = np.eye(2)
    if variant == "mean-shift":
        return [Gaussian([0.5 * i, 0.5 * i], eye) for i in range(1, N_TARGETS + 1)]
    if variant == "var-scale":
        return [Gaussian([0.0, 0.0], np.exp(0.5 * i) * eye) for i in range(1, N_TARGETS + 1)]
    raise InvalidInputError(f"variant must be one of {VARIANTS}, got {variant!r}")


def toy_remark3(
    variant: str,
    batches: int = 100,
    batch_size: int = 50,
    rng: np.random.Generator | None = None,
) -> ToyResult:
    """Per-target mean and standard deviation of the two plug-in estimators."""
    if batches < 2 or batch_size < 2:
        raise InvalidInputError("batches and batch_size must both be >= 2")
    rng = rng if rng is not None else np.random.default_rng()
    reference = Gaussian([0.0, 0.0], np.eye(2))
    targets = _targets(variant)
    w2 = np.empty((batches, len(targets)))
    kl = np.empty((batches, len(targets)))
    for b in range(batches):
        batch = sample(reference, batch_size, rng)
        fitted = Gaussian(batch.mean(axis=0), np.cov(batch.T, bias=True))
        for k, target in enumerate(targets):
            w2[b, k] = w2_gaussian(fitted, target)
            kl[b, k] = kl_gaussian(fitted, target)
    return ToyResult(
        variant=variant,
        index=np.arange(1, len(targets) + 1),
        w2_mean=w2.mean(axis=0),
        w2_std=w2.std(axis=0, ddof=1),
        kl_mean=kl.mean(axis=0),
        kl_std=kl.std(axis=0, ddof=1),
    )
