"""Gaussian distributions with possibly singular covariance.

Covariances are kept as dense symmetric PSD matrices.  Zero eigenvalues are
allowed everywhere except in density evaluations: the 2-Wasserstein distance
is finite for degenerate Gaussians while the KL divergence and log-density
are not, and that contrast is load-bearing for the rest of the library.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateDensityError, InvalidInputError

SYMMETRY_TOL = 1e-9
PSD_CLAMP = 1e-9
# eigenvalues below this fraction of the largest count as zero variance
DEGENERACY_RTOL = 1e-12


def _check_symmetric(a: NDArray, tol: float = SYMMETRY_TOL) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    gap = np.max(np.abs(a - a.T)) if a.size else 0.0
    if gap > tol:
        raise InvalidInputError(f"matrix is not symmetric: max asymmetry {gap:.3e}")


def sqrtm_psd(a: NDArray) -> NDArray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-9, 0) are clamped to zero; anything more negative is
    rejected as not PSD.
    """
    a = np.asarray(a, dtype=float)
    _check_symmetric(a)
    vals, vecs = np.linalg.eigh((a + a.T) / 2.0)
    if vals.size and vals[0] < -PSD_CLAMP:
        raise InvalidInputError(f"matrix is not PSD: min eigenvalue {vals[0]:.3e}")
    vals = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return (root + root.T) / 2.0


@dataclass(frozen=True)
class Gaussian:
    """Mean vector plus symmetric PSD covariance; one emission density."""

    mean: NDArray
    cov: NDArray
    _eigvals: NDArray = field(init=False, repr=False, compare=False)
    _eigvecs: NDArray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or mean.size < 1:
            raise InvalidInputError("mean must be a vector of length >= 1")
        _check_symmetric(cov)
        if cov.shape[0] != mean.size:
            raise InvalidInputError(
                f"dimension mismatch: mean has d={mean.size}, cov is {cov.shape}"
            )
        cov = (cov + cov.T) / 2.0
        vals, vecs = np.linalg.eigh(cov)
        if vals[0] < -PSD_CLAMP:
            raise InvalidInputError(
                f"covariance is not PSD: min eigenvalue {vals[0]:.3e}"
            )
        if vals[0] < 0.0:
            vals = np.clip(vals, 0.0, None)
            cov = (vecs * vals) @ vecs.T
            cov = (cov + cov.T) / 2.0
        mean.flags.writeable = False
        cov.flags.writeable = False
        vals.flags.writeable = False
        vecs.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_eigvals", vals)
        object.__setattr__(self, "_eigvecs", vecs)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def is_degenerate(self) -> bool:
        vals = self._eigvals
        return bool(vals[0] <= DEGENERACY_RTOL * max(vals[-1], 0.0) or vals[-1] == 0.0)


def w2_gaussian(phi1: Gaussian, phi2: Gaussian) -> float:
    """Closed-form 2-Wasserstein distance between two Gaussians.

    W2^2 = |mu1-mu2|^2 + tr[S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}].
    Finite for singular covariances.  The scalar under the outer square root
    is clamped at zero to absorb rounding on near-identical inputs.
    """
    if phi1.dim != phi2.dim:
        raise InvalidInputError(
            f"dimension mismatch: {phi1.dim} vs {phi2.dim}"
        )
    if np.array_equal(phi1.mean, phi2.mean) and np.array_equal(phi1.cov, phi2.cov):
        # exact zero for identical parameters: the Bures trace term would
        # otherwise pick up sqrt(machine-epsilon) noise
        return 0.0
    root1 = (phi1._eigvecs * np.sqrt(phi1._eigvals)) @ phi1._eigvecs.T
    inner = root1 @ phi2.cov @ root1
    cross = sqrtm_psd((inner + inner.T) / 2.0)
    trace_term = np.trace(phi1.cov) + np.trace(phi2.cov) - 2.0 * np.trace(cross)
    total = float(np.sum((phi1.mean - phi2.mean) ** 2)) + max(trace_term, 0.0)
    return float(np.sqrt(max(total, 0.0)))


def log_pdf(phi: Gaussian, x: NDArray) -> float:
    """Log multivariate normal density at ``x``; rejects singular covariance."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != phi.dim:
        raise InvalidInputError(f"x has dimension {x.size}, expected {phi.dim}")
    vals = phi._eigvals
    if vals[0] <= DEGENERACY_RTOL * max(vals[-1], 0.0) or vals[-1] <= 0.0:
        raise DegenerateDensityError(
            "covariance is (near-)singular; density is undefined"
        )
    dev = phi._eigvecs.T @ (x - phi.mean)
    quad = float(np.sum(dev * dev / vals))
    logdet = float(np.sum(np.log(vals)))
    return -0.5 * (phi.dim * np.log(2.0 * np.pi) + logdet + quad)


def log_pdf_many(phi: Gaussian, xs: NDArray) -> NDArray:
    """Vectorized ``log_pdf`` over the rows of ``xs``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != phi.dim:
        raise InvalidInputError(f"rows have dimension {xs.shape[1]}, expected {phi.dim}")
    vals = phi._eigvals
    if vals[0] <= DEGENERACY_RTOL * max(vals[-1], 0.0) or vals[-1] <= 0.0:
        raise DegenerateDensityError(
            "covariance is (near-)singular; density is undefined"
        )
    dev = (xs - phi.mean) @ phi._eigvecs
    quad = np.sum(dev * dev / vals, axis=1)
    logdet = float(np.sum(np.log(vals)))
    return -0.5 * (phi.dim * np.log(2.0 * np.pi) + logdet + quad)


def log_pdf_support(phi: Gaussian, xs: NDArray) -> NDArray:
    """Log density restricted to the covariance's support subspace.

    Zero-variance directions contribute nothing when the deviation along them
    vanishes and -inf otherwise.  Used for posterior responsibilities of
    models whose states all share the same degenerate directions, where the
    off-support factors cancel in the normalization.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    vals = phi._eigvals
    top = max(vals[-1], 1.0)
    keep = vals > DEGENERACY_RTOL * top
    dev = (xs - phi.mean) @ phi._eigvecs
    out = np.full(xs.shape[0], -np.inf)
    off = np.max(np.abs(dev[:, ~keep]), axis=1) if (~keep).any() else np.zeros(xs.shape[0])
    on_support = off <= 1e-8 * np.sqrt(top)
    k = int(keep.sum())
    if k == 0:
        out[on_support] = 0.0
        return out
    quad = np.sum(dev[:, keep] ** 2 / vals[keep], axis=1)
    logdet = float(np.sum(np.log(vals[keep])))
    out[on_support] = (-0.5 * (k * np.log(2.0 * np.pi) + logdet + quad))[on_support]
    return out


def sample(phi: Gaussian, n: int, rng: np.random.Generator) -> NDArray:
    """Draw ``n`` i.i.d. rows from ``phi``; degenerate directions get zero spread."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    vals = phi._eigvals
    # eigenvalues at the degeneracy floor are rounding residue of an exactly
    # singular covariance; give those directions exactly zero spread so the
    # draws stay on the support subspace
    vals = np.where(vals > DEGENERACY_RTOL * max(vals[-1], 0.0), vals, 0.0)
    scale = phi._eigvecs * np.sqrt(vals)
    z = rng.standard_normal((n, phi.dim))
    return phi.mean + z @ scale.T


def kl_gaussian(phi1: Gaussian, phi2: Gaussian) -> float:
    """Closed-form KL(phi1 || phi2); diverges on singular covariances."""
    if phi1.dim != phi2.dim:
        raise InvalidInputError(f"dimension mismatch: {phi1.dim} vs {phi2.dim}")
    if phi1.is_degenerate or phi2.is_degenerate:
        raise DegenerateDensityError(
            "KL divergence is undefined for singular covariances"
        )
    d = phi1.dim
    prec2 = (phi2._eigvecs / phi2._eigvals) @ phi2._eigvecs.T
    dmu = phi2.mean - phi1.mean
    tr = float(np.trace(prec2 @ phi1.cov))
    quad = float(dmu @ prec2 @ dmu)
    logdet = float(np.sum(np.log(phi2._eigvals)) - np.sum(np.log(phi1._eigvals)))
    return max(0.5 * (tr + quad - d + logdet), 0.0)
