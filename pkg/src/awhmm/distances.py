"""State registration and the aggregated Wasserstein distances MAW and IAW.

MAW registers the states of two models by solving an exact transport problem
whose ground cost is the pairwise Gaussian W2 raised to ``p``; IAW instead
estimates the registration from a sample-level optimal coupling through
posterior responsibilities, then projects it back onto the coupling
polytope.  Both feed the same marginal and transition aggregation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidInputError
from .gaussians import w2_gaussian, log_pdf_support
from .hmm import Gmm, GmmHmm, TransitionMatrix, conditional_gmm, marginal_gmm, sample_gmm
from .transport import (
    CouplingMatrix,
    project_to_polytope,
    solve_exact,
    solve_sinkhorn,
)

REGISTRATION_MARGINAL_TOL = 1e-6


@dataclass(frozen=True)
class Registration:
    """Coupling between two state sets plus the exponent it was built for."""

    coupling: CouplingMatrix
    method: str
    p: float

    def __post_init__(self):
        if self.method not in ("maw", "iaw"):
            raise InvalidInputError(f"unknown registration method {self.method!r}")
        if not 0.0 < self.p <= 2.0:
            raise InvalidInputError(f"exponent p must be in (0, 2], got {self.p}")


@dataclass(frozen=True)
class DistanceReport:
    """Marginal and transition terms plus their alpha-weighted combination."""

    marginal: float
    transition: float
    alpha: float
    combined: float
    registration: Registration

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")
        expected = (1.0 - self.alpha) * self.marginal + self.alpha * self.transition
        if abs(self.combined - expected) > 1e-12:
            raise InvalidInputError("combined value is not the stated affine sum")
        if min(self.marginal, self.transition, self.combined) < 0.0:
            raise InvalidInputError("distance terms must be nonnegative")


def _pairwise_w2(m1: Gmm, m2: Gmm) -> NDArray:
    if m1.dim != m2.dim:
        raise InvalidInputError(f"dimension mismatch: {m1.dim} vs {m2.dim}")
    return np.array(
        [[w2_gaussian(a, b) for b in m2.components] for a in m1.components]
    )


def register_maw(m1: Gmm, m2: Gmm, p: float = 1.0) -> Registration:
    """Exact transport registration with cost W2(phi_1i, phi_2j)^p."""
    cost = _pairwise_w2(m1, m2) ** p
    coupling, _ = solve_exact(cost, m1.weights, m2.weights)
    return Registration(coupling, "maw", p)


def _posteriors(gmm: Gmm, xs: NDArray) -> NDArray:
    """Responsibility matrix (n x M); support-restricted log densities so a
    shared degenerate subspace across components cancels out."""
    logp = np.column_stack([log_pdf_support(c, xs) for c in gmm.components])
    with np.errstate(divide="ignore"):
        logp = logp + np.log(gmm.weights)[None, :]
    top = logp.max(axis=1, keepdims=True)
    resp = np.exp(logp - top)
    return resp / resp.sum(axis=1, keepdims=True)


def register_iaw(
    m1: Gmm,
    m2: Gmm,
    n: int,
    p: float = 1.0,
    epsilon: float | None = None,
    rng: np.random.Generator | None = None,
) -> Registration:
    """Sample-level registration estimated through posterior responsibilities.

    Draws ``n`` points from each mixture, solves the entropic n x n transport
    with cost |x - y|^p and uniform marginals, contracts the plan with the
    two posterior matrices, and projects the result onto the coupling
    polytope of the mixture weights.
    """
    if n < 10:
        raise InvalidInputError("sample count n must be >= 10")
    if m1.dim != m2.dim:
        raise InvalidInputError(f"dimension mismatch: {m1.dim} vs {m2.dim}")
    rng = rng if rng is not None else np.random.default_rng()
    xs = sample_gmm(m1, n, rng)
    ys = sample_gmm(m2, n, rng)
    diff = xs[:, None, :] - ys[None, :, :]
    cost = np.sqrt(np.sum(diff * diff, axis=2)) ** p
    uniform = np.full(n, 1.0 / n)
    plan = solve_sinkhorn(cost, uniform, uniform, epsilon)
    resp1 = _posteriors(m1, xs)
    resp2 = _posteriors(m2, ys)
    w_hat = resp1.T @ plan.w @ resp2
    coupling = project_to_polytope(w_hat, m1.weights, m2.weights)
    return Registration(coupling, "iaw", p)


def registered_marginal_distance(m1: Gmm, m2: Gmm, reg: Registration) -> float:
    """Registered mixture distance: (sum_ij w_ij W2^p)^(1/p)."""
    if (
        reg.coupling.w.shape != (m1.n_components, m2.n_components)
        or np.max(np.abs(reg.coupling.row_marginal - m1.weights)) > REGISTRATION_MARGINAL_TOL
        or np.max(np.abs(reg.coupling.col_marginal - m2.weights)) > REGISTRATION_MARGINAL_TOL
    ):
        raise InvalidInputError("registration marginals do not match the mixtures")
    cost = _pairwise_w2(m1, m2) ** reg.p
    return float(np.sum(reg.coupling.w * cost)) ** (1.0 / reg.p)


def register_transition(
    t_from: TransitionMatrix, reg: Registration, direction: str
) -> TransitionMatrix:
    """Carry a transition matrix across the registration.

    ``direction="2to1"`` maps the second model's matrix into the first
    model's state space (W_r T2 W_c'), ``"1to2"`` the reverse (W_c' T1 W_r).
    Output rows are renormalized to absorb rounding drift.
    """
    w = reg.coupling.w
    row_sums = w.sum(axis=1)
    col_sums = w.sum(axis=0)
    empty_rows = np.flatnonzero(row_sums <= 0)
    empty_cols = np.flatnonzero(col_sums <= 0)
    if empty_rows.size or empty_cols.size:
        raise InvalidInputError(
            "registration has empty states: "
            f"rows {empty_rows.tolist()}, cols {empty_cols.tolist()}"
        )
    w_r = w / row_sums[:, None]
    w_c = w / col_sums[None, :]
    if direction == "2to1":
        if t_from.n_states != w.shape[1]:
            raise InvalidInputError("transition matrix does not match the column side")
        out = w_r @ t_from.t @ w_c.T
    elif direction == "1to2":
        if t_from.n_states != w.shape[0]:
            raise InvalidInputError("transition matrix does not match the row side")
        out = w_c.T @ t_from.t @ w_r
    else:
        raise InvalidInputError(f"direction must be '2to1' or '1to2', got {direction!r}")
    out = np.clip(out, 0.0, None)
    out /= out.sum(axis=1, keepdims=True)
    return TransitionMatrix(out)


def _conditional_gap(model: GmmHmm, row_a: NDArray, row_b: NDArray, p: float) -> float:
    """W-tilde_p^p between two conditional mixtures over the same components."""
    ga = conditional_gmm(model, row_a)
    gb = conditional_gmm(model, row_b)
    reg = register_maw(ga, gb, p)
    return registered_marginal_distance(ga, gb, reg) ** p


def transition_discrepancy(
    h1: GmmHmm, h2: GmmHmm, reg: Registration, p: float = 1.0
) -> float:
    """Symmetric transition-matrix discrepancy through conditional mixtures.

    Each side compares, state by state, the next-observation mixture under
    its own transition row against the row carried over from the other model,
    weighting states by the stationary vector.
    """
    t2_reg = register_transition(h2.trans, reg, "2to1")
    t1_reg = register_transition(h1.trans, reg, "1to2")
    d1 = sum(
        h1.stationary[i] * _conditional_gap(h1, h1.trans.t[i], t2_reg.t[i], p)
        for i in range(h1.n_states)
    )
    d2 = sum(
        h2.stationary[i] * _conditional_gap(h2, h2.trans.t[i], t1_reg.t[i], p)
        for i in range(h2.n_states)
    )
    return float(d1 + d2) ** (1.0 / p)


def _aggregate(
    h1: GmmHmm, h2: GmmHmm, reg: Registration, alpha: float
) -> DistanceReport:
    m1 = marginal_gmm(h1)
    m2 = marginal_gmm(h2)
    marginal = registered_marginal_distance(m1, m2, reg)
    transition = transition_discrepancy(h1, h2, reg, reg.p)
    combined = (1.0 - alpha) * marginal + alpha * transition
    return DistanceReport(marginal, transition, alpha, combined, reg)


def maw(h1: GmmHmm, h2: GmmHmm, alpha: float, p: float = 1.0) -> DistanceReport:
    """Minimized aggregated Wasserstein distance between two models."""
    reg = register_maw(marginal_gmm(h1), marginal_gmm(h2), p)
    return _aggregate(h1, h2, reg, alpha)


def iaw(
    h1: GmmHmm,
    h2: GmmHmm,
    alpha: float,
    p: float = 1.0,
    n: int = 500,
    epsilon: float | None = None,
    rng: np.random.Generator | None = None,
) -> DistanceReport:
    """Improved aggregated Wasserstein distance (sample-based registration)."""
    reg = register_iaw(marginal_gmm(h1), marginal_gmm(h2), n, p, epsilon, rng)
    return _aggregate(h1, h2, reg, alpha)
