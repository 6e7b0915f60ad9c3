"""Discrete optimal transport over the coupling polytope.

Three entry points: an exact transportation-LP solver for the small
state-level problems, an entropic (Sinkhorn) solver for the sample-level
problems, and iterative proportional fitting to push an approximately
feasible matrix back onto the polytope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linprog

from .errors import InfeasibleError, InvalidInputError, NonConvergenceError

MARGINAL_TOL = 1e-8
SINKHORN_TOL = 1e-9
SINKHORN_MAX_ITER = 10_000
IPF_TOL = 1e-9
IPF_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class CouplingMatrix:
    """Nonnegative matrix with prescribed row and column marginals."""

    w: NDArray
    row_marginal: NDArray
    col_marginal: NDArray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        row = np.atleast_1d(np.asarray(self.row_marginal, dtype=float))
        col = np.atleast_1d(np.asarray(self.col_marginal, dtype=float))
        if w.shape != (row.size, col.size):
            raise InvalidInputError(
                f"coupling shape {w.shape} does not match marginals "
                f"({row.size}, {col.size})"
            )
        if w.size and w.min() < 0.0:
            raise InvalidInputError(f"negative coupling entry {w.min():.3e}")
        row_gap = np.max(np.abs(w.sum(axis=1) - row))
        col_gap = np.max(np.abs(w.sum(axis=0) - col))
        if row_gap > MARGINAL_TOL or col_gap > MARGINAL_TOL:
            raise InvalidInputError(
                f"marginal violation: rows {row_gap:.3e}, cols {col_gap:.3e}"
            )
        for arr in (w, row, col):
            arr.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "row_marginal", row)
        object.__setattr__(self, "col_marginal", col)


def _check_marginal_pair(row: NDArray, col: NDArray) -> tuple[NDArray, NDArray]:
    row = np.atleast_1d(np.asarray(row, dtype=float))
    col = np.atleast_1d(np.asarray(col, dtype=float))
    if row.min(initial=0.0) < 0.0 or col.min(initial=0.0) < 0.0:
        raise InvalidInputError("marginals must be nonnegative")
    if abs(row.sum() - col.sum()) > 1e-6:
        raise InvalidInputError(
            f"marginal sums differ: {row.sum():.9f} vs {col.sum():.9f}"
        )
    return row, col


def solve_exact(
    cost: NDArray, row: NDArray, col: NDArray
) -> tuple[CouplingMatrix, float]:
    """Exact minimizer of <W, cost> over the coupling polytope.

    Solved as a transportation linear program (HiGHS); any optimal vertex is
    acceptable among degenerate optima.
    """
    cost = np.atleast_2d(np.asarray(cost, dtype=float))
    row, col = _check_marginal_pair(row, col)
    m, n = cost.shape
    if (m, n) != (row.size, col.size):
        raise InvalidInputError(
            f"cost shape {cost.shape} does not match marginals ({row.size}, {col.size})"
        )
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("cost matrix must be finite")

    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([row, col])
    # drop one redundant constraint so HiGHS sees a full-rank system
    res = linprog(
        cost.ravel(),
        A_eq=a_eq[:-1],
        b_eq=b_eq[:-1],
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if not res.success:
        raise NonConvergenceError(f"transportation LP failed: {res.message}")
    w = np.clip(res.x.reshape(m, n), 0.0, None)
    # tidy marginals to machine precision before validating
    w = _ipf_once(w, row, col)
    coupling = CouplingMatrix(w, row, col)
    return coupling, float(np.sum(coupling.w * cost))


def _ipf_once(w: NDArray, row: NDArray, col: NDArray) -> NDArray:
    rs = w.sum(axis=1)
    scale = np.divide(row, rs, out=np.zeros_like(row), where=rs > 0)
    w = w * scale[:, None]
    cs = w.sum(axis=0)
    scale = np.divide(col, cs, out=np.zeros_like(col), where=cs > 0)
    w = w * scale[None, :]
    rs = w.sum(axis=1)
    scale = np.divide(row, rs, out=np.zeros_like(row), where=rs > 0)
    return w * scale[:, None]


def solve_sinkhorn(
    cost: NDArray,
    row: NDArray,
    col: NDArray,
    epsilon: float | None = None,
) -> CouplingMatrix:
    """Entropically regularized coupling via log-domain Sinkhorn scaling.

    ``epsilon`` defaults to 0.05 x median(cost), a scale-invariant choice
    that keeps the plan close to the unregularized vertex.  Stops when both
    marginal violations drop below 1e-9 in L1, errors at the iteration cap.
    """
    cost = np.atleast_2d(np.asarray(cost, dtype=float))
    row, col = _check_marginal_pair(row, col)
    if epsilon is None:
        med = float(np.median(cost))
        epsilon = 0.05 * med if med > 0 else 1.0
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")

    # Stabilized scaling: plain row/column rescalings of the kernel, with the
    # accumulated scalings absorbed into log-domain potentials whenever they
    # grow large.  Equivalent to the pure log-domain iteration but one
    # iteration costs two matrix-vector products instead of two logsumexps.
    f = np.zeros(row.size)
    g = np.zeros(col.size)
    kernel = np.exp((f[:, None] + g[None, :] - cost) / epsilon)
    u = np.ones(row.size)
    v = np.ones(col.size)
    absorb_at = 1e100
    residual = np.inf
    check_every = 10
    with np.errstate(divide="ignore", invalid="ignore"):
        for it in range(1, SINKHORN_MAX_ITER + 1):
            kv = kernel @ v
            u = np.where(kv > 0, row / kv, 0.0)
            ktu = kernel.T @ u
            v = np.where(ktu > 0, col / ktu, 0.0)
            if it % check_every == 0 or it == SINKHORN_MAX_ITER:
                row_sums = u * (kernel @ v)
                residual = float(np.sum(np.abs(row_sums - row)))
                if residual < SINKHORN_TOL:
                    plan = (u[:, None] * kernel) * v[None, :]
                    return CouplingMatrix(_ipf_once(plan, row, col), row, col)
            if max(u.max(initial=0.0), v.max(initial=0.0)) > absorb_at:
                f = f + epsilon * np.log(np.where(u > 0, u, 1.0))
                g = g + epsilon * np.log(np.where(v > 0, v, 1.0))
                kernel = np.exp((f[:, None] + g[None, :] - cost) / epsilon)
                u = np.ones(row.size)
                v = np.ones(col.size)
    raise NonConvergenceError(
        f"Sinkhorn did not reach {SINKHORN_TOL:g} within {SINKHORN_MAX_ITER} "
        f"iterations (residual {residual:.3e})",
        residual=residual,
    )


def project_to_polytope(
    w: NDArray, row: NDArray, col: NDArray
) -> CouplingMatrix:
    """Iterative proportional fitting onto the coupling polytope."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    row, col = _check_marginal_pair(row, col)
    if w.shape != (row.size, col.size):
        raise InvalidInputError(
            f"matrix shape {w.shape} does not match marginals ({row.size}, {col.size})"
        )
    if w.size and w.min() < 0.0:
        raise InvalidInputError("entries must be nonnegative")
    dead_rows = (w.sum(axis=1) == 0) & (row > 0)
    dead_cols = (w.sum(axis=0) == 0) & (col > 0)
    if dead_rows.any() or dead_cols.any():
        raise InfeasibleError(
            "zero row/column with positive target marginal: "
            f"rows {np.flatnonzero(dead_rows).tolist()}, "
            f"cols {np.flatnonzero(dead_cols).tolist()}"
        )
    cur = w.copy()
    residual = np.inf
    for _ in range(IPF_MAX_SWEEPS):
        rs = cur.sum(axis=1)
        scale = np.divide(row, rs, out=np.zeros_like(row), where=rs > 0)
        cur *= scale[:, None]
        cs = cur.sum(axis=0)
        scale = np.divide(col, cs, out=np.zeros_like(col), where=cs > 0)
        cur *= scale[None, :]
        residual = float(
            np.sum(np.abs(cur.sum(axis=1) - row))
            + np.sum(np.abs(cur.sum(axis=0) - col))
        )
        if residual < IPF_TOL:
            return CouplingMatrix(_ipf_once(cur, row, col), row, col)
    raise NonConvergenceError(
        f"IPF did not reach {IPF_TOL:g} within {IPF_MAX_SWEEPS} sweeps "
        f"(residual {residual:.3e})",
        residual=residual,
    )
