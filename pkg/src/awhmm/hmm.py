"""Gaussian-emission HMMs: model objects, simulation, likelihood, Baum-Welch.

A model couples a row-stochastic transition matrix with one Gaussian per
state; the stationary vector of the chain doubles as the weight vector of
the marginal Gaussian mixture.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import (
    DegenerateDataError,
    InvalidInputError,
    NonConvergenceError,
)
from .gaussians import Gaussian, log_pdf_many, sample as sample_gaussian

STATIONARY_TOL = 1e-12
STATIONARY_MAX_ITER = 100_000


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic M x M matrix of transition probabilities."""

    t: NDArray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.t, dtype=float))
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
            raise InvalidInputError(f"transition matrix must be square, got {t.shape}")
        if t.min() < 0.0:
            raise InvalidInputError(f"negative transition probability {t.min():.3e}")
        gap = np.max(np.abs(t.sum(axis=1) - 1.0))
        if gap > 1e-9:
            raise InvalidInputError(f"rows must sum to 1 (violation {gap:.3e})")
        t.flags.writeable = False
        object.__setattr__(self, "t", t)

    @property
    def n_states(self) -> int:
        return self.t.shape[0]


def stationary_distribution(trans: TransitionMatrix) -> NDArray:
    """Stationary vector by power iteration on T' from the uniform start.

    Iterates on the lazy chain (T + I)/2, which has exactly the same
    stationary vectors but converges for periodic chains too (EM fits on
    strongly alternating data can produce T with zero diagonal).
    """
    t = (trans.t + np.eye(trans.n_states)) / 2.0
    pi = np.full(t.shape[0], 1.0 / t.shape[0])
    for _ in range(STATIONARY_MAX_ITER):
        nxt = pi @ t
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < STATIONARY_TOL:
            return nxt
        pi = nxt
    raise NonConvergenceError(
        f"power iteration did not converge within {STATIONARY_MAX_ITER} iterations"
    )


@dataclass(frozen=True)
class Gmm:
    """Finite Gaussian mixture: probability weights plus components."""

    weights: NDArray
    components: tuple[Gaussian, ...]

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        comps = tuple(self.components)
        if w.size != len(comps) or w.size < 1:
            raise InvalidInputError("weights and components must match and be nonempty")
        if w.min() < 0.0:
            raise InvalidInputError(f"negative mixture weight {w.min():.3e}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"weights must sum to 1, got {w.sum():.12f}")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise InvalidInputError(f"components have mixed dimensions {sorted(dims)}")
        w = w / w.sum()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim


@dataclass(frozen=True)
class GmmHmm:
    """Transition matrix, per-state Gaussians, and the stationary weights."""

    trans: TransitionMatrix
    emissions: tuple[Gaussian, ...]
    stationary: NDArray = field(default=None)

    def __post_init__(self):
        emissions = tuple(self.emissions)
        if len(emissions) != self.trans.n_states:
            raise InvalidInputError(
                f"{len(emissions)} emissions for {self.trans.n_states} states"
            )
        dims = {e.dim for e in emissions}
        if len(dims) != 1:
            raise InvalidInputError(f"emissions have mixed dimensions {sorted(dims)}")
        if self.stationary is None:
            pi = stationary_distribution(self.trans)
        else:
            pi = np.atleast_1d(np.asarray(self.stationary, dtype=float))
            if pi.size != self.trans.n_states or abs(pi.sum() - 1.0) > 1e-9:
                raise InvalidInputError("stationary vector has wrong size or sum")
            if np.max(np.abs(pi @ self.trans.t - pi)) > 1e-8:
                raise InvalidInputError("stationary vector does not satisfy pi T = pi")
        pi = np.asarray(pi, dtype=float)
        pi.flags.writeable = False
        object.__setattr__(self, "stationary", pi)
        object.__setattr__(self, "emissions", emissions)

    @property
    def n_states(self) -> int:
        return self.trans.n_states

    @property
    def dim(self) -> int:
        return self.emissions[0].dim


def marginal_gmm(model: GmmHmm) -> Gmm:
    """Stationary-weighted mixture of the model's emissions."""
    return Gmm(model.stationary, model.emissions)


def conditional_gmm(model: GmmHmm, row: NDArray) -> Gmm:
    """Next-observation mixture for a given (possibly registered) state row."""
    row = np.atleast_1d(np.asarray(row, dtype=float))
    if row.size != model.n_states:
        raise InvalidInputError(f"row has {row.size} entries for {model.n_states} states")
    if row.min() < -1e-12:
        raise InvalidInputError("row entries must be nonnegative")
    row = np.clip(row, 0.0, None)
    total = row.sum()
    if total <= 0.0:
        raise InvalidInputError("row of all zeros has no conditional mixture")
    if abs(total - 1.0) > 1e-6:
        raise InvalidInputError(f"row sums to {total:.9f}, expected 1 within 1e-6")
    return Gmm(row / total, model.emissions)


def _component_key(comp: Gaussian) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(comp.mean.tobytes())
    h.update(comp.cov.tobytes())
    return int.from_bytes(h.digest(), "little")


def sample_gmm(gmm: Gmm, n: int, rng: np.random.Generator) -> NDArray:
    """Draw ``n`` rows from the mixture, stratified over the components.

    Component counts follow a largest-remainder allocation of ``n * weights``
    and each component's draws come from a substream keyed by its parameters
    rather than its position, so the sample is invariant to relabeling the
    components (up to row order).  Rows are grouped by component.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    base = int(rng.integers(0, 2**63))
    keys = [_component_key(c) for c in gmm.components]
    ideal = n * gmm.weights
    counts = np.floor(ideal).astype(int)
    remainder = ideal - counts
    # stable, label-independent tie-break: largest remainder first, then key
    order = np.lexsort((keys, -remainder))
    counts[order[: n - counts.sum()]] += 1
    # identical components share a key; an occurrence index keeps their draws
    # independent while swapping them remains a no-op
    seen: dict[int, int] = {}
    parts = []
    for comp, k, key in zip(gmm.components, counts, keys):
        occurrence = seen.get(key, 0)
        seen[key] = occurrence + 1
        if k > 0:
            sub = np.random.default_rng([base, key, occurrence])
            parts.append(sample_gaussian(comp, int(k), sub))
    return np.concatenate(parts, axis=0)


def simulate(
    model: GmmHmm, length: int, rng: np.random.Generator
) -> tuple[NDArray, NDArray]:
    """Simulate one observation sequence and its hidden state path."""
    if length < 1:
        raise InvalidInputError("length must be >= 1")
    m = model.n_states
    states = np.empty(length, dtype=int)
    states[0] = rng.choice(m, p=model.stationary)
    cum = np.cumsum(model.trans.t, axis=1)
    draws = rng.random(length - 1)
    for t in range(1, length):
        states[t] = np.searchsorted(cum[states[t - 1]], draws[t - 1], side="right")
    states = np.minimum(states, m - 1)
    obs = np.empty((length, model.dim))
    z = rng.standard_normal((length, model.dim))
    for i, emission in enumerate(model.emissions):
        idx = np.flatnonzero(states == i)
        if idx.size:
            scale = emission._eigvecs * np.sqrt(emission._eigvals)
            obs[idx] = emission.mean + z[idx] @ scale.T
    return obs, states


def _log_emission_matrix(model: GmmHmm, obs: NDArray) -> NDArray:
    return np.column_stack([log_pdf_many(e, obs) for e in model.emissions])


def forward_loglik(model: GmmHmm, obs: NDArray) -> float:
    """Log P(obs | model) by the scaled forward recursion."""
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    return float(forward_loglik_batch(model, obs[None, :, :])[0])


def forward_loglik_batch(model: GmmHmm, seqs: NDArray) -> NDArray:
    """Forward log-likelihood of a (k, T, d) stack of sequences.

    Runs the recursion for all sequences in lockstep with per-step rescaling,
    which keeps the 100-step x 2-state case at sub-millisecond cost.
    """
    seqs = np.asarray(seqs, dtype=float)
    k, n, d = seqs.shape
    flat = seqs.reshape(k * n, d)
    logb = _log_emission_matrix(model, flat).reshape(k, n, -1)
    # per (sequence, time) shift so the linear-domain recursion cannot underflow
    shift = logb.max(axis=2)
    b = np.exp(logb - shift[:, :, None])
    t_mat = model.trans.t
    alpha = model.stationary[None, :] * b[:, 0, :]
    c = alpha.sum(axis=1)
    ll = np.log(c) + shift[:, 0]
    alpha /= c[:, None]
    for step in range(1, n):
        alpha = (alpha @ t_mat) * b[:, step, :]
        c = alpha.sum(axis=1)
        ll += np.log(c) + shift[:, step]
        alpha /= c[:, None]
    return ll


@dataclass(frozen=True)
class EstimationOptions:
    restarts: int = 3
    max_iter: int = 200
    tol: float = 1e-6
    cov_floor: float = 1e-6
    diagonal_cov: bool = False
    kmeans_cov_floor: float = 1e-4


def _kmeans_pp(obs: NDArray, m: int, rng: np.random.Generator) -> NDArray:
    """k-means++ seeding followed by Lloyd iterations; returns labels."""
    n = obs.shape[0]
    centers = [obs[rng.integers(n)]]
    for _ in range(1, m):
        d2 = np.min(
            [np.sum((obs - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(obs[rng.integers(n)])
            continue
        centers.append(obs[rng.choice(n, p=d2 / total)])
    centers = np.array(centers)
    labels = np.zeros(n, dtype=int)
    for _ in range(100):
        dists = np.sum((obs[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists, axis=1)
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for k in range(m):
            pts = obs[labels == k]
            if pts.shape[0]:
                centers[k] = pts.mean(axis=0)
    return labels


def _floor_cov(cov: NDArray, floor: float, diagonal: bool) -> NDArray:
    if diagonal:
        return np.diag(np.maximum(np.diag(cov), floor))
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2.0)
    vals = np.maximum(vals, floor)
    out = (vecs * vals) @ vecs.T
    return (out + out.T) / 2.0


def _forward_backward(
    pi0: NDArray, t_mat: NDArray, logb: NDArray
) -> tuple[NDArray, NDArray, float]:
    """Posterior state marginals, expected transition counts, and loglik.

    Scaled linear-domain recursions; per-step shifts of the emission matrix
    guard against underflow.
    """
    n, m = logb.shape
    shift = logb.max(axis=1)
    b = np.exp(logb - shift[:, None])
    alpha = np.empty((n, m))
    c = np.empty(n)
    a = pi0 * b[0]
    c[0] = a.sum()
    alpha[0] = a / c[0]
    for t in range(1, n):
        a = (alpha[t - 1] @ t_mat) * b[t]
        c[t] = a.sum()
        alpha[t] = a / c[t]
    ll = float(np.sum(np.log(c)) + np.sum(shift))
    beta = np.empty((n, m))
    beta[-1] = 1.0
    for t in range(n - 2, -1, -1):
        beta[t] = (t_mat @ (b[t + 1] * beta[t + 1])) / c[t + 1]
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    weighted = b[1:] * beta[1:] / c[1:, None]
    xi = t_mat * (alpha[:-1].T @ weighted)
    return gamma, xi, ll


def _em_fit(
    sequences: list[NDArray],
    m: int,
    rng: np.random.Generator,
    opts: EstimationOptions,
) -> tuple[GmmHmm, list[float]]:
    d = sequences[0].shape[1]
    pooled = np.concatenate(sequences, axis=0)
    labels = _kmeans_pp(pooled, m, rng)
    means = np.empty((m, d))
    covs = np.empty((m, d, d))
    for k in range(m):
        pts = pooled[labels == k]
        if pts.shape[0] == 0:
            pts = pooled[rng.choice(pooled.shape[0], size=max(2, d), replace=False)]
        means[k] = pts.mean(axis=0)
        scatter = np.cov(pts.T, bias=True).reshape(d, d) if pts.shape[0] > 1 else np.zeros((d, d))
        covs[k] = _floor_cov(scatter + opts.kmeans_cov_floor * np.eye(d),
                             opts.cov_floor, opts.diagonal_cov)
    trans = np.full((m, m), 1.0 / m)
    pi0 = np.full(m, 1.0 / m)

    history: list[float] = []
    model_parts = (trans, means, covs, pi0)
    for _ in range(opts.max_iter):
        trans, means, covs, pi0 = model_parts
        emissions = [Gaussian(means[k], covs[k]) for k in range(m)]
        gamma_sum = np.zeros(m)
        gamma_first = np.zeros(m)
        xi_sum = np.zeros((m, m))
        mean_acc = np.zeros((m, d))
        ll_total = 0.0
        gammas = []
        for seq in sequences:
            logb = np.column_stack([log_pdf_many(e, seq) for e in emissions])
            gamma, xi, ll = _forward_backward(pi0, trans, logb)
            ll_total += ll
            gammas.append(gamma)
            gamma_sum += gamma.sum(axis=0)
            gamma_first += gamma[0]
            xi_sum += xi
            mean_acc += gamma.T @ seq
        history.append(ll_total)
        if len(history) > 1 and history[-1] - history[-2] < opts.tol:
            break
        new_means = mean_acc / gamma_sum[:, None]
        new_covs = np.empty_like(covs)
        for k in range(m):
            acc = np.zeros((d, d))
            for seq, gamma in zip(sequences, gammas):
                dev = seq - new_means[k]
                acc += (gamma[:, k][:, None] * dev).T @ dev
            new_covs[k] = _floor_cov(acc / gamma_sum[k], opts.cov_floor, opts.diagonal_cov)
        row_sum = xi_sum.sum(axis=1, keepdims=True)
        new_trans = np.where(row_sum > 0, xi_sum / np.where(row_sum > 0, row_sum, 1.0),
                             1.0 / m)
        new_trans /= new_trans.sum(axis=1, keepdims=True)
        new_pi0 = gamma_first / gamma_first.sum()
        model_parts = (new_trans, new_means, new_covs, new_pi0)

    trans, means, covs, _ = model_parts
    tm = TransitionMatrix(trans)
    model = GmmHmm(tm, tuple(Gaussian(means[k], covs[k]) for k in range(m)))
    return model, history


def baum_welch(
    obs: NDArray | list[NDArray],
    m: int,
    rng: np.random.Generator,
    opts: EstimationOptions | None = None,
) -> GmmHmm:
    """EM estimation of a GMM-HMM from one or more sequences.

    Emissions are initialized by k-means++ on the pooled observations, the
    transition matrix uniformly; the best of ``opts.restarts`` restarts by
    final log-likelihood wins and its stationary vector is recomputed from
    the final transition matrix.
    """
    opts = opts or EstimationOptions()
    if isinstance(obs, np.ndarray):
        sequences = [np.atleast_2d(np.asarray(obs, dtype=float))]
    else:
        sequences = [np.atleast_2d(np.asarray(o, dtype=float)) for o in obs]
    if m < 1:
        raise InvalidInputError("state count must be >= 1")
    total = sum(s.shape[0] for s in sequences)
    if m > total:
        raise InvalidInputError(f"m={m} exceeds total observation count {total}")
    pooled = np.concatenate(sequences, axis=0)
    if np.allclose(pooled, pooled[0], atol=0.0, rtol=0.0):
        raise DegenerateDataError("all observations are identical")

    best: tuple[GmmHmm, float] | None = None
    for child in rng.spawn(max(opts.restarts, 1)):
        model, history = _em_fit(sequences, m, child, opts)
        score = history[-1]
        if best is None or score > best[1]:
            best = (model, score)
    return best[0]


def baum_welch_history(
    obs: NDArray | list[NDArray],
    m: int,
    rng: np.random.Generator,
    opts: EstimationOptions | None = None,
) -> tuple[GmmHmm, list[float]]:
    """Single-restart EM exposing the per-iteration log-likelihood trace."""
    opts = opts or EstimationOptions()
    if isinstance(obs, np.ndarray):
        sequences = [np.atleast_2d(np.asarray(obs, dtype=float))]
    else:
        sequences = [np.atleast_2d(np.asarray(o, dtype=float)) for o in obs]
    return _em_fit(sequences, m, rng, opts)
