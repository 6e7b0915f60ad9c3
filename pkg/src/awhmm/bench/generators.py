"""Seed-model generators for the perturbation experiments.

Two flavors: the fixed 2-state, 2-dimensional presets (five models per
family, perturbation stepped by a per-family knob) and the general
procedural generators where a single scale parameter controls how far the
seed models of one collection spread apart.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.stats import wishart

from ..errors import InvalidInputError
from ..gaussians import Gaussian
from ..hmm import GmmHmm, TransitionMatrix
from .config import ExperimentConfig

TABLE1_TRANSITION = np.array([[0.8, 0.2], [0.2, 0.8]])
WISHART_DF = 10


def _positive_normal(rng: np.random.Generator, loc: float, var: float) -> float:
    # redrawing keeps the state scale factors positive (p(redraw) ~ 0)
    while True:
        beta = rng.normal(loc, np.sqrt(var))
        if beta > 0:
            return float(beta)


def _model(trans: np.ndarray, means, covs) -> GmmHmm:
    emissions = tuple(Gaussian(mu, c) for mu, c in zip(means, covs))
    return GmmHmm(TransitionMatrix(trans), emissions)


def seeds_table1(
    family: str, knob: float, rng: np.random.Generator
) -> list[GmmHmm]:
    """The five fixed 2-state, 2-d preset models of one perturbation family."""
    eye = np.eye(2)
    if family == "mu-perturb":
        return [
            _model(
                TABLE1_TRANSITION,
                [np.full(2, 2 + i * knob), np.full(2, 5 + i * knob)],
                [eye, eye],
            )
            for i in range(1, 6)
        ]
    if family == "sigma-perturb":
        raw = rng.random((2, 2))
        sym = (raw + raw.T) / 2.0
        models = []
        for i in range(1, 6):
            cov = 0.2 * expm(i * knob * sym)
            models.append(
                _model(TABLE1_TRANSITION, [np.full(2, 2.0), np.full(2, 5.0)], [cov, cov])
            )
        return models
    if family == "trans-perturb":
        base = TABLE1_TRANSITION
        models = []
        for _ in range(1, 6):
            perturb = np.stack([rng.dirichlet(10.0 * base[j]) for j in range(2)])
            trans = knob * base + (1.0 - knob) * perturb
            models.append(
                _model(trans, [np.full(2, 2.0), np.full(2, 5.0)], [eye, eye])
            )
        return models
    raise InvalidInputError(f"unknown family {family!r}")


def _shared_transition(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.base_transition is not None:
        return np.asarray(cfg.base_transition, dtype=float)
    return np.stack([rng.dirichlet(np.ones(cfg.states)) for _ in range(cfg.states)])


def seeds_mu_perturb(cfg: ExperimentConfig, rng: np.random.Generator) -> list[GmmHmm]:
    """Mean-perturbed collection: shared covariances and transition matrix,
    per-class means jittered around common anchors with variance ``scale``."""
    m, d, s = cfg.states, cfg.dim, cfg.n_classes
    anchors = rng.normal(0.0, 1.0, size=(m, d))
    class_means = anchors[None, :, :] + np.sqrt(cfg.scale) * rng.standard_normal((s, m, d))
    covs = [_positive_normal(rng, 1.0, 0.1) * np.eye(d) for _ in range(m)]
    trans = _shared_transition(cfg, rng)
    return [_model(trans, class_means[i], covs) for i in range(s)]


def seeds_sigma_perturb(cfg: ExperimentConfig, rng: np.random.Generator) -> list[GmmHmm]:
    """Covariance-perturbed collection: per-class covariance interpolates
    between a base matrix and a unit-mean Wishart draw."""
    m, d, s = cfg.states, cfg.dim, cfg.n_classes
    if d > WISHART_DF:
        raise InvalidInputError(f"dimension {d} exceeds the Wishart df {WISHART_DF}")
    base = np.eye(d)
    means = rng.normal(0.0, np.sqrt(5.0), size=(m, d))
    betas = [_positive_normal(rng, 1.0, 0.1) for _ in range(m)]
    trans = _shared_transition(cfg, rng)
    models = []
    for _ in range(s):
        pert = wishart(WISHART_DF, base).rvs(random_state=rng) / WISHART_DF
        class_cov = (1.0 - cfg.scale) * base + cfg.scale * pert
        covs = [betas[j] * class_cov for j in range(m)]
        models.append(_model(trans, means, covs))
    return models


def seeds_trans_perturb(cfg: ExperimentConfig, rng: np.random.Generator) -> list[GmmHmm]:
    """Transition-perturbed collection: emissions shared across classes, each
    class transition matrix a ``scale``-weighted blend of the base with a
    flat-Dirichlet random matrix (scale weights the base)."""
    m, d, s = cfg.states, cfg.dim, cfg.n_classes
    if cfg.scale > 1.0:
        raise InvalidInputError("transition blend weight must lie in (0, 1]")
    means = rng.normal(0.0, np.sqrt(5.0), size=(m, d))
    covs = [_positive_normal(rng, 1.0, 0.1) * np.eye(d) for _ in range(m)]
    base = _shared_transition(cfg, rng)
    models = []
    for _ in range(s):
        perturb = np.stack([rng.dirichlet(np.ones(m)) for _ in range(m)])
        trans = cfg.scale * base + (1.0 - cfg.scale) * perturb
        models.append(_model(trans, means, covs))
    return models


def generate_seeds(cfg: ExperimentConfig, rng: np.random.Generator) -> list[GmmHmm]:
    """Dispatch on preset and family."""
    if cfg.preset == "table1":
        return seeds_table1(cfg.family, cfg.scale, rng)
    if cfg.family == "mu-perturb":
        return seeds_mu_perturb(cfg, rng)
    if cfg.family == "sigma-perturb":
        return seeds_sigma_perturb(cfg, rng)
    return seeds_trans_perturb(cfg, rng)
