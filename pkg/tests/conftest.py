import numpy as np
import pytest

from awhmm import Gaussian, GmmHmm, TransitionMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def well_separated_pair():
    """Two close 2-state models with well-separated states."""
    eye = np.eye(2)
    trans = TransitionMatrix([[0.8, 0.2], [0.2, 0.8]])
    h1 = GmmHmm(trans, (Gaussian([2, 2], eye), Gaussian([5, 5], eye)))
    h2 = GmmHmm(trans, (Gaussian([2.4, 2.4], eye), Gaussian([5.4, 5.4], eye)))
    return h1, h2


def random_psd(rng, d, scale=1.0):
    a = rng.standard_normal((d, d))
    return scale * (a @ a.T) / d + 0.05 * np.eye(d)


def random_gaussian(rng, d):
    return Gaussian(rng.standard_normal(d), random_psd(rng, d))


def random_hmm(rng, m, d):
    trans = np.stack([rng.dirichlet(np.full(m, 2.0)) for _ in range(m)])
    emissions = tuple(random_gaussian(rng, d) for _ in range(m))
    return GmmHmm(TransitionMatrix(trans), emissions)
