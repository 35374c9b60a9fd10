import numpy as np
import pytest

from core.synthetic import gen_synthetic
from models.dataset import Dataset
from models.tree import ModelParams, TreeTopology


def make_model(rng, depth, n_features, scale=1.0, mu=1.0, constant_leaves=False):
    topology = TreeTopology(depth)
    omega = scale * rng.standard_normal((n_features + 1, topology.n_branch))
    beta = rng.standard_normal((n_features + 1, topology.n_leaf))
    if constant_leaves:
        beta[1:, :] = 0.0
    return ModelParams(topology=topology, omega=omega, beta=beta, mu=mu)


def make_dataset(rng, n_samples, n_features):
    X = rng.uniform(0.0, 1.0, size=(n_samples, n_features))
    y = rng.standard_normal(n_samples)
    return Dataset(X=X, y=y)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def toy_dataset(rng):
    return make_dataset(rng, 30, 3)


@pytest.fixture(scope="session")
def synthetic():
    return gen_synthetic(0)


@pytest.fixture
def two_blob_dataset():
    """Two well-separated groups with different linear responses."""
    rng = np.random.default_rng(7)
    left = rng.normal(0.15, 0.03, size=(40, 2))
    right = rng.normal(0.85, 0.03, size=(40, 2))
    X = np.vstack([left, right])
    y = np.concatenate([1.0 + left @ np.array([2.0, -1.0]), -1.0 + right @ np.array([-0.5, 3.0])])
    return Dataset(X=X, y=y)
