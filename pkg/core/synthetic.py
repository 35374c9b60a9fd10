"""Four-cluster regression data: a different linear response in each cluster of [0,1]^3."""

from __future__ import annotations
import logging

import numpy as np

from models.dataset import Dataset

logger = logging.getLogger(__name__)

CLUSTER_CENTERS = np.array([
    [0.2, 0.2, 0.2],
    [0.8, 0.2, 0.8],
    [0.2, 0.8, 0.8],
    [0.8, 0.8, 0.2],
])

CLUSTER_COEFFICIENTS = np.array([
    [-1.51, 0.46, -3.81],
    [2.32, -1.41, -0.11],
    [-1.56, 1.12, 1.53],
    [-2.32, 1.41, 0.11],
])

CLUSTER_SPREAD = 0.06
POINTS_PER_CLUSTER = 375
NOISE_SD = 0.1


def gen_synthetic(
    seed: int,
    points_per_cluster: int = POINTS_PER_CLUSTER,
    noise_sd: float = NOISE_SD,
) -> Dataset:
    """Gaussian blobs around CLUSTER_CENTERS with y = coefficients[c] . x + N(0, noise_sd^2)."""
    rng = np.random.default_rng(seed)
    n_clusters, n_features = CLUSTER_CENTERS.shape
    labels = np.repeat(np.arange(n_clusters), points_per_cluster)
    X = CLUSTER_CENTERS[labels] + CLUSTER_SPREAD * rng.standard_normal((labels.size, n_features))
    noise = rng.standard_normal(labels.size) * noise_sd
    y = np.einsum("ij,ij->i", X, CLUSTER_COEFFICIENTS[labels]) + noise
    logger.debug(f"Generated {labels.size} synthetic rows with seed {seed}")
    return Dataset(
        X=X,
        y=y,
        feature_names=tuple(f"x{j + 1}" for j in range(n_features)),
        target_name="y",
        labels=labels,
    )
