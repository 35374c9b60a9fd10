from __future__ import annotations

import numpy as np
from sklearn.metrics import r2_score

from core.error_types import Result, Success, Failure, ValidationError
from core.srt_engine import route
from models.dataset import Dataset
from models.tree import ModelParams


def r_squared(predictions: np.ndarray, targets: np.ndarray) -> Result[float]:
    """1 - SS_res / SS_tot; negative when worse than predicting the mean."""
    predictions = np.asarray(predictions, dtype=float).reshape(-1)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if predictions.shape != targets.shape:
        return Failure(ValidationError(
            message=f"{predictions.size} predictions for {targets.size} targets",
            field_name="predictions",
        ))
    if targets.size < 2 or np.all(targets == targets[0]):
        return Failure(ValidationError(
            message="R^2 needs at least 2 targets with nonzero variance",
            field_name="targets",
        ))
    return Success(float(r2_score(targets, predictions)))


def gini_routing(model: ModelParams, dataset: Dataset) -> Result[float]:
    """Size-weighted mean Gini impurity of the true labels among rows routed to each leaf."""
    if not dataset.has_labels:
        return Failure(ValidationError(
            message="Gini routing index needs true cluster labels",
            field_name="labels",
        ))
    if dataset.n_samples == 0:
        return Failure(ValidationError(message="Gini routing index needs data", field_name="dataset"))

    leaves = route(model, dataset.X)
    impurity = 0.0
    for leaf in np.unique(leaves):
        members = dataset.labels[leaves == leaf]
        _, counts = np.unique(members, return_counts=True)
        frequencies = counts / members.size
        impurity += members.size * (1.0 - float(np.sum(frequencies ** 2)))
    return Success(impurity / dataset.n_samples)
