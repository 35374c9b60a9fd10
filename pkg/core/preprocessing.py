from __future__ import annotations
import logging

import numpy as np
from sklearn.model_selection import KFold

from core.error_types import AppException, Result, Success, Failure, ValidationError
from models.dataset import Dataset, FoldPlan, PreprocessParams

logger = logging.getLogger(__name__)


def fit_preprocess(train: Dataset) -> Result[PreprocessParams]:
    """Feature ranges and target mean / sample standard deviation of a training split."""
    if train.n_samples < 2:
        return Failure(ValidationError(
            message=f"Preprocessing needs at least 2 training rows, got {train.n_samples}",
            field_name="train",
            invalid_value=str(train.n_samples),
        ))
    target_std = float(np.std(train.y, ddof=1))
    if not target_std > 0:
        return Failure(ValidationError(
            message="Target has zero variance on the training split",
            field_name=train.target_name,
        ))
    constant = np.flatnonzero(np.ptp(train.X, axis=0) == 0)
    if constant.size:
        names = [train.feature_names[j] for j in constant]
        logger.info(f"Constant features map to 0: {', '.join(names)}")
    return Success(PreprocessParams(
        feature_min=train.X.min(axis=0),
        feature_max=train.X.max(axis=0),
        target_mean=float(np.mean(train.y)),
        target_std=target_std,
    ))


def apply_preprocess(params: PreprocessParams, split: Dataset) -> Dataset:
    """Scale features and standardize targets with training statistics; test rows are not clamped."""
    if split.n_features != params.n_features:
        raise AppException(ValidationError(
            message=f"Split has {split.n_features} features, parameters cover {params.n_features}",
            field_name="split",
        ))
    return split.with_values(params.scale_features(split.X), params.standardize(split.y))


def kfold(n_samples: int, k: int, seed: int) -> Result[FoldPlan]:
    """Shuffled split of 0..N-1 into k folds whose sizes differ by at most one."""
    if k < 2:
        return Failure(ValidationError(
            message=f"Cross-validation needs k >= 2 folds, got {k}",
            field_name="k",
            invalid_value=str(k),
        ))
    if n_samples < k:
        return Failure(ValidationError(
            message=f"Cannot split {n_samples} rows into {k} folds",
            field_name="n_samples",
            invalid_value=str(n_samples),
        ))
    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    folds = tuple(test for _, test in splitter.split(np.zeros((n_samples, 1))))
    return Success(FoldPlan(folds=folds, seed=seed, n_samples=n_samples))
