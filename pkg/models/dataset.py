from __future__ import annotations
from dataclasses import dataclass, field
from typing import Optional, Dict, Any, List, Tuple

import numpy as np

from core.error_types import raise_invalid


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with its response and optional true-cluster labels."""

    X: np.ndarray
    y: np.ndarray
    feature_names: Tuple[str, ...] = ()
    target_name: str = "y"
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise_invalid(f"Features must form a matrix, got {X.ndim} dimensions", "X", X.shape)
        if X.shape[0] != y.shape[0]:
            raise_invalid(
                f"Feature rows ({X.shape[0]}) and targets ({y.shape[0]}) differ",
                "y", y.shape[0],
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise_invalid("Dataset contains non-finite values", "X")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise_invalid(
                f"{len(names)} feature names given for {X.shape[1]} columns",
                "feature_names", len(names),
            )
        labels = None
        if self.labels is not None:
            labels = np.asarray(self.labels).reshape(-1)
            if labels.shape[0] != y.shape[0]:
                raise_invalid("Cluster labels must have one entry per row", "labels", labels.shape[0])
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def subset(self, indices: np.ndarray) -> Dataset:
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            X=self.X[indices],
            y=self.y[indices],
            feature_names=self.feature_names,
            target_name=self.target_name,
            labels=None if self.labels is None else self.labels[indices],
        )

    def with_values(self, X: np.ndarray, y: np.ndarray) -> Dataset:
        return Dataset(X, y, self.feature_names, self.target_name, self.labels)


@dataclass(frozen=True)
class PreprocessParams:
    """Training-split statistics for feature scaling and target standardization."""

    feature_min: np.ndarray
    feature_max: np.ndarray
    target_mean: float
    target_std: float

    def __post_init__(self):
        object.__setattr__(self, "feature_min", np.asarray(self.feature_min, dtype=float).reshape(-1))
        object.__setattr__(self, "feature_max", np.asarray(self.feature_max, dtype=float).reshape(-1))
        if self.feature_min.shape != self.feature_max.shape:
            raise_invalid("Feature minima and maxima differ in length", "feature_min")
        if np.any(self.feature_max < self.feature_min):
            raise_invalid("Feature maximum below minimum", "feature_max")
        if not (np.isfinite(self.target_std) and self.target_std > 0):
            raise_invalid(f"Target standard deviation must be positive, got {self.target_std}",
                          "target_std", self.target_std)

    @property
    def n_features(self) -> int:
        return self.feature_min.shape[0]

    def scale_features(self, X: np.ndarray) -> np.ndarray:
        """Map features with the stored range; constant features go to 0 and nothing is clamped."""
        X = np.asarray(X, dtype=float)
        span = self.feature_max - self.feature_min
        safe_span = np.where(span > 0, span, 1.0)
        scaled = (X - self.feature_min) / safe_span
        return np.where(span > 0, scaled, 0.0)

    def standardize(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_std

    def destandardize(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.target_std + self.target_mean

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature_min": self.feature_min.tolist(),
            "feature_max": self.feature_max.tolist(),
            "target_mean": float(self.target_mean),
            "target_std": float(self.target_std),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> PreprocessParams:
        return cls(
            feature_min=np.array(data["feature_min"], dtype=float),
            feature_max=np.array(data["feature_max"], dtype=float),
            target_mean=float(data["target_mean"]),
            target_std=float(data["target_std"]),
        )


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint test folds covering 0..N-1."""

    folds: Tuple[np.ndarray, ...]
    seed: int = 0
    n_samples: int = field(default=0)

    @property
    def k(self) -> int:
        return len(self.folds)

    def split(self, fold: int) -> Tuple[np.ndarray, np.ndarray]:
        """(train indices, test indices) for one fold."""
        test = self.folds[fold]
        train = np.concatenate([f for index, f in enumerate(self.folds) if index != fold])
        return np.sort(train), test

    def sizes(self) -> List[int]:
        return [len(f) for f in self.folds]
