"""
Shared numeric kernels.

- kmeans2: two-cluster Lloyd iterations seeded by k-means++, best of several restarts
- fit_logistic: weighted, ridge-penalized logistic regression by damped Newton (IRLS)
- solve_wls: weighted ridge least squares through the normal equations
- finite_diff_grad: central-difference gradient estimate
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Callable, List, Optional
import logging

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist
from scipy.special import expit, log_expit
from sklearn.cluster import kmeans_plusplus

from core.error_types import (
    Result,
    Success,
    Failure,
    ErrorSeverity,
    SingularSystemError,
    ValidationError,
)

logger = logging.getLogger(__name__)

CHOLESKY_JITTER = 1e-10


@dataclass(frozen=True)
class KMeansSplit:
    """Two-way split of a point set; ``first``/``second`` index into the input rows."""

    first: np.ndarray
    second: np.ndarray
    centroids: np.ndarray
    wcss_trace: List[float] = field(default_factory=list)
    degenerate: bool = False

    @property
    def wcss(self) -> float:
        return self.wcss_trace[-1] if self.wcss_trace else 0.0


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int):
    labels = np.full(points.shape[0], -1)
    trace: List[float] = []
    for _ in range(max_iter):
        distances = cdist(points, centroids, "sqeuclidean")
        new_labels = np.argmin(distances, axis=1)
        for cluster in range(centroids.shape[0]):
            members = points[new_labels == cluster]
            if members.shape[0]:
                centroids[cluster] = members.mean(axis=0)
        trace.append(float(np.sum((points - centroids[new_labels]) ** 2)))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids, trace


def kmeans2(
    points: np.ndarray,
    seed: int,
    n_init: int = 10,
    max_iter: int = 100,
) -> KMeansSplit:
    """Split ``points`` into two clusters, keeping the restart with the lowest WCSS.

    Seeding is sklearn's ``kmeans_plusplus``. The Lloyd iterations run here because
    ``wcss_trace`` records the WCSS after every iteration, which ``sklearn.cluster.KMeans``
    does not expose.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    n_points = points.shape[0]
    everything = np.arange(n_points)

    if n_points < 2 or np.all(points == points[0]):
        centre = points.mean(axis=0) if n_points else np.zeros(points.shape[1])
        return KMeansSplit(
            first=everything,
            second=np.zeros(0, dtype=int),
            centroids=np.vstack([centre, centre]),
            wcss_trace=[0.0],
            degenerate=True,
        )

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        start, _ = kmeans_plusplus(points, n_clusters=2, random_state=int(rng.integers(2**31 - 1)))
        labels, centroids, trace = _lloyd(points, start.astype(float).copy(), max_iter)
        if best is None or trace[-1] < best[2][-1]:
            best = (labels, centroids, trace)

    labels, centroids, trace = best
    first = everything[labels == 0]
    second = everything[labels == 1]
    return KMeansSplit(
        first=first,
        second=second,
        centroids=centroids,
        wcss_trace=trace,
        degenerate=first.size == 0 or second.size == 0,
    )


@dataclass(frozen=True)
class LogisticFit:
    coef: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    loss: float


def logistic_loss(
    coef: np.ndarray,
    rows: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    mu: float,
    ridge: float = 0.0,
) -> float:
    """-(1/n) sum_i w_i [c_i ln p_i + (1 - c_i) ln(1 - p_i)] + (ridge/2) ||coef||^2."""
    scores = mu * (rows @ coef)
    log_likelihood = labels * log_expit(scores) + (1.0 - labels) * log_expit(-scores)
    return float(-np.sum(weights * log_likelihood) / rows.shape[0] + 0.5 * ridge * coef @ coef)


def logistic_gradient(
    coef: np.ndarray,
    rows: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    mu: float,
    ridge: float = 0.0,
) -> np.ndarray:
    p = expit(mu * (rows @ coef))
    return mu * rows.T @ (weights * (p - labels)) / rows.shape[0] + ridge * coef


def fit_logistic(
    rows: np.ndarray,
    labels: np.ndarray,
    weights: Optional[np.ndarray] = None,
    mu: float = 1.0,
    ridge: float = 1e-8,
    max_iter: int = 50,
    tol: float = 1e-7,
    start: Optional[np.ndarray] = None,
) -> Result[LogisticFit]:
    """Minimize ``logistic_loss`` by Newton steps with backtracking.

    ``rows`` already carry the intercept column. Label 1 means "routed left".
    """
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=float).reshape(-1)
    weights = np.ones(rows.shape[0]) if weights is None else np.asarray(weights, dtype=float).reshape(-1)

    positive = float(np.sum(weights[labels == 1]))
    negative = float(np.sum(weights[labels == 0]))
    if positive <= 0 or negative <= 0:
        return Failure(ValidationError(
            message="Logistic fit needs both classes with positive weight",
            field_name="labels",
            invalid_value=f"positive={positive}, negative={negative}",
        ))

    n_rows, n_coef = rows.shape
    coef = np.zeros(n_coef) if start is None else np.asarray(start, dtype=float).copy()
    loss = logistic_loss(coef, rows, labels, weights, mu, ridge)
    gradient = logistic_gradient(coef, rows, labels, weights, mu, ridge)

    iterations = 0
    while iterations < max_iter and np.linalg.norm(gradient) >= tol:
        iterations += 1
        p = expit(mu * (rows @ coef))
        curvature = weights * p * (1.0 - p) * mu * mu / n_rows
        hessian = (rows * curvature[:, None]).T @ rows + (ridge + 1e-12) * np.eye(n_coef)
        try:
            direction = -linalg.solve(hessian, gradient, assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            direction = -linalg.lstsq(hessian, gradient)[0]

        step = 1.0
        slope = float(gradient @ direction)
        while step > 1e-12:
            candidate = coef + step * direction
            candidate_loss = logistic_loss(candidate, rows, labels, weights, mu, ridge)
            if candidate_loss <= loss + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            break

        coef, loss = candidate, candidate_loss
        gradient = logistic_gradient(coef, rows, labels, weights, mu, ridge)

    grad_norm = float(np.linalg.norm(gradient))
    converged = grad_norm < tol
    if not converged:
        logger.warning(
            f"Logistic fit stopped after {iterations} Newton steps with gradient norm {grad_norm:.3e}"
        )
    return Success(LogisticFit(coef=coef, converged=converged, iterations=iterations,
                               grad_norm=grad_norm, loss=loss))


@dataclass(frozen=True)
class WeightedLeastSquaresProblem:
    """min_b sum_i w_i (x_i b - y_i)^2 + ridge ||b||^2, i.e. (X'WX + ridge I) b = X'Wy."""

    design: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "design", np.atleast_2d(np.asarray(self.design, dtype=float)))
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=float).reshape(-1))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float).reshape(-1))

    def validate(self) -> Result[WeightedLeastSquaresProblem]:
        n_rows = self.design.shape[0]
        if self.targets.shape[0] != n_rows or self.weights.shape[0] != n_rows:
            return Failure(ValidationError(
                message="Design, targets and weights disagree on the number of rows",
                field_name="design",
            ))
        if np.any(self.weights < 0):
            return Failure(ValidationError(message="Row weights must be non-negative", field_name="weights"))
        if self.ridge < 0:
            return Failure(ValidationError(
                message="Ridge must be non-negative", field_name="ridge", invalid_value=str(self.ridge)
            ))
        return Success(self)

    def normal_equations(self):
        weighted = self.design * self.weights[:, None]
        matrix = weighted.T @ self.design + self.ridge * np.eye(self.design.shape[1])
        rhs = weighted.T @ self.targets
        return matrix, rhs


def solve_wls(problem: WeightedLeastSquaresProblem) -> Result[np.ndarray]:
    """Cholesky solve of the normal equations, with a small jitter if the factorization fails."""
    check = problem.validate()
    if check.is_failure():
        return Failure(check.get_error())

    matrix, rhs = problem.normal_equations()
    size = matrix.shape[0]
    if problem.ridge == 0:
        rank = int(np.linalg.matrix_rank(matrix))
        if rank < size:
            return Failure(SingularSystemError(
                message=(
                    f"Normal equations have rank {rank} < {size} and no ridge term; "
                    "use a positive lambda_beta"
                ),
                rank=rank,
                size=size,
            ))

    try:
        factor = linalg.cho_factor(matrix)
    except linalg.LinAlgError:
        scale = max(float(np.trace(matrix)) / size, 1.0)
        logger.debug(f"Cholesky failed, retrying with jitter {CHOLESKY_JITTER * scale:.1e}")
        try:
            factor = linalg.cho_factor(matrix + CHOLESKY_JITTER * scale * np.eye(size))
        except linalg.LinAlgError:
            return Failure(SingularSystemError(
                message="Normal equations are not positive definite even after jitter",
                size=size,
                severity=ErrorSeverity.ERROR,
            ))
    return Success(linalg.cho_solve(factor, rhs))


def finite_diff_grad(
    function: Callable[[np.ndarray], float],
    point: np.ndarray,
    step: float = 1e-6,
) -> np.ndarray:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate."""
    point = np.asarray(point, dtype=float)
    gradient = np.zeros_like(point)
    for index in np.ndindex(point.shape):
        forward = point.copy()
        backward = point.copy()
        forward[index] += step
        backward[index] -= step
        gradient[index] = (function(forward) - function(backward)) / (2.0 * step)
    return gradient
