"""
Candidate update of a branch-node working set.

The routing split at t = min(W_B) picks the regime:

- balanced split: all coefficients of W_B are refit on the scope objective by L-BFGS
- moderately imbalanced: only omega_t is refit by class-balanced weighted logistic regression
- highly imbalanced: the worst-fitting rows sent to the fuller child have their target side
  flipped before the same logistic fit
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import List, Tuple
import logging

import numpy as np
from scipy.optimize import minimize

from core.error_types import (
    Result,
    Success,
    Failure,
    DegenerateWeightsError,
    ErrorSeverity,
)
from core.numerics import fit_logistic, logistic_loss
from core.srt_engine import (
    ObjectiveScope,
    OmegaBlockObjective,
    branch_design,
    partial_residuals,
    passes_through,
)
from models.dataset import Dataset
from models.report import StepKind
from models.tree import ModelParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImbalanceThresholds:
    eps1: float
    eps2: float
    eps3: float

    def decayed(self, zeta: float) -> ImbalanceThresholds:
        return ImbalanceThresholds(self.eps1 * zeta, self.eps2 * zeta, self.eps3 * zeta)


@dataclass(frozen=True)
class BranchCandidate:
    """Proposed coefficients for W_B and how they were produced."""

    block: np.ndarray
    kind: StepKind
    n_routed: int = 0
    n_left: int = 0
    n_flipped: int = 0
    fell_back: bool = False


@dataclass(frozen=True)
class BranchUpdateSettings:
    lambda_omega: float
    lambda_beta: float
    reassign: bool = True
    subtree_proxy: bool = True
    balanced_max_iter: int = 30
    wlr_ridge: float = 1e-8
    wlr_max_iter: int = 50


def balanced_weights(labels: np.ndarray) -> Result[np.ndarray]:
    """w_i = N_t / (2 N_left) for label 1 and N_t / (2 N_right) for label 0."""
    labels = np.asarray(labels).reshape(-1)
    n_total = labels.shape[0]
    n_left = int(np.sum(labels == 1))
    n_right = n_total - n_left
    if n_left == 0 or n_right == 0:
        return Failure(DegenerateWeightsError(
            message=f"Weighted logistic fit needs both sides populated (left={n_left}, right={n_right})",
            n_left=n_left,
            n_right=n_right,
            severity=ErrorSeverity.DEBUG,
        ))
    return Success(np.where(labels == 1, n_total / (2.0 * n_left), n_total / (2.0 * n_right)))


def wlr_objective(X: np.ndarray, labels: np.ndarray, omega_t: np.ndarray, mu: float) -> Result[float]:
    """Class-balanced logistic loss of routing ``X`` by ``omega_t``; label 1 means left."""
    labels = np.asarray(labels, dtype=float).reshape(-1)
    return balanced_weights(labels).map(
        lambda weights: logistic_loss(np.asarray(omega_t, dtype=float), branch_design(X), labels, weights, mu)
    )


def flip_largest_residuals(
    labels: np.ndarray,
    residuals: np.ndarray,
    fuller_side: int,
    eps3: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Flip the floor(N_dmax * eps3) rows on ``fuller_side`` with the largest residual.

    Ties are broken by ascending position. Returns the new labels and the flipped positions.
    """
    labels = np.asarray(labels).copy()
    candidates = np.flatnonzero(labels == fuller_side)
    n_flip = int(np.floor(candidates.size * eps3))
    if n_flip == 0:
        return labels, np.zeros(0, dtype=int)
    order = np.lexsort((candidates, -residuals[candidates]))
    flipped = candidates[order[:n_flip]]
    labels[flipped] = 1 - fuller_side
    return labels, flipped


def _scope_for(model: ModelParams, dataset: Dataset, t: int, routed: np.ndarray, proxy: bool) -> ObjectiveScope:
    if proxy and t != 1:
        return ObjectiveScope(root=t, rows=np.flatnonzero(routed), n_total=dataset.n_samples)
    return ObjectiveScope()


def _refit_block(
    model: ModelParams,
    dataset: Dataset,
    nodes: List[int],
    scope: ObjectiveScope,
    settings: BranchUpdateSettings,
) -> np.ndarray:
    objective = OmegaBlockObjective(
        model, dataset, nodes, settings.lambda_omega, settings.lambda_beta, scope
    )
    start = objective.start
    result = minimize(
        objective.value_and_gradient,
        start,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": settings.balanced_max_iter},
    )
    if not np.all(np.isfinite(result.x)):
        return start
    return np.asarray(result.x, dtype=float)


def update_branch_node(
    model: ModelParams,
    dataset: Dataset,
    nodes: List[int],
    thresholds: ImbalanceThresholds,
    settings: BranchUpdateSettings,
) -> BranchCandidate:
    """Heuristic candidate for the coefficients of the branch nodes in ``nodes``."""
    t = min(nodes)
    current = model.omega_block(nodes)
    routed = passes_through(model, dataset.X, t)
    n_routed = int(np.sum(routed))
    if n_routed == 0:
        return BranchCandidate(block=current, kind=StepKind.SKIPPED_GATE)

    left_child = 2 * t
    routed_left = passes_through(model, dataset.X, left_child)[routed]
    n_left = int(np.sum(routed_left))
    ratio = n_left / n_routed
    n_total = dataset.n_samples

    eps1, eps2 = thresholds.eps1, thresholds.eps2
    imbalanced = (
        settings.reassign
        and eps1 * n_total >= 1
        and (ratio <= eps1 or ratio >= 1 - eps1)
    )

    if not imbalanced:
        scope = _scope_for(model, dataset, t, routed, settings.subtree_proxy)
        block = _refit_block(model, dataset, nodes, scope, settings)
        return BranchCandidate(block=block, kind=StepKind.HEURISTIC_BALANCED,
                               n_routed=n_routed, n_left=n_left)

    rows = np.flatnonzero(routed)
    labels = routed_left.astype(int)
    n_flipped = 0
    if eps2 < ratio < 1 - eps2:
        kind = StepKind.HEURISTIC_WLR_MODERATE
    else:
        kind = StepKind.HEURISTIC_WLR_REASSIGN
        fuller_side = 1 if n_left >= n_routed - n_left else 0
        residuals = partial_residuals(model, dataset.subset(rows), t, proxy=settings.subtree_proxy)
        labels, flipped = flip_largest_residuals(labels, residuals, fuller_side, thresholds.eps3)
        n_flipped = int(flipped.size)

    weights = balanced_weights(labels)
    if weights.is_failure():
        weights.get_error().log(logger)
        return BranchCandidate(block=current, kind=kind, n_routed=n_routed, n_left=n_left, fell_back=True)

    fit = fit_logistic(
        branch_design(dataset.X[rows]),
        labels,
        weights.unwrap(),
        mu=model.mu,
        ridge=settings.wlr_ridge,
        max_iter=settings.wlr_max_iter,
        start=model.omega_of(t),
    )
    if fit.is_failure():
        fit.get_error().log(logger)
        return BranchCandidate(block=current, kind=kind, n_routed=n_routed, n_left=n_left, fell_back=True)

    candidate = model.with_omega_block([t], fit.unwrap().coef).omega_block(nodes)
    logger.debug(
        f"Node {t}: {n_left}/{n_routed} routed left, {kind.label}, {n_flipped} targets flipped"
    )
    return BranchCandidate(block=candidate, kind=kind, n_routed=n_routed,
                           n_left=n_left, n_flipped=n_flipped)
