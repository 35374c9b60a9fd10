"""
Evaluation kernels for soft regression trees.

Branch node t routes a row left with probability F(omega_0t + (1/p) sum_j omega_jt x_j),
F(u) = 1 / (1 + exp(-mu u)). Leaf probabilities multiply the branch probabilities along the
path. The prediction of a row is the linear model of the single leaf reached by always
following the side with probability >= 0.5.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.special import expit, log_expit

from core.error_types import raise_invalid
from models.dataset import Dataset
from models.tree import ModelParams, TreeTopology


# Leaf probabilities are accumulated as sums of logs from this depth on
LOG_SPACE_DEPTH = 8


@dataclass(frozen=True)
class HbpPath:
    """Leaf reached by highest-branch-probability routing and the decisions taken on the way."""

    leaf: int
    decisions: Tuple[Tuple[int, bool], ...]

    @property
    def nodes(self) -> List[int]:
        return [node for node, _ in self.decisions]


@dataclass(frozen=True)
class ObjectiveScope:
    """Part of the data term an objective evaluation covers.

    ``root`` = 1 with ``rows`` = None is the exact training error. Any other root evaluates the
    subtree under it as if it were the whole tree (ancestor probabilities fixed to 1), over the
    given rows only. The data term is always divided by ``n_total``.
    """

    root: int = 1
    rows: Optional[np.ndarray] = None
    n_total: Optional[int] = None


def branch_design(X: np.ndarray) -> np.ndarray:
    """[1, X/p]: the coordinates the branch coefficients act on."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.column_stack([np.ones(X.shape[0]), X / X.shape[1]])


def leaf_design(X: np.ndarray) -> np.ndarray:
    """[1, X]: the coordinates the leaf regressions act on."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.column_stack([np.ones(X.shape[0]), X])


def _check_rows(model: ModelParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.n_features:
        raise_invalid(
            f"Model expects {model.n_features} features, got {X.shape[1]}",
            "x", X.shape[1],
        )
    if not np.all(np.isfinite(X)):
        raise_invalid("Feature values must be finite", "x")
    return X


def branch_probability(omega_t: np.ndarray, x: np.ndarray, mu: float) -> float:
    """Probability that x is routed to the left child of a branch node."""
    omega_t = np.asarray(omega_t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if not (np.all(np.isfinite(omega_t)) and np.all(np.isfinite(x)) and np.isfinite(mu)):
        raise_invalid("Branch probability inputs must be finite", "x")
    if mu <= 0:
        raise_invalid(f"mu must be positive, got {mu}", "mu", mu)
    if omega_t.shape[0] != x.shape[0] + 1:
        raise_invalid(
            f"Coefficient vector of length {omega_t.shape[0]} does not fit {x.shape[0]} features",
            "omega_t", omega_t.shape[0],
        )
    u = omega_t[0] + omega_t[1:] @ x / x.shape[0]
    return float(expit(mu * u))


def branch_scores(model: ModelParams, X: np.ndarray) -> np.ndarray:
    """mu * u for every row and branch node, shape (N, |branch nodes|)."""
    return model.mu * (branch_design(X) @ model.omega)


def _subtree_leaf_probabilities(
    topology: TreeTopology,
    scores: np.ndarray,
    root: int,
) -> np.ndarray:
    """Probabilities of the leaves under ``root`` with the path above ``root`` taken as certain."""
    n_rows = scores.shape[0]
    levels = topology.subtree_levels(root)
    use_logs = len(levels) >= LOG_SPACE_DEPTH

    if use_logs:
        mass = np.zeros((n_rows, 1))
    else:
        mass = np.ones((n_rows, 1))

    for level in levels:
        columns = [topology.branch_column(t) for t in level]
        level_scores = scores[:, columns]
        if use_logs:
            left = mass + log_expit(level_scores)
            right = mass + log_expit(-level_scores)
        else:
            p = expit(level_scores)
            left = mass * p
            right = mass * (1.0 - p)
        mass = np.empty((n_rows, 2 * len(level)))
        mass[:, 0::2] = left
        mass[:, 1::2] = right

    return np.exp(mass) if use_logs else mass


def leaf_probability_matrix(model: ModelParams, X: np.ndarray, root: int = 1) -> np.ndarray:
    """Leaf probabilities for many rows, shape (N, leaves under root), columns in heap order."""
    X = _check_rows(model, X)
    model.topology.check_branch(root)
    return _subtree_leaf_probabilities(model.topology, branch_scores(model, X), root)


def leaf_probabilities(model: ModelParams, x: np.ndarray) -> np.ndarray:
    """Probability of x falling into each leaf, indexed by leaf column."""
    return leaf_probability_matrix(model, np.asarray(x, dtype=float).reshape(1, -1))[0]


def route(model: ModelParams, X: np.ndarray) -> np.ndarray:
    """Heap index of the leaf each row reaches under highest-branch-probability routing."""
    X = _check_rows(model, X)
    scores = branch_scores(model, X)
    node = np.ones(X.shape[0], dtype=int)
    for _ in range(model.depth):
        # u >= 0 iff F(u) >= 0.5, so ties go left
        go_left = scores[np.arange(X.shape[0]), node - 1] >= 0.0
        node = 2 * node + np.where(go_left, 0, 1)
    return node


def passes_through(model: ModelParams, X: np.ndarray, t: int) -> np.ndarray:
    """Mask of rows whose routed path contains node t."""
    leaves = route(model, X)
    shift = model.depth - model.topology.node_depth(t)
    return (leaves >> shift) == t


def hbp_path(model: ModelParams, x: np.ndarray) -> HbpPath:
    x = _check_rows(model, x)
    scores = branch_scores(model, x)[0]
    decisions: List[Tuple[int, bool]] = []
    node = 1
    while model.topology.is_branch(node):
        went_left = bool(scores[node - 1] >= 0.0)
        decisions.append((node, went_left))
        node = 2 * node if went_left else 2 * node + 1
    return HbpPath(leaf=node, decisions=tuple(decisions))


def predict_batch(model: ModelParams, X: np.ndarray) -> np.ndarray:
    X = _check_rows(model, X)
    columns = route(model, X) - model.topology.first_leaf
    coefficients = model.beta[:, columns]
    return coefficients[0] + np.einsum("ij,ji->i", X, coefficients[1:])


def predict(model: ModelParams, x: np.ndarray) -> float:
    """Linear model of the routed leaf; the leaf regression has no 1/p factor."""
    return float(predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


def regularizer(model: ModelParams, lambda_omega: float, lambda_beta: float) -> float:
    return 0.5 * lambda_omega * float(np.sum(model.omega ** 2)) + 0.5 * lambda_beta * float(
        np.sum(model.beta ** 2)
    )


def _scope_rows(dataset: Dataset, scope: ObjectiveScope) -> Tuple[np.ndarray, np.ndarray, int]:
    n_total = scope.n_total if scope.n_total is not None else dataset.n_samples
    if scope.rows is None:
        return dataset.X, dataset.y, n_total
    return dataset.X[scope.rows], dataset.y[scope.rows], n_total


def _scope_terms(
    model: ModelParams, X: np.ndarray, y: np.ndarray, root: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, range]:
    topology = model.topology
    scores = branch_scores(model, X)
    mass = _subtree_leaf_probabilities(topology, scores, root)
    leaves = topology.leaf_range(root)
    columns = [topology.leaf_column(t) for t in leaves]
    residuals = leaf_design(X) @ model.beta[:, columns] - y[:, None]
    return scores, mass, residuals, leaves


def scope_error(
    model: ModelParams,
    dataset: Dataset,
    lambda_omega: float,
    lambda_beta: float,
    scope: ObjectiveScope = ObjectiveScope(),
) -> float:
    """Weighted squared error over a scope plus the full regularizer."""
    X, y, n_total = _scope_rows(dataset, scope)
    reg = regularizer(model, lambda_omega, lambda_beta)
    if X.shape[0] == 0:
        return reg
    _, mass, residuals, _ = _scope_terms(model, X, y, scope.root)
    return float(np.sum(mass * residuals ** 2)) / n_total + reg


def training_error(
    model: ModelParams,
    dataset: Dataset,
    lambda_omega: float = 0.0,
    lambda_beta: float = 0.0,
) -> float:
    if dataset.n_samples == 0:
        raise_invalid("Training error needs at least one data point", "dataset", 0)
    _check_rows(model, dataset.X[:1])
    if lambda_omega < 0 or lambda_beta < 0:
        raise_invalid("Regularization weights must be non-negative", "lambda")
    return scope_error(model, dataset, lambda_omega, lambda_beta)


def scope_gradient(
    model: ModelParams,
    dataset: Dataset,
    lambda_omega: float,
    lambda_beta: float,
    branch_nodes: Iterable[int] = (),
    leaf_nodes: Iterable[int] = (),
    scope: ObjectiveScope = ObjectiveScope(),
) -> Dict[int, np.ndarray]:
    """Gradient of ``scope_error`` with respect to the requested node coefficient vectors.

    For branch s with left probability p and S_L, S_R the sums of P r^2 over the leaves
    under its left and right child, d(P r^2)/du = mu ((1 - p) S_L - p S_R).
    """
    topology = model.topology
    branch_nodes = list(branch_nodes)
    leaf_nodes = list(leaf_nodes)
    X, y, n_total = _scope_rows(dataset, scope)
    gradient: Dict[int, np.ndarray] = {}

    for t in branch_nodes:
        gradient[t] = lambda_omega * model.omega_of(t)
    for t in leaf_nodes:
        gradient[t] = lambda_beta * model.beta_of(t)
    if X.shape[0] == 0:
        return gradient

    scores, mass, residuals, leaves = _scope_terms(model, X, y, scope.root)
    first = leaves.start

    if branch_nodes:
        weighted = mass * residuals ** 2
        cumulative = np.concatenate([np.zeros((X.shape[0], 1)), np.cumsum(weighted, axis=1)], axis=1)
        design = branch_design(X)
        for t in branch_nodes:
            span = topology.leaf_range(t)
            if span.start < leaves.start or span.stop > leaves.stop:
                continue
            middle = (span.start + span.stop) // 2
            left_sum = cumulative[:, middle - first] - cumulative[:, span.start - first]
            right_sum = cumulative[:, span.stop - first] - cumulative[:, middle - first]
            p = expit(scores[:, topology.branch_column(t)])
            g = model.mu * ((1.0 - p) * left_sum - p * right_sum) / n_total
            gradient[t] = gradient[t] + design.T @ g

    if leaf_nodes:
        design = leaf_design(X)
        for t in leaf_nodes:
            if t not in leaves:
                continue
            column = t - first
            gradient[t] = gradient[t] + 2.0 / n_total * design.T @ (mass[:, column] * residuals[:, column])

    return gradient


def grad_error(
    model: ModelParams,
    dataset: Dataset,
    lambda_omega: float,
    lambda_beta: float,
    node_subset: Iterable[int],
) -> Dict[int, np.ndarray]:
    """Exact gradient blocks of the training error for the given branch and leaf nodes."""
    topology = model.topology
    nodes = list(node_subset)
    for t in nodes:
        topology.check_node(t)
    return scope_gradient(
        model,
        dataset,
        lambda_omega,
        lambda_beta,
        branch_nodes=[t for t in nodes if topology.is_branch(t)],
        leaf_nodes=[t for t in nodes if topology.is_leaf(t)],
    )


def partial_residuals(model: ModelParams, dataset: Dataset, t: int, proxy: bool = True) -> np.ndarray:
    """Per-row error mass of the subtree rooted at t.

    With ``proxy`` the subtree is evaluated as if it were the whole tree; otherwise the
    probabilities keep the factors of the path from the root down to t.
    """
    model.topology.check_branch(t)
    X = _check_rows(model, dataset.X)
    scores, mass, residuals, leaves = _scope_terms(model, X, dataset.y, t)
    if not proxy and t != 1:
        full = _subtree_leaf_probabilities(model.topology, scores, 1)
        columns = [model.topology.leaf_column(leaf) for leaf in leaves]
        mass = full[:, columns]
    return np.sum(mass * residuals ** 2, axis=1)


def partial_residual(model: ModelParams, dataset: Dataset, i: int, t: int, proxy: bool = True) -> float:
    if not 0 <= i < dataset.n_samples:
        raise_invalid(f"Row index {i} out of range", "i", i)
    return float(partial_residuals(model, dataset.subset([i]), t, proxy)[0])


class OmegaBlockObjective:
    """Scope error and gradient as functions of the stacked coefficients of some branch nodes."""

    def __init__(
        self,
        model: ModelParams,
        dataset: Dataset,
        nodes: List[int],
        lambda_omega: float,
        lambda_beta: float,
        scope: ObjectiveScope = ObjectiveScope(),
    ):
        for t in nodes:
            model.topology.check_branch(t)
        self.model = model
        self.dataset = dataset
        self.nodes = list(nodes)
        self.lambda_omega = lambda_omega
        self.lambda_beta = lambda_beta
        self.scope = scope
        self.evaluations = 0

    @property
    def start(self) -> np.ndarray:
        return self.model.omega_block(self.nodes)

    def params_at(self, block: np.ndarray) -> ModelParams:
        return self.model.with_omega_block(self.nodes, block)

    def value(self, block: np.ndarray) -> float:
        self.evaluations += 1
        return scope_error(self.params_at(block), self.dataset, self.lambda_omega, self.lambda_beta, self.scope)

    def gradient(self, block: np.ndarray) -> np.ndarray:
        blocks = scope_gradient(
            self.params_at(block), self.dataset, self.lambda_omega, self.lambda_beta,
            branch_nodes=self.nodes, scope=self.scope,
        )
        return np.concatenate([blocks[t] for t in self.nodes])

    def value_and_gradient(self, block: np.ndarray) -> Tuple[float, np.ndarray]:
        return self.value(block), self.gradient(block)
