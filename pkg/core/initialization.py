"""
Warm starts for training.

The cluster strategy splits the data top-down with 2-means, one branch node at a time, keeps
the hierarchy with the lowest Davies-Bouldin index over r repetitions, then fits a logistic
regression per branch node (left child = class 1) and a least-squares line per leaf.
"""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple
import logging
import os

import numpy as np
from scipy import linalg

from core.error_types import Result, Success, Failure, ValidationError
from core.numerics import fit_logistic, kmeans2
from core.srt_engine import branch_design, leaf_design
from models.dataset import Dataset
from models.settings import InitStrategy, TrainConfig
from models.tree import ModelParams, TreeTopology

logger = logging.getLogger(__name__)

ClusterScorer = Callable[[List[np.ndarray], np.ndarray], Result[float]]


@dataclass(frozen=True)
class HierarchicalAssignment:
    """Row index set of every node; children of a branch node split its set."""

    topology: TreeTopology
    node_sets: Dict[int, np.ndarray]
    degenerate_nodes: Tuple[int, ...] = ()

    def rows_of(self, t: int) -> np.ndarray:
        return self.node_sets[t]

    @property
    def leaf_partition(self) -> List[np.ndarray]:
        return [self.node_sets[t] for t in self.topology.leaf_nodes]

    def leaf_labels(self, n_samples: int) -> np.ndarray:
        """Heap index of the leaf holding each row."""
        labels = np.zeros(n_samples, dtype=int)
        for t in self.topology.leaf_nodes:
            labels[self.node_sets[t]] = t
        return labels


@dataclass(frozen=True)
class Initialization:
    params: ModelParams
    assignment: Optional[HierarchicalAssignment] = None
    score: Optional[float] = None
    repetition_scores: List[float] = field(default_factory=list)


def davies_bouldin(partition: List[np.ndarray], points: np.ndarray) -> Result[float]:
    """Mean over clusters of the worst (s_i + s_j) / d_ij; empty clusters are ignored.

    s is the mean distance of a cluster's points to its centroid, d the distance between
    centroids. Coincident centroids give an infinite score.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    clusters = [np.asarray(rows, dtype=int) for rows in partition if len(rows) > 0]
    if len(clusters) < 2:
        return Failure(ValidationError(
            message=f"Davies-Bouldin index needs at least 2 non-empty clusters, got {len(clusters)}",
            field_name="partition",
            invalid_value=str(len(clusters)),
        ))

    centroids = np.array([points[rows].mean(axis=0) for rows in clusters])
    scatter = np.array([
        np.mean(np.linalg.norm(points[rows] - centroid, axis=1))
        for rows, centroid in zip(clusters, centroids)
    ])

    worst = np.zeros(len(clusters))
    for i in range(len(clusters)):
        ratios = []
        for j in range(len(clusters)):
            if i == j:
                continue
            distance = float(np.linalg.norm(centroids[i] - centroids[j]))
            ratios.append(np.inf if distance == 0 else (scatter[i] + scatter[j]) / distance)
        worst[i] = max(ratios)
    return Success(float(np.mean(worst)))


def recursive_partition(dataset: Dataset, depth: int, seed: int) -> HierarchicalAssignment:
    """Split the rows top-down with 2-means, a parent before its children."""
    topology = TreeTopology(depth)
    if dataset.n_samples < topology.n_leaf:
        logger.warning(f"{dataset.n_samples} rows cannot fill {topology.n_leaf} leaves; some stay empty")

    node_seeds = np.random.SeedSequence(seed).spawn(topology.n_branch)
    node_sets: Dict[int, np.ndarray] = {1: np.arange(dataset.n_samples)}
    degenerate: List[int] = []

    for t in topology.branch_nodes:
        rows = node_sets[t]
        left, right = topology.children(t)
        if rows.size < 2:
            node_sets[left], node_sets[right] = rows, np.zeros(0, dtype=int)
            degenerate.append(t)
            continue
        split = kmeans2(dataset.X[rows], seed=int(node_seeds[t - 1].generate_state(1)[0]))
        node_sets[left], node_sets[right] = rows[split.first], rows[split.second]
        if split.degenerate:
            degenerate.append(t)

    if degenerate:
        logger.debug(f"Degenerate splits at nodes {degenerate}")
    return HierarchicalAssignment(topology=topology, node_sets=node_sets, degenerate_nodes=tuple(degenerate))


def _branch_coefficients(
    dataset: Dataset,
    assignment: HierarchicalAssignment,
    t: int,
    mu: float,
    ridge: float,
) -> np.ndarray:
    width = dataset.n_features + 1
    rows = assignment.rows_of(t)
    left, right = (assignment.rows_of(child) for child in TreeTopology.children(t))
    coefficients = np.zeros(width)
    if rows.size == 0:
        return coefficients
    if right.size == 0:
        coefficients[0] = 1.0
        return coefficients
    if left.size == 0:
        coefficients[0] = -1.0
        return coefficients

    labels = np.isin(rows, left).astype(float)
    fit = fit_logistic(branch_design(dataset.X[rows]), labels, mu=mu, ridge=ridge)
    if fit.is_failure():
        fit.get_error().log(logger)
        return coefficients
    return fit.unwrap().coef


def _leaf_coefficients(dataset: Dataset, assignment: HierarchicalAssignment, t: int) -> np.ndarray:
    width = dataset.n_features + 1
    rows = assignment.rows_of(t)
    coefficients = np.zeros(width)
    if rows.size <= 1:
        parent_rows = assignment.rows_of(TreeTopology.parent(t))
        coefficients[0] = float(np.mean(dataset.y[parent_rows])) if parent_rows.size else 0.0
        return coefficients
    solution, *_ = linalg.lstsq(leaf_design(dataset.X[rows]), dataset.y[rows])
    return solution


def fit_warm_start(
    dataset: Dataset,
    assignment: HierarchicalAssignment,
    mu: float = 1.0,
    ridge: Optional[float] = None,
) -> ModelParams:
    """Logistic regression per branch node and least squares per leaf on the assigned rows."""
    topology = assignment.topology
    ridge = 1.0 / dataset.n_samples if ridge is None else ridge
    omega = np.column_stack([
        _branch_coefficients(dataset, assignment, t, mu, ridge) for t in topology.branch_nodes
    ])
    beta = np.column_stack([_leaf_coefficients(dataset, assignment, t) for t in topology.leaf_nodes])
    return ModelParams(topology=topology, omega=omega, beta=beta, mu=mu)


def initialize(
    dataset: Dataset,
    depth: int,
    r: int,
    seed: int,
    mu: float = 1.0,
    ridge: Optional[float] = None,
    scorer: ClusterScorer = davies_bouldin,
    max_workers: Optional[int] = None,
) -> Result[Initialization]:
    """Best of ``r`` hierarchical 2-means partitions by ``scorer``, then warm-start fits."""
    if r < 1:
        return Failure(ValidationError(
            message=f"Initialization needs r >= 1 repetitions, got {r}",
            field_name="r",
            invalid_value=str(r),
        ))

    repetition_seeds = [
        int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(r)
    ]
    workers = max_workers or min(r, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        assignments = list(executor.map(
            lambda sub_seed: recursive_partition(dataset, depth, sub_seed), repetition_seeds
        ))

    scores = [
        scorer(assignment.leaf_partition, dataset.X).unwrap_or(float("inf"))
        for assignment in assignments
    ]
    chosen = int(np.argmin(scores))
    logger.info(f"Initialization picked repetition {chosen + 1}/{r} with score {scores[chosen]:.6g}")

    params = fit_warm_start(dataset, assignments[chosen], mu=mu, ridge=ridge)
    return Success(Initialization(
        params=params,
        assignment=assignments[chosen],
        score=scores[chosen],
        repetition_scores=scores,
    ))


def random_initialization(n_features: int, depth: int, seed: int, mu: float = 1.0) -> Initialization:
    """Standard normal branch coefficients and zero leaf regressions."""
    topology = TreeTopology(depth)
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((n_features + 1, topology.n_branch))
    beta = np.zeros((n_features + 1, topology.n_leaf))
    return Initialization(params=ModelParams(topology=topology, omega=omega, beta=beta, mu=mu))


def build_initialization(dataset: Dataset, config: TrainConfig, seed: Optional[int] = None) -> Result[Initialization]:
    """Starting point selected by ``config.init_strategy``."""
    seed = config.seed if seed is None else seed
    if config.init_strategy is InitStrategy.RANDOM:
        return Success(random_initialization(dataset.n_features, config.depth, seed, config.mu))
    return initialize(
        dataset,
        config.depth,
        config.r,
        seed,
        mu=config.mu,
        ridge=config.resolved_init_ridge(dataset.n_samples),
    )
