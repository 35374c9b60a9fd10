from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Dict, Any, List, Tuple

import numpy as np

from core.error_types import AppException, ValidationError, raise_invalid


@dataclass(frozen=True)
class TreeTopology:
    """Complete binary tree of uniform depth with heap node numbering.

    Branch nodes are 1..2^D-1 and leaves are 2^D..2^(D+1)-1. Node t has children
    2t and 2t+1 and parent t // 2.
    """

    depth: int

    def __post_init__(self):
        if not isinstance(self.depth, (int, np.integer)) or self.depth < 1:
            raise_invalid(f"Tree depth must be a positive integer, got {self.depth}", "depth", self.depth)

    @property
    def n_branch(self) -> int:
        return (1 << self.depth) - 1

    @property
    def n_leaf(self) -> int:
        return 1 << self.depth

    @property
    def first_leaf(self) -> int:
        return 1 << self.depth

    @property
    def branch_nodes(self) -> range:
        return range(1, self.first_leaf)

    @property
    def leaf_nodes(self) -> range:
        return range(self.first_leaf, 2 * self.first_leaf)

    def is_branch(self, t: int) -> bool:
        return 1 <= t < self.first_leaf

    def is_leaf(self, t: int) -> bool:
        return self.first_leaf <= t < 2 * self.first_leaf

    def contains(self, t: int) -> bool:
        return 1 <= t < 2 * self.first_leaf

    def check_node(self, t: int) -> None:
        if not self.contains(t):
            raise_invalid(f"Node {t} is not in a tree of depth {self.depth}", "node", t)

    def check_branch(self, t: int) -> None:
        if not self.is_branch(t):
            raise_invalid(f"Node {t} is not a branch node of a tree of depth {self.depth}", "node", t)

    @staticmethod
    def node_depth(t: int) -> int:
        return int(t).bit_length() - 1

    @staticmethod
    def children(t: int) -> Tuple[int, int]:
        return 2 * t, 2 * t + 1

    @staticmethod
    def parent(t: int) -> int:
        return t // 2

    def branch_column(self, t: int) -> int:
        """Column of node t in the omega matrix."""
        return t - 1

    def leaf_column(self, t: int) -> int:
        """Column of leaf t in the beta matrix."""
        return t - self.first_leaf

    def ancestors(self, t: int) -> List[Tuple[int, bool]]:
        """Ancestors of t from the root down, each paired with True when t lies to its left."""
        self.check_node(t)
        path: List[Tuple[int, bool]] = []
        node = t
        while node > 1:
            path.append((node // 2, node % 2 == 0))
            node //= 2
        path.reverse()
        return path

    def left_ancestors(self, t: int) -> List[int]:
        return [node for node, went_left in self.ancestors(t) if went_left]

    def right_ancestors(self, t: int) -> List[int]:
        return [node for node, went_left in self.ancestors(t) if not went_left]

    def leaf_range(self, t: int) -> range:
        """Leaves under node t as a contiguous heap index range."""
        self.check_node(t)
        shift = self.depth - self.node_depth(t)
        return range(t << shift, (t + 1) << shift)

    def descendant_leaves(self, t: int) -> List[int]:
        return list(self.leaf_range(t))

    def descendant_branches(self, t: int) -> List[int]:
        """Branch nodes strictly below t in heap order."""
        self.check_node(t)
        nodes: List[int] = []
        level = [t]
        while True:
            level = [child for node in level for child in self.children(node) if self.is_branch(child)]
            if not level:
                return nodes
            nodes.extend(level)

    def subtree_branches(self, t: int) -> List[int]:
        """t together with its descendant branch nodes."""
        return [t] + self.descendant_branches(t) if self.is_branch(t) else []

    def subtree_levels(self, t: int) -> List[List[int]]:
        """Branch nodes of the subtree rooted at t grouped by level."""
        levels: List[List[int]] = []
        level = [t] if self.is_branch(t) else []
        while level:
            levels.append(level)
            level = [child for node in level for child in self.children(node) if self.is_branch(child)]
        return levels

    def to_dict(self) -> Dict[str, Any]:
        return {"depth": int(self.depth)}


@dataclass(frozen=True)
class ModelParams:
    """Parameters of a soft regression tree.

    ``omega`` is (p+1) x |branch nodes|; column t-1 holds node t with the intercept in row 0.
    ``beta`` is (p+1) x |leaves|; column t-2^D holds leaf t with the intercept in row 0.
    """

    topology: TreeTopology
    omega: np.ndarray
    beta: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        beta = np.array(self.beta, dtype=float)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "beta", beta)
        omega.setflags(write=False)
        beta.setflags(write=False)

        if omega.ndim != 2 or omega.shape[1] != self.topology.n_branch:
            raise_invalid(
                f"omega must have {self.topology.n_branch} columns, got shape {omega.shape}",
                "omega", omega.shape,
            )
        if beta.ndim != 2 or beta.shape[1] != self.topology.n_leaf:
            raise_invalid(
                f"beta must have {self.topology.n_leaf} columns, got shape {beta.shape}",
                "beta", beta.shape,
            )
        if omega.shape[0] != beta.shape[0] or omega.shape[0] < 2:
            raise_invalid(
                f"omega and beta must share p+1 >= 2 rows, got {omega.shape[0]} and {beta.shape[0]}",
                "omega", omega.shape,
            )
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(beta))):
            raise_invalid("Model parameters must be finite", "params")
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise_invalid(f"mu must be positive, got {self.mu}", "mu", self.mu)

    @classmethod
    def zeros(cls, depth: int, n_features: int, mu: float = 1.0) -> ModelParams:
        topology = TreeTopology(depth)
        return cls(
            topology=topology,
            omega=np.zeros((n_features + 1, topology.n_branch)),
            beta=np.zeros((n_features + 1, topology.n_leaf)),
            mu=mu,
        )

    @property
    def depth(self) -> int:
        return self.topology.depth

    @property
    def n_features(self) -> int:
        return self.omega.shape[0] - 1

    @property
    def has_constant_leaves(self) -> bool:
        return bool(np.all(self.beta[1:, :] == 0.0))

    def omega_of(self, t: int) -> np.ndarray:
        return self.omega[:, self.topology.branch_column(t)]

    def beta_of(self, t: int) -> np.ndarray:
        return self.beta[:, self.topology.leaf_column(t)]

    def omega_block(self, nodes: List[int]) -> np.ndarray:
        """Columns of omega for the given branch nodes, stacked into one vector."""
        return np.concatenate([self.omega_of(t) for t in nodes]) if nodes else np.zeros(0)

    def with_omega_block(self, nodes: List[int], block: np.ndarray) -> ModelParams:
        omega = self.omega.copy()
        width = omega.shape[0]
        block = np.asarray(block, dtype=float).reshape(len(nodes), width)
        for position, t in enumerate(nodes):
            omega[:, self.topology.branch_column(t)] = block[position]
        return ModelParams(self.topology, omega, self.beta, self.mu)

    def with_beta_block(self, nodes: List[int], block: np.ndarray) -> ModelParams:
        beta = self.beta.copy()
        width = beta.shape[0]
        block = np.asarray(block, dtype=float).reshape(len(nodes), width)
        for position, t in enumerate(nodes):
            beta[:, self.topology.leaf_column(t)] = block[position]
        return ModelParams(self.topology, self.omega, beta, self.mu)

    def to_dict(self) -> Dict[str, Any]:
        """Columns are written one list per node, in heap order."""
        return {
            "depth": int(self.depth),
            "mu": float(self.mu),
            "p": int(self.n_features),
            "omega": self.omega.T.tolist(),
            "beta": self.beta.T.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ModelParams:
        try:
            topology = TreeTopology(int(data["depth"]))
            omega = np.array(data["omega"], dtype=float).T
            beta = np.array(data["beta"], dtype=float).T
            mu = float(data.get("mu", 1.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise AppException(ValidationError(
                message=f"Malformed model parameters: {exc}",
                field_name="model",
            ))
        params = cls(topology=topology, omega=omega, beta=beta, mu=mu)
        declared_p = data.get("p")
        if declared_p is not None and int(declared_p) != params.n_features:
            raise_invalid(
                f"Model declares p={declared_p} but carries {params.n_features} coefficients",
                "p", declared_p,
            )
        return params


@dataclass(frozen=True)
class TrainedModel:
    """Parameters bundled with what is needed to score raw feature rows."""

    params: ModelParams
    feature_names: Tuple[str, ...]
    target_name: str = "y"
    preprocess: Optional["PreprocessParams"] = None

    def to_dict(self) -> Dict[str, Any]:
        data = self.params.to_dict()
        data["feature_names"] = list(self.feature_names)
        data["target_name"] = self.target_name
        data["normalization"] = self.preprocess.to_dict() if self.preprocess else None
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> TrainedModel:
        from models.dataset import PreprocessParams

        params = ModelParams.from_dict(data)
        names = tuple(data.get("feature_names") or [f"x{j + 1}" for j in range(params.n_features)])
        if len(names) != params.n_features:
            raise_invalid(
                f"Model lists {len(names)} feature names for p={params.n_features}",
                "feature_names", len(names),
            )
        normalization = data.get("normalization")
        return cls(
            params=params,
            feature_names=names,
            target_name=data.get("target_name", "y"),
            preprocess=PreprocessParams.from_dict(normalization) if normalization else None,
        )
