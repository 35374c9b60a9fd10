"""Exact product and sum of two constant-leaf trees, built by hanging a copy of the second
tree under every leaf of the first."""

from __future__ import annotations
from typing import Callable, Tuple
import logging

import numpy as np

from core.error_types import AppException, UnsupportedInputError, raise_invalid
from models.tree import ModelParams, TreeTopology

logger = logging.getLogger(__name__)


def leaf_label_pair(t: int, depth_first: int, depth_second: int) -> Tuple[int, int]:
    """Map a leaf ordinal of the stacked tree to (leaf of the first tree, leaf of the second).

    All three are 1-based left-to-right ordinals.
    """
    n_first = 1 << depth_first
    n_second = 1 << depth_second
    if not 1 <= t <= n_first * n_second:
        raise_invalid(
            f"Leaf ordinal {t} outside 1..{n_first * n_second}",
            "t", t,
        )
    first = -(-t // n_second) % (n_first + 1)
    second = (t - 1) % n_second + 1
    return first, second


def _check_stackable(first: ModelParams, second: ModelParams) -> None:
    for name, tree in (("first", first), ("second", second)):
        if not tree.has_constant_leaves:
            raise AppException(UnsupportedInputError(
                message=f"The {name} tree has non-constant leaf regressions; stacking needs constant leaves",
                field_name=name,
            ))
    if first.n_features != second.n_features:
        raise_invalid(
            f"Trees use {first.n_features} and {second.n_features} features",
            "second", second.n_features,
        )


def _stack(first: ModelParams, second: ModelParams, combine: Callable[[float, float], float]) -> ModelParams:
    _check_stackable(first, second)
    depth_first, depth_second = first.depth, second.depth
    topology = TreeTopology(depth_first + depth_second)
    width = first.n_features + 1

    omega = np.zeros((width, topology.n_branch))
    omega[:, : first.topology.n_branch] = first.omega

    # keeps mu * u of the copied nodes equal to the second tree's
    copy_omega = second.omega * (second.mu / first.mu)
    for anchor in first.topology.leaf_nodes:
        for s in second.topology.branch_nodes:
            level = TreeTopology.node_depth(s)
            target = (anchor << level) + (s - (1 << level))
            omega[:, topology.branch_column(target)] = copy_omega[:, second.topology.branch_column(s)]

    beta = np.zeros((width, topology.n_leaf))
    for t in range(1, topology.n_leaf + 1):
        t1, t2 = leaf_label_pair(t, depth_first, depth_second)
        intercept_first = first.beta[0, t1 - 1]
        intercept_second = second.beta[0, t2 - 1]
        beta[0, t - 1] = combine(intercept_first, intercept_second)

    logger.debug(f"Stacked depth {depth_first} and depth {depth_second} trees into depth {topology.depth}")
    return ModelParams(topology=topology, omega=omega, beta=beta, mu=first.mu)


def stack_product(first: ModelParams, second: ModelParams) -> ModelParams:
    """Tree of depth D1 + D2 predicting predict(first, x) * predict(second, x) for every x."""
    return _stack(first, second, lambda a, b: a * b)


def stack_sum(first: ModelParams, second: ModelParams) -> ModelParams:
    """Tree of depth D1 + D2 predicting predict(first, x) + predict(second, x) for every x."""
    return _stack(first, second, lambda a, b: a + b)
