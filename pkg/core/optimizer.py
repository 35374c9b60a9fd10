"""
Node-based decomposition trainer.

Every macro iteration sweeps the branch nodes t = 1..2^D-1 in index order. Each inner
iteration k updates the branch coefficients of the subtree rooted at t (branch step), then
refits the leaf regressions under it (leaf step). Up to iteration k0 a heuristic candidate is
always taken; afterwards it must beat an Armijo reference point and decrease the error by
tau * ||step||^2, which makes the error sequence non-increasing.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging
import math
import time

import numpy as np

from core.branch_update import (
    BranchCandidate,
    BranchUpdateSettings,
    ImbalanceThresholds,
    update_branch_node,
)
from core.error_types import (
    Result,
    Success,
    Failure,
    ValidationError,
    raise_invalid,
)
from core.line_search import ArmijoStep, armijo_backtracking
from core.numerics import WeightedLeastSquaresProblem, solve_wls
from core.srt_engine import (
    ObjectiveScope,
    OmegaBlockObjective,
    leaf_design,
    leaf_probability_matrix,
    passes_through,
    scope_gradient,
    training_error,
)
from models.dataset import Dataset
from models.report import FitReport, IterationRecord, StepKind
from models.settings import TrainConfig, ThresholdDecay
from models.tree import ModelParams, TreeTopology

logger = logging.getLogger(__name__)

LEAF_GRADIENT_FLOOR = 1e-9


@dataclass(frozen=True)
class WorkingSet:
    branches: Tuple[int, ...]
    leaves: Tuple[int, ...]


@dataclass(frozen=True)
class BranchStepOutcome:
    params: ModelParams
    kind: StepKind
    candidate: Optional[BranchCandidate] = None
    reference: Optional[ArmijoStep] = None


@dataclass(frozen=True)
class LeafStepOutcome:
    params: ModelParams
    grad_norm: float
    skipped: bool = False


def select_working_set(t: int, topology: TreeTopology) -> WorkingSet:
    """Subtree of t; at the root of a deeper tree only node 1 and no leaves."""
    topology.check_branch(t)
    if t == 1 and topology.depth > 1:
        return WorkingSet(branches=(1,), leaves=())
    return WorkingSet(
        branches=tuple(topology.subtree_branches(t)),
        leaves=tuple(topology.descendant_leaves(t)),
    )


def active_scope(model: ModelParams, dataset: Dataset, t: int, use_proxy: bool) -> ObjectiveScope:
    """Subtree-as-root objective over the rows routed through t, or the exact error."""
    if not use_proxy or t == 1:
        return ObjectiveScope()
    routed = np.flatnonzero(passes_through(model, dataset.X, t))
    return ObjectiveScope(root=t, rows=routed, n_total=dataset.n_samples)


def armijo_step(
    model: ModelParams,
    dataset: Dataset,
    nodes: List[int],
    config: TrainConfig,
    scope: ObjectiveScope = ObjectiveScope(),
) -> Result[ArmijoStep]:
    """Backtracking step along the negative block gradient of the (scope) error."""
    leaves = [t for t in nodes if not model.topology.is_branch(t)]
    if leaves:
        return Failure(ValidationError(
            message=f"Armijo step updates branch coefficients only; nodes {leaves} are not branch nodes",
            field_name="nodes",
            invalid_value=str(leaves),
        ))
    lambda_omega, lambda_beta = config.resolved_lambdas(dataset.n_features)
    objective = OmegaBlockObjective(model, dataset, nodes, lambda_omega, lambda_beta, scope)
    start = objective.start
    return armijo_backtracking(
        objective.value,
        start,
        objective.gradient(start),
        objective.value(start),
        a=config.armijo_a,
        gamma=config.armijo_gamma,
        delta=config.armijo_delta,
    )


def ln_step(
    model: ModelParams,
    dataset: Dataset,
    leaves: List[int],
    lambda_beta: float,
    tolerance: float,
    lambda_omega: float = 0.0,
) -> Result[LeafStepOutcome]:
    """Exact minimization of the training error over the regressions of ``leaves``.

    Each leaf is a separate weighted ridge problem with row weights 2 P_il / N.
    """
    if not leaves:
        return Success(LeafStepOutcome(params=model, grad_norm=0.0, skipped=True))

    n_samples = dataset.n_samples
    mass = leaf_probability_matrix(model, dataset.X)
    design = leaf_design(dataset.X)
    solutions = []
    for t in leaves:
        column = model.topology.leaf_column(t)
        problem = WeightedLeastSquaresProblem(
            design=design,
            targets=dataset.y,
            weights=2.0 * mass[:, column] / n_samples,
            ridge=lambda_beta,
        )
        solution = solve_wls(problem)
        if solution.is_failure():
            return Failure(solution.get_error().with_context(leaf=t))
        solutions.append(solution.unwrap())

    updated = model.with_beta_block(list(leaves), np.concatenate(solutions))
    previous_error = training_error(model, dataset, lambda_omega, lambda_beta)
    if training_error(updated, dataset, lambda_omega, lambda_beta) > previous_error + 1e-12 * max(1.0, previous_error):
        logger.debug("Leaf refit did not lower the error; keeping the previous regressions")
        updated = model

    gradient = scope_gradient(updated, dataset, lambda_omega, lambda_beta, leaf_nodes=leaves)
    grad_norm = float(np.linalg.norm(np.concatenate([gradient[t] for t in leaves])))
    if grad_norm > max(tolerance, LEAF_GRADIENT_FLOOR):
        logger.warning(f"Leaf step gradient norm {grad_norm:.3e} above tolerance {tolerance:.3e}")
    return Success(LeafStepOutcome(params=updated, grad_norm=grad_norm))


def bn_step(
    model: ModelParams,
    dataset: Dataset,
    nodes: List[int],
    k: int,
    config: TrainConfig,
    thresholds: Optional[ImbalanceThresholds] = None,
) -> Result[BranchStepOutcome]:
    """One branch step on ``nodes`` at inner iteration ``k``."""
    lambda_omega, lambda_beta = config.resolved_lambdas(dataset.n_features)
    k0 = config.resolved_k0()
    if thresholds is None:
        thresholds = ImbalanceThresholds(config.eps1_0, config.eps2_0, config.eps3_0)

    t = min(nodes)
    use_proxy = config.subtree_proxy and k <= k0
    scope = active_scope(model, dataset, t, use_proxy)
    objective = OmegaBlockObjective(model, dataset, nodes, lambda_omega, lambda_beta, scope)
    current = objective.start
    gradient = objective.gradient(current)
    if np.linalg.norm(gradient) <= config.theta_omega ** k:
        return Success(BranchStepOutcome(params=model, kind=StepKind.SKIPPED_GATE))

    reference = armijo_step(model, dataset, nodes, config, scope)
    if reference.is_failure():
        return Failure(reference.get_error().with_context(node=t, k=k))
    reference_step = reference.unwrap()

    settings = BranchUpdateSettings(
        lambda_omega=lambda_omega,
        lambda_beta=lambda_beta,
        reassign=config.reassign,
        subtree_proxy=use_proxy,
        balanced_max_iter=config.balanced_max_iter,
        wlr_ridge=config.wlr_ridge,
        wlr_max_iter=config.wlr_max_iter,
    )
    candidate = update_branch_node(model, dataset, nodes, thresholds, settings)

    def use_reference() -> Result[BranchStepOutcome]:
        return Success(BranchStepOutcome(
            params=objective.params_at(reference_step.point),
            kind=StepKind.ARMIJO_REFERENCE,
            candidate=candidate,
            reference=reference_step,
        ))

    if candidate.fell_back or candidate.kind is StepKind.SKIPPED_GATE:
        return use_reference()

    if k > k0:
        candidate_value = objective.value(candidate.block)
        sufficient = objective.value(current) - config.tau * float(np.sum((candidate.block - current) ** 2))
        if not (candidate_value <= reference_step.value and candidate_value <= sufficient):
            return use_reference()

    return Success(BranchStepOutcome(
        params=objective.params_at(candidate.block),
        kind=candidate.kind,
        candidate=candidate,
        reference=reference_step,
    ))


def _check_inputs(dataset: Dataset, init: ModelParams, config: TrainConfig) -> Result[TrainConfig]:
    checked = config.validate()
    if checked.is_failure():
        return checked
    if dataset.n_samples == 0:
        return Failure(ValidationError(message="Training needs at least one data point", field_name="dataset"))
    if init.n_features != dataset.n_features:
        return Failure(ValidationError(
            message=f"Initial model has {init.n_features} features, dataset has {dataset.n_features}",
            field_name="init",
            invalid_value=str(init.n_features),
        ))
    if init.depth != config.depth:
        return Failure(ValidationError(
            message=f"Initial model has depth {init.depth}, config asks for {config.depth}",
            field_name="depth",
            invalid_value=str(init.depth),
        ))
    return checked


def _decay_period(config: TrainConfig) -> int:
    """Inner iterations between two threshold decays, 0 when decay happens per sweep."""
    if config.threshold_decay is ThresholdDecay.INNER:
        return 1
    if config.threshold_decay is ThresholdDecay.BLOCK:
        return 1 << (config.depth - 1)
    return 0


def train(dataset: Dataset, init: ModelParams, config: TrainConfig) -> Result[FitReport]:
    """Run up to ``max_macro_iters`` sweeps and return the best parameters seen.

    A sweep in which every gradient gate stayed closed changes nothing; it is not counted
    against ``max_macro_iters`` nor tested for termination.
    At most ``max_idle_sweeps`` such sweeps are run.
    """
    checked = _check_inputs(dataset, init, config)
    if checked.is_failure():
        return Failure(checked.get_error())

    started = time.perf_counter()
    lambda_omega, lambda_beta = config.resolved_lambdas(dataset.n_features)
    k0 = config.resolved_k0()
    topology = init.topology
    thresholds = ImbalanceThresholds(config.eps1_0, config.eps2_0, config.eps3_0)
    decay_period = _decay_period(config)

    model = init
    error = training_error(model, dataset, lambda_omega, lambda_beta)
    initial_error = error
    best_error, best_params = math.inf, init
    trace: List[IterationRecord] = []
    k = 0
    sweep = 0
    macro_run = 0
    idle_sweeps = 0
    terminated_early = False

    while macro_run < config.max_macro_iters:
        sweep_start_error = error
        sweep_active = False
        for t in topology.branch_nodes:
            working_set = select_working_set(t, topology)
            error_before = error

            branch = bn_step(model, dataset, list(working_set.branches), k, config, thresholds)
            if branch.is_failure():
                return Failure(branch.get_error())
            model = branch.unwrap().params
            error_after_bn = training_error(model, dataset, lambda_omega, lambda_beta)

            leaf_skipped = True
            if working_set.leaves:
                leaf_gradient = scope_gradient(
                    model, dataset, lambda_omega, lambda_beta, leaf_nodes=working_set.leaves
                )
                norm = float(np.linalg.norm(np.concatenate([leaf_gradient[leaf] for leaf in working_set.leaves])))
                if norm > config.theta_beta ** k:
                    leaf = ln_step(
                        model, dataset, list(working_set.leaves), lambda_beta,
                        config.upsilon ** k, lambda_omega,
                    )
                    if leaf.is_failure():
                        return Failure(leaf.get_error())
                    model = leaf.unwrap().params
                    leaf_skipped = False
            error = training_error(model, dataset, lambda_omega, lambda_beta)

            record = IterationRecord(
                k=k,
                macro_it=sweep,
                node=t,
                step_kind=branch.unwrap().kind,
                error_before=error_before,
                error_after_bn=error_after_bn,
                error_after_ln=error,
                leaf_step_skipped=leaf_skipped,
            )
            trace.append(record)
            sweep_active = sweep_active or record.step_kind is not StepKind.SKIPPED_GATE or not leaf_skipped
            logger.debug(
                f"k={k} node={t} {record.step_kind.label} "
                f"E_bn={error_after_bn:.6g} E_ln={error:.6g}"
            )
            if k > k0 and error > error_before + 1e-12 * max(1.0, abs(error_before)):
                logger.warning(f"Error increased at k={k} ({error_before:.6g} -> {error:.6g})")

            if error < best_error:
                best_error, best_params = error, model
            k += 1
            if decay_period and k % decay_period == 0:
                thresholds = thresholds.decayed(config.zeta)

        sweep += 1
        if not decay_period:
            thresholds = thresholds.decayed(config.zeta)

        if not sweep_active:
            idle_sweeps += 1
            if idle_sweeps > config.max_idle_sweeps:
                logger.warning(f"Every gradient gate stayed closed for {idle_sweeps} sweeps; stopping at k={k}")
                terminated_early = True
                break
            logger.debug(f"Sweep {sweep}: all gates closed at k={k}")
            continue

        macro_run += 1
        logger.info(f"Sweep {macro_run}/{config.max_macro_iters}: E={error:.6g} best={best_error:.6g}")

        improvement = abs(sweep_start_error - error) / max(abs(sweep_start_error), 1e-300)
        if improvement < config.termination_tol:
            terminated_early = macro_run < config.max_macro_iters
            break

    if not trace:
        best_error = initial_error

    return Success(FitReport(
        best_params=best_params,
        best_error=best_error,
        initial_error=initial_error,
        final_params=model,
        trace=trace,
        iterations_run=k,
        macro_iterations_run=macro_run,
        idle_sweeps=idle_sweeps,
        wall_time=time.perf_counter() - started,
        terminated_early=terminated_early,
    ))


def _flatten(model: ModelParams) -> np.ndarray:
    return np.concatenate([model.omega.ravel(), model.beta.ravel()])


def _unflatten(template: ModelParams, vector: np.ndarray) -> ModelParams:
    split = template.omega.size
    return ModelParams(
        template.topology,
        vector[:split].reshape(template.omega.shape),
        vector[split:].reshape(template.beta.shape),
        template.mu,
    )


def plain_train(dataset: Dataset, init: ModelParams, config: TrainConfig) -> Result[FitReport]:
    """Armijo gradient descent on all coefficients at once, as a baseline for the decomposition."""
    checked = _check_inputs(dataset, init, config)
    if checked.is_failure():
        return Failure(checked.get_error())

    started = time.perf_counter()
    lambda_omega, lambda_beta = config.resolved_lambdas(dataset.n_features)
    topology = init.topology
    every_node = list(topology.branch_nodes) + list(topology.leaf_nodes)
    max_iterations = config.max_macro_iters * topology.n_branch

    def error_at(vector: np.ndarray) -> float:
        return training_error(_unflatten(init, vector), dataset, lambda_omega, lambda_beta)

    def gradient_at(vector: np.ndarray) -> np.ndarray:
        blocks = scope_gradient(
            _unflatten(init, vector), dataset, lambda_omega, lambda_beta,
            branch_nodes=topology.branch_nodes, leaf_nodes=topology.leaf_nodes,
        )
        omega_part = np.column_stack([blocks[t] for t in topology.branch_nodes]).ravel()
        beta_part = np.column_stack([blocks[t] for t in topology.leaf_nodes]).ravel()
        return np.concatenate([omega_part, beta_part])

    point = _flatten(init)
    error = error_at(point)
    initial_error = error
    trace: List[IterationRecord] = []
    for iteration in range(max_iterations):
        gradient = gradient_at(point)
        if np.linalg.norm(gradient) < config.plain_grad_tol:
            break
        step = armijo_backtracking(
            error_at, point, gradient, error,
            a=config.armijo_a, gamma=config.armijo_gamma, delta=config.armijo_delta,
        )
        if step.is_failure():
            return Failure(step.get_error().with_context(iteration=iteration, nodes=len(every_node)))
        previous = error
        point, error = step.unwrap().point, step.unwrap().value
        trace.append(IterationRecord(
            k=iteration,
            macro_it=iteration // topology.n_branch,
            node=0,
            step_kind=StepKind.ARMIJO_REFERENCE,
            error_before=previous,
            error_after_bn=error,
            error_after_ln=error,
            leaf_step_skipped=True,
        ))

    final = _unflatten(init, point)
    logger.info(f"Plain descent: {len(trace)} steps, E {initial_error:.6g} -> {error:.6g}")
    return Success(FitReport(
        best_params=final,
        best_error=error,
        initial_error=initial_error,
        final_params=final,
        trace=trace,
        iterations_run=len(trace),
        macro_iterations_run=-(-len(trace) // topology.n_branch),
        wall_time=time.perf_counter() - started,
        terminated_early=len(trace) < max_iterations,
    ))


def threshold_bound_kbar(n_samples: int, eps1_0: float, zeta: float, depth: int) -> int:
    """Inner iterations after which the imbalance gate eps1 * N >= 1 can no longer open."""
    if not 0 < zeta < 1:
        raise_invalid(f"zeta must lie in (0, 1), got {zeta}", "zeta", zeta)
    product = n_samples * eps1_0
    if product <= 1:
        return 0
    return math.ceil(math.log(product) / -math.log(zeta)) * (1 << (depth - 1))
