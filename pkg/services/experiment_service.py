"""
Experiment Service

Runs train/evaluate cycles:
- single fits with one of three training variants
- k-fold cross-validation over several initial solutions
- the synthetic ablation comparing the variants on clustered data
"""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum, auto
from pathlib import Path
from typing import Optional, List, Sequence, Tuple
import logging
import os
import time

import numpy as np

from core.error_types import Result, Success, Failure, combine_results
from core.initialization import Initialization, build_initialization
from core.metrics import gini_routing, r_squared
from core.optimizer import plain_train, train
from core.preprocessing import apply_preprocess, fit_preprocess, kfold
from core.srt_engine import predict_batch
from core.synthetic import gen_synthetic
from models.dataset import Dataset
from models.report import FitReport, RunRecord, RunReport
from models.settings import TrainConfig
from models.tree import ModelParams, TrainedModel
from services.export_service import ExportService

logger = logging.getLogger(__name__)


class Variant(Enum):
    """Training procedure of one run."""
    FULL = auto()
    NO_REASSIGN = auto()
    PLAIN = auto()

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_label(cls, label: str) -> Variant:
        return cls[label.upper().replace("-", "_")]


@dataclass(frozen=True)
class FitOutcome:
    """A finished run: its record, the scored model and the optimizer report."""

    record: RunRecord
    model: TrainedModel
    report: FitReport


@dataclass(frozen=True)
class RunTask:
    fold: int
    seed: int
    variant: Variant
    train_rows: np.ndarray
    test_rows: np.ndarray


def fit_variant(dataset: Dataset, init: ModelParams, config: TrainConfig, variant: Variant) -> Result[FitReport]:
    """Train ``init`` on ``dataset`` with the procedure named by ``variant``."""
    if variant is Variant.PLAIN:
        return plain_train(dataset, init, config)
    if variant is Variant.NO_REASSIGN:
        config = config.with_overrides(reassign=False)
    return train(dataset, init, config)


def _score(model: ModelParams, dataset: Dataset) -> Result[float]:
    return r_squared(predict_batch(model, dataset.X), dataset.y)


class ExperimentService:
    """
    Schedules independent runs on a thread pool and gathers them into a RunReport.

    Records are ordered by (fold, seed, variant) whatever order the workers finish in.
    """

    def __init__(
        self,
        config: TrainConfig,
        max_workers: Optional[int] = None,
        model_dir: Optional[Path] = None,
        export_service: Optional[ExportService] = None,
    ):
        self.config = config
        self.max_workers = max_workers or os.cpu_count() or 1
        self.model_dir = Path(model_dir) if model_dir else None
        self.export_service = export_service or ExportService()

    def run_fit(
        self,
        train_split: Dataset,
        test_split: Dataset,
        seed: int,
        variant: Variant = Variant.FULL,
        fold: int = 0,
        inits: Optional[dict] = None,
    ) -> Result[FitOutcome]:
        """
        Preprocess with training statistics, initialize, train and score one run.

        Args:
            train_split: Raw training rows.
            test_split: Raw test rows.
            seed: Seed of the initial solution.
            variant: Training procedure.
            fold: Fold index recorded in the run.
            inits: Optional cache of starting points shared by variants of the same run.

        Returns:
            Result containing the run record, the trained model and the optimizer report.
        """
        started = time.perf_counter()
        preprocess = fit_preprocess(train_split)
        if preprocess.is_failure():
            return Failure(preprocess.get_error())
        params = preprocess.unwrap()
        train_data = apply_preprocess(params, train_split)
        test_data = apply_preprocess(params, test_split)

        init = inits.get((fold, seed)) if inits is not None else None
        if init is None:
            built = build_initialization(train_data, self.config, seed)
            if built.is_failure():
                return Failure(built.get_error())
            init = built.unwrap()

        fitted = fit_variant(train_data, init.params, self.config, variant)
        if fitted.is_failure():
            return Failure(fitted.get_error().with_context(fold=fold, seed=seed, variant=variant.label))
        report = replace(fitted.unwrap(), init_db_score=init.score)
        best = report.best_params

        scores = combine_results([_score(best, test_data), _score(best, train_data)])
        if scores.is_failure():
            return Failure(scores.get_error())
        r2_test, r2_train = scores.unwrap()

        gini = None
        if train_data.has_labels:
            gini = gini_routing(best, train_data).unwrap_or(None)

        model = TrainedModel(
            params=best,
            feature_names=train_split.feature_names,
            target_name=train_split.target_name,
            preprocess=params,
        )
        model_path = self._export(model, report, fold, seed, variant)
        if model_path is not None and model_path.is_failure():
            return Failure(model_path.get_error())

        record = RunRecord(
            fold=fold,
            seed=seed,
            variant=variant.label,
            r2_test=r2_test,
            r2_train=r2_train,
            train_error=report.best_error,
            gini=gini,
            wall_time=time.perf_counter() - started,
            model_path=str(model_path.unwrap()) if model_path is not None else None,
        )
        logger.debug(
            f"fold={fold} seed={seed} {variant.label}: R2 test={r2_test:.4f} train={r2_train:.4f}"
        )
        return Success(FitOutcome(record=record, model=model, report=report))

    def crossval(
        self,
        dataset: Dataset,
        folds: int,
        seeds: int,
        variants: Sequence[Variant] = (Variant.FULL,),
        command: str = "crossval",
    ) -> Result[RunReport]:
        """
        k folds times s initial solutions per variant.

        The fold plan depends only on ``config.seed``; run j of every fold starts from
        seed ``config.seed + j``.
        """
        plan = kfold(dataset.n_samples, folds, self.config.seed)
        if plan.is_failure():
            return Failure(plan.get_error())
        plan = plan.unwrap()

        tasks = []
        for fold in range(plan.k):
            train_rows, test_rows = plan.split(fold)
            for j in range(seeds):
                for variant in variants:
                    tasks.append(RunTask(fold, self.config.seed + j, variant, train_rows, test_rows))

        logger.info(f"Cross-validating {len(tasks)} runs ({plan.k} folds, {seeds} seeds) on {self.max_workers} workers")
        return self._run_tasks(dataset, tasks, command)

    def synth_bench(
        self,
        seeds: int,
        folds: int = 4,
        variants: Sequence[Variant] = (Variant.PLAIN, Variant.NO_REASSIGN, Variant.FULL),
    ) -> Result[RunReport]:
        """
        Ablation on freshly generated clustered data, one dataset per seed.

        Each seed holds out one fold of its own dataset; all variants of a seed start
        from the same initial solution.
        """
        outcomes: List[Result[List[RunRecord]]] = []
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [
                executor.submit(self._synth_seed, self.config.seed + j, folds, variants)
                for j in range(seeds)
            ]
            outcomes = [future.result() for future in futures]

        combined = combine_results(outcomes)
        if combined.is_failure():
            return Failure(combined.get_error())
        records = [record for batch in combined.unwrap() for record in batch]
        return Success(RunReport(
            command="synth-bench",
            config=self.config.to_dict(),
            records=self._ordered(records, variants),
        ))

    def _synth_seed(self, seed: int, folds: int, variants: Sequence[Variant]) -> Result[List[RunRecord]]:
        dataset = gen_synthetic(seed)
        plan = kfold(dataset.n_samples, folds, seed)
        if plan.is_failure():
            return Failure(plan.get_error())
        train_rows, test_rows = plan.unwrap().split(0)
        train_split, test_split = dataset.subset(train_rows), dataset.subset(test_rows)

        shared = self._shared_init(train_split, seed)
        if shared.is_failure():
            return Failure(shared.get_error())
        inits = {(0, seed): shared.unwrap()}

        records = []
        for variant in variants:
            outcome = self.run_fit(train_split, test_split, seed, variant, fold=0, inits=inits)
            if outcome.is_failure():
                return Failure(outcome.get_error())
            records.append(outcome.unwrap().record)
        return Success(records)

    def _shared_init(self, train_split: Dataset, seed: int) -> Result[Initialization]:
        params = fit_preprocess(train_split)
        if params.is_failure():
            return Failure(params.get_error())
        return build_initialization(apply_preprocess(params.unwrap(), train_split), self.config, seed)

    def _run_tasks(self, dataset: Dataset, tasks: List[RunTask], command: str) -> Result[RunReport]:
        def run(task: RunTask) -> Result[FitOutcome]:
            return self.run_fit(
                dataset.subset(task.train_rows),
                dataset.subset(task.test_rows),
                task.seed,
                task.variant,
                fold=task.fold,
            )

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            results = list(executor.map(run, tasks))

        combined = combine_results(results)
        if combined.is_failure():
            return Failure(combined.get_error())
        variants = []
        for task in tasks:
            if task.variant not in variants:
                variants.append(task.variant)
        return Success(RunReport(
            command=command,
            config=self.config.to_dict(),
            records=self._ordered([outcome.record for outcome in combined.unwrap()], variants),
        ))

    @staticmethod
    def _ordered(records: List[RunRecord], variants: Sequence[Variant]) -> List[RunRecord]:
        rank = {variant.label: i for i, variant in enumerate(variants)}
        return sorted(records, key=lambda r: (r.fold, r.seed, rank.get(r.variant, len(rank))))

    def _export(
        self,
        model: TrainedModel,
        report: FitReport,
        fold: int,
        seed: int,
        variant: Variant,
    ) -> Optional[Result[Path]]:
        if self.model_dir is None:
            return None
        path = self.model_dir / f"model_f{fold}_s{seed}_{variant.label}.json"
        return self.export_service.write_fit_artifacts(model, report, path)


def fit_full_dataset(
    dataset: Dataset,
    config: TrainConfig,
    variant: Variant = Variant.FULL,
) -> Result[Tuple[TrainedModel, FitReport]]:
    """Preprocess, initialize and train on every row of ``dataset``."""
    preprocess = fit_preprocess(dataset)
    if preprocess.is_failure():
        return Failure(preprocess.get_error())
    params = preprocess.unwrap()
    data = apply_preprocess(params, dataset)

    init = build_initialization(data, config)
    if init.is_failure():
        return Failure(init.get_error())
    init = init.unwrap()

    fitted = fit_variant(data, init.params, config, variant)
    if fitted.is_failure():
        return Failure(fitted.get_error())
    report = replace(fitted.unwrap(), init_db_score=init.score)
    model = TrainedModel(
        params=report.best_params,
        feature_names=dataset.feature_names,
        target_name=dataset.target_name,
        preprocess=params,
    )
    return Success((model, report))
