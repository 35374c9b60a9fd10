from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Optional, Dict, Any, List

import numpy as np

from models.tree import ModelParams


class StepKind(Enum):
    """What a branch-node step ended up doing."""
    SKIPPED_GATE = auto()
    ARMIJO_REFERENCE = auto()
    HEURISTIC_BALANCED = auto()
    HEURISTIC_WLR_MODERATE = auto()
    HEURISTIC_WLR_REASSIGN = auto()

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")

    @property
    def is_wlr(self) -> bool:
        return self in (StepKind.HEURISTIC_WLR_MODERATE, StepKind.HEURISTIC_WLR_REASSIGN)

    @classmethod
    def from_label(cls, label: str) -> StepKind:
        return cls[label.upper().replace("-", "_")]


@dataclass(frozen=True)
class IterationRecord:
    """One inner iteration: a branch step on W_B followed by a leaf step on W_L."""

    k: int
    macro_it: int
    node: int
    step_kind: StepKind
    error_before: float
    error_after_bn: float
    error_after_ln: float
    leaf_step_skipped: bool = False

    def to_trace_line(self) -> str:
        return (
            f"{self.k}, {self.macro_it}, {self.node}, {self.step_kind.label}, "
            f"{self.error_after_bn:.17g}, {self.error_after_ln:.17g}"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "macro_it": self.macro_it,
            "node": self.node,
            "step_kind": self.step_kind.label,
            "error_before": self.error_before,
            "error_after_bn": self.error_after_bn,
            "error_after_ln": self.error_after_ln,
            "leaf_step_skipped": self.leaf_step_skipped,
        }


@dataclass
class FitReport:
    """Outcome of a training run."""

    best_params: ModelParams
    best_error: float
    initial_error: float
    final_params: ModelParams
    trace: List[IterationRecord] = field(default_factory=list)
    iterations_run: int = 0
    macro_iterations_run: int = 0
    idle_sweeps: int = 0
    wall_time: float = 0.0
    terminated_early: bool = False
    init_db_score: Optional[float] = None

    @property
    def error_trace(self) -> List[float]:
        return [record.error_after_ln for record in self.trace]

    @property
    def step_kinds(self) -> List[StepKind]:
        return [record.step_kind for record in self.trace]

    def trace_lines(self) -> List[str]:
        return [record.to_trace_line() for record in self.trace]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best_error": self.best_error,
            "initial_error": self.initial_error,
            "iterations_run": self.iterations_run,
            "macro_iterations_run": self.macro_iterations_run,
            "idle_sweeps": self.idle_sweeps,
            "terminated_early": self.terminated_early,
            "init_db_score": self.init_db_score,
            "trace": [record.to_dict() for record in self.trace],
        }


@dataclass(frozen=True)
class RunRecord:
    """One train/evaluate cycle of an experiment."""

    fold: int
    seed: int
    variant: str
    r2_test: float
    r2_train: float
    train_error: float
    gini: Optional[float] = None
    wall_time: float = 0.0
    model_path: Optional[str] = None

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data = {
            "fold": self.fold,
            "seed": self.seed,
            "variant": self.variant,
            "r2_test": self.r2_test,
            "r2_train": self.r2_train,
            "train_error": self.train_error,
            "gini": self.gini,
            "model_path": self.model_path,
        }
        if include_timing:
            data["wall_time"] = self.wall_time
        return data


@dataclass(frozen=True)
class RunSummary:
    variant: str
    n_runs: int
    mean_r2: float
    std_r2: float
    negative_r2_count: int
    mean_wall_time: float
    median_gini: Optional[float] = None

    @classmethod
    def from_records(cls, variant: str, records: List[RunRecord]) -> RunSummary:
        """Population standard deviation over the listed runs."""
        r2 = np.array([record.r2_test for record in records], dtype=float)
        ginis = [record.gini for record in records if record.gini is not None]
        return cls(
            variant=variant,
            n_runs=len(records),
            mean_r2=float(np.mean(r2)) if r2.size else float("nan"),
            std_r2=float(np.std(r2)) if r2.size else float("nan"),
            negative_r2_count=int(np.sum(r2 < 0)),
            mean_wall_time=float(np.mean([record.wall_time for record in records])) if records else 0.0,
            median_gini=float(np.median(ginis)) if ginis else None,
        )

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data = {
            "variant": self.variant,
            "n_runs": self.n_runs,
            "mean_r2": self.mean_r2,
            "std_r2": self.std_r2,
            "negative_r2_count": self.negative_r2_count,
            "median_gini": self.median_gini,
        }
        if include_timing:
            data["mean_wall_time"] = self.mean_wall_time
        return data


@dataclass
class RunReport:
    """Per-run results of a command plus their summaries."""

    command: str
    config: Dict[str, Any]
    records: List[RunRecord] = field(default_factory=list)
    data_path: Optional[str] = None
    data_sha256: Optional[str] = None

    @property
    def variants(self) -> List[str]:
        seen: List[str] = []
        for record in self.records:
            if record.variant not in seen:
                seen.append(record.variant)
        return seen

    def summaries(self) -> List[RunSummary]:
        return [
            RunSummary.from_records(variant, [r for r in self.records if r.variant == variant])
            for variant in self.variants
        ]

    def summary_for(self, variant: str) -> RunSummary:
        return RunSummary.from_records(variant, [r for r in self.records if r.variant == variant])

    def to_dict(self) -> Dict[str, Any]:
        """Deterministic content only; wall times are written separately."""
        return {
            "command": self.command,
            "data_path": self.data_path,
            "data_sha256": self.data_sha256,
            "config": self.config,
            "runs": [record.to_dict() for record in self.records],
            "summary": [summary.to_dict() for summary in self.summaries()],
        }

    def timing_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "runs": [
                {"fold": r.fold, "seed": r.seed, "variant": r.variant, "wall_time": r.wall_time}
                for r in self.records
            ],
            "summary": [
                {"variant": s.variant, "mean_wall_time": s.mean_wall_time} for s in self.summaries()
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RunReport:
        records = [
            RunRecord(
                fold=int(run["fold"]),
                seed=int(run["seed"]),
                variant=str(run["variant"]),
                r2_test=float(run["r2_test"]),
                r2_train=float(run["r2_train"]),
                train_error=float(run["train_error"]),
                gini=run.get("gini"),
                wall_time=float(run.get("wall_time", 0.0)),
                model_path=run.get("model_path"),
            )
            for run in data.get("runs", [])
        ]
        return cls(
            command=data["command"],
            config=dict(data.get("config", {})),
            records=records,
            data_path=data.get("data_path"),
            data_sha256=data.get("data_sha256"),
        )
