from models.tree import (
    TreeTopology,
    ModelParams,
    TrainedModel,
)
from models.dataset import (
    Dataset,
    PreprocessParams,
    FoldPlan,
)
from models.settings import (
    InitStrategy,
    ThresholdDecay,
    TrainConfig,
)
from models.report import (
    StepKind,
    IterationRecord,
    FitReport,
    RunRecord,
    RunSummary,
    RunReport,
)

__all__ = [
    "TreeTopology",
    "ModelParams",
    "TrainedModel",
    "Dataset",
    "PreprocessParams",
    "FoldPlan",
    "InitStrategy",
    "ThresholdDecay",
    "TrainConfig",
    "StepKind",
    "IterationRecord",
    "FitReport",
    "RunRecord",
    "RunSummary",
    "RunReport",
]
