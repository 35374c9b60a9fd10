"""
Export Service

Writes the trainer's artifacts:
- Model JSON (parameters, feature names, normalization)
- Iteration trace text
- Run report JSON plus a wall-time sidecar
- Prediction and dataset CSV files
"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
import logging

import numpy as np
import pandas as pd

from core.error_types import Result, Success, combine_results
from models.dataset import Dataset
from models.report import FitReport, RunReport
from models.tree import TrainedModel
from services.import_service import LABEL_COLUMN
from utils.file_ops import write_file_text, write_json

logger = logging.getLogger(__name__)

TRACE_HEADER = "# k, macro_it, node, step_kind, E_after_bn, E_after_ln"


def trace_path_for(model_path: Path) -> Path:
    """``model.json`` -> ``model.trace.txt``."""
    model_path = Path(model_path)
    return model_path.with_name(f"{model_path.stem}.trace.txt")


def timing_path_for(report_path: Path) -> Path:
    """``report.json`` -> ``report.timing.json``."""
    report_path = Path(report_path)
    return report_path.with_name(f"{report_path.stem}.timing.json")


@dataclass
class ExportOptions:
    float_format: str = "%.17g"
    write_timing: bool = True


class ExportService:
    """
    Service for writing models, traces, reports and predictions.

    Floats are written with 17 significant digits so a reload reproduces them exactly.
    """

    def __init__(self, options: Optional[ExportOptions] = None):
        self.options = options or ExportOptions()

    def write_model(self, model: TrainedModel, path: Path) -> Result[Path]:
        result = write_json(path, model.to_dict())
        if result.is_success():
            logger.info(f"Model written to {path}")
        return result

    def write_trace(self, report: FitReport, path: Path) -> Result[Path]:
        """One line per inner iteration: k, macro iteration, node, step kind, E after BN, E after LN."""
        lines = [TRACE_HEADER, *report.trace_lines()]
        return write_file_text(path, "\n".join(lines) + "\n")

    def write_report(self, report: RunReport, path: Path) -> Result[Path]:
        """
        Write the deterministic report and, when enabled, its timing sidecar.

        Args:
            report: Report to write.
            path: Destination of the report JSON.

        Returns:
            Result containing the report path.
        """
        written = write_json(path, report.to_dict())
        if written.is_failure() or not self.options.write_timing:
            return written
        return write_json(timing_path_for(path), report.timing_dict()).map(lambda _: Path(path))

    def write_predictions(
        self,
        predictions: np.ndarray,
        path: Optional[Path],
        column: str = "prediction",
    ) -> Result[str]:
        """
        Write one prediction per input row.

        Args:
            predictions: Values in original target units.
            path: Destination CSV; None returns the text without writing it.
            column: Header of the single output column.

        Returns:
            Result containing the CSV text.
        """
        frame = pd.DataFrame({column: np.asarray(predictions, dtype=float).reshape(-1)})
        text = frame.to_csv(index=False, float_format=self.options.float_format, lineterminator="\n")
        if path is None:
            return Success(text)
        return write_file_text(path, text).map(lambda _: text)

    def write_dataset(self, dataset: Dataset, path: Path) -> Result[Path]:
        """Write features, then the response, then cluster labels when present."""
        frame = pd.DataFrame(dataset.X, columns=list(dataset.feature_names))
        frame[dataset.target_name] = dataset.y
        if dataset.has_labels:
            frame[LABEL_COLUMN] = dataset.labels.astype(int)
        text = frame.to_csv(index=False, float_format=self.options.float_format, lineterminator="\n")
        return write_file_text(path, text)

    def write_fit_artifacts(self, model: TrainedModel, report: FitReport, path: Path) -> Result[Path]:
        """Model JSON at ``path`` and its trace beside it."""
        return combine_results([
            self.write_model(model, path),
            self.write_trace(report, trace_path_for(path)),
        ]).map(lambda _: Path(path))
