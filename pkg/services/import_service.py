"""
Import Service

Reads everything the trainer consumes from disk:
- CSV datasets (header row, last column is the response)
- Model JSON artifacts
- Flat key = value training configurations
- Run reports written by earlier experiments
"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, List
import logging
import re

import numpy as np
import pandas as pd

from core.error_types import (
    Result,
    Success,
    Failure,
    ParseError,
    SerializationError,
    ValidationError,
    try_execute,
)
from models.dataset import Dataset
from models.report import RunReport
from models.settings import TrainConfig
from models.tree import TrainedModel
from utils.file_ops import read_file_text, read_json
from utils.validators import validate_file_path, validate_feature_columns

logger = logging.getLogger(__name__)

LABEL_COLUMN = "cluster_label"

_LINE_PATTERN = re.compile(r"line (\d+)")


@dataclass(frozen=True)
class CsvTable:
    """Numeric contents of a CSV file, header kept apart from values."""

    path: Path
    columns: List[str]
    values: np.ndarray
    labels: Optional[np.ndarray] = None

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass
class ImportOptions:
    """Options for reading tabular files."""

    delimiter: str = ","
    encoding: str = "utf-8"
    label_column: str = LABEL_COLUMN


class ImportService:
    """
    Service for reading datasets, models and configurations.

    Every method returns a Result; failures name the offending file and, for
    tabular data, the row and column of the first bad cell.
    """

    def __init__(self, options: Optional[ImportOptions] = None):
        self.options = options or ImportOptions()

    def read_table(self, path: Path) -> Result[CsvTable]:
        """
        Parse a CSV file into a numeric matrix.

        Args:
            path: CSV file with one header row.

        Returns:
            Result containing the parsed table; row numbers in errors are file line numbers.
        """
        checked = validate_file_path(path, must_exist=True)
        if checked.is_failure():
            return Failure(checked.get_error())
        path = checked.unwrap()

        try:
            frame = pd.read_csv(
                path,
                sep=self.options.delimiter,
                encoding=self.options.encoding,
                dtype=str,
                keep_default_na=False,
                skipinitialspace=True,
            )
        except pd.errors.EmptyDataError:
            return Failure(ParseError(message=f"{path} is empty, expected a header row", path=path))
        except pd.errors.ParserError as exception:
            match = _LINE_PATTERN.search(str(exception))
            row = int(match.group(1)) if match else None
            return Failure(ParseError(
                message=f"Ragged row in {path}" + (f" at line {row}" if row else "") + f": {exception}",
                path=path,
                row=row,
            ))
        except UnicodeDecodeError as exception:
            return Failure(ParseError(message=f"{path} is not {self.options.encoding} text: {exception}", path=path))
        except OSError as exception:
            return Failure(ParseError(message=f"Cannot read {path}: {exception}", path=path))

        columns = [str(column).strip() for column in frame.columns]
        frame.columns = columns
        if frame.empty:
            return Failure(ValidationError(
                message=f"{path} has a header but no data rows",
                field_name="dataset",
                invalid_value=str(path),
            ))

        labels = None
        if self.options.label_column in columns:
            parsed = self._numeric_column(frame[self.options.label_column], self.options.label_column, path)
            if parsed.is_failure():
                return Failure(parsed.get_error())
            labels = parsed.unwrap().astype(int)
            frame = frame.drop(columns=[self.options.label_column])
            columns = [column for column in columns if column != self.options.label_column]

        values = np.empty((len(frame), len(columns)))
        for j, column in enumerate(columns):
            parsed = self._numeric_column(frame.iloc[:, j], column, path)
            if parsed.is_failure():
                return Failure(parsed.get_error())
            values[:, j] = parsed.unwrap()

        logger.info(f"Loaded {path.name}: {values.shape[0]} rows, columns {', '.join(columns)}")
        return Success(CsvTable(path=path, columns=columns, values=values, labels=labels))

    def load_csv(self, path: Path) -> Result[Dataset]:
        """Load a regression dataset whose last non-label column is the response."""
        table = self.read_table(path)
        if table.is_failure():
            return Failure(table.get_error())
        table = table.unwrap()
        if len(table.columns) < 2:
            return Failure(ValidationError(
                message=f"{table.path} needs at least one feature column and a response column",
                field_name="columns",
                invalid_value=str(len(table.columns)),
            ))
        return try_execute(
            lambda: Dataset(
                X=table.values[:, :-1],
                y=table.values[:, -1],
                feature_names=tuple(table.columns[:-1]),
                target_name=table.columns[-1],
                labels=table.labels,
            ),
            ValidationError,
            f"Invalid dataset in {table.path}",
        )

    def load_features(self, path: Path, feature_names: tuple[str, ...]) -> Result[np.ndarray]:
        """
        Load the feature matrix a model will score.

        Columns are matched by header name. A file may carry one column beyond the
        model's features, the response, which is then ignored.

        Args:
            path: CSV file.
            feature_names: Feature names stored with the model.

        Returns:
            Result containing an (N, p) matrix in the model's feature order.
        """
        table = self.read_table(path)
        if table.is_failure():
            return Failure(table.get_error())
        table = table.unwrap()

        order = validate_feature_columns(table.columns, feature_names)
        if order.is_failure():
            return Failure(order.get_error().with_context(path=str(path)))
        return Success(table.values[:, order.unwrap()])

    def load_model(self, path: Path) -> Result[TrainedModel]:
        """Read a model artifact written by the export service."""
        checked = validate_file_path(path, must_exist=True, allowed_extensions=[".json"])
        return checked.flat_map(read_json).flat_map(
            lambda data: try_execute(
                lambda: TrainedModel.from_dict(data),
                SerializationError,
                f"Malformed model file {path}",
                data_type="model",
            )
        )

    def load_config(self, path: Path) -> Result[TrainConfig]:
        """Read and validate a flat key = value training configuration."""
        return (
            validate_file_path(path, must_exist=True)
            .flat_map(read_file_text)
            .flat_map(lambda text: TrainConfig.from_config_text(text, str(path)))
            .flat_map(lambda config: config.validate())
        )

    def load_report(self, path: Path) -> Result[RunReport]:
        return validate_file_path(path, must_exist=True).flat_map(read_json).flat_map(
            lambda data: try_execute(
                lambda: RunReport.from_dict(data),
                SerializationError,
                f"Malformed report file {path}",
                data_type="report",
            )
        )

    @staticmethod
    def _numeric_column(column: pd.Series, name: str, path: Path) -> Result[np.ndarray]:
        missing = column.isna().to_numpy()
        if missing.any():
            row = int(np.flatnonzero(missing)[0])
            return Failure(ParseError(
                message=f"Ragged row in {path} at line {row + 2}: no value for column '{name}'",
                path=path,
                row=row + 2,
                column=name,
            ))
        # object-to-float conversion uses Python float, which reads %.17g text back bit-exact
        stripped = column.str.strip()
        try:
            parsed = stripped.to_numpy(dtype=object).astype(float)
            bad = ~np.isfinite(parsed)
        except ValueError:
            parsed = None
            bad = np.array([not _is_finite_number(cell) for cell in stripped])
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            return Failure(ParseError(
                message=(
                    f"Non-numeric cell {column.iloc[row]!r} in {path} "
                    f"at line {row + 2}, column '{name}'"
                ),
                path=path,
                row=row + 2,
                column=name,
            ))
        return Success(parsed)


def _is_finite_number(text: str) -> bool:
    try:
        return bool(np.isfinite(float(text)))
    except ValueError:
        return False


def load_csv(path: Path) -> Result[Dataset]:
    """Load a dataset with default CSV options."""
    return ImportService().load_csv(path)
