from __future__ import annotations
from pathlib import Path
from typing import Optional, Sequence

from core.error_types import (
    Result,
    Success,
    Failure,
    ValidationError,
    FileNotFoundError as AppFileNotFoundError,
)


def validate_file_path(
    file_path: str | Path,
    must_exist: bool = True,
    allowed_extensions: Optional[list[str]] = None,
) -> Result[Path]:
    """
    Validate an input or output file path.

    Args:
        file_path: Path to validate.
        must_exist: Whether the file must already exist.
        allowed_extensions: Allowed suffixes such as ['.csv'].

    Returns:
        Result containing the Path; a missing file fails with a file-not-found error naming it.
    """
    path = Path(file_path)

    if must_exist and not path.exists():
        return Failure(AppFileNotFoundError(
            message=f"File does not exist: {file_path}",
            path=path,
            operation="open",
        ))

    if must_exist and not path.is_file():
        return Failure(ValidationError(
            message=f"Path is not a file: {file_path}",
            field_name="file_path",
            invalid_value=str(file_path),
        ))

    if allowed_extensions:
        normalized_extensions = [ext.lower() if ext.startswith('.') else f'.{ext.lower()}'
                                 for ext in allowed_extensions]
        if path.suffix.lower() not in normalized_extensions:
            return Failure(ValidationError(
                message=f"Invalid file extension for {file_path}. Allowed: {', '.join(normalized_extensions)}",
                field_name="file_path",
                invalid_value=path.suffix,
            ))

    return Success(path)


def validate_positive_int(value: int, field_name: str, minimum: int = 1) -> Result[int]:
    """Check that ``value`` is an integer no smaller than ``minimum``."""
    if isinstance(value, bool) or not isinstance(value, int):
        return Failure(ValidationError(
            message=f"{field_name} must be an integer",
            field_name=field_name,
            invalid_value=str(value),
        ))
    if value < minimum:
        return Failure(ValidationError(
            message=f"{field_name} must be at least {minimum}, got {value}",
            field_name=field_name,
            invalid_value=str(value),
        ))
    return Success(value)


def validate_feature_columns(
    available: Sequence[str],
    expected: Sequence[str],
) -> Result[list[int]]:
    """
    Locate the model's feature columns in a data file header.

    The header must name every model feature. It may carry one further column, the
    response, which is not selected.

    Args:
        available: Column names of the file.
        expected: Feature names stored with the model.

    Returns:
        Result containing the column positions of ``expected`` inside ``available``.
    """
    available = list(available)
    if len(available) not in (len(expected), len(expected) + 1):
        return Failure(ValidationError(
            message=f"Model expects {len(expected)} features, file provides {len(available)} columns",
            field_name="features",
            invalid_value=str(len(available)),
        ))
    missing = [name for name in expected if name not in available]
    if missing:
        return Failure(ValidationError(
            message=f"File header {available} lacks model features {missing}",
            field_name="features",
            invalid_value=", ".join(missing),
        ))
    return Success([available.index(name) for name in expected])
