from __future__ import annotations
from pathlib import Path
from typing import Any
import hashlib
import json
import os
import logging

from core.error_types import (
    Result,
    Success,
    Failure,
    FileSystemError,
    SerializationError,
    FileNotFoundError as AppFileNotFoundError,
    FilePermissionError as AppFilePermissionError,
)

logger = logging.getLogger(__name__)


def calculate_file_hash(
    file_path: Path,
    algorithm: str = "sha256",
    chunk_size: int = 65536,
) -> Result[str]:
    """
    Hash a data file so reports can name exactly what they were computed from.

    Args:
        file_path: Path to the file.
        algorithm: Any algorithm accepted by hashlib.new.
        chunk_size: Bytes read per chunk.

    Returns:
        Result containing the hex digest.
    """
    file_path = Path(file_path)
    try:
        hasher = hashlib.new(algorithm)
        with open(file_path, "rb") as file:
            for chunk in iter(lambda: file.read(chunk_size), b""):
                hasher.update(chunk)
        return Success(hasher.hexdigest())
    except OSError as exception:
        return Failure(_os_failure(exception, file_path, "hash"))


def ensure_directory_exists(directory_path: Path) -> Result[Path]:
    """Create ``directory_path`` and its parents when missing."""
    directory_path = Path(directory_path)
    try:
        directory_path.mkdir(parents=True, exist_ok=True)
        return Success(directory_path)
    except OSError as exception:
        return Failure(_os_failure(exception, directory_path, "mkdir"))


def read_file_text(file_path: Path, encoding: str = "utf-8") -> Result[str]:
    """
    Read a whole text file.

    Args:
        file_path: File to read.
        encoding: Text encoding.

    Returns:
        Result containing the file contents.
    """
    file_path = Path(file_path)
    try:
        return Success(file_path.read_text(encoding=encoding))
    except UnicodeDecodeError as exception:
        return Failure(FileSystemError(
            message=f"{file_path} is not valid {encoding} text: {exception}",
            path=file_path,
            operation="read",
        ))
    except OSError as exception:
        return Failure(_os_failure(exception, file_path, "read"))


def write_file_text(file_path: Path, content: str, encoding: str = "utf-8") -> Result[Path]:
    """
    Write text through a sibling temporary file so readers never see a partial file.

    Args:
        file_path: Destination file.
        content: Text to write.
        encoding: Text encoding.

    Returns:
        Result containing the destination path.
    """
    file_path = Path(file_path)
    parent = ensure_directory_exists(file_path.parent if str(file_path.parent) else Path("."))
    if parent.is_failure():
        return Failure(parent.get_error())

    temporary = file_path.with_name(f".{file_path.name}.tmp")
    try:
        with open(temporary, "w", encoding=encoding, newline="\n") as handle:
            handle.write(content)
        os.replace(temporary, file_path)
        logger.debug(f"Wrote {file_path}")
        return Success(file_path)
    except OSError as exception:
        if temporary.exists():
            temporary.unlink()
        return Failure(_os_failure(exception, file_path, "write"))


def write_json(file_path: Path, data: Any) -> Result[Path]:
    """Write ``data`` as indented JSON with sorted keys."""
    try:
        text = json.dumps(data, indent=2, sort_keys=True, allow_nan=True)
    except (TypeError, ValueError) as exception:
        return Failure(SerializationError(
            message=f"Cannot serialize {type(data).__name__} for {file_path}: {exception}",
            data_type=type(data).__name__,
        ))
    return write_file_text(file_path, text + "\n")


def read_json(file_path: Path) -> Result[Any]:
    def parse(text: str) -> Result[Any]:
        try:
            return Success(json.loads(text))
        except json.JSONDecodeError as exception:
            return Failure(SerializationError(
                message=f"{file_path} is not valid JSON: {exception}",
                data_type="json",
            ))

    return read_file_text(file_path).flat_map(parse)


def _os_failure(exception: OSError, path: Path, operation: str) -> FileSystemError:
    if isinstance(exception, PermissionError):
        return AppFilePermissionError(
            message=f"Permission denied: {path}",
            path=path,
            operation=operation,
        )
    if isinstance(exception, (FileNotFoundError, IsADirectoryError)):
        return AppFileNotFoundError(
            message=f"File not found: {path}",
            path=path,
            operation=operation,
        )
    return FileSystemError(
        message=f"Failed to {operation} {path}: {exception}",
        path=path,
        operation=operation,
    )
