from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum, auto
from typing import TypeVar, Generic, Callable, Optional
from pathlib import Path
import traceback
import logging

T = TypeVar("T")
U = TypeVar("U")


class ErrorSeverity(Enum):
    DEBUG = auto()
    INFO = auto()
    WARNING = auto()
    ERROR = auto()
    CRITICAL = auto()


class ErrorCategory(Enum):
    """Coarse grouping used to map errors onto process exit codes."""
    INPUT = auto()
    NUMERIC = auto()


@dataclass(frozen=True)
class AppError(ABC):
    """Base class for all errors raised or returned by the trainer."""

    message: str
    timestamp: datetime = field(default_factory=datetime.now, compare=False)
    severity: ErrorSeverity = ErrorSeverity.ERROR
    source_file: Optional[str] = None
    source_line: Optional[int] = None
    stack_trace: Optional[str] = None

    @abstractmethod
    def error_code(self) -> str:
        """Return unique error code for this error type."""

    @property
    def category(self) -> ErrorCategory:
        return ErrorCategory.INPUT

    def with_context(self, **kwargs) -> AppError:
        """Create a copy whose message carries extra context."""
        extra = ", ".join(f"{key}={value}" for key, value in kwargs.items())
        return _replace_message(self, f"{self.message} ({extra})")

    def log(self, logger: logging.Logger) -> None:
        """Log this error at its own severity."""
        log_methods = {
            ErrorSeverity.DEBUG: logger.debug,
            ErrorSeverity.INFO: logger.info,
            ErrorSeverity.WARNING: logger.warning,
            ErrorSeverity.ERROR: logger.error,
            ErrorSeverity.CRITICAL: logger.critical,
        }
        log_method = log_methods.get(self.severity, logger.error)
        log_message = f"[{self.error_code()}] {self.message}"
        if self.source_file:
            log_message += f" at {self.source_file}:{self.source_line}"
        log_method(log_message)


def _replace_message(error: AppError, message: str) -> AppError:
    from dataclasses import replace
    return replace(error, message=message)


@dataclass(frozen=True)
class ValidationError(AppError):
    """Invalid argument, shape or value handed to an operation."""

    field_name: Optional[str] = None
    invalid_value: Optional[str] = None

    def error_code(self) -> str:
        return "VALIDATION_ERR"


@dataclass(frozen=True)
class UnsupportedInputError(ValidationError):
    """Input is well formed but outside what an operation supports."""

    def error_code(self) -> str:
        return "UNSUPPORTED_ERR"


@dataclass(frozen=True)
class ConfigError(ValidationError):
    """Bad key or value in a training configuration file."""

    line_number: Optional[int] = None

    def error_code(self) -> str:
        return "CONFIG_ERR"


@dataclass(frozen=True)
class NumericError(AppError):
    """Failures of the numeric kernels."""

    def error_code(self) -> str:
        return "NUMERIC_ERR"

    @property
    def category(self) -> ErrorCategory:
        return ErrorCategory.NUMERIC


@dataclass(frozen=True)
class SingularSystemError(NumericError):
    """Normal equations are rank deficient and carry no ridge term."""

    rank: Optional[int] = None
    size: Optional[int] = None

    def error_code(self) -> str:
        return "SINGULAR_SYSTEM_ERR"


@dataclass(frozen=True)
class LineSearchError(NumericError):
    """Backtracking ran out of halvings without sufficient decrease."""

    halvings: Optional[int] = None

    def error_code(self) -> str:
        return "LINE_SEARCH_ERR"


@dataclass(frozen=True)
class DegenerateWeightsError(NumericError):
    """A class of a weighted logistic fit is empty so its weight is undefined."""

    n_left: Optional[int] = None
    n_right: Optional[int] = None

    def error_code(self) -> str:
        return "DEGENERATE_WEIGHTS_ERR"


@dataclass(frozen=True)
class FileSystemError(AppError):
    """Errors related to file system operations."""

    path: Optional[Path] = None
    operation: Optional[str] = None

    def error_code(self) -> str:
        return "FS_ERR"


@dataclass(frozen=True)
class FileNotFoundError(FileSystemError):
    """Error when file is not found."""

    def error_code(self) -> str:
        return "FS_NOT_FOUND_ERR"


@dataclass(frozen=True)
class FilePermissionError(FileSystemError):
    """Error when file permission denied."""

    def error_code(self) -> str:
        return "FS_PERMISSION_ERR"


@dataclass(frozen=True)
class ParseError(AppError):
    """Malformed cell or row in a tabular input file."""

    path: Optional[Path] = None
    row: Optional[int] = None
    column: Optional[str] = None

    def error_code(self) -> str:
        return "PARSE_ERR"


@dataclass(frozen=True)
class SerializationError(AppError):
    """Errors related to model or report (de)serialization."""

    data_type: Optional[str] = None

    def error_code(self) -> str:
        return "SERIALIZATION_ERR"


class AppException(Exception):
    """Exception carrying an AppError, raised by kernels that do not return Results."""

    def __init__(self, error: AppError):
        super().__init__(f"[{error.error_code()}] {error.message}")
        self.error = error


class Result(Generic[T], ABC):
    """Either a value or the AppError that prevented computing it."""

    @abstractmethod
    def is_success(self) -> bool:
        pass

    @abstractmethod
    def is_failure(self) -> bool:
        pass

    @abstractmethod
    def unwrap(self) -> T:
        """Get the value; a Failure raises AppException."""

    @abstractmethod
    def unwrap_or(self, default: T) -> T:
        pass

    @abstractmethod
    def map(self, transform: Callable[[T], U]) -> Result[U]:
        pass

    @abstractmethod
    def flat_map(self, transform: Callable[[T], Result[U]]) -> Result[U]:
        pass

    @abstractmethod
    def get_error(self) -> Optional[AppError]:
        pass

    @abstractmethod
    def on_failure(self, action: Callable[[AppError], None]) -> Result[T]:
        pass


@dataclass
class Success(Result[T]):
    value: T

    def is_success(self) -> bool:
        return True

    def is_failure(self) -> bool:
        return False

    def unwrap(self) -> T:
        return self.value

    def unwrap_or(self, default: T) -> T:
        return self.value

    def map(self, transform: Callable[[T], U]) -> Result[U]:
        return Success(transform(self.value))

    def flat_map(self, transform: Callable[[T], Result[U]]) -> Result[U]:
        return transform(self.value)

    def get_error(self) -> Optional[AppError]:
        return None

    def on_failure(self, action: Callable[[AppError], None]) -> Result[T]:
        return self


@dataclass
class Failure(Result[T]):
    error: AppError

    def is_success(self) -> bool:
        return False

    def is_failure(self) -> bool:
        return True

    def unwrap(self) -> T:
        raise AppException(self.error)

    def unwrap_or(self, default: T) -> T:
        return default

    def map(self, transform: Callable[[T], U]) -> Result[U]:
        return Failure(self.error)

    def flat_map(self, transform: Callable[[T], Result[U]]) -> Result[U]:
        return Failure(self.error)

    def get_error(self) -> Optional[AppError]:
        return self.error

    def on_failure(self, action: Callable[[AppError], None]) -> Result[T]:
        action(self.error)
        return self


def capture_exception(
    error_class: type[AppError],
    message: str,
    **extra_fields
) -> AppError:
    """Build an error of the given class from the exception being handled."""
    stack = traceback.format_exc()
    frames = traceback.extract_stack()
    frame = frames[-2] if len(frames) >= 2 else None

    return error_class(
        message=message,
        stack_trace=stack,
        source_file=frame.filename if frame else None,
        source_line=frame.lineno if frame else None,
        **extra_fields
    )


def try_execute(
    operation: Callable[[], T],
    error_class: type[AppError],
    error_message: str,
    **error_fields
) -> Result[T]:
    """Run an operation, turning AppException and other exceptions into a Failure."""
    try:
        return Success(operation())
    except AppException as exception:
        return Failure(exception.error)
    except Exception as exception:
        return Failure(capture_exception(
            error_class,
            f"{error_message}: {exception}",
            **error_fields
        ))


def raise_invalid(message: str, field_name: Optional[str] = None, value: object = None) -> None:
    """Raise an AppException wrapping a ValidationError."""
    raise AppException(ValidationError(
        message=message,
        field_name=field_name,
        invalid_value=None if value is None else str(value),
    ))


def combine_results(results: list[Result[T]]) -> Result[list[T]]:
    """
    Combine multiple results into a single result containing all values.
    Returns Failure with the first error encountered if any result failed.
    """
    values: list[T] = []
    for result in results:
        if result.is_failure():
            return Failure(result.get_error())
        values.append(result.unwrap())
    return Success(values)
