import logging

import pytest

from core.error_types import (
    AppException,
    ConfigError,
    ErrorCategory,
    ErrorSeverity,
    Failure,
    LineSearchError,
    ParseError,
    SingularSystemError,
    Success,
    ValidationError,
    combine_results,
    raise_invalid,
    try_execute,
)


class TestErrors:
    def test_numeric_errors_have_numeric_category(self):
        assert SingularSystemError(message="x").category is ErrorCategory.NUMERIC
        assert LineSearchError(message="x").category is ErrorCategory.NUMERIC

    def test_input_errors_have_input_category(self):
        assert ValidationError(message="x").category is ErrorCategory.INPUT
        assert ParseError(message="x", row=3).category is ErrorCategory.INPUT
        assert ConfigError(message="x", line_number=2).category is ErrorCategory.INPUT

    def test_with_context_appends(self):
        error = ValidationError(message="bad depth", field_name="depth").with_context(value=0)
        assert error.message == "bad depth (value=0)"
        assert error.field_name == "depth"

    def test_log_uses_severity(self, caplog):
        logger = logging.getLogger("tests.errors")
        with caplog.at_level(logging.WARNING, logger="tests.errors"):
            ValidationError(message="careful", severity=ErrorSeverity.WARNING).log(logger)
        assert caplog.records[0].levelno == logging.WARNING
        assert "[VALIDATION_ERR] careful" in caplog.text

    def test_exception_carries_error(self):
        with pytest.raises(AppException) as raised:
            raise_invalid("depth must be positive", "depth", 0)
        assert raised.value.error.invalid_value == "0"
        assert "VALIDATION_ERR" in str(raised.value)


class TestResult:
    def test_success_chain(self):
        result = Success(2).map(lambda v: v * 3).flat_map(lambda v: Success(v + 1))
        assert result.unwrap() == 7

    def test_failure_short_circuits(self):
        seen = []
        result = Failure(ValidationError(message="no")).map(lambda v: v * 3).on_failure(seen.append)
        assert result.unwrap_or(-1) == -1
        assert seen[0].message == "no"

    def test_unwrap_failure_raises(self):
        with pytest.raises(AppException):
            Failure(ValidationError(message="no")).unwrap()

    def test_combine_results(self):
        assert combine_results([Success(1), Success(2)]).unwrap() == [1, 2]
        combined = combine_results([Success(1), Failure(ParseError(message="row")), Success(3)])
        assert combined.get_error().message == "row"

    def test_try_execute_wraps_exceptions(self):
        result = try_execute(lambda: 1 / 0, ValidationError, "division failed")
        assert result.is_failure()
        assert result.get_error().message.startswith("division failed")

    def test_try_execute_keeps_app_errors(self):
        def fail():
            raise_invalid("depth must be positive", "depth", 0)

        result = try_execute(fail, ParseError, "unused")
        assert isinstance(result.get_error(), ValidationError)
