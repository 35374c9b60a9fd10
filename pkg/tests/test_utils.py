import hashlib

import pytest

from core.error_types import FileNotFoundError, SerializationError, ValidationError
from utils.file_ops import (
    calculate_file_hash,
    ensure_directory_exists,
    read_file_text,
    read_json,
    write_file_text,
    write_json,
)
from utils.validators import validate_feature_columns, validate_file_path, validate_positive_int


class TestFileOps:
    def test_hash_matches_hashlib(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_bytes(b"a,y\n1,2\n" * 1000)
        digest = calculate_file_hash(path, chunk_size=64).unwrap()
        assert digest == hashlib.sha256(path.read_bytes()).hexdigest()

    def test_hash_missing_file(self, tmp_path):
        assert isinstance(calculate_file_hash(tmp_path / "none").get_error(), FileNotFoundError)

    def test_write_creates_parents_and_leaves_no_temp(self, tmp_path):
        path = tmp_path / "a" / "b" / "out.txt"
        write_file_text(path, "hello\n").unwrap()
        assert read_file_text(path).unwrap() == "hello\n"
        assert sorted(p.name for p in path.parent.iterdir()) == ["out.txt"]

    def test_overwrite(self, tmp_path):
        path = tmp_path / "out.txt"
        write_file_text(path, "first").unwrap()
        write_file_text(path, "second").unwrap()
        assert path.read_text() == "second"

    def test_json_sorted_and_readable(self, tmp_path):
        path = tmp_path / "x.json"
        write_json(path, {"b": 1, "a": [1.5, None]}).unwrap()
        assert path.read_text().index('"a"') < path.read_text().index('"b"')
        assert read_json(path).unwrap() == {"a": [1.5, None], "b": 1}

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{not json")
        assert isinstance(read_json(path).get_error(), SerializationError)

    def test_ensure_directory(self, tmp_path):
        target = tmp_path / "deep" / "dir"
        assert ensure_directory_exists(target).unwrap() == target
        assert target.is_dir()


class TestValidators:
    def test_missing_path(self, tmp_path):
        error = validate_file_path(tmp_path / "x.csv").get_error()
        assert isinstance(error, FileNotFoundError)
        assert "File does not exist" in error.message

    def test_directory_is_not_a_file(self, tmp_path):
        assert isinstance(validate_file_path(tmp_path).get_error(), ValidationError)

    def test_extension(self, tmp_path):
        path = tmp_path / "m.JSON"
        path.write_text("{}")
        assert validate_file_path(path, allowed_extensions=["json"]).is_success()
        assert validate_file_path(path, allowed_extensions=[".csv"]).is_failure()

    def test_output_path_need_not_exist(self, tmp_path):
        assert validate_file_path(tmp_path / "new.json", must_exist=False).is_success()

    @pytest.mark.parametrize("value, minimum, ok", [(1, 1, True), (0, 1, False), (2, 2, True), (True, 1, False), (2.0, 1, False)])
    def test_positive_int(self, value, minimum, ok):
        assert validate_positive_int(value, "n", minimum).is_success() is ok

    def test_columns_by_name(self):
        assert validate_feature_columns(["b", "a"], ("a", "b")).unwrap() == [1, 0]

    def test_unnamed_columns_rejected(self):
        error = validate_feature_columns(["u", "v"], ("a", "b")).get_error()
        assert error.field_name == "features"
        assert "['a', 'b']" in error.message

    def test_response_column_skipped(self):
        assert validate_feature_columns(["y", "b", "a"], ("a", "b")).unwrap() == [2, 1]

    def test_column_count(self):
        assert validate_feature_columns(["a"], ("a", "b")).is_failure()
