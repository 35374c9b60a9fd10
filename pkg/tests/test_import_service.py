import numpy as np
import pytest

from core.error_types import ConfigError, FileNotFoundError, ParseError, ValidationError
from models.settings import TrainConfig
from services.import_service import ImportOptions, ImportService, load_csv


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def importer():
    return ImportService()


class TestReadCsv:
    def test_small_file(self, tmp_path):
        path = write(tmp_path, "small.csv", "a,b,y\n1,2,3\n4,5,6\n7,8.5,9\n")
        dataset = load_csv(path).unwrap()
        assert dataset.X.shape == (3, 2)
        assert dataset.feature_names == ("a", "b")
        assert dataset.target_name == "y"
        np.testing.assert_array_equal(dataset.y, [3.0, 6.0, 9.0])
        assert not dataset.has_labels

    def test_non_numeric_cell(self, importer, tmp_path):
        path = write(tmp_path, "bad.csv", "a,b,y\n1,2,3\n4,oops,6\n")
        error = importer.load_csv(path).get_error()
        assert isinstance(error, ParseError)
        assert error.row == 3
        assert error.column == "b"
        assert "oops" in error.message

    def test_short_row(self, importer, tmp_path):
        path = write(tmp_path, "short.csv", "a,b,y\n1,2,3\n4,5\n")
        error = importer.load_csv(path).get_error()
        assert isinstance(error, ParseError)
        assert error.row == 3

    def test_long_row(self, importer, tmp_path):
        path = write(tmp_path, "long.csv", "a,b,y\n1,2,3\n4,5,6,7\n")
        assert isinstance(importer.load_csv(path).get_error(), ParseError)

    def test_header_only(self, importer, tmp_path):
        path = write(tmp_path, "empty.csv", "a,b,y\n")
        error = importer.load_csv(path).get_error()
        assert isinstance(error, ValidationError)
        assert "no data rows" in error.message

    def test_empty_file(self, importer, tmp_path):
        assert isinstance(importer.load_csv(write(tmp_path, "blank.csv", "")).get_error(), ParseError)

    def test_missing_file(self, importer, tmp_path):
        path = tmp_path / "nowhere.csv"
        error = importer.load_csv(path).get_error()
        assert isinstance(error, FileNotFoundError)
        assert str(path) in error.message

    def test_single_column(self, importer, tmp_path):
        assert importer.load_csv(write(tmp_path, "one.csv", "y\n1\n2\n")).is_failure()

    def test_infinite_value_rejected(self, importer, tmp_path):
        path = write(tmp_path, "inf.csv", "a,y\ninf,1\n2,3\n")
        assert isinstance(importer.load_csv(path).get_error(), ParseError)

    def test_label_column_split_off(self, importer, tmp_path):
        path = write(tmp_path, "labelled.csv", "a,b,y,cluster_label\n1,2,3,0\n4,5,6,2\n")
        dataset = importer.load_csv(path).unwrap()
        assert dataset.feature_names == ("a", "b")
        np.testing.assert_array_equal(dataset.labels, [0, 2])

    def test_other_delimiter(self, tmp_path):
        path = write(tmp_path, "semi.csv", "a;y\n1;2\n3;4\n")
        dataset = ImportService(ImportOptions(delimiter=";")).load_csv(path).unwrap()
        np.testing.assert_array_equal(dataset.X[:, 0], [1.0, 3.0])


class TestLoadFeatures:
    def test_features_only(self, importer, tmp_path):
        path = write(tmp_path, "x.csv", "a,b\n1,2\n3,4\n")
        np.testing.assert_array_equal(importer.load_features(path, ("a", "b")).unwrap(), [[1, 2], [3, 4]])

    def test_trailing_response_ignored(self, importer, tmp_path):
        path = write(tmp_path, "xy.csv", "a,b,y\n1,2,9\n3,4,9\n")
        assert importer.load_features(path, ("a", "b")).unwrap().shape == (2, 2)

    def test_reordered_by_name(self, importer, tmp_path):
        path = write(tmp_path, "swapped.csv", "b,a\n1,2\n3,4\n")
        np.testing.assert_array_equal(importer.load_features(path, ("a", "b")).unwrap(), [[2, 1], [4, 3]])

    def test_wrong_width(self, importer, tmp_path):
        path = write(tmp_path, "wide.csv", "a,b,c,d\n1,2,3,4\n")
        error = importer.load_features(path, ("a", "b")).get_error()
        assert isinstance(error, ValidationError)
        assert "expects 2 features" in error.message

    def test_extra_column_must_not_replace_a_feature(self, importer, tmp_path):
        path = write(tmp_path, "other.csv", "a,b,d,e\n1,2,3,4\n")
        error = importer.load_features(path, ("a", "b", "c")).get_error()
        assert isinstance(error, ValidationError)
        assert "['c']" in error.message


class TestLoadConfig:
    def test_overrides_defaults(self, importer, tmp_path):
        path = write(tmp_path, "train.cfg", "# depth three\ndepth = 3\nmu = 2.0\n")
        config = importer.load_config(path).unwrap()
        assert config.depth == 3
        assert config.mu == 2.0
        assert config.eps1_0 == TrainConfig().eps1_0

    def test_bad_line_reports_position(self, importer, tmp_path):
        path = write(tmp_path, "bad.cfg", "depth = 2\nmu two\n")
        error = importer.load_config(path).get_error()
        assert isinstance(error, ConfigError)
        assert error.line_number == 2
        assert "bad.cfg:2" in error.message


class TestLoadModel:
    def test_requires_json_suffix(self, importer, tmp_path):
        path = write(tmp_path, "model.txt", "{}")
        assert isinstance(importer.load_model(path).get_error(), ValidationError)

    def test_malformed_model(self, importer, tmp_path):
        path = write(tmp_path, "model.json", '{"depth": 2}')
        assert importer.load_model(path).is_failure()

    def test_invalid_json(self, importer, tmp_path):
        assert importer.load_model(write(tmp_path, "broken.json", "{")).is_failure()
