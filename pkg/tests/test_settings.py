import logging

import pytest

from core.error_types import ConfigError, ValidationError
from models.settings import InitStrategy, ThresholdDecay, TrainConfig


class TestDefaults:
    def test_regularization_defaults(self):
        lambda_omega, lambda_beta = TrainConfig(depth=2).resolved_lambdas(3)
        assert lambda_omega == pytest.approx(2.0 / 9.0)
        assert lambda_beta == pytest.approx(1.0 / 6.0)

    def test_explicit_lambdas_kept(self):
        assert TrainConfig(lambda_omega=0.0, lambda_beta=0.5).resolved_lambdas(3) == (0.0, 0.5)

    def test_k0_default(self):
        assert TrainConfig(depth=2, max_macro_iters=10, max_idle_sweeps=5).resolved_k0() == 60
        assert TrainConfig(k0=-1).resolved_k0() == -1

    def test_init_ridge_default(self):
        assert TrainConfig().resolved_init_ridge(200) == pytest.approx(0.005)

    def test_overrides_skip_none(self):
        config = TrainConfig().with_overrides(depth=3, seed=None)
        assert config.depth == 3
        assert config.seed == 0


class TestValidate:
    @pytest.mark.parametrize("changes", [
        {"depth": 0},
        {"mu": 0.0},
        {"zeta": 1.0},
        {"eps3_0": 1.5},
        {"theta_omega": 1.0},
        {"k0": -2},
        {"r": 0},
        {"armijo_delta": 1.0},
    ])
    def test_out_of_range(self, changes):
        error = TrainConfig(**changes).validate().get_error()
        assert isinstance(error, ValidationError)
        assert error.field_name == next(iter(changes))

    def test_empty_moderate_band_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert TrainConfig(eps1_0=0.1, eps2_0=0.1).validate().is_success()
        assert "moderate imbalance band is empty" in caplog.text


class TestConfigText:
    def test_round_trip(self):
        config = TrainConfig(
            depth=3, lambda_omega=0.015625, k0=-1, reassign=False,
            threshold_decay=ThresholdDecay.INNER, init_strategy=InitStrategy.RANDOM,
        )
        assert TrainConfig.from_config_text(config.to_config_text()).unwrap() == config

    def test_comments_and_blank_lines(self):
        text = "# trainer\n\ndepth = 4  # deeper\nsubtree_proxy = off\n"
        config = TrainConfig.from_config_text(text).unwrap()
        assert config.depth == 4
        assert config.subtree_proxy is False

    def test_optional_value_reset(self):
        assert TrainConfig.from_config_text("lambda_beta = null\n").unwrap().lambda_beta is None

    @pytest.mark.parametrize("text, line, fragment", [
        ("depth = 2\nmu\n", 2, "expected 'key = value'"),
        ("\n\nalpha = 1\n", 3, "unknown config key"),
        ("depth = two\n", 1, "cannot read"),
        ("reassign = maybe\n", 1, "cannot read"),
        ("zeta = null\n", 1, "cannot be null"),
    ])
    def test_errors_name_the_line(self, text, line, fragment):
        error = TrainConfig.from_config_text(text, "run.cfg").get_error()
        assert isinstance(error, ConfigError)
        assert error.line_number == line
        assert error.message.startswith(f"run.cfg:{line}:")
        assert fragment in error.message

    def test_unknown_enum_member(self):
        assert isinstance(TrainConfig.from_config_text("init_strategy = kmeans\n").get_error(), ConfigError)

    def test_range_checked_after_parse(self):
        assert TrainConfig.from_config_text("depth = 0\n").get_error().field_name == "depth"


class TestDictForm:
    def test_enums_as_names(self):
        data = TrainConfig().to_dict()
        assert data["init_strategy"] == "cluster"
        assert data["threshold_decay"] == "block"

    def test_from_dict_fills_defaults(self):
        config = TrainConfig.from_dict({"depth": 5, "threshold_decay": "inner"})
        assert config.depth == 5
        assert config.threshold_decay is ThresholdDecay.INNER
        assert config.r == 10
