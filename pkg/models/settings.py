from __future__ import annotations
from dataclasses import dataclass, fields, replace
from enum import Enum, auto
from typing import Optional, Dict, Any, Tuple
import logging

from core.error_types import Result, Success, Failure, ValidationError, ConfigError

logger = logging.getLogger(__name__)


class InitStrategy(Enum):
    """How the starting parameters of a run are produced."""
    CLUSTER = auto()
    RANDOM = auto()


class ThresholdDecay(Enum):
    """When the imbalance thresholds shrink by zeta.

    BLOCK shrinks them every 2^(D-1) inner iterations, the spacing threshold_bound_kbar counts.
    """
    BLOCK = auto()
    MACRO = auto()
    INNER = auto()


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the decomposition trainer and of its initialization."""

    depth: int = 2
    mu: float = 1.0

    # None selects 2/(p*|branch nodes|) and 2/(p*|leaves|)
    lambda_omega: Optional[float] = None
    lambda_beta: Optional[float] = None

    eps1_0: float = 0.1
    eps2_0: float = 0.3
    eps3_0: float = 0.4
    zeta: float = 0.8
    threshold_decay: ThresholdDecay = ThresholdDecay.BLOCK
    reassign: bool = True

    theta_omega: float = 0.9
    theta_beta: float = 0.9
    upsilon: float = 0.9
    k0: Optional[int] = None
    tau: float = 1e-6

    max_macro_iters: int = 10
    termination_tol: float = 1e-7
    # sweeps in which every gradient gate stayed closed; they do not count against max_macro_iters
    max_idle_sweeps: int = 50

    armijo_a: float = 1.0
    armijo_gamma: float = 1e-4
    armijo_delta: float = 0.5

    seed: int = 0
    subtree_proxy: bool = True

    r: int = 10
    init_strategy: InitStrategy = InitStrategy.CLUSTER
    init_ridge: Optional[float] = None

    balanced_max_iter: int = 30
    wlr_ridge: float = 1e-8
    wlr_max_iter: int = 50
    plain_grad_tol: float = 1e-8

    def resolved_lambdas(self, n_features: int) -> Tuple[float, float]:
        n_leaf = 1 << self.depth
        lambda_omega = self.lambda_omega
        lambda_beta = self.lambda_beta
        if lambda_omega is None:
            lambda_omega = 2.0 / (n_features * (n_leaf - 1))
        if lambda_beta is None:
            lambda_beta = 2.0 / (n_features * n_leaf)
        return float(lambda_omega), float(lambda_beta)

    def resolved_k0(self) -> int:
        """Defaults past the last inner iteration so the acceptance conditions stay off."""
        if self.k0 is None:
            return (self.max_macro_iters + self.max_idle_sweeps) * (1 << self.depth)
        return self.k0

    def resolved_init_ridge(self, n_samples: int) -> float:
        if self.init_ridge is None:
            return 1.0 / max(n_samples, 1)
        return self.init_ridge

    def with_overrides(self, **changes: Any) -> TrainConfig:
        changes = {key: value for key, value in changes.items() if value is not None}
        return replace(self, **changes)

    def validate(self) -> Result[TrainConfig]:
        """Check every range; returns the config itself on success."""
        checks = [
            ("depth", self.depth >= 1, "must be >= 1"),
            ("mu", self.mu > 0, "must be > 0"),
            ("lambda_omega", self.lambda_omega is None or self.lambda_omega >= 0, "must be >= 0"),
            ("lambda_beta", self.lambda_beta is None or self.lambda_beta >= 0, "must be >= 0"),
            ("eps1_0", 0 < self.eps1_0 < 1, "must lie in (0, 1)"),
            ("eps2_0", 0 < self.eps2_0 < 1, "must lie in (0, 1)"),
            ("eps3_0", 0 < self.eps3_0 < 1, "must lie in (0, 1)"),
            ("zeta", 0 < self.zeta < 1, "must lie in (0, 1)"),
            ("theta_omega", 0 <= self.theta_omega < 1, "must lie in [0, 1)"),
            ("theta_beta", 0 <= self.theta_beta < 1, "must lie in [0, 1)"),
            ("upsilon", 0 <= self.upsilon < 1, "must lie in [0, 1)"),
            ("k0", self.k0 is None or self.k0 >= -1, "must be >= -1"),
            ("tau", self.tau > 0, "must be > 0"),
            ("max_macro_iters", self.max_macro_iters >= 0, "must be >= 0"),
            ("termination_tol", self.termination_tol >= 0, "must be >= 0"),
            ("max_idle_sweeps", self.max_idle_sweeps >= 0, "must be >= 0"),
            ("armijo_a", self.armijo_a > 0, "must be > 0"),
            ("armijo_gamma", 0 < self.armijo_gamma < 1, "must lie in (0, 1)"),
            ("armijo_delta", 0 < self.armijo_delta < 1, "must lie in (0, 1)"),
            ("r", self.r >= 1, "must be >= 1"),
            ("init_ridge", self.init_ridge is None or self.init_ridge >= 0, "must be >= 0"),
            ("balanced_max_iter", self.balanced_max_iter >= 1, "must be >= 1"),
            ("wlr_ridge", self.wlr_ridge >= 0, "must be >= 0"),
            ("wlr_max_iter", self.wlr_max_iter >= 1, "must be >= 1"),
            ("plain_grad_tol", self.plain_grad_tol >= 0, "must be >= 0"),
        ]
        for name, passed, requirement in checks:
            if not passed:
                value = getattr(self, name)
                return Failure(ValidationError(
                    message=f"Config value {name}={value} {requirement}",
                    field_name=name,
                    invalid_value=str(value),
                ))

        if self.eps1_0 <= self.eps2_0:
            logger.warning(
                f"eps1_0={self.eps1_0} <= eps2_0={self.eps2_0}: the moderate imbalance band is empty"
            )
        return Success(self)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {}
        for item in fields(self):
            value = getattr(self, item.name)
            data[item.name] = value.name.lower() if isinstance(value, Enum) else value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> TrainConfig:
        defaults = cls()
        values = {item.name: data.get(item.name, getattr(defaults, item.name)) for item in fields(cls)}
        values["init_strategy"] = _enum_value(InitStrategy, values["init_strategy"])
        values["threshold_decay"] = _enum_value(ThresholdDecay, values["threshold_decay"])
        return cls(**values)

    def to_config_text(self) -> str:
        """Flat key = value text that from_config_text parses back to an equal config."""
        lines = []
        for key, value in self.to_dict().items():
            lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_text(cls, text: str, source: str = "<config>") -> Result[TrainConfig]:
        """Parse key = value lines; '#' starts a comment and missing keys keep their defaults."""
        kinds = _field_kinds()
        values: Dict[str, Any] = {}
        for line_number, raw_line in enumerate(text.splitlines(), start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                return Failure(ConfigError(
                    message=f"{source}:{line_number}: expected 'key = value', got {line!r}",
                    line_number=line_number,
                ))
            key, raw_value = (part.strip() for part in line.split("=", 1))
            if key not in kinds:
                return Failure(ConfigError(
                    message=f"{source}:{line_number}: unknown config key {key!r}",
                    field_name=key,
                    line_number=line_number,
                ))
            parsed = _parse_value(raw_value, kinds[key])
            if parsed is _INVALID:
                return Failure(ConfigError(
                    message=f"{source}:{line_number}: cannot read {raw_value!r} as {kinds[key]} for {key}",
                    field_name=key,
                    invalid_value=raw_value,
                    line_number=line_number,
                ))
            if parsed is None and key not in _OPTIONAL_FIELDS:
                return Failure(ConfigError(
                    message=f"{source}:{line_number}: {key} cannot be null",
                    field_name=key,
                    line_number=line_number,
                ))
            values[key] = parsed
        try:
            config = cls.from_dict(values)
        except (KeyError, ValueError) as exc:
            return Failure(ConfigError(message=f"{source}: {exc}"))
        return config.validate()


_INVALID = object()

_OPTIONAL_FIELDS = {"lambda_omega", "lambda_beta", "k0", "init_ridge"}


def _field_kinds() -> Dict[str, str]:
    kinds = {}
    for item in fields(TrainConfig):
        annotation = str(item.type)
        if "bool" in annotation:
            kind = "bool"
        elif annotation in ("int", "Optional[int]"):
            kind = "int"
        elif "float" in annotation:
            kind = "float"
        else:
            kind = "name"
        kinds[item.name] = kind
    return kinds


def _enum_value(enum_type: type[Enum], value: Any) -> Enum:
    if isinstance(value, enum_type):
        return value
    try:
        return enum_type[str(value).upper()]
    except KeyError:
        choices = ", ".join(member.name.lower() for member in enum_type)
        raise ValueError(f"{value!r} is not one of {choices}")


def _format_value(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(raw: str, kind: str) -> Any:
    lowered = raw.lower()
    if lowered in ("null", "none", ""):
        return None
    try:
        if kind == "bool":
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            return _INVALID
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        return _INVALID
    return raw
