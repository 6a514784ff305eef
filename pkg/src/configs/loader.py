"""
Run configuration: INI-style sections over the defaults of `default_config`,
then `section.key=value` overrides. Every derived config is built once at
load time so that a bad value fails before any data is read; the [compare]
section is checked by `validate_compare` when a comparison starts.
"""

import configparser
import copy
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from src.configs.default_config import DEFAULT_CONFIG
from src.models.baselines import BaselineConfig, BaselineMethod
from src.models.boosting import AUTO_BETA, EddeConfig
from src.models.errors import ConfigError, ValidationError
from src.models.network import Activation, Architecture
from src.models.training import TrainSettings
from src.models.transfer import BetaSearchConfig

EDDE_METHOD = "edde"
# Ablations of the diversity-driven pipeline and the parameter each one pins
ABLATIONS = {
    "edde_normal_loss": {"gamma": 0.0},
    "edde_transfer_all": {"beta": 1.0},
    "edde_transfer_none": {"beta": 0.0},
}
BASELINE_METHODS = tuple(m.value for m in BaselineMethod)
TRAIN_METHODS = BASELINE_METHODS + (EDDE_METHOD,)
COMPARE_METHODS = TRAIN_METHODS + tuple(ABLATIONS)
DATA_SOURCES = ("blobs", "csv", "idx")
REPORT_FORMATS = ("json", "csv")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
_BOOLEAN_STATES = configparser.ConfigParser.BOOLEAN_STATES


def _coerce(section: str, key: str, raw: str, default: Any) -> Any:
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() not in _BOOLEAN_STATES:
                raise ValueError(raw)
            return _BOOLEAN_STATES[raw.lower()]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot convert {raw!r} to {type(default).__name__}")
    return raw


def _split_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


@dataclass
class RunConfig:
    values: Dict[str, Dict[str, Any]]
    path: Optional[Path] = None
    overrides: Tuple[str, ...] = field(default_factory=tuple)

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.values[section]

    @property
    def method(self) -> str:
        return self["run"]["method"]

    @property
    def seed(self) -> int:
        return self["run"]["seed"]

    @property
    def output_dir(self) -> Path:
        return Path(self["run"]["output_dir"])

    @property
    def report_formats(self) -> List[str]:
        return _split_list(self["run"]["report_formats"])

    @property
    def hidden(self) -> Tuple[int, ...]:
        try:
            return tuple(int(h) for h in _split_list(self["model"]["hidden"]))
        except ValueError:
            raise ConfigError(f"[model] hidden: expected comma-separated integers, got {self['model']['hidden']!r}")

    @property
    def train_settings(self) -> TrainSettings:
        t = self["train"]
        return TrainSettings(lr0=t["lr0"], schedule=t["schedule"], batch_size=t["batch_size"], cycles=t["cycles"])

    @property
    def beta_search_config(self) -> BetaSearchConfig:
        return BetaSearchConfig(**self["beta_search"])

    @property
    def compare_methods(self) -> List[str]:
        return _split_list(self["compare"]["methods"])

    @property
    def gammas(self) -> List[float]:
        try:
            return [float(g) for g in _split_list(self["sweep"]["gammas"])]
        except ValueError:
            raise ConfigError(f"[sweep] gammas: expected comma-separated numbers, got {self['sweep']['gammas']!r}")

    @property
    def beta(self) -> Union[float, str]:
        raw = str(self["edde"]["beta"]).strip()
        if raw == AUTO_BETA:
            return AUTO_BETA
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[edde] beta: expected 'auto' or a number, got {raw!r}")

    def architecture(self, n_inputs: int, k: int) -> Architecture:
        return Architecture((n_inputs,) + self.hidden + (k,), Activation(self["model"]["activation"]))

    def edde_config(self, arch: Architecture, **changes) -> EddeConfig:
        cfg = EddeConfig(
            arch=arch,
            T=self["edde"]["T"],
            gamma=self["edde"]["gamma"],
            beta=self.beta,
            epochs_first=self["train"]["epochs_first"],
            epochs_rest=self["train"]["epochs_rest"],
            train=self.train_settings,
            seed=self.seed,
            beta_search=self.beta_search_config,
        )
        return replace(cfg, **changes) if changes else cfg

    def baseline_config(self, arch: Architecture, method: Optional[str] = None, **changes) -> BaselineConfig:
        method = method or self.method
        cfg = BaselineConfig(
            arch=arch,
            method=method,
            T=1 if method == BaselineMethod.SINGLE.value else self["edde"]["T"],
            epochs_per_model=self["train"]["epochs_per_model"],
            train=self.train_settings,
            lambda_nc=self["baseline"]["lambda_nc"],
            label_mix=self["baseline"]["label_mix"],
            seed=self.seed,
        )
        return replace(cfg, **changes) if changes else cfg

    def method_config(self, arch: Architecture, method: Optional[str] = None):
        method = method or self.method
        if method == EDDE_METHOD:
            return self.edde_config(arch)
        return self.baseline_config(arch, method)

    def compare_config(self, arch: Architecture, method: str):
        """Config of one compared method under the shared epoch budget."""
        budget = self["compare"]["budget"]
        T = self["edde"]["T"]
        if method == BaselineMethod.SINGLE.value:
            return self.baseline_config(arch, method, epochs_per_model=budget)
        if method in BASELINE_METHODS:
            if budget % T != 0:
                raise ConfigError(f"[compare] budget {budget} is not divisible by T={T} for {method}")
            return self.baseline_config(arch, method, epochs_per_model=budget // T)
        if method == EDDE_METHOD or method in ABLATIONS:
            rest = self["train"]["epochs_rest"]
            first = budget - (T - 1) * rest
            if first < 1:
                raise ConfigError(
                    f"[compare] budget {budget} leaves no epochs for the first model ({T - 1} x {rest} for later rounds)")
            changes = dict(ABLATIONS.get(method, {}))
            changes["epochs_first"] = first
            cfg = self.edde_config(arch, **changes)
            if cfg.auto_beta:
                cfg = replace(cfg, beta_search=replace(cfg.beta_search, teacher_epochs=first))
            return cfg
        raise ConfigError(f"[compare] unknown method {method!r}; expected one of {', '.join(COMPARE_METHODS)}")

    def validate(self) -> "RunConfig":
        run, data = self["run"], self["data"]
        if run["method"] not in TRAIN_METHODS:
            raise ConfigError(f"[run] method: unknown {run['method']!r}; expected one of {', '.join(TRAIN_METHODS)}")
        if data["source"] not in DATA_SOURCES:
            raise ConfigError(f"[data] source: unknown {data['source']!r}; expected one of {', '.join(DATA_SOURCES)}")
        if data["source"] == "csv" and not data["train_path"]:
            raise ConfigError("[data] train_path is required when source = csv")
        if data["source"] == "idx" and not (data["images_path"] and data["labels_path"]):
            raise ConfigError("[data] images_path and labels_path are required when source = idx")
        if run["log_level"].upper() not in LOG_LEVELS:
            raise ConfigError(f"[run] log_level: unknown {run['log_level']!r}; expected one of {', '.join(LOG_LEVELS)}")
        unknown = [f for f in self.report_formats if f not in REPORT_FORMATS]
        if unknown:
            raise ConfigError(f"[run] report_formats: unknown {', '.join(unknown)}")
        for key in ("n_per_class", "k", "d", "limit"):
            if data[key] < 1:
                raise ConfigError(f"[data] {key} must be positive, got {data[key]}")
        if data["spread"] < 0:
            raise ConfigError(f"[data] spread must be non-negative, got {data['spread']}")
        if not 0 < data["test_fraction"] < 1:
            raise ConfigError(f"[data] test_fraction must lie in (0, 1), got {data['test_fraction']}")
        if not self.gammas or any(g < 0 for g in self.gammas):
            raise ConfigError("[sweep] gammas must be a non-empty list of non-negative numbers")
        try:
            # Stand-in input/output sizes; the real ones come from the data
            stand_in = self.architecture(1, 1)
            self.method_config(stand_in)
            self.edde_config(stand_in)
        except ConfigError:
            raise
        except (ValidationError, ValueError, TypeError) as e:
            raise ConfigError(str(e))
        return self

    def validate_compare(self) -> "RunConfig":
        """Check the [compare] section; only the compare command reads it."""
        if self["compare"]["budget"] < 1:
            raise ConfigError(f"[compare] budget must be positive, got {self['compare']['budget']}")
        if not self.compare_methods:
            raise ConfigError("[compare] methods must name at least one method")
        try:
            stand_in = self.architecture(1, 1)
            for method in self.compare_methods:
                self.compare_config(stand_in, method)
        except ConfigError:
            raise
        except (ValidationError, ValueError, TypeError) as e:
            raise ConfigError(str(e))
        return self

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return copy.deepcopy(self.values)


def parse_override(text: str) -> Tuple[str, str, str]:
    target, sep, value = text.partition("=")
    section, dot, key = target.strip().partition(".")
    if not sep or not dot or not section or not key:
        raise ConfigError(f"Override {text!r} must look like section.key=value")
    return section, key.strip(), value


def _assign(values: Dict[str, Dict[str, Any]], section: str, key: str, raw: str) -> None:
    if section not in DEFAULT_CONFIG:
        raise ConfigError(f"Unknown section [{section}]")
    if key not in DEFAULT_CONFIG[section]:
        raise ConfigError(f"Unknown key {key!r} in section [{section}]")
    values[section][key] = _coerce(section, key, raw, DEFAULT_CONFIG[section][key])


def load_run_config(path=None, overrides: Sequence[str] = ()) -> RunConfig:
    """Defaults, then the config file (if any), then overrides; validated."""
    values = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigError(f"{path}: {e}")
        for section in parser.sections():
            for key, raw in parser.items(section):
                _assign(values, section, key, raw)
    for text in overrides:
        _assign(values, *parse_override(text))
    return RunConfig(values, path, tuple(overrides)).validate()
