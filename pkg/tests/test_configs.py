import logging
from pathlib import Path

import pytest

from src.configs.default_config import DEFAULT_CONFIG
from src.configs.loader import ABLATIONS, COMPARE_METHODS, load_run_config, parse_override
from src.configs.logging_config import configure_logging
from src.models.baselines import BaselineConfig, BaselineMethod
from src.models.boosting import AUTO_BETA, EddeConfig
from src.models.errors import ConfigError
from src.models.network import Activation
from src.models.schedules import ScheduleKind


def _ini(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults():
    config = load_run_config()
    assert config.method == "edde"
    assert config.seed == 0
    assert config.hidden == (16, 16)
    assert config.beta == AUTO_BETA
    assert config.report_formats == ["json", "csv"]
    assert config.compare_methods == list(COMPARE_METHODS)
    assert config.to_dict() == DEFAULT_CONFIG


def test_file_then_overrides(tmp_path):
    path = _ini(tmp_path, "[edde]\nT = 3\ngamma = 0.5\n\n[model]\nhidden = 8\nactivation = tanh\n")
    config = load_run_config(path, ["edde.gamma=0.25", "run.seed=7"])
    arch = config.architecture(4, 3)
    assert arch.layer_sizes == (4, 8, 3)
    assert arch.activation is Activation.TANH
    cfg = config.edde_config(arch)
    assert isinstance(cfg, EddeConfig)
    assert (cfg.T, cfg.gamma, cfg.seed) == (3, 0.25, 7)
    assert config.path == path
    assert config.overrides == ("edde.gamma=0.25", "run.seed=7")


def test_values_are_coerced_by_default_type():
    config = load_run_config(overrides=["data.normalize=no", "train.lr0=1", "train.schedule=cosine_cyclic",
                                        "edde.beta=0.3"])
    assert config["data"]["normalize"] is False
    assert config["train"]["lr0"] == 1.0
    assert config.train_settings.schedule is ScheduleKind.COSINE_CYCLIC
    assert config.beta == 0.3


@pytest.mark.parametrize("override", [
    "edde.T=three",
    "data.normalize=maybe",
    "nosection.key=1",
    "edde.delta=1",
    "edde.gamma",
    "gamma=1",
    "edde.beta=most",
    "edde.beta=1.5",
    "run.method=stacking",
    "data.source=parquet",
    "data.source=csv",
    "run.report_formats=json,xml",
    "run.log_level=LOUD",
    "data.test_fraction=1.5",
    "model.hidden=8,x",
    "model.activation=sigmoid",
    "train.batch_size=0",
    "beta_search.n_folds=2",
    "sweep.gammas=-1",
])
def test_bad_values_are_config_errors(override):
    with pytest.raises(ConfigError):
        load_run_config(overrides=[override])


def test_unknown_keys_in_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(_ini(tmp_path, "[edde]\nlearning_rate = 1\n"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.ini")


def test_parse_override_keeps_equals_in_the_value():
    assert parse_override("data.train_path=a=b.csv") == ("data", "train_path", "a=b.csv")


def test_compare_budget_split():
    config = load_run_config(overrides=["compare.budget=60", "edde.T=5", "train.epochs_rest=10",
                                        "edde.beta=0.5"])
    arch = config.architecture(2, 3)
    single = config.compare_config(arch, "single")
    assert isinstance(single, BaselineConfig) and single.epochs_per_model == 60 and single.T == 1
    bagging = config.compare_config(arch, "bagging")
    assert (bagging.method, bagging.T, bagging.epochs_per_model) == (BaselineMethod.BAGGING, 5, 12)
    edde = config.compare_config(arch, "edde")
    assert (edde.epochs_first, edde.epochs_rest, edde.beta) == (20, 10, 0.5)
    assert edde.epochs_first + (edde.T - 1) * edde.epochs_rest == 60


def test_ablations_pin_one_parameter():
    config = load_run_config(overrides=["edde.gamma=0.3", "edde.beta=0.5"])
    arch = config.architecture(2, 3)
    for method, pinned in ABLATIONS.items():
        cfg = config.compare_config(arch, method)
        for key, value in pinned.items():
            assert getattr(cfg, key) == value
    assert config.compare_config(arch, "edde_normal_loss").beta == 0.5
    assert config.compare_config(arch, "edde_transfer_all").gamma == 0.3


def test_auto_beta_teacher_uses_the_first_round_budget():
    config = load_run_config(overrides=["compare.budget=30", "edde.T=3", "train.epochs_rest=5"])
    cfg = config.compare_config(config.architecture(2, 3), "edde")
    assert cfg.epochs_first == 20
    assert cfg.beta_search.teacher_epochs == 20


@pytest.mark.parametrize("overrides", [
    ["compare.budget=61", "compare.methods=bagging"],
    ["compare.budget=30", "edde.T=5", "train.epochs_rest=10", "compare.methods=edde"],
    ["compare.budget=0"],
    ["compare.methods=single,stacking"],
    ["compare.methods= , "],
])
def test_bad_compare_sections(overrides):
    config = load_run_config(overrides=overrides)
    assert config.method_config(config.architecture(2, 3))
    with pytest.raises(ConfigError):
        config.validate_compare()


def test_default_compare_section_is_valid():
    config = load_run_config().validate_compare()
    nc = config.compare_config(config.architecture(2, 3), "adaboost_nc_transfer")
    assert nc.method is BaselineMethod.ADABOOST_NC_TRANSFER
    assert nc.epochs_per_model == config["compare"]["budget"] // config["edde"]["T"]


def test_single_method_trains_one_member():
    config = load_run_config(overrides=["run.method=single", "edde.T=4"])
    assert config.method_config(config.architecture(2, 2)).T == 1


def test_configure_logging_writes_the_run_log(tmp_path):
    log_file = tmp_path / "logs" / "run.log"
    configure_logging("DEBUG", log_file)
    logging.getLogger("src.test").debug("hello")
    for handler in logging.root.handlers:
        handler.flush()
    assert "hello" in log_file.read_text()
    configure_logging("WARNING")
    assert logging.root.level == logging.WARNING
    assert not any(isinstance(h, logging.FileHandler) for h in logging.root.handlers)


def test_readme_lists_every_config_key():
    readme = (Path(__file__).resolve().parents[1] / "README.md").read_text(encoding="utf-8")
    rows = {line.split("|")[1].strip().strip("`"): line.split("|")[3].strip().strip("`")
            for line in readme.splitlines() if line.startswith("| `")}
    for section, keys in DEFAULT_CONFIG.items():
        for key in keys:
            assert f"{section}.{key}" in rows
    assert rows["compare.budget"] == str(DEFAULT_CONFIG["compare"]["budget"])
    assert rows["edde.gamma"] == str(DEFAULT_CONFIG["edde"]["gamma"])
