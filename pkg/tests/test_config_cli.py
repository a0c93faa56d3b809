import json
import subprocess
import sys

import numpy as np
import pytest

from ptdiff.cli import EXIT_BLOWUP, EXIT_INVALID, EXIT_OK, main
from ptdiff.config import (
    FIGURES, ConfigError, ExperimentConfig, dumps, load_config, loads, preset_config, save_config,
)
from ptdiff.dynamics import read_csv
from ptdiff.experiments import run_config


@pytest.mark.parametrize("name", FIGURES)
def test_preset_round_trip(name, tmp_path):
    cfg = preset_config(name)
    cfg.validate()
    assert loads(dumps(cfg)) == cfg
    save_config(cfg, tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == cfg


def test_preset_contents():
    assert preset_config("fig1d").differentiator.n_f == 1
    assert preset_config("fig2").differentiator.alpha == 5.0
    assert preset_config("fig2").analysis.compare_base
    assert preset_config("fig1a").noise is None
    assert preset_config("fig1c").noise.std_dev == 0.1
    assert preset_config("fig1a").integration.stride == 100
    p = preset_config("fig1a").build_params()
    assert p.kappa_cap == pytest.approx(6.362, abs=1e-3)
    with pytest.raises(ConfigError):
        preset_config("fig7")


@pytest.mark.parametrize("text, match", [
    ("differentiator: {n: 1, alpha: 3, T_c: 1, L: 1, family: {variant: levant}, bogus: 1}", "bogus"),
    ("name: x", "differentiator"),
    ("differentiator: {n: 1, alpha: 3, T_c: 1, L: 1, family: {variant: levant}}\nextra: 2", "extra"),
    ("differentiator: [1, 2]", "mapping"),
    ("differentiator: {n: 1", "parse"),
])
def test_bad_configs_rejected(text, match):
    with pytest.raises(ConfigError, match=match):
        loads(text)


def _minimal(**integration):
    data = {"differentiator": {"n": 1, "alpha": 3.0, "T_c": 1.0, "L": 1.0,
                               "family": {"variant": "fixed_time", "n": 1, "L": 1.0, "T_star": 1.0},
                               "initial_state": [1.0, 1.0]},
            "signal": {"preset": "fig1a"},
            "integration": {"step": 1e-4, "horizon": 1.2, "stride": 10, **integration}}
    return ExperimentConfig.from_dict(data)


def test_validate_catches_inconsistency():
    with pytest.raises(ConfigError, match="horizon"):
        _minimal(horizon=0.0).validate()
    with pytest.raises(ConfigError, match="stride"):
        _minimal(stride=0).validate()
    cfg = _minimal()
    bad = cfg.replace(differentiator=type(cfg.differentiator)(**{**cfg.differentiator.__dict__,
                                                                  "initial_state": [1.0]}))
    with pytest.raises(ConfigError, match="initial_state"):
        bad.validate()


def test_run_config_writes_files(tmp_path):
    res = run_config(_minimal(), tmp_path)
    names = sorted(p.name for p in res.files)
    assert names == sorted(["run_trajectory.csv", "run_gain.csv", "run_settling.csv",
                            "run_summary.txt", "config.yaml", "resolved_params.json"])
    params = json.loads((tmp_path / "resolved_params.json").read_text())
    assert params["n"] == 1 and params["alpha"] == 3.0
    assert load_config(tmp_path / "config.yaml") == _minimal()
    cols, data = read_csv(tmp_path / "run_gain.csv")
    assert cols == ["t", "kappa"] and np.all(data[:, 1] <= res.params.kappa_cap)


def _cli(*args):
    return main(list(args))


def test_cli_reproduce_fig1a(tmp_path, capsys):
    assert _cli("reproduce", "fig1a", "--out", str(tmp_path), "--step", "1e-5") == EXIT_OK
    out = capsys.readouterr().out
    assert "kappa_max" in out
    assert (tmp_path / "fig1a" / "fig1a_trajectory.csv").exists()
    assert (tmp_path / "fig1a" / "fig1a_summary.txt").exists()


def test_cli_preset_fig1d_has_filter_column(tmp_path):
    cfg_path = tmp_path / "fig1d.yaml"
    assert _cli("preset", "fig1d", "--out", str(cfg_path)) == EXIT_OK
    assert _cli("simulate", "--config", str(cfg_path), "--out", str(tmp_path / "run"),
                "--step", "1e-5") == EXIT_OK
    cols, _ = read_csv(tmp_path / "run" / "fig1d_trajectory.csv")
    assert cols[:3] == ["t", "w_1", "z_0"]


def test_cli_invalid_inputs(tmp_path, capsys):
    cfg = _minimal(horizon=0.0)
    save_config(cfg, tmp_path / "bad.yaml")
    assert _cli("simulate", "--config", str(tmp_path / "bad.yaml")) == EXIT_INVALID
    assert _cli("simulate") == EXIT_INVALID
    assert _cli("simulate", "--config", str(tmp_path / "missing.yaml")) == EXIT_INVALID
    assert _cli("reproduce", "fig1a", "--step", "-1") == EXIT_INVALID
    assert _cli("verify", "slack", "--workers", "0") == EXIT_INVALID
    assert "error" in capsys.readouterr().err


def test_cli_blow_up_exit_code(tmp_path):
    cfg = _minimal()
    cfg.differentiator.initial_state = [1e308, 1e308]
    save_config(cfg, tmp_path / "c.yaml")
    code = _cli("simulate", "--config", str(tmp_path / "c.yaml"), "--out", str(tmp_path / "o"))
    assert code == EXIT_BLOWUP


def test_cli_unknown_choice_exits_with_usage_error():
    with pytest.raises(SystemExit) as info:
        _cli("reproduce", "fig9")
    assert info.value.code == 2


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "ptdiff.cli", "--help"], capture_output=True,
                         text=True, check=True).stdout
    for cmd in ("simulate", "reproduce", "sweep", "verify", "preset"):
        assert cmd in out
