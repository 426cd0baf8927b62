import os
import subprocess
import sys
from pathlib import Path

import pytest

from decoh.cli import parse_config, read_config_file, split_seed
from decoh.errors import ConfigurationError

REPO = Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"

SHIPPED = {
    "bracket": "bracket",
    "classical": "classical",
    "commutation": "commutation",
    "ehrenfest": "ehrenfest",
    "rates": "rates",
    "stochastic": "stochastic",
    "superposition": "superposition",
    "superposition_single": "superposition",
    "transitions": "transitions",
}


def run_cli(args, env_extra=None):
    env = dict(os.environ)
    env.pop("DECOH_OUTPUT_DIR", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "decoh.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


def test_defaults_applied_with_empty_file(tmp_path):
    empty = tmp_path / "empty.cfg"
    empty.write_text("")
    cfg = parse_config("bracket", read_config_file(empty), {"output_dir": str(tmp_path)})
    assert cfg.potential.kind == "harmonic"
    assert cfg["tau_max"] == 0.01
    assert cfg.seed == 0


def test_flags_override_file(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("x_q = 1.0\nseed = 3\n")
    cfg = parse_config("bracket", read_config_file(f), {"x_q": "2.5", "output_dir": str(tmp_path)})
    assert cfg["x_q"] == 2.5
    assert cfg.seed == 3


def test_duplicate_key_last_wins_with_warning(tmp_path, capsys):
    f = tmp_path / "c.cfg"
    f.write_text("x_q = 1.0\nx_q = 4.0\n")
    values = read_config_file(f)
    assert values["x_q"] == "4.0"
    assert "duplicate key" in capsys.readouterr().err


def test_unknown_key_rejected_with_name(tmp_path):
    with pytest.raises(ConfigurationError, match="no_such_key"):
        parse_config("bracket", {"no_such_key": "1"}, {"output_dir": str(tmp_path)})


def test_type_mismatch_names_expected_type(tmp_path):
    with pytest.raises(ConfigurationError, match="expected int"):
        parse_config("bracket", {"n_tau": "many"}, {"output_dir": str(tmp_path)})
    with pytest.raises(ConfigurationError, match="expected float"):
        parse_config("bracket", {"x_q": "wide"}, {"output_dir": str(tmp_path)})


def test_negative_tau_rejected_for_stochastic(tmp_path):
    with pytest.raises(ConfigurationError, match="tau"):
        parse_config("stochastic", {"tau": "-0.001"}, {"output_dir": str(tmp_path)})


def test_command_mismatch_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="declares command"):
        parse_config("bracket", {"command": "rates"}, {"output_dir": str(tmp_path)})


def test_seed_splitting_rule():
    assert split_seed(12, 0) == 12
    assert split_seed(12, 5) == 12 ^ 5


def test_cli_exit_codes(tmp_path):
    r = run_cli(["bracket", "--n_tau", "many", "--output_dir", str(tmp_path / "x")])
    assert r.returncode == 2
    assert "expected int" in r.stderr
    assert not (tmp_path / "x").exists()  # no partial files on config error

    r = run_cli(["stochastic", "--tau", "-0.001", "--output_dir", str(tmp_path / "y")])
    assert r.returncode == 2
    assert not (tmp_path / "y").exists()

    r = run_cli(["bracket", "--output_dir", str(tmp_path / "ok")])
    assert r.returncode == 0
    assert (tmp_path / "ok" / "bracket.csv").exists()


def test_cli_numerical_failure_exit_one(tmp_path):
    # stability-guard violation surfaces as exit 1 with exit_intent=1
    out = tmp_path / "unstable"
    r = run_cli([
        "ehrenfest", "--config", str(CONFIGS / "ehrenfest.cfg"),
        "--tau", "0.01", "--n_steps", "100", "--record_stride", "50",
        "--output_dir", str(out),
    ])
    assert r.returncode == 1
    assert "stability" in r.stderr
    summary = (out / "summary.txt").read_text()
    assert "exit_intent=1" in summary
    assert not (out / "ehrenfest.csv").exists()


def test_cli_late_validation_is_config_error(tmp_path):
    r = run_cli(["commutation", "--n_points", "512", "--output_dir", str(tmp_path / "c")])
    assert r.returncode == 2
    assert "n_points" in r.stderr
    assert not (tmp_path / "c").exists()


def test_cli_rates_non_convergence_exit_one(tmp_path):
    out = tmp_path / "r"
    r = run_cli(["rates", "--tau_max", "0.8", "--output_dir", str(out)])
    assert r.returncode == 1
    assert "alpha" in (out / "summary.txt").read_text()
    assert "exit_intent=1" in (out / "summary.txt").read_text()


def test_unwritable_output_dir(tmp_path):
    # a path through a regular file can never become a directory
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    target = blocker / "sub"
    r = run_cli(["bracket", "--output_dir", str(target)])
    assert r.returncode == 2
    assert not target.exists()


def test_env_var_output_dir_fallback(tmp_path):
    out = tmp_path / "env_out"
    r = run_cli(["bracket"], env_extra={"DECOH_OUTPUT_DIR": str(out)})
    assert r.returncode == 0
    assert (out / "bracket.csv").exists()
    r = run_cli(["bracket"])  # no flag, no env
    assert r.returncode == 2


def test_summary_mandatory_keys(tmp_path):
    out = tmp_path / "s"
    assert run_cli(["bracket", "--output_dir", str(out)]).returncode == 0
    text = (out / "summary.txt").read_text()
    for key in ("seed=", "command=", "exit_intent=", "version="):
        assert key in text


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_configs_reproduce_goldens(tmp_path, name):
    command = SHIPPED[name]
    runs = []
    for attempt in range(2):
        out = tmp_path / f"{name}_{attempt}"
        r = run_cli([command, "--config", str(CONFIGS / f"{name}.cfg"), "--output_dir", str(out)])
        assert r.returncode == 0, r.stderr
        runs.append((out / f"{command}.csv").read_bytes())
    assert runs[0] == runs[1]  # byte-identical across runs
    assert runs[0] == (GOLDEN / f"{name}.csv").read_bytes()
