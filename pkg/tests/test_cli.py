"""Command-line driver: config handling, artifacts, and determinism."""

import json

import numpy as np
import pytest

from upfcuc.cli import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    RunConfig,
    build_parser,
    main,
)
from upfcuc.scenarios import load_scenarios


def test_parser_builds_and_rejects_garbage():
    parser = build_parser()
    args = parser.parse_args(["generate", "--n", "50", "--k", "5"])
    assert args.command == "generate"
    assert args.n_generate == 50
    with pytest.raises(SystemExit):
        parser.parse_args(["no-such-command"])


def test_runconfig_validation(tmp_path):
    cfg = RunConfig(output_dir=str(tmp_path))
    assert cfg.seed == 2024
    assert len(cfg.hash) == 12
    with pytest.raises(ValueError):
        RunConfig(strategies=["XYZ"])
    with pytest.raises(ValueError):
        RunConfig(k_reduce=0)
    with pytest.raises(ValueError):
        RunConfig(voltage_profile="weird")


def test_config_file_and_flag_precedence(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"seed": 11, "n_generate": 30,
                                    "k_reduce": 3}))
    parser = build_parser()
    args = parser.parse_args(["--config", str(cfg_file), "--seed", "12",
                              "generate"])
    from upfcuc.cli import _load_config
    cfg = _load_config(args)
    assert cfg.seed == 12  # the flag wins
    assert cfg.n_generate == 30  # the file fills the rest


def test_generate_writes_artifacts(tmp_path):
    out = tmp_path / "runs"
    rc = main(["--seed", "5", "--out", str(out), "generate",
               "--n", "40", "--k", "4", "--sigma", "15"])
    assert rc == EXIT_OK
    full = load_scenarios(out / "scenarios_full.csv")
    reduced = load_scenarios(out / "scenarios_reduced.csv")
    assert len(full) == 40
    assert len(reduced) == 4
    assert reduced.probabilities.sum() == pytest.approx(1.0)


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["--seed", "9", "--out", str(out), "generate",
                     "--n", "25", "--k", "5"]) == EXIT_OK
    assert ((a / "scenarios_full.csv").read_bytes()
            == (b / "scenarios_full.csv").read_bytes())
    assert ((a / "scenarios_reduced.csv").read_bytes()
            == (b / "scenarios_reduced.csv").read_bytes())


def test_unknown_flag_is_config_error():
    assert main(["--bogus-flag", "generate"]) == EXIT_CONFIG_ERROR


def test_missing_scenarios_is_config_error(tmp_path):
    rc = main(["--out", str(tmp_path / "empty"), "--strategies", "NM",
               "--variants", "DC", "solve"])
    assert rc == EXIT_CONFIG_ERROR


def test_paper_scenarios_shortcut(tmp_path):
    out = tmp_path / "runs"
    rc = main(["--seed", "5", "--out", str(out), "generate", "--n", "20",
               "--k", "10", "--use-paper-scenarios"])
    assert rc == EXIT_OK
    reduced = load_scenarios(out / "scenarios_reduced.csv")
    assert len(reduced) == 10
    # the bundled reduced set carries its calibrated weights
    assert reduced.probabilities.max() > 0.2
