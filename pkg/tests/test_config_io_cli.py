import json
from pathlib import Path

import numpy as np
import pytest

from otfs_radar import cli
from otfs_radar.config import load_spec, parse_document, preset_document, with_overrides
from otfs_radar.errors import ConfigError
from otfs_radar.experiments import LemmaReport, Scenario, rmse_sweep, run_trials
from otfs_radar.grid import SystemConfig, TapChannel
from otfs_radar.io import (
    read_detections_json,
    read_frame_csv,
    read_profile_csv,
    read_rd_map_csv,
    read_result_json,
    read_sweep_csv,
    read_trials_csv,
    write_frame_csv,
    write_trials_csv,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _tiny_yaml(tmp_path, extra=""):
    text = f"""\
system:
  preset: automotive_24ghz
  num_delay_bins: 32
  num_doppler_bins: 16
  cp_length_samples: 8
  snr_db: 10
ofdm:
  cp_length_samples: 8
scene:
  quantize: exact
  taps:
    - {{k: 3, l: 5, gain: [1.0, 0.0]}}
experiment:
  trials: 3
  output_dir: {tmp_path / 'out'}
{extra}"""
    path = tmp_path / "tiny.yaml"
    path.write_text(text)
    return path


def test_defaults():
    spec = load_spec()
    assert spec.cfg.num_delay_bins == 256 and spec.cfg.num_doppler_bins == 64
    assert spec.cfg.cp_length_samples == 128
    assert spec.cfg.noise_variance == pytest.approx(0.1)
    assert spec.ofdm.cp_length_samples == 72
    assert [(t.k, t.l) for t in spec.taps] == [(21, 65)]
    assert spec.systems == ("otfs", "ofdm")
    assert list(spec.seeds()) == list(range(100))


@pytest.mark.parametrize("name", ["scenario.yaml", "velocity_sweep.yaml", "snr_sweep.yaml"])
def test_shipped_configs_load(name):
    spec = load_spec(CONFIGS / name)
    assert spec.trials == 100


def test_presets_match_shipped_files():
    assert load_spec(CONFIGS / "velocity_sweep.yaml").values == parse_document(preset_document("velocity")).values
    assert load_spec(CONFIGS / "snr_sweep.yaml").values == parse_document(preset_document("snr")).values


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("system:\n  preset: automotive_24ghz\n  bogus: 1\n", 3, "unknown key"),
        ("system:\n  snr_db: 3\n  noise_variance: 0.1\n", 2, "either snr_db"),
        ("system:\n  num_delay_bins: 12.5\n", 2, "integer"),
        ("experiment:\n  trials: 0\n", 2, "trials"),
        ("experiment:\n  name: x\n  sweep: sideways\n", 3, "sweep"),
        ("scene:\n  quantize: exact\n  targets:\n    - {range_m: 975, velocity_m_s: 80}\n", 4, "not integers"),
        ("ofdm:\n  cp_length_samples: 40\n", 2, "shorter than delay"),
        ("system:\n  cp_length_samples: [1\n", 3, "YAML"),
        ("- 1\n- 2\n", 1, "mapping"),
    ],
)
def test_config_errors_have_lines(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        load_spec(text=text)
    assert info.value.line == line
    assert fragment in str(info.value)


def test_config_error_names_file(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("experiment:\n  workers: 0\n")
    with pytest.raises(ConfigError, match=r"bad\.yaml:2:"):
        load_spec(path)


def test_spec_hash_ignores_output_and_workers(tmp_path):
    spec = load_spec(_tiny_yaml(tmp_path))
    moved = with_overrides(spec, output_dir=tmp_path / "elsewhere", workers=4)
    assert moved.spec_hash() == spec.spec_hash()
    assert with_overrides(spec, trials=7).spec_hash() != spec.spec_hash()


def test_frame_csv_roundtrip(tmp_path, rng):
    a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    write_frame_csv(tmp_path / "f.csv", a)
    np.testing.assert_array_equal(read_frame_csv(tmp_path / "f.csv"), a)


def test_trials_csv_roundtrip(tmp_path):
    cfg = SystemConfig(num_delay_bins=16, num_doppler_bins=8, cp_length_samples=4)
    rows = run_trials(("otfs", "ofdm"), Scenario(cfg, TapChannel.from_tuples([(2, 3, 1.0)])), 2, 5)
    write_trials_csv(tmp_path / "t.csv", rows)
    assert read_trials_csv(tmp_path / "t.csv") == rows


def test_parallel_matches_serial():
    cfg = SystemConfig(num_delay_bins=16, num_doppler_bins=8, cp_length_samples=4)
    sc = Scenario(cfg, TapChannel.from_tuples([(2, 3, 1.0)]))
    serial, _ = rmse_sweep(("otfs", "ofdm"), [-2, 0, 2], 3, sc, workers=1)
    parallel, _ = rmse_sweep(("otfs", "ofdm"), [-2, 0, 2], 3, sc, workers=2)
    assert serial == parallel


def test_cli_simulate_outputs_and_determinism(tmp_path, capsys):
    cfg_path = _tiny_yaml(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["simulate", "-c", str(cfg_path)]) == 0
    assert "otfs" in capsys.readouterr().out
    first = {p.name: p.read_bytes() for p in out.iterdir() if p.suffix in (".csv", ".svg")}
    assert {"trials.csv", "otfs_estimate.csv", "ofdm_range_doppler.csv", "otfs_range_profile.csv", "profiles.svg"} <= set(first)

    record = read_result_json(out / "result.json")
    assert record.spec_hash == load_spec(cfg_path).spec_hash()
    assert len(record.trials) == 6
    assert record.extra["truth"]["k"] == 3
    dets = read_detections_json(out / "detections.json")
    assert (dets[0]["k"], dets[0]["l"]) == (3, 5)
    assert read_rd_map_csv(out / "ofdm_range_doppler.csv").shape == (16, 32)
    assert read_profile_csv(out / "otfs_range_profile.csv").values_db.max() == 0.0
    assert read_frame_csv(out / "otfs_estimate.csv").shape == (16, 32)

    assert cli.main(["simulate", "-c", str(cfg_path)]) == 0
    second = {p.name: p.read_bytes() for p in out.iterdir() if p.suffix in (".csv", ".svg")}
    assert first == second


def test_cli_overrides(tmp_path):
    cfg_path = _tiny_yaml(tmp_path)
    out = tmp_path / "other"
    assert cli.main(["compare", "-c", str(cfg_path), "--trials", "2", "--seed", "40", "-o", str(out)]) == 0
    rows = read_trials_csv(out / "trials.csv")
    assert sorted({r.seed for r in rows}) == [40, 41]
    assert {r.system for r in rows} == {"otfs", "ofdm"}
    assert json.loads((out / "result.json").read_text())["spec"]["experiment"]["trials"] == 2


def test_cli_sweep(tmp_path):
    extra = "  sweep: velocity\n  values: [-3, 0, 3]\n"
    assert cli.main(["sweep", "-c", str(_tiny_yaml(tmp_path, extra)), "--trials", "2"]) == 0
    points = read_sweep_csv(tmp_path / "out" / "sweep.csv")
    assert [(p.system, p.parameter) for p in points][:2] == [("otfs", -3.0), ("ofdm", -3.0)]
    assert all(p.velocity_rmse_m_s == 0.0 for p in points if p.system == "otfs")
    assert (tmp_path / "out" / "sweep.svg").exists()


def test_cli_sweep_requires_values(tmp_path, capsys):
    assert cli.main(["sweep", "-c", str(_tiny_yaml(tmp_path))]) == cli.EXIT_CONFIG
    assert "sweep" in capsys.readouterr().err


def test_cli_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("system:\n  nonsense: 1\n")
    assert cli.main(["simulate", "-c", str(bad)]) == cli.EXIT_CONFIG
    assert "bad.yaml:2:" in capsys.readouterr().err
    assert cli.main(["simulate", "--trials", "0"]) == cli.EXIT_CONFIG


def test_cli_lemma_check(capsys):
    assert cli.main(["lemma-check", "--trials", "4000", "--pairs", "3"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 4


def test_cli_lemma_check_failure_exit(monkeypatch, capsys):
    def failing(cfg, trials, seed, pairs):
        return LemmaReport(cfg, trials, seed, 1.0, [(0, 1)], [0j], [16.0], 0.1, 16.0, 0.05)

    monkeypatch.setattr(cli, "lemma_check", failing)
    assert cli.main(["lemma-check"]) == cli.EXIT_CHECK_FAILED
    assert "FAIL" in capsys.readouterr().out
