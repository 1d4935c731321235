"""Run experiment specs end to end and persist their outputs."""

from __future__ import annotations

import logging
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ExperimentSpec
from .errors import ConfigError
from .estimator import DetectionPolicy, detect_targets
from .experiments import (
    Scenario,
    rmse_sweep,
    run_trials,
    simulate_ofdm,
    simulate_otfs,
    snr_sweep,
    summarize,
)
from .grid import derive_resolutions, taps_to_scene
from .io import (
    ResultRecord,
    write_detections_json,
    write_frame_csv,
    write_profile_csv,
    write_rd_map_csv,
    write_result_json,
    write_sweep_csv,
    write_trials_csv,
)
from .metrics import profile_cuts
from .ofdm import peak_bin
from .plots import plot_profiles, plot_rmse, plot_snr_curves

log = logging.getLogger(__name__)


def scenario_of(spec: ExperimentSpec) -> Scenario:
    return Scenario(spec.cfg, spec.taps, spec.ofdm)


def _record(spec: ExperimentSpec, rows, aggregate, extra) -> ResultRecord:
    return ResultRecord(
        spec_hash=spec.spec_hash(),
        spec=spec.document,
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        trials=[r.to_dict() for r in rows],
        aggregate=[p.to_dict() for p in aggregate],
        extra=extra,
    )


def _scene_extra(spec: ExperimentSpec) -> dict:
    truth = taps_to_scene([spec.taps.taps[0]], spec.cfg)[0]
    return {
        "truth": {"k": spec.taps.taps[0].k, "l": spec.taps.taps[0].l, "range_m": truth.range_m, "velocity_m_s": truth.velocity_m_s},
        "quantization_residuals": [list(r) for r in spec.taps.residuals],
        "resolutions": derive_resolutions(spec.cfg).__dict__,
    }


def run_scenario(spec: ExperimentSpec) -> ResultRecord:
    """Simulate one scene ``spec.trials`` times and write CSV/JSON/SVG outputs.

    Profiles, the estimate grid and detections are written for the first
    trial (seed ``base_seed``).
    """
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = scenario_of(spec)
    rows = run_trials(spec.systems, scenario, spec.trials, spec.base_seed, workers=spec.workers)
    aggregate = [summarize(s, 0.0, [r for r in rows if r.system == s]) for s in spec.systems]

    extra = _scene_extra(spec)
    cuts = {}
    if "otfs" in spec.systems:
        est, _ = simulate_otfs(scenario, spec.base_seed)
        cuts["otfs"] = profile_cuts(est)
        write_frame_csv(out / "otfs_estimate.csv", est.grid)
        policy = DetectionPolicy(spec.detection_threshold_db)
        detections = [d.to_record(spec.cfg) for d in detect_targets(est, policy)]
        write_detections_json(out / "detections.json", detections)
        extra["otfs_detections"] = detections
    if "ofdm" in spec.systems:
        rd = simulate_ofdm(scenario, spec.base_seed)
        cuts["ofdm"] = profile_cuts(rd, peak_bin(rd))
        write_rd_map_csv(out / "ofdm_range_doppler.csv", rd)
    for name, (rc, vc) in cuts.items():
        write_profile_csv(out / f"{name}_range_profile.csv", rc)
        write_profile_csv(out / f"{name}_velocity_profile.csv", vc)
    truth = extra["truth"]
    plot_profiles(cuts, out / "profiles.svg", (truth["range_m"], truth["velocity_m_s"]))
    write_trials_csv(out / "trials.csv", rows)
    record = _record(spec, rows, aggregate, extra)
    write_result_json(out / "result.json", record)
    log.info("scenario %s written to %s", spec.name, out)
    return record


def run_sweep(spec: ExperimentSpec) -> ResultRecord:
    """Velocity or SNR sweep; writes ``sweep.csv`` plus trial-level CSV and an SVG curve."""
    if spec.sweep == "none":
        raise ConfigError("experiment.sweep is 'none'; set it to 'velocity' or 'snr'")
    if not spec.values:
        raise ConfigError("experiment.values is empty; a sweep needs at least one point")
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = scenario_of(spec)
    if spec.sweep == "velocity":
        points, rows = rmse_sweep(spec.systems, [int(v) for v in spec.values], spec.trials, scenario, spec.base_seed, spec.workers)
        plot_rmse(points, out / "sweep.svg", derive_resolutions(spec.cfg).velocity_res_m_s)
    else:
        points, rows = snr_sweep(spec.systems, spec.values, spec.trials, scenario, spec.base_seed, spec.workers)
        if "otfs" in spec.systems:
            plot_snr_curves(points, out / "sweep.svg", spec.cfg.num_delay_bins * spec.cfg.num_doppler_bins)
    write_sweep_csv(out / "sweep.csv", points)
    write_trials_csv(out / "trials.csv", rows)
    record = _record(spec, rows, points, _scene_extra(spec))
    write_result_json(out / "result.json", record)
    return record
