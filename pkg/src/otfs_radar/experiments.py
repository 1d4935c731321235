"""Seeded Monte-Carlo trials and sweeps for OTFS and OFDM radar.

Trial ``i`` of a campaign uses seed ``base_seed + i``. The seed is split into
a frame stream and a noise stream; OTFS and OFDM trials with the same seed
share both (common random numbers), so sweep points differ only in the
swept parameter.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .estimator import (
    DDEstimate,
    build_dictionary,
    gain_entry_samples,
    matched_filter_fast,
    matched_filter_naive,
)
from .grid import SystemConfig, Tap, TapChannel, taps_to_scene
from .metrics import TrialMetrics, image_snr, pslr, rmse
from .modem import apply_channel_dd, gen_qpsk_frame
from .ofdm import OfdmConfig, RangeDopplerMap, ofdm_radar_pipeline, peak_bin

SYSTEMS = ("otfs", "ofdm")


@dataclass(frozen=True)
class Scenario:
    """One radar scene: grid parameters, tap channel and OFDM baseline settings.

    The first tap is the reference target for error metrics.
    """

    cfg: SystemConfig
    taps: TapChannel
    ofdm: OfdmConfig | None = None

    def __post_init__(self) -> None:
        if len(self.taps) == 0:
            raise ValueError("scenario needs at least one tap")
        self.taps.validate(self.cfg)

    @property
    def ofdm_cfg(self) -> OfdmConfig:
        if self.ofdm is None:
            return OfdmConfig.from_system(self.cfg)
        return replace(self.ofdm, noise_variance=self.cfg.noise_variance, symbol_power=self.cfg.symbol_power)

    @property
    def truth(self) -> Tap:
        return self.taps.taps[0]

    def with_doppler_tap(self, doppler_tap: int) -> "Scenario":
        """Move the reference target to signed Doppler tap ``doppler_tap``."""
        first = self.truth
        moved = Tap(int(doppler_tap) % self.cfg.num_doppler_bins, first.l, first.gain)
        others = [t for t in self.taps.taps[1:] if (t.k, t.l) != (moved.k, moved.l)]
        return replace(self, taps=TapChannel((moved, *others)))

    def with_snr_db(self, snr_db: float) -> "Scenario":
        return replace(self, cfg=self.cfg.with_snr_db(snr_db))


def trial_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (frame, noise) generators derived from one trial seed."""
    frame_ss, noise_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(frame_ss), np.random.default_rng(noise_ss)


def simulate_otfs(scenario: Scenario, seed: int) -> tuple[DDEstimate, np.ndarray]:
    """Transmit a random frame, reflect it, and run the matched filter."""
    cfg = scenario.cfg
    frame_rng, noise_rng = trial_streams(seed)
    x = gen_qpsk_frame(cfg, frame_rng)
    y = apply_channel_dd(x, scenario.taps, cfg, noise_rng if cfg.noise_variance > 0 else None)
    return matched_filter_fast(y, x, cfg), x


def simulate_ofdm(scenario: Scenario, seed: int) -> RangeDopplerMap:
    ocfg = scenario.ofdm_cfg
    frame_rng, noise_rng = trial_streams(seed)
    symbols = gen_qpsk_frame(ocfg.system, frame_rng)
    return ofdm_radar_pipeline(symbols, scenario.taps, ocfg, noise_rng if ocfg.noise_variance > 0 else None)


def _truth_physical(scenario: Scenario) -> tuple[float, float]:
    t = taps_to_scene([scenario.truth], scenario.cfg)[0]
    return t.range_m, t.velocity_m_s


def otfs_metrics(est: DDEstimate, scenario: Scenario, seed: int, parameter: float = 0.0) -> TrialMetrics:
    k, l = est.argmax
    found = taps_to_scene([Tap(k, l)], scenario.cfg)[0]
    r_true, v_true = _truth_physical(scenario)
    return TrialMetrics(
        system="otfs",
        seed=int(seed),
        parameter=float(parameter),
        range_error_m=found.range_m - r_true,
        velocity_error_m_s=found.velocity_m_s - v_true,
        pslr_db=pslr(est.grid),
        image_snr_db=image_snr(est, (scenario.truth.k, scenario.truth.l)),
        range_est_m=found.range_m,
        velocity_est_m_s=found.velocity_m_s,
    )


def ofdm_metrics(rd: RangeDopplerMap, scenario: Scenario, seed: int, parameter: float = 0.0) -> TrialMetrics:
    """Errors of the periodogram peak; image SNR is measured at that peak."""
    k, l = peak_bin(rd)
    r_est = float(rd.range_axis_m[l])
    v_est = float(rd.velocity_axis_m_s[k])
    r_true, v_true = _truth_physical(scenario)
    return TrialMetrics(
        system="ofdm",
        seed=int(seed),
        parameter=float(parameter),
        range_error_m=r_est - r_true,
        velocity_error_m_s=v_est - v_true,
        pslr_db=pslr(rd.magnitude),
        image_snr_db=image_snr(rd, (k, l)),
        range_est_m=r_est,
        velocity_est_m_s=v_est,
    )


def run_trial(system: str, scenario: Scenario, seed: int, parameter: float = 0.0) -> TrialMetrics:
    if system == "otfs":
        est, _ = simulate_otfs(scenario, seed)
        return otfs_metrics(est, scenario, seed, parameter)
    if system == "ofdm":
        return ofdm_metrics(simulate_ofdm(scenario, seed), scenario, seed, parameter)
    raise ValueError(f"unknown system {system!r}; expected one of {SYSTEMS}")


def _run_job(job) -> TrialMetrics:
    return run_trial(*job)


def parallel_map(fn: Callable, jobs: Sequence, workers: int = 1) -> list:
    """Ordered map, optionally over a process pool."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_trials(
    systems: Iterable[str],
    scenario: Scenario,
    trials: int,
    base_seed: int = 0,
    parameter: float = 0.0,
    workers: int = 1,
) -> list[TrialMetrics]:
    jobs = [(s, scenario, base_seed + i, parameter) for s in systems for i in range(trials)]
    return parallel_map(_run_job, jobs, workers)


@dataclass(frozen=True)
class SweepPoint:
    system: str
    parameter: float
    trials: int
    seed_first: int
    seed_last: int
    velocity_rmse_m_s: float
    range_rmse_m: float
    mean_pslr_db: float
    mean_image_snr_db: float

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(system: str, parameter: float, rows: Sequence[TrialMetrics]) -> SweepPoint:
    return SweepPoint(
        system=system,
        parameter=float(parameter),
        trials=len(rows),
        seed_first=min(r.seed for r in rows),
        seed_last=max(r.seed for r in rows),
        velocity_rmse_m_s=rmse([r.velocity_error_m_s for r in rows]),
        range_rmse_m=rmse([r.range_error_m for r in rows]),
        mean_pslr_db=float(np.mean([r.pslr_db for r in rows])),
        mean_image_snr_db=float(np.mean([r.image_snr_db for r in rows])),
    )


def _sweep(
    systems: Sequence[str],
    scenarios: Sequence[tuple[float, Scenario]],
    trials: int,
    base_seed: int,
    workers: int,
) -> tuple[list[SweepPoint], list[TrialMetrics]]:
    if len(scenarios) == 0:
        raise ValueError("sweep has no points")
    jobs = [
        (system, sc, base_seed + i, param)
        for param, sc in scenarios
        for system in systems
        for i in range(trials)
    ]
    rows = parallel_map(_run_job, jobs, workers)
    points = []
    for param, _ in scenarios:
        for system in systems:
            sel = [r for r in rows if r.system == system and r.parameter == float(param)]
            points.append(summarize(system, param, sel))
    return points, rows


def rmse_sweep(
    systems: str | Sequence[str],
    velocity_taps: Sequence[int],
    trials: int,
    scenario: Scenario,
    base_seed: int = 0,
    workers: int = 1,
) -> tuple[list[SweepPoint], list[TrialMetrics]]:
    """Velocity RMSE versus target Doppler tap (signed integer multiples of the velocity resolution)."""
    systems = [systems] if isinstance(systems, str) else list(systems)
    for v in velocity_taps:
        if int(v) != v:
            raise ValueError(f"velocity sweep values must be integer Doppler taps, got {v!r}")
    scenarios = [(int(v), scenario.with_doppler_tap(int(v))) for v in velocity_taps]
    return _sweep(systems, scenarios, trials, base_seed, workers)


def snr_sweep(
    systems: str | Sequence[str],
    snrs_db: Sequence[float],
    trials: int,
    scenario: Scenario,
    base_seed: int = 0,
    workers: int = 1,
) -> tuple[list[SweepPoint], list[TrialMetrics]]:
    """PSLR and image SNR versus ``P_s / sigma^2``."""
    systems = [systems] if isinstance(systems, str) else list(systems)
    scenarios = [(float(s), scenario.with_snr_db(float(s))) for s in snrs_db]
    return _sweep(systems, scenarios, trials, base_seed, workers)


@dataclass
class LemmaReport:
    """Diagonal exactness and off-diagonal moment checks on the gain matrix."""

    cfg: SystemConfig
    trials: int
    seed: int
    diag_max_abs_error: float
    pairs: list[tuple[int, int]]
    means: list[complex]
    variances: list[float]
    mean_bound: float
    variance_target: float
    variance_rtol: float

    @property
    def diag_ok(self) -> bool:
        mn_ps = self.cfg.num_delay_bins * self.cfg.num_doppler_bins * self.cfg.symbol_power
        return self.diag_max_abs_error <= 1e-9 * mn_ps

    @property
    def mean_ok(self) -> list[bool]:
        return [abs(m) < self.mean_bound for m in self.means]

    @property
    def variance_ok(self) -> list[bool]:
        return [abs(v - self.variance_target) <= self.variance_rtol * self.variance_target for v in self.variances]

    @property
    def passed(self) -> bool:
        return self.diag_ok and all(self.mean_ok) and all(self.variance_ok)

    def lines(self) -> list[str]:
        def flag(ok):
            return "PASS" if ok else "FAIL"

        out = [f"{flag(self.diag_ok)} diagonal G[i,i] = MN*P_s (max abs error {self.diag_max_abs_error:.3e})"]
        for (i, j), m, v, mok, vok in zip(self.pairs, self.means, self.variances, self.mean_ok, self.variance_ok):
            out.append(
                f"{flag(mok and vok)} G[{i},{j}]: |mean| = {abs(m):.4f} (< {self.mean_bound:.4f}), "
                f"var = {v:.3f} (target {self.variance_target:.3f} +/- {100 * self.variance_rtol:.0f}%)"
            )
        return out


def diagonal_gain_error(x: np.ndarray, cfg: SystemConfig) -> float:
    """Max ``|G[i,i] - MN P_s|`` over all columns, computed from column norms."""
    target = cfg.num_delay_bins * cfg.num_doppler_bins * cfg.symbol_power
    worst = 0.0
    for _, block in build_dictionary(x, cfg).blocks(512):
        worst = max(worst, float(np.max(np.abs(np.sum(np.abs(block) ** 2, axis=0) - target))))
    return worst


def lemma_check(
    cfg: SystemConfig,
    trials: int = 10_000,
    seed: int = 0,
    num_pairs: int = 10,
    diag_frames: int = 20,
    variance_rtol: float = 0.05,
) -> LemmaReport:
    """Check the diagonal identity and the off-diagonal mean/variance of ``G``."""
    rng = np.random.default_rng(seed)
    mn = cfg.num_delay_bins * cfg.num_doppler_bins
    diag_err = max(diagonal_gain_error(gen_qpsk_frame(cfg, rng), cfg) for _ in range(diag_frames))
    pairs: list[tuple[int, int]] = []
    while len(pairs) < num_pairs:
        i, j = (int(v) for v in rng.integers(0, mn, size=2))
        if i != j and (i, j) not in pairs:
            pairs.append((i, j))
    samples = gain_entry_samples(cfg, trials, pairs, rng)
    var_target = mn * cfg.symbol_power ** 2
    return LemmaReport(
        cfg=cfg,
        trials=trials,
        seed=seed,
        diag_max_abs_error=diag_err,
        pairs=pairs,
        means=[complex(m) for m in samples.mean(axis=0)],
        variances=[float(v) for v in np.var(samples, axis=0)],
        mean_bound=5.0 * np.sqrt(var_target / trials),
        variance_target=var_target,
        variance_rtol=variance_rtol,
    )


def time_matched_filters(cfg: SystemConfig, seed: int = 0, repeats: int = 1) -> dict:
    """Wall-clock seconds of the naive and fast matched filters on one frame."""
    frame_rng, noise_rng = trial_streams(seed)
    x = gen_qpsk_frame(cfg, frame_rng)
    y = x + 0.1 * gen_qpsk_frame(cfg, noise_rng)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fast = matched_filter_fast(y, x, cfg)
    t_fast = (time.perf_counter() - t0) / repeats
    t0 = time.perf_counter()
    naive = matched_filter_naive(y, build_dictionary(x, cfg), block_size=512)
    t_naive = time.perf_counter() - t0
    return {
        "M": cfg.num_delay_bins,
        "N": cfg.num_doppler_bins,
        "naive_s": t_naive,
        "fast_s": t_fast,
        "speedup": t_naive / t_fast,
        "max_abs_diff": float(np.max(np.abs(naive.grid - fast.grid))),
    }
