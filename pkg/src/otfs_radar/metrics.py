"""Radar figures of merit: profile cuts, PSLR, image SNR, RMSE, frame length."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateGridError
from .estimator import DDEstimate
from .grid import SystemConfig, range_of_delay_bin, velocity_of_doppler_bin
from .ofdm import RangeDopplerMap

DB_FLOOR = -300.0


@dataclass(frozen=True)
class ProfileCut:
    """1-D slice through a map peak; ``values_db`` is 0 dB at the peak."""

    axis: np.ndarray
    values_db: np.ndarray
    axis_label: str


@dataclass(frozen=True)
class TrialMetrics:
    system: str
    seed: int
    parameter: float
    range_error_m: float
    velocity_error_m_s: float
    pslr_db: float
    image_snr_db: float
    range_est_m: float
    velocity_est_m_s: float

    def to_dict(self) -> dict:
        return asdict(self)


def to_db(magnitude: np.ndarray, reference: float) -> np.ndarray:
    """``20 log10(|m| / reference)`` floored at :data:`DB_FLOOR`."""
    magnitude = np.abs(np.asarray(magnitude))
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(magnitude / reference)
    return np.maximum(db, DB_FLOOR)


def _magnitude_and_axes(est):
    if isinstance(est, DDEstimate):
        n, m = est.grid.shape
        return (
            np.abs(est.grid),
            range_of_delay_bin(np.arange(m), est.cfg),
            velocity_of_doppler_bin(np.arange(n), est.cfg),
        )
    if isinstance(est, RangeDopplerMap):
        return est.magnitude, est.range_axis_m, est.velocity_axis_m_s
    raise TypeError(f"expected DDEstimate or RangeDopplerMap, got {type(est).__name__}")


def profile_cuts(est: DDEstimate | RangeDopplerMap, peak: tuple[int, int] | None = None) -> tuple[ProfileCut, ProfileCut]:
    """Range and velocity cuts through ``peak`` (``(doppler_bin, range_bin)``).

    The velocity cut is reordered by increasing velocity. When ``peak`` is
    omitted the global maximum is used.
    """
    mag, range_axis, velocity_axis = _magnitude_and_axes(est)
    if peak is None:
        k, l = np.unravel_index(int(np.argmax(mag)), mag.shape)
    else:
        k, l = peak
    ref = mag[k, l]
    if ref == 0:
        raise ValueError("peak bin has zero magnitude")
    order = np.argsort(velocity_axis, kind="stable")
    range_cut = ProfileCut(np.asarray(range_axis), to_db(mag[k, :], ref), "range_m")
    doppler_cut = ProfileCut(np.asarray(velocity_axis)[order], to_db(mag[:, l], ref)[order], "velocity_m_s")
    return range_cut, doppler_cut


def pslr(grid: np.ndarray) -> float:
    """Peak-to-maximum-sidelobe ratio in dB; every non-peak bin is a sidelobe.

    Raises
    ------
    DegenerateGridError
        For grids with fewer than two bins.
    """
    mag = np.abs(np.asarray(grid)).ravel()
    if mag.size < 2:
        raise DegenerateGridError("PSLR needs at least two bins")
    i = int(np.argmax(mag))
    peak = mag[i]
    side = np.max(np.delete(mag, i))
    if side == 0:
        return math.inf
    if peak == 0:
        return 0.0
    return float(20.0 * np.log10(peak / side))


def image_snr(est: DDEstimate | RangeDopplerMap | np.ndarray, true_bin: tuple[int, int]) -> float:
    """Power at ``true_bin`` over the mean power of all other bins, in dB."""
    if isinstance(est, DDEstimate):
        power = est.power
    elif isinstance(est, RangeDopplerMap):
        power = est.magnitude ** 2
    else:
        power = np.abs(np.asarray(est)) ** 2
    k, l = true_bin
    peak = power[k, l]
    rest = (power.sum() - peak) / (power.size - 1)
    if rest == 0:
        return math.inf
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(peak / rest))


def rmse(errors) -> float:
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("rmse of an empty sequence")
    return float(np.sqrt(np.mean(errors ** 2)))


@dataclass(frozen=True)
class FrameDurations:
    otfs_samples: int
    ofdm_samples: int
    saved_samples: int


def frame_duration_report(cfg: SystemConfig) -> FrameDurations:
    """Sample counts of a single-CP OTFS frame and a per-symbol-CP OFDM frame.

    Both carry ``N`` blocks of ``M`` samples with the same prefix length
    ``L``; OTFS spends one prefix, OFDM one per symbol, so OTFS saves
    ``(N - 1) L`` samples.
    """
    M, N, L = cfg.num_delay_bins, cfg.num_doppler_bins, cfg.cp_length_samples
    return FrameDurations(otfs_samples=N * M + L, ofdm_samples=N * (M + L), saved_samples=(N - 1) * L)
