"""Conventional OFDM radar baseline (element-wise division periodogram).

The waveform carries one cyclic prefix per symbol and passes through the same
sampled delay-Doppler channel as the OTFS waveform, so Doppler-induced
inter-carrier interference arises from the physics rather than a model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy.signal import get_window

from .errors import DelayExceedsCpError, DimensionMismatchError
from .grid import SPEED_OF_LIGHT, SystemConfig, TapChannel, signed_doppler_index
from .modem import TimeSignal, apply_channel_time


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM radar parameters.

    ``doppler_axis`` selects how Doppler bins are converted to velocity:
    ``"nominal"`` uses the CP-free symbol duration ``1/df`` (the same
    resolution as the OTFS grid); ``"cp_aware"`` uses the true symbol period
    ``(N_c + L) / (N_c df)``. With ``"nominal"`` a per-symbol CP scales the
    reported velocity by ``1 + L/N_c``.
    """

    num_subcarriers: int = 256
    num_symbols: int = 64
    subcarrier_spacing_hz: float = 10e6 / 256
    cp_length_samples: int = 64
    carrier_freq_hz: float = 24e9
    symbol_power: float = 1.0
    noise_variance: float = 0.1
    speed_of_light_m_s: float = SPEED_OF_LIGHT
    window: str | None = None
    range_oversample: int = 1
    doppler_oversample: int = 1
    doppler_axis: str = "nominal"

    def __post_init__(self) -> None:
        if self.num_subcarriers < 1 or self.num_symbols < 1:
            raise ValueError("num_subcarriers and num_symbols must be >= 1")
        if not 0 <= self.cp_length_samples < self.num_subcarriers:
            raise ValueError("cp_length_samples must satisfy 0 <= L < num_subcarriers")
        if self.range_oversample < 1 or self.doppler_oversample < 1:
            raise ValueError("oversampling factors must be >= 1")
        if self.doppler_axis not in ("nominal", "cp_aware"):
            raise ValueError(f"doppler_axis must be 'nominal' or 'cp_aware', got {self.doppler_axis!r}")

    @classmethod
    def from_system(cls, cfg: SystemConfig, cp_length_samples: int | None = None, **options) -> "OfdmConfig":
        """Matched parameters: ``N_c = M``, ``N_s = N``, same spacing, carrier and noise."""
        return cls(
            num_subcarriers=cfg.num_delay_bins,
            num_symbols=cfg.num_doppler_bins,
            subcarrier_spacing_hz=cfg.subcarrier_spacing_hz,
            cp_length_samples=cfg.cp_length_samples if cp_length_samples is None else cp_length_samples,
            carrier_freq_hz=cfg.carrier_freq_hz,
            symbol_power=cfg.symbol_power,
            noise_variance=cfg.noise_variance,
            speed_of_light_m_s=cfg.speed_of_light_m_s,
            **options,
        )

    @property
    def system(self) -> SystemConfig:
        """Equivalent grid description used by the shared channel model."""
        return SystemConfig(
            carrier_freq_hz=self.carrier_freq_hz,
            bandwidth_hz=self.num_subcarriers * self.subcarrier_spacing_hz,
            num_delay_bins=self.num_subcarriers,
            num_doppler_bins=self.num_symbols,
            symbol_power=self.symbol_power,
            noise_variance=self.noise_variance,
            cp_length_samples=self.cp_length_samples,
            speed_of_light_m_s=self.speed_of_light_m_s,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.num_symbols, self.num_subcarriers)

    @property
    def total_samples(self) -> int:
        return self.num_symbols * (self.num_subcarriers + self.cp_length_samples)


@dataclass(frozen=True)
class RangeDopplerMap:
    """Periodogram magnitudes indexed ``[doppler_bin, range_bin]``."""

    magnitude: np.ndarray
    range_axis_m: np.ndarray
    velocity_axis_m_s: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.magnitude.shape


def ofdm_modulate(symbols: np.ndarray, cfg: OfdmConfig) -> TimeSignal:
    """Per-symbol unitary IDFT plus a cyclic prefix of ``L`` samples each."""
    symbols = np.asarray(symbols)
    if symbols.shape != cfg.shape:
        raise DimensionMismatchError(f"symbol grid shape {symbols.shape} != (N_s, N_c) = {cfg.shape}")
    L = cfg.cp_length_samples
    body = sp_fft.ifft(symbols, axis=-1, norm="ortho")
    with_cp = np.concatenate([body[:, body.shape[1] - L:], body], axis=1)
    return TimeSignal(with_cp.reshape(-1), 1.0 / (cfg.num_subcarriers * cfg.subcarrier_spacing_hz), L, L)


def ofdm_demodulate(r: TimeSignal, cfg: OfdmConfig) -> np.ndarray:
    """Drop each CP and return the per-symbol unitary DFT, shape ``(N_s, N_c)``."""
    if len(r) != cfg.total_samples:
        raise DimensionMismatchError(f"expected {cfg.total_samples} samples, got {len(r)}")
    L = cfg.cp_length_samples
    blocks = r.samples.reshape(cfg.num_symbols, cfg.num_subcarriers + L)[:, L:]
    return sp_fft.fft(blocks, axis=-1, norm="ortho")


def _axes(cfg: OfdmConfig) -> tuple[np.ndarray, np.ndarray]:
    c = cfg.speed_of_light_m_s
    n_range = cfg.num_subcarriers * cfg.range_oversample
    n_dopp = cfg.num_symbols * cfg.doppler_oversample
    bandwidth = cfg.num_subcarriers * cfg.subcarrier_spacing_hz
    range_axis = c * np.arange(n_range) / cfg.range_oversample / (2.0 * bandwidth)
    symbol_period = 1.0 / cfg.subcarrier_spacing_hz
    if cfg.doppler_axis == "cp_aware":
        symbol_period *= 1.0 + cfg.cp_length_samples / cfg.num_subcarriers
    doppler_hz = signed_doppler_index(np.arange(n_dopp), n_dopp) / (n_dopp * symbol_period)
    velocity_axis = c * np.asarray(doppler_hz, dtype=float) / (2.0 * cfg.carrier_freq_hz)
    return range_axis, velocity_axis


def periodogram(received: np.ndarray, symbols: np.ndarray, cfg: OfdmConfig) -> RangeDopplerMap:
    """Divide by the transmitted symbols, IDFT over subcarriers, DFT over symbols.

    Magnitudes are scaled so a noiseless unit-gain reflector with no Doppler
    gives a peak of exactly 1.
    """
    assert np.all(np.abs(symbols) > 0), "transmitted symbols must be nonzero"
    div = received / symbols
    n_s, n_c = cfg.shape
    if cfg.window is not None:
        div = div * get_window(cfg.window, n_c, fftbins=True)[None, :]
        div = div * get_window(cfg.window, n_s, fftbins=True)[:, None]
    n_range = n_c * cfg.range_oversample
    n_dopp = n_s * cfg.doppler_oversample
    rng_profile = sp_fft.ifft(div, n=n_range, axis=1) * (n_range / n_c)
    rd = sp_fft.fft(rng_profile, n=n_dopp, axis=0) / n_s
    range_axis, velocity_axis = _axes(cfg)
    return RangeDopplerMap(np.abs(rd), range_axis, velocity_axis)


def ofdm_radar_pipeline(symbols: np.ndarray, taps: TapChannel, cfg: OfdmConfig, noise_seed=None) -> RangeDopplerMap:
    """Transmit, reflect, receive and form the range-Doppler periodogram.

    Raises
    ------
    DelayExceedsCpError
        If a tap delay is longer than the per-symbol cyclic prefix.
    """
    if taps.max_delay > cfg.cp_length_samples:
        raise DelayExceedsCpError(
            f"delay tap {taps.max_delay} exceeds OFDM cyclic prefix of {cfg.cp_length_samples} samples"
        )
    s = ofdm_modulate(symbols, cfg)
    r = apply_channel_time(s, taps, cfg.system, noise_seed)
    return periodogram(ofdm_demodulate(r, cfg), symbols, cfg)


def estimate_target_ofdm(rd_map: RangeDopplerMap, cfg: OfdmConfig | None = None) -> tuple[float, float]:
    """Range and velocity of the global periodogram peak.

    Ties resolve to the lowest range bin, then the lowest Doppler bin.
    """
    mag = rd_map.magnitude
    if mag.size == 0:
        raise ValueError("empty range-Doppler map")
    flat = int(np.argmax(mag.T))
    l, k = np.unravel_index(flat, mag.T.shape)
    return float(rd_map.range_axis_m[l]), float(rd_map.velocity_axis_m_s[k])


def peak_bin(rd_map: RangeDopplerMap) -> tuple[int, int]:
    """``(doppler_bin, range_bin)`` of the peak, same tie-break as :func:`estimate_target_ofdm`."""
    l, k = np.unravel_index(int(np.argmax(rd_map.magnitude.T)), rd_map.magnitude.T.shape)
    return int(k), int(l)


def ici_power_fraction(symbols: np.ndarray, taps: TapChannel, cfg: OfdmConfig) -> float:
    """Fraction of noiseless range-profile power outside the true delay bins.

    Without Doppler every symbol's range profile is a pure impulse at each
    reflector delay; power leaking elsewhere is inter-carrier interference.
    """
    s = ofdm_modulate(symbols, cfg)
    r = apply_channel_time(s, taps, cfg.system)
    div = ofdm_demodulate(r, cfg) / symbols
    profile = np.abs(sp_fft.ifft(div, axis=1)) ** 2
    total = profile.sum()
    if total == 0:
        return 0.0
    on_target = profile[:, sorted({t.l for t in taps})].sum()
    return float(1.0 - on_target / total)
