"""System parameters, delay-Doppler grid geometry and target/tap conversions.

Grid index convention used throughout the package: a delay-Doppler array has
shape ``(N, M)`` and is indexed ``[k, l]`` with ``k`` the Doppler bin
(``0..N-1``) and ``l`` the delay bin (``0..M-1``). Flattened vectors use
position ``k + N*l`` (i.e. Fortran order of the ``(N, M)`` array).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Literal, Sequence

import numpy as np

from .errors import ConfigError, NonIntegerTapError, OutOfAmbiguityRangeError

log = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
#: Rounded value under which the 24 GHz / 10 MHz preset has exact 15 m / 3840 m
#: range figures.
ROUNDED_SPEED_OF_LIGHT = 3.0e8

INTEGER_TAP_TOL = 1e-6
_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class SystemConfig:
    """Carrier, bandwidth and grid parameters of one radar frame.

    ``num_delay_bins`` (M) equals the number of subcarriers and
    ``num_doppler_bins`` (N) the number of symbols per frame. The subcarrier
    spacing, symbol duration and frame duration are derived so that
    ``subcarrier_spacing_hz * symbol_duration_s == 1``.
    """

    carrier_freq_hz: float = 24e9
    bandwidth_hz: float = 10e6
    num_delay_bins: int = 256
    num_doppler_bins: int = 64
    symbol_power: float = 1.0
    noise_variance: float = 0.1
    cp_length_samples: int = 64
    speed_of_light_m_s: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if int(self.num_delay_bins) != self.num_delay_bins or self.num_delay_bins < 1:
            raise ConfigError(f"num_delay_bins must be a positive integer, got {self.num_delay_bins!r}")
        if int(self.num_doppler_bins) != self.num_doppler_bins or self.num_doppler_bins < 1:
            raise ConfigError(f"num_doppler_bins must be a positive integer, got {self.num_doppler_bins!r}")
        if int(self.cp_length_samples) != self.cp_length_samples:
            raise ConfigError(f"cp_length_samples must be an integer, got {self.cp_length_samples!r}")
        if not 0 <= self.cp_length_samples < self.num_delay_bins:
            raise ConfigError(
                f"cp_length_samples must satisfy 0 <= L < M={self.num_delay_bins}, "
                f"got {self.cp_length_samples}"
            )
        if not self.symbol_power > 0:
            raise ConfigError(f"symbol_power must be > 0, got {self.symbol_power!r}")
        if not self.noise_variance >= 0:
            raise ConfigError(f"noise_variance must be >= 0, got {self.noise_variance!r}")
        for name in ("carrier_freq_hz", "bandwidth_hz", "speed_of_light_m_s"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        object.__setattr__(self, "num_delay_bins", int(self.num_delay_bins))
        object.__setattr__(self, "num_doppler_bins", int(self.num_doppler_bins))
        object.__setattr__(self, "cp_length_samples", int(self.cp_length_samples))

    @classmethod
    def automotive_24ghz(cls, **overrides) -> "SystemConfig":
        """24 GHz carrier, 10 MHz bandwidth, 256 subcarriers x 64 symbols, 10 dB SNR.

        Uses ``c = 3e8`` so the range resolution (15 m) and unambiguous range
        (3840 m) come out exact and a 975 m target sits on delay tap 65.
        """
        params = dict(speed_of_light_m_s=ROUNDED_SPEED_OF_LIGHT)
        params.update(overrides)
        return cls(**params)

    # aliases matching the usual symbols
    @property
    def M(self) -> int:
        return self.num_delay_bins

    @property
    def N(self) -> int:
        return self.num_doppler_bins

    @property
    def L(self) -> int:
        return self.cp_length_samples

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.bandwidth_hz / self.num_delay_bins

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / self.subcarrier_spacing_hz

    @property
    def frame_duration_s(self) -> float:
        return self.num_doppler_bins * self.symbol_duration_s

    @property
    def sample_period_s(self) -> float:
        """Waveform sample spacing, one sample per delay bin."""
        return 1.0 / self.bandwidth_hz

    @property
    def shape(self) -> tuple[int, int]:
        """Shape ``(N, M)`` of delay-Doppler and time-frequency grids."""
        return (self.num_doppler_bins, self.num_delay_bins)

    @property
    def snr_db(self) -> float:
        if self.noise_variance == 0:
            return math.inf
        return 10.0 * math.log10(self.symbol_power / self.noise_variance)

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        """Copy with the noise variance set from ``P_s / sigma^2`` in dB."""
        if math.isinf(snr_db) and snr_db > 0:
            return replace(self, noise_variance=0.0)
        return replace(self, noise_variance=self.symbol_power * 10.0 ** (-snr_db / 10.0))

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class GridResolutions:
    """Derived resolution and ambiguity figures.

    Detectable delays lie in ``(0, max_delay_s]`` and Doppler shifts in
    ``(-max_doppler_hz, max_doppler_hz]``.
    """

    delay_res_s: float
    doppler_res_hz: float
    range_res_m: float
    velocity_res_m_s: float
    max_unambiguous_range_m: float
    max_unambiguous_velocity_m_s: float
    max_delay_s: float
    max_doppler_hz: float


def derive_resolutions(cfg: SystemConfig) -> GridResolutions:
    """Resolution and ambiguity figures of ``cfg``.

    Returns
    -------
    GridResolutions
        ``range_res_m = c / (2B)``, ``velocity_res_m_s = c / (2 f_c N T)``,
        ``max_unambiguous_range_m = c / (2 df)`` and
        ``max_unambiguous_velocity_m_s = c df / (4 f_c)``.
    """
    c = cfg.speed_of_light_m_s
    df = cfg.subcarrier_spacing_hz
    return GridResolutions(
        delay_res_s=1.0 / (cfg.num_delay_bins * df),
        doppler_res_hz=1.0 / (cfg.num_doppler_bins * cfg.symbol_duration_s),
        range_res_m=c / (2.0 * cfg.bandwidth_hz),
        velocity_res_m_s=c / (2.0 * cfg.carrier_freq_hz * cfg.num_doppler_bins * cfg.symbol_duration_s),
        max_unambiguous_range_m=c / (2.0 * df),
        max_unambiguous_velocity_m_s=c * df / (4.0 * cfg.carrier_freq_hz),
        max_delay_s=1.0 / df,
        max_doppler_hz=1.0 / (2.0 * cfg.symbol_duration_s),
    )


def signed_doppler_index(k, n: int):
    """Map Doppler bin ``k`` in ``[0, N-1]`` to ``k`` if ``k <= N/2`` else ``k - N``.

    Works elementwise on arrays.
    """
    k = np.asarray(k)
    out = np.where(k <= n / 2, k, k - n)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class Target:
    """Point reflector with signed radial velocity and complex reflection gain."""

    range_m: float
    velocity_m_s: float
    gain: complex = 1.0 + 0.0j

    def delay_s(self, cfg: SystemConfig) -> float:
        return 2.0 * self.range_m / cfg.speed_of_light_m_s

    def doppler_hz(self, cfg: SystemConfig) -> float:
        return 2.0 * cfg.carrier_freq_hz * self.velocity_m_s / cfg.speed_of_light_m_s


@dataclass(frozen=True)
class Tap:
    doppler_index: int
    delay_index: int
    gain: complex = 1.0 + 0.0j

    @property
    def k(self) -> int:
        return self.doppler_index

    @property
    def l(self) -> int:  # noqa: E743
        return self.delay_index


@dataclass(frozen=True)
class TapChannel:
    """Integer-grid channel: a set of ``(k, l, h[k,l])`` taps.

    ``residuals`` holds, per source target, the ``(delay, doppler)``
    quantization error in units of grid bins when the channel was built by
    nearest-tap rounding.
    """

    taps: tuple[Tap, ...] = ()
    residuals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        taps = tuple(t if isinstance(t, Tap) else Tap(*t) for t in self.taps)
        seen = set()
        for t in taps:
            if t.k < 0 or t.l < 0:
                raise ValueError(f"tap indices must be non-negative, got {t}")
            key = (t.k, t.l)
            if key in seen:
                raise ValueError(f"duplicate tap at (k={t.k}, l={t.l})")
            seen.add(key)
        object.__setattr__(self, "taps", taps)

    @classmethod
    def from_tuples(cls, items: Iterable[Sequence]) -> "TapChannel":
        return cls(tuple(Tap(int(k), int(l), complex(g)) for k, l, g in items))

    def __iter__(self) -> Iterator[Tap]:
        return iter(self.taps)

    def __len__(self) -> int:
        return len(self.taps)

    @property
    def max_delay(self) -> int:
        return max((t.l for t in self.taps), default=0)

    def validate(self, cfg: SystemConfig) -> None:
        for t in self.taps:
            if t.k >= cfg.num_doppler_bins or t.l >= cfg.num_delay_bins:
                raise ValueError(f"tap {t} outside grid N={cfg.num_doppler_bins}, M={cfg.num_delay_bins}")

    def as_grid(self, cfg: SystemConfig) -> np.ndarray:
        """Dense ``h[k, l]`` array of shape ``(N, M)``."""
        self.validate(cfg)
        h = np.zeros(cfg.shape, dtype=complex)
        for t in self.taps:
            h[t.k, t.l] = t.gain
        return h


def scene_to_taps(
    scene: Sequence[Target],
    cfg: SystemConfig,
    mode: Literal["exact", "nearest"] = "exact",
) -> TapChannel:
    """Quantize physical targets onto the delay-Doppler grid.

    Parameters
    ----------
    scene : sequence of Target
    cfg : SystemConfig
    mode : {"exact", "nearest"}
        ``exact`` rejects targets more than ``1e-6`` bins away from an
        integer tap; ``nearest`` rounds and records the residuals.

    Raises
    ------
    OutOfAmbiguityRangeError
        Range not in ``(0, R_max]`` or ``|V| > V_max``.
    NonIntegerTapError
        Off-grid target in ``exact`` mode.

    Notes
    -----
    A target exactly at ``R_max`` wraps to delay tap 0 and one at ``-V_max``
    to Doppler tap ``N/2`` (which reads back as ``+V_max``). Targets landing
    on the same bin are merged by summing their gains.
    """
    if mode not in ("exact", "nearest"):
        raise ValueError(f"mode must be 'exact' or 'nearest', got {mode!r}")
    res = derive_resolutions(cfg)
    M, N = cfg.num_delay_bins, cfg.num_doppler_bins
    gains: dict[tuple[int, int], complex] = {}
    residuals = []
    for i, tgt in enumerate(scene):
        r_max = res.max_unambiguous_range_m
        v_max = res.max_unambiguous_velocity_m_s
        if not (0 < tgt.range_m <= r_max * (1 + _BOUNDARY_RTOL)):
            raise OutOfAmbiguityRangeError(
                f"target {i}: range {tgt.range_m} m outside (0, {r_max:.6g}] m"
            )
        if abs(tgt.velocity_m_s) > v_max * (1 + _BOUNDARY_RTOL):
            raise OutOfAmbiguityRangeError(
                f"target {i}: velocity {tgt.velocity_m_s} m/s exceeds +/-{v_max:.6g} m/s"
            )
        delay_bins = tgt.delay_s(cfg) * cfg.bandwidth_hz
        doppler_bins = tgt.doppler_hz(cfg) * cfg.num_doppler_bins * cfg.symbol_duration_s
        l_round = round(delay_bins)
        k_round = round(doppler_bins)
        d_res = delay_bins - l_round
        v_res = doppler_bins - k_round
        if mode == "exact" and (abs(d_res) > INTEGER_TAP_TOL or abs(v_res) > INTEGER_TAP_TOL):
            raise NonIntegerTapError(
                f"target {i}: delay {delay_bins:.9g} / Doppler {doppler_bins:.9g} bins "
                "are not integers; use mode='nearest'"
            )
        key = (int(k_round) % N, int(l_round) % M)
        if key in gains:
            log.warning("targets merged on shared bin (k=%d, l=%d)", *key)
        gains[key] = gains.get(key, 0j) + complex(tgt.gain)
        residuals.append((float(d_res), float(v_res)))
    taps = tuple(Tap(k, l, g) for (k, l), g in gains.items())
    return TapChannel(taps, tuple(residuals) if mode == "nearest" else ())


def taps_to_scene(taps: TapChannel | Iterable[Tap], cfg: SystemConfig) -> list[Target]:
    """Physical targets for a tap channel.

    Delay tap 0 maps to range 0, which is not a physical target position but
    is kept so the mapping is total.
    """
    c = cfg.speed_of_light_m_s
    out = []
    for t in taps:
        r = c * t.l / (2.0 * cfg.bandwidth_hz)
        kn = signed_doppler_index(t.k, cfg.num_doppler_bins)
        v = c * kn / (2.0 * cfg.carrier_freq_hz * cfg.num_doppler_bins * cfg.symbol_duration_s)
        out.append(Target(float(r), float(v), complex(t.gain)))
    return out


def velocity_of_doppler_bin(k, cfg: SystemConfig, num_symbols: int | None = None):
    """Velocity in m/s of Doppler bin(s) ``k`` (signed via ``(k)_N``)."""
    n = cfg.num_doppler_bins if num_symbols is None else num_symbols
    kn = signed_doppler_index(k, n)
    return cfg.speed_of_light_m_s * np.asarray(kn, dtype=float) / (
        2.0 * cfg.carrier_freq_hz * n * cfg.symbol_duration_s
    )


def range_of_delay_bin(l, cfg: SystemConfig):
    return cfg.speed_of_light_m_s * np.asarray(l, dtype=float) / (2.0 * cfg.bandwidth_hz)
