"""OTFS frame generation, (I)SFFT, Heisenberg/Wigner transforms and channels.

All transforms use the unitary (``norm="ortho"``) DFT scaling. Delay-Doppler
and time-frequency grids are arrays of shape ``(..., N, M)``; leading axes are
treated as a batch.

Time indexing: sample ``q`` of a :class:`TimeSignal` sits at time
``(q - origin) * sample_period_s``. For an OTFS frame the origin is the first
sample after the cyclic prefix, so the prefix occupies negative times.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft_mod

from .errors import DelayExceedsCpError, DimensionMismatchError
from .grid import SystemConfig, TapChannel, signed_doppler_index

ALPHABETS = ("qpsk", "bpsk")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_grid(a: np.ndarray, cfg: SystemConfig | None, what: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim < 2:
        raise DimensionMismatchError(f"{what} must be at least 2-D, got shape {a.shape}")
    if cfg is not None and a.shape[-2:] != cfg.shape:
        raise DimensionMismatchError(f"{what} has shape {a.shape[-2:]}, expected (N, M) = {cfg.shape}")
    return a


def qpsk_symbols(shape, symbol_power: float, rng) -> np.ndarray:
    """I.i.d. QPSK symbols ``(+-1 +- 1j) * sqrt(P_s / 2)``."""
    rng = _rng(rng)
    bits = rng.integers(0, 2, size=(2,) + tuple(np.atleast_1d(shape)))
    amp = np.sqrt(symbol_power / 2.0)
    return amp * ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1]))


def gen_qpsk_frame(cfg: SystemConfig, seed=None, alphabet: str = "qpsk", batch: int | None = None) -> np.ndarray:
    """Random delay-Doppler frame ``x[k, l]`` of shape ``(N, M)``.

    Parameters
    ----------
    cfg : SystemConfig
    seed : int, Generator or None
        Same seed, same frame.
    alphabet : {"qpsk", "bpsk"}
        BPSK is accepted for comparison only: its symbols have
        ``E[x^2] != 0`` so the matched-filter sidelobe statistics differ.
    batch : int, optional
        If given, return ``batch`` independent frames stacked on axis 0.
    """
    rng = _rng(seed)
    shape = cfg.shape if batch is None else (batch,) + cfg.shape
    if alphabet == "qpsk":
        return qpsk_symbols(shape, cfg.symbol_power, rng)
    if alphabet == "bpsk":
        warnings.warn(
            "BPSK frames have E[x^2] != 0; off-diagonal gain statistics will not match the QPSK model",
            stacklevel=2,
        )
        signs = 1 - 2 * rng.integers(0, 2, size=shape)
        return np.sqrt(cfg.symbol_power) * signs.astype(complex)
    raise ValueError(f"unknown alphabet {alphabet!r}; expected one of {ALPHABETS}")


def isfft(dd: np.ndarray, cfg: SystemConfig | None = None) -> np.ndarray:
    """Delay-Doppler to time-frequency.

    ``X[n, m] = 1/sqrt(NM) sum_{k,l} x[k, l] exp(j 2 pi (n k / N - m l / M))``
    """
    dd = _check_grid(dd, cfg, "delay-Doppler frame")
    return sfft_mod.ifft(sfft_mod.fft(dd, axis=-1, norm="ortho"), axis=-2, norm="ortho")


def sfft(tf: np.ndarray, cfg: SystemConfig | None = None) -> np.ndarray:
    """Time-frequency to delay-Doppler; exact inverse of :func:`isfft`."""
    tf = _check_grid(tf, cfg, "time-frequency frame")
    return sfft_mod.fft(sfft_mod.ifft(tf, axis=-1, norm="ortho"), axis=-2, norm="ortho")


@dataclass(frozen=True)
class TimeSignal:
    """Sampled baseband waveform.

    ``cp_length`` is the cyclic-prefix length guarding each block (the whole
    frame for OTFS, every symbol for OFDM); ``origin`` is the sample index of
    time zero.
    """

    samples: np.ndarray
    sample_period_s: float
    cp_length: int
    origin: int

    def __len__(self) -> int:
        return self.samples.shape[-1]

    @property
    def body(self) -> np.ndarray:
        return self.samples[..., self.origin:]


def heisenberg(tf: np.ndarray, cfg: SystemConfig) -> TimeSignal:
    """Rectangular-pulse Heisenberg transform with a single frame-level CP.

    Each row ``X[n, :]`` becomes ``M`` samples via the unitary inverse DFT;
    the ``N`` blocks are concatenated and the last ``L`` samples of that
    ``NM``-sample body are prepended.
    """
    tf = _check_grid(tf, cfg, "time-frequency frame")
    blocks = sfft_mod.ifft(tf, axis=-1, norm="ortho")
    body = blocks.reshape(tf.shape[:-2] + (-1,))
    L = cfg.cp_length_samples
    samples = np.concatenate([body[..., body.shape[-1] - L:], body], axis=-1)
    return TimeSignal(samples, cfg.sample_period_s, L, L)


def wigner(r: TimeSignal, cfg: SystemConfig) -> np.ndarray:
    """Matched rectangular receive filter: drop the CP, per-block unitary DFT."""
    M, N, L = cfg.num_delay_bins, cfg.num_doppler_bins, cfg.cp_length_samples
    if len(r) != N * M + L:
        raise DimensionMismatchError(f"expected {N * M + L} samples, got {len(r)}")
    body = r.samples[..., L:]
    blocks = body.reshape(body.shape[:-1] + (N, M))
    return sfft_mod.fft(blocks, axis=-1, norm="ortho")


def complex_noise(shape, variance: float, rng) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|w|^2 = variance``."""
    rng = _rng(rng)
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel_time(s: TimeSignal, taps: TapChannel, cfg: SystemConfig, noise_seed=None) -> TimeSignal:
    """Integer delay-Doppler channel on a sampled waveform.

    ``r[q] = sum_taps h * s[q - l] * exp(j 2 pi nu (t_q - l T_s)) + w[q]`` with
    ``nu = (k)_N / (N T)`` and ``t_q`` the time of sample ``q``. Samples
    before the start of transmission are zero. Noise is added only when
    ``noise_seed`` is given.

    Raises
    ------
    DelayExceedsCpError
        If any tap delay exceeds the signal's cyclic-prefix length.
    """
    if taps.max_delay > s.cp_length:
        raise DelayExceedsCpError(f"delay tap {taps.max_delay} exceeds cyclic prefix of {s.cp_length} samples")
    taps.validate(cfg)
    n_samp = len(s)
    t = np.arange(n_samp) - s.origin
    out = np.zeros(s.samples.shape, dtype=complex)
    MN = cfg.num_delay_bins * cfg.num_doppler_bins
    for tap in taps:
        kn = signed_doppler_index(tap.k, cfg.num_doppler_bins)
        delayed = np.zeros_like(out)
        delayed[..., tap.l:] = s.samples[..., : n_samp - tap.l]
        phase = np.exp(2j * np.pi * kn * (t - tap.l) / MN)
        out += tap.gain * delayed * phase
    if noise_seed is not None:
        out += complex_noise(out.shape, cfg.noise_variance, noise_seed)
    return TimeSignal(out, s.sample_period_s, s.cp_length, s.origin)


def apply_channel_dd(x: np.ndarray, taps: TapChannel, cfg: SystemConfig, noise_seed=None) -> np.ndarray:
    """Exact delay-Doppler input-output relation for integer taps.

    ``y[k, l] = sum h[k', l'] exp(j 2 pi [l-l']_M (k')_N / (MN)) alpha
    x[[k-k']_N, [l-l']_M] + w[k, l]`` where ``alpha = exp(-j 2 pi k / N)``
    for ``l < l'`` and 1 otherwise. Noise ``CN(0, sigma^2)`` is added only
    when ``noise_seed`` is given.
    """
    x = _check_grid(x, cfg, "delay-Doppler frame")
    taps.validate(cfg)
    M, N = cfg.num_delay_bins, cfg.num_doppler_bins
    k = np.arange(N)[:, None]
    l = np.arange(M)[None, :]
    y = np.zeros(x.shape, dtype=complex)
    for tap in taps:
        kn = signed_doppler_index(tap.k, N)
        shifted = np.roll(x, (tap.k, tap.l), axis=(-2, -1))
        phase = np.exp(2j * np.pi * ((l - tap.l) % M) * kn / (M * N))
        alpha = np.where(l < tap.l, np.exp(-2j * np.pi * k / N), 1.0)
        y += tap.gain * phase * alpha * shifted
    if noise_seed is not None:
        y += complex_noise(y.shape, cfg.noise_variance, noise_seed)
    return y


def simulate_time_domain(x: np.ndarray, taps: TapChannel, cfg: SystemConfig, noise_seed=None) -> np.ndarray:
    """Full waveform chain: ISFFT, Heisenberg, channel, Wigner, SFFT."""
    s = heisenberg(isfft(x, cfg), cfg)
    r = apply_channel_time(s, taps, cfg, noise_seed)
    return sfft(wigner(r, cfg), cfg)
