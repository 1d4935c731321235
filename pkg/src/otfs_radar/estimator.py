"""Matched-filter delay-Doppler estimation and gain-matrix analysis.

The received frame is modelled as ``vec(y) = D vec(h) + vec(w)``, where the
dictionary ``D`` (MN x MN) holds phase-rotated cyclic shifts of the
transmitted frame and ``vec`` stacks ``[k, l]`` at position ``k + N*l``.
The matched filter is ``h_hat = D^H vec(y) / (MN P_s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from .errors import DimensionMismatchError, GridTooLargeError
from .grid import SystemConfig, range_of_delay_bin, signed_doppler_index, velocity_of_doppler_bin
from .modem import gen_qpsk_frame

#: Largest MN for which an MN x MN matrix is materialized.
MAX_DENSE_MN = 4096


def vec(grid: np.ndarray) -> np.ndarray:
    """Stack an ``(..., N, M)`` grid into ``(..., MN)`` with index ``k + N*l``."""
    grid = np.asarray(grid)
    return np.swapaxes(grid, -1, -2).reshape(grid.shape[:-2] + (-1,))


def unvec(v: np.ndarray, n: int, m: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (m, n)), -1, -2)


def dictionary_columns(x: np.ndarray, cols, cfg: SystemConfig) -> np.ndarray:
    """Columns ``cols`` of the dictionary for frame(s) ``x``.

    Entry ``(i, j)`` with ``i = k' + N l'`` and ``j = k'' + N l''`` is
    ``x[[k'-k'']_N, [l'-l'']_M] exp(j 2 pi (k'')_N [l'-l'']_M / (MN))``,
    times ``exp(-j 2 pi k' / N)`` when ``l' < l''``.

    Returns an array of shape ``(..., MN, len(cols))``.
    """
    M, N = cfg.num_delay_bins, cfg.num_doppler_bins
    cols = np.atleast_1d(np.asarray(cols))
    rows = np.arange(M * N)
    kp, lp = rows % N, rows // N
    kpp, lpp = cols % N, cols // N
    dk = (kp[:, None] - kpp[None, :]) % N
    dl = (lp[:, None] - lpp[None, :]) % M
    phase = np.exp(2j * np.pi * signed_doppler_index(kpp, N)[None, :] * dl / (M * N))
    wrap = np.where(lp[:, None] < lpp[None, :], np.exp(-2j * np.pi * kp / N)[:, None], 1.0)
    return x[..., dk, dl] * (phase * wrap)


@dataclass(frozen=True)
class Dictionary:
    """Matched-filter dictionary for one transmitted frame.

    Columns are generated on demand; :attr:`matrix` materializes the full
    MN x MN matrix for grids with ``MN <= MAX_DENSE_MN``.
    """

    frame: np.ndarray
    cfg: SystemConfig

    @property
    def size(self) -> int:
        return self.cfg.num_delay_bins * self.cfg.num_doppler_bins

    def columns(self, cols) -> np.ndarray:
        return dictionary_columns(self.frame, cols, self.cfg)

    def blocks(self, block_size: int = 256):
        """Yield ``(start, block)`` with ``block`` holding columns ``start..start+block_size-1``."""
        for start in range(0, self.size, block_size):
            stop = min(start + block_size, self.size)
            yield start, self.columns(np.arange(start, stop))

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.size > MAX_DENSE_MN:
            raise GridTooLargeError(f"MN = {self.size} exceeds dense limit {MAX_DENSE_MN}")
        return self.columns(np.arange(self.size))


def build_dictionary(x: np.ndarray, cfg: SystemConfig) -> Dictionary:
    x = np.asarray(x)
    if x.shape != cfg.shape:
        raise DimensionMismatchError(f"frame shape {x.shape} != {cfg.shape}")
    return Dictionary(x, cfg)


def noise_floor(power: np.ndarray) -> float:
    """Median-based estimate of the mean noise power of exponential bins."""
    return float(np.median(power) / math.log(2.0))


@dataclass(frozen=True)
class Detection:
    k: int
    l: int
    gain_estimate: complex
    magnitude: float

    def to_record(self, cfg: SystemConfig) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "range_m": float(range_of_delay_bin(self.l, cfg)),
            "velocity_m_s": float(velocity_of_doppler_bin(self.k, cfg)),
            "magnitude": self.magnitude,
        }


@dataclass(frozen=True)
class DetectionPolicy:
    """Threshold ``threshold_db`` above the median noise floor, optional cap."""

    threshold_db: float = 13.0
    max_targets: int | None = None


@dataclass(frozen=True)
class DDEstimate:
    """Normalized matched-filter output ``h_hat / (MN P_s)`` on the ``(N, M)`` grid."""

    grid: np.ndarray
    cfg: SystemConfig
    noise_floor: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "noise_floor", noise_floor(np.abs(self.grid) ** 2))

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.grid) ** 2

    @property
    def argmax(self) -> tuple[int, int]:
        k, l = np.unravel_index(np.argmax(np.abs(self.grid)), self.grid.shape)
        return int(k), int(l)

    @cached_property
    def peaks(self) -> list[Detection]:
        """Detections under the default policy, strongest first."""
        return detect_targets(self, DetectionPolicy())


def _normalize(h: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    return h / (cfg.num_delay_bins * cfg.num_doppler_bins * cfg.symbol_power)


def matched_filter_naive(y: np.ndarray, dictionary: Dictionary, block_size: int = 256) -> DDEstimate:
    """``D^H vec(y)`` by explicit inner products with every dictionary column.

    O((MN)^2) work; columns are generated in blocks so memory stays
    O(MN * block_size).
    """
    cfg = dictionary.cfg
    y = np.asarray(y)
    if y.shape != cfg.shape:
        raise DimensionMismatchError(f"received frame shape {y.shape} != {cfg.shape}")
    yv = vec(y)
    h = np.empty(dictionary.size, dtype=complex)
    for start, block in dictionary.blocks(block_size):
        h[start:start + block.shape[-1]] = block.conj().T @ yv
    return DDEstimate(_normalize(unvec(h, cfg.num_doppler_bins, cfg.num_delay_bins), cfg), cfg)


def matched_filter_fast(y: np.ndarray, x: np.ndarray, cfg: SystemConfig, chunk: int = 8) -> DDEstimate:
    """Same output as :func:`matched_filter_naive` in O(M^2 N log N).

    For each candidate delay ``l''`` the received columns with ``l' < l''``
    are pre-rotated by ``exp(j 2 pi k' / N)``, every delay column pair is
    circularly cross-correlated along Doppler with an FFT, and the
    ``(k'', l')``-dependent phase is applied before summing over ``l'``.
    """
    y = np.asarray(y)
    x = np.asarray(x)
    if y.shape != cfg.shape or x.shape != cfg.shape:
        raise DimensionMismatchError(f"frames must have shape {cfg.shape}, got {y.shape} and {x.shape}")
    M, N = cfg.num_delay_bins, cfg.num_doppler_bins
    xf_conj = np.conj(sp_fft.fft(x, axis=0))
    yf = sp_fft.fft(y, axis=0)
    # multiplying by exp(j 2 pi k / N) rotates the Doppler spectrum by one bin
    yf_rot = np.roll(yf, 1, axis=0)
    kpp_signed = signed_doppler_index(np.arange(N), N)[:, None]
    # phase_table[k'', d] = exp(-j 2 pi (k'')_N d / (MN)), d = [l' - l'']_M
    phase_table = np.exp(-2j * np.pi * kpp_signed * np.arange(M)[None, :] / (M * N))
    lp = np.arange(M)
    h = np.empty((N, M), dtype=complex)
    for start in range(0, M, chunk):
        lpp = np.arange(start, min(start + chunk, M))
        # xf_conj[:, (l' - l'') % M] for every l'' in the chunk -> (B, N, M)
        dl = (lp[None, :] - lpp[:, None]) % M
        xs = xf_conj[:, dl].transpose(1, 0, 2)
        ys = np.where((lp[None, :] < lpp[:, None])[:, None, :], yf_rot[None], yf[None])
        corr = sp_fft.ifft(xs * ys, axis=1)
        phase = phase_table[:, dl].transpose(1, 0, 2)
        h[:, lpp] = np.einsum("bkm,bkm->kb", corr, phase)
    return DDEstimate(_normalize(h, cfg), cfg)


def gain_matrix(x: np.ndarray, cfg: SystemConfig, max_mn: int = MAX_DENSE_MN) -> np.ndarray:
    """``G = D^H D`` for frame ``x``; refuses grids with ``MN > max_mn``."""
    mn = cfg.num_delay_bins * cfg.num_doppler_bins
    if mn > max_mn:
        raise GridTooLargeError(f"gain matrix for MN = {mn} exceeds limit {max_mn}")
    d = dictionary_columns(np.asarray(x), np.arange(mn), cfg)
    return d.conj().T @ d


def gain_entry_samples(
    cfg: SystemConfig,
    num_trials: int,
    pairs,
    seed=None,
    alphabet: str = "qpsk",
    batch: int = 2000,
) -> np.ndarray:
    """Samples of ``G[i, j]`` over independent random frames.

    Entries are computed from the two dictionary columns directly, without
    forming ``G``. Returns shape ``(num_trials, len(pairs))``.
    """
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    rng = np.random.default_rng(seed)
    out = np.empty((num_trials, len(pairs)), dtype=complex)
    for start in range(0, num_trials, batch):
        b = min(batch, num_trials - start)
        frames = gen_qpsk_frame(cfg, rng, alphabet=alphabet, batch=b)
        ci = dictionary_columns(frames, pairs[:, 0], cfg)
        cj = dictionary_columns(frames, pairs[:, 1], cfg)
        out[start:start + b] = np.sum(ci.conj() * cj, axis=-2)
    return out


def lemma1_stats(cfg: SystemConfig, num_trials: int, i: int, j: int, seed=None) -> tuple[complex, float]:
    """Empirical mean and variance of the off-diagonal gain entry ``G[i, j]``.

    Under i.i.d. QPSK the mean is 0 and the variance ``MN P_s^2``.
    """
    if i == j:
        raise ValueError("lemma1_stats needs an off-diagonal entry (i != j)")
    if num_trials < 1000:
        raise ValueError("use at least 1000 trials")
    g = gain_entry_samples(cfg, num_trials, [(i, j)], seed)[:, 0]
    return complex(g.mean()), float(np.var(g))


def detect_targets(est: DDEstimate, policy: DetectionPolicy = DetectionPolicy()) -> list[Detection]:
    """Bins whose power exceeds ``threshold * noise_floor``, strongest first.

    No sidelobe cancellation is attempted: every qualifying bin is reported,
    up to ``policy.max_targets``.
    """
    power = est.power
    thresh = 10.0 ** (policy.threshold_db / 10.0) * est.noise_floor
    ks, ls = np.nonzero(power > thresh)
    order = np.argsort(-power[ks, ls], kind="stable")
    if policy.max_targets is not None:
        order = order[: policy.max_targets]
    return [
        Detection(int(ks[o]), int(ls[o]), complex(est.grid[ks[o], ls[o]]), float(np.sqrt(power[ks[o], ls[o]])))
        for o in order
    ]
