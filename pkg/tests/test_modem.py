import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from otfs_radar.errors import DelayExceedsCpError, DimensionMismatchError
from otfs_radar.grid import SystemConfig, TapChannel
from otfs_radar.modem import (
    apply_channel_dd,
    apply_channel_time,
    complex_noise,
    gen_qpsk_frame,
    heisenberg,
    isfft,
    sfft,
    simulate_time_domain,
    wigner,
)


def _isfft_literal(x):
    n_, m_ = x.shape
    out = np.zeros_like(x, dtype=complex)
    for n in range(n_):
        for m in range(m_):
            for k in range(n_):
                for l in range(m_):
                    out[n, m] += x[k, l] * np.exp(2j * np.pi * (n * k / n_ - m * l / m_))
    return out / np.sqrt(n_ * m_)


def test_isfft_matches_definition(rng):
    x = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    np.testing.assert_allclose(isfft(x), _isfft_literal(x), atol=1e-12)


_complex_grids = st.tuples(st.integers(1, 9), st.integers(1, 9)).flatmap(
    lambda s: arrays(np.complex128, s, elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
)


@settings(max_examples=60)
@given(x=_complex_grids)
def test_sfft_isfft_inverse(x):
    np.testing.assert_allclose(sfft(isfft(x)), x, atol=1e-9 * (1 + np.abs(x).max()))
    np.testing.assert_allclose(isfft(sfft(x)), x, atol=1e-9 * (1 + np.abs(x).max()))


@settings(max_examples=30)
@given(x=_complex_grids)
def test_isfft_unitary(x):
    assert np.linalg.norm(isfft(x)) == pytest.approx(np.linalg.norm(x), rel=1e-9, abs=1e-9)


def test_isfft_shape_check(small_cfg):
    with pytest.raises(DimensionMismatchError):
        isfft(np.zeros((3, 3)), small_cfg)
    with pytest.raises(DimensionMismatchError):
        isfft(np.zeros(5))


def test_heisenberg_layout(small_cfg, rng):
    tf = isfft(gen_qpsk_frame(small_cfg, rng))
    s = heisenberg(tf, small_cfg)
    M, N, L = small_cfg.num_delay_bins, small_cfg.num_doppler_bins, small_cfg.cp_length_samples
    assert len(s) == N * M + L
    assert s.origin == L and s.cp_length == L
    np.testing.assert_array_equal(s.samples[:L], s.samples[-L:])
    np.testing.assert_allclose(wigner(s, small_cfg), tf, atol=1e-12)


def test_heisenberg_batch(small_cfg, rng):
    x = gen_qpsk_frame(small_cfg, rng, batch=3)
    s = heisenberg(isfft(x, small_cfg), small_cfg)
    assert s.samples.shape == (3, 36)
    np.testing.assert_allclose(sfft(wigner(s, small_cfg), small_cfg), x, atol=1e-12)


def test_wigner_length_check(small_cfg):
    s = heisenberg(np.zeros(small_cfg.shape, complex), small_cfg)
    bad = type(s)(s.samples[:-1], s.sample_period_s, s.cp_length, s.origin)
    with pytest.raises(DimensionMismatchError):
        wigner(bad, small_cfg)


def test_qpsk_frame_properties(small_cfg):
    x = gen_qpsk_frame(small_cfg.replace(symbol_power=2.0), 0, batch=2000)
    assert x.shape == (2000,) + small_cfg.shape
    np.testing.assert_allclose(np.abs(x) ** 2, 2.0)
    assert abs(np.mean(x ** 2)) < 0.02
    np.testing.assert_array_equal(gen_qpsk_frame(small_cfg, 7), gen_qpsk_frame(small_cfg, 7))


def test_bpsk_warns(small_cfg):
    with pytest.warns(UserWarning, match="BPSK"):
        x = gen_qpsk_frame(small_cfg, 0, alphabet="bpsk")
    assert np.all(np.imag(x) == 0)
    with pytest.raises(ValueError):
        gen_qpsk_frame(small_cfg, 0, alphabet="16qam")


def test_noise_variance():
    w = complex_noise(100_000, 0.37, np.random.default_rng(3))
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.37, rel=0.02)
    assert np.var(w.real) == pytest.approx(0.185, rel=0.03)
    assert abs(np.mean(w * w)) < 0.01


def _random_channel(rng, cfg, max_taps=4):
    count = int(rng.integers(1, max_taps + 1))
    cells = rng.choice(cfg.num_doppler_bins * (cfg.cp_length_samples + 1), size=count, replace=False)
    gains = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    return TapChannel.from_tuples(
        (int(c % cfg.num_doppler_bins), int(c // cfg.num_doppler_bins), g) for c, g in zip(cells, gains)
    )


@pytest.mark.parametrize("shape", [(8, 4, 3), (5, 6, 4), (16, 16, 7), (7, 3, 6)])
def test_dd_channel_equals_time_chain(shape):
    m, n, cp = shape
    cfg = SystemConfig(num_delay_bins=m, num_doppler_bins=n, cp_length_samples=cp)
    rng = np.random.default_rng(m * 100 + n)
    for _ in range(10):
        x = gen_qpsk_frame(cfg, rng)
        taps = _random_channel(rng, cfg)
        np.testing.assert_allclose(apply_channel_dd(x, taps, cfg), simulate_time_domain(x, taps, cfg), atol=1e-11)


def test_zero_doppler_is_circular_delay(small_cfg, rng):
    # a pure delay tap cyclically shifts the delay axis and, once wrapped, rotates by one Doppler bin
    x = gen_qpsk_frame(small_cfg, rng)
    y = apply_channel_dd(x, TapChannel.from_tuples([(0, 2, 1.0)]), small_cfg)
    np.testing.assert_allclose(y[:, 2:], x[:, :-2], atol=1e-14)
    k = np.arange(small_cfg.num_doppler_bins)[:, None]
    np.testing.assert_allclose(y[:, :2], np.roll(x, 2, axis=1)[:, :2] * np.exp(-2j * np.pi * k / small_cfg.num_doppler_bins), atol=1e-14)


def test_delay_exceeds_cp(small_cfg, rng):
    s = heisenberg(isfft(gen_qpsk_frame(small_cfg, rng)), small_cfg)
    with pytest.raises(DelayExceedsCpError):
        apply_channel_time(s, TapChannel.from_tuples([(0, small_cfg.cp_length_samples + 1, 1.0)]), small_cfg)


def test_time_noise_maps_to_dd_variance():
    cfg = SystemConfig(num_delay_bins=64, num_doppler_bins=32, cp_length_samples=8, noise_variance=0.25)
    x = gen_qpsk_frame(cfg, 0, batch=50)
    taps = TapChannel.from_tuples([(3, 5, 1.0)])
    noisy = simulate_time_domain(x, taps, cfg, noise_seed=1)
    w = noisy - apply_channel_dd(x, taps, cfg)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.25, rel=0.02)


def test_noise_is_reproducible(small_cfg, rng):
    x = gen_qpsk_frame(small_cfg, rng)
    taps = TapChannel.from_tuples([(1, 1, 1.0)])
    a = apply_channel_dd(x, taps, small_cfg, noise_seed=5)
    b = apply_channel_dd(x, taps, small_cfg, noise_seed=5)
    np.testing.assert_array_equal(a, b)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not np.allclose(a, apply_channel_dd(x, taps, small_cfg))
