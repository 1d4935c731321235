import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otfs_radar.errors import ConfigError, NonIntegerTapError, OutOfAmbiguityRangeError
from otfs_radar.grid import (
    SPEED_OF_LIGHT,
    SystemConfig,
    Tap,
    TapChannel,
    Target,
    derive_resolutions,
    scene_to_taps,
    signed_doppler_index,
    taps_to_scene,
    velocity_of_doppler_bin,
)


def test_preset_resolutions():
    res = derive_resolutions(SystemConfig.automotive_24ghz())
    assert res.range_res_m == 15.0
    assert res.max_unambiguous_range_m == 3840.0
    assert res.velocity_res_m_s == pytest.approx(3e8 * 39062.5 / (2 * 24e9 * 64))
    assert res.max_unambiguous_velocity_m_s == pytest.approx(122.0703125)
    assert res.delay_res_s == pytest.approx(1e-7)
    assert res.doppler_res_hz == pytest.approx(39062.5 / 64)


def test_exact_light_speed_default():
    cfg = SystemConfig()
    assert cfg.speed_of_light_m_s == SPEED_OF_LIGHT
    assert derive_resolutions(cfg).range_res_m == pytest.approx(14.9896229)


def test_derived_timing():
    cfg = SystemConfig()
    assert cfg.subcarrier_spacing_hz * cfg.symbol_duration_s == pytest.approx(1.0)
    assert cfg.frame_duration_s == pytest.approx(64 * 25.6e-6)
    assert cfg.snr_db == pytest.approx(10.0)
    assert cfg.with_snr_db(-3.0).noise_variance == pytest.approx(10 ** 0.3)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(num_delay_bins=0),
        dict(num_doppler_bins=-4),
        dict(num_delay_bins=2.5),
        dict(cp_length_samples=256),
        dict(cp_length_samples=-1),
        dict(symbol_power=0.0),
        dict(noise_variance=-1.0),
        dict(carrier_freq_hz=math.inf),
    ],
)
def test_invalid_system_config(kwargs):
    with pytest.raises(ConfigError):
        SystemConfig(**kwargs)


@given(n=st.integers(1, 128), k=st.integers(0, 10_000))
def test_signed_doppler_index(n, k):
    k = k % n
    kn = signed_doppler_index(k, n)
    assert -n / 2 < kn <= n / 2
    assert (kn - k) % n == 0


def test_signed_doppler_index_array():
    assert list(signed_doppler_index(np.arange(4), 4)) == [0, 1, 2, -1]


def test_scene_975m_on_grid():
    cfg = SystemConfig.automotive_24ghz()
    taps = scene_to_taps([Target(975.0, 0.0)], cfg)
    assert [(t.k, t.l) for t in taps] == [(0, 65)]


def test_80mps_needs_nearest():
    cfg = SystemConfig.automotive_24ghz()
    with pytest.raises(NonIntegerTapError):
        scene_to_taps([Target(975.0, 80.0)], cfg)
    taps = scene_to_taps([Target(975.0, 80.0)], cfg, mode="nearest")
    assert [(t.k, t.l) for t in taps] == [(21, 65)]
    d_res, v_res = taps.residuals[0]
    assert d_res == pytest.approx(0.0, abs=1e-9)
    assert v_res == pytest.approx(80.0 / 3.814697265625 - 21)


def test_receding_target_wraps():
    cfg = SystemConfig.automotive_24ghz()
    v = -21 * derive_resolutions(cfg).velocity_res_m_s
    taps = scene_to_taps([Target(975.0, v)], cfg)
    assert taps.taps[0].k == 64 - 21


@pytest.mark.parametrize("target", [Target(0.0, 0.0), Target(3900.0, 0.0), Target(100.0, 130.0), Target(-15.0, 0.0)])
def test_out_of_ambiguity(target):
    with pytest.raises(OutOfAmbiguityRangeError):
        scene_to_taps([target], SystemConfig.automotive_24ghz(), mode="nearest")


def test_boundaries_accepted():
    cfg = SystemConfig.automotive_24ghz()
    res = derive_resolutions(cfg)
    taps = scene_to_taps([Target(res.max_unambiguous_range_m, -res.max_unambiguous_velocity_m_s)], cfg)
    assert (taps.taps[0].k, taps.taps[0].l) == (32, 0)


def test_coinciding_targets_merge(caplog):
    cfg = SystemConfig.automotive_24ghz()
    taps = scene_to_taps([Target(975.0, 0.0, 1.0), Target(975.0, 0.0, 0.5j)], cfg)
    assert len(taps) == 1
    assert taps.taps[0].gain == 1.0 + 0.5j
    assert "merged" in caplog.text


@settings(max_examples=50)
@given(l=st.integers(1, 255), k=st.integers(-31, 32))
def test_taps_scene_roundtrip(l, k):
    cfg = SystemConfig.automotive_24ghz()
    tap = Tap(k % 64, l, 0.5 - 0.25j)
    target = taps_to_scene([tap], cfg)[0]
    back = scene_to_taps([target], cfg).taps[0]
    assert (back.k, back.l, back.gain) == (tap.k, tap.l, tap.gain)


def test_velocity_of_bin_matches_scene():
    cfg = SystemConfig.automotive_24ghz()
    assert velocity_of_doppler_bin(21, cfg) == pytest.approx(taps_to_scene([Tap(21, 1)], cfg)[0].velocity_m_s)
    assert velocity_of_doppler_bin(43, cfg) == pytest.approx(-velocity_of_doppler_bin(21, cfg))


def test_tap_channel_validation():
    with pytest.raises(ValueError):
        TapChannel.from_tuples([(1, 2, 1.0), (1, 2, 0.5)])
    with pytest.raises(ValueError):
        TapChannel.from_tuples([(-1, 2, 1.0)])
    ch = TapChannel.from_tuples([(1, 2, 1.0), (3, 7, 2j)])
    assert ch.max_delay == 7
    with pytest.raises(ValueError):
        ch.validate(SystemConfig(num_delay_bins=4, num_doppler_bins=4, cp_length_samples=0))
    h = ch.as_grid(SystemConfig(num_delay_bins=8, num_doppler_bins=4, cp_length_samples=0))
    assert h[3, 7] == 2j and h[1, 2] == 1.0 and np.count_nonzero(h) == 2
