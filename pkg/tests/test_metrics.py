import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otfs_radar.errors import DegenerateGridError
from otfs_radar.estimator import DDEstimate
from otfs_radar.grid import SystemConfig
from otfs_radar.metrics import frame_duration_report, image_snr, profile_cuts, pslr, rmse, to_db
from otfs_radar.ofdm import RangeDopplerMap

SYS = SystemConfig.automotive_24ghz()


def test_pslr_synthetic():
    g = np.full((4, 4), 0.01)
    g[1, 1] = 1.0
    g[2, 3] = 0.1
    assert pslr(g) == pytest.approx(20.0)


def test_pslr_edge_cases():
    with pytest.raises(DegenerateGridError):
        pslr(np.ones((1, 1)))
    g = np.zeros((2, 2))
    g[0, 1] = 3.0
    assert pslr(g) == math.inf
    assert pslr(np.ones((2, 2))) == 0.0


def test_image_snr_synthetic():
    g = np.ones((3, 3), complex)
    g[0, 2] = 10.0
    assert image_snr(g, (0, 2)) == pytest.approx(20.0)
    # measured at the true bin, not at the maximum
    assert image_snr(g, (1, 1)) < 0
    assert image_snr(np.eye(1, 2), (0, 0)) == math.inf


def test_image_snr_map_and_estimate_agree():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 8))
    est = DDEstimate(a.astype(complex), SystemConfig(num_delay_bins=8, num_doppler_bins=4, cp_length_samples=0))
    rd = RangeDopplerMap(np.abs(a), np.arange(8.0), np.arange(4.0))
    assert image_snr(est, (2, 3)) == pytest.approx(image_snr(rd, (2, 3)))


def test_profile_cuts_through_peak():
    grid = np.full((64, 256), 0.1, complex)
    grid[43, 65] = 2.0
    est = DDEstimate(grid, SYS)
    rc, vc = profile_cuts(est)
    assert rc.values_db.max() == 0.0 and rc.axis[np.argmax(rc.values_db)] == 975.0
    assert np.all(np.diff(vc.axis) > 0)
    assert vc.axis[np.argmax(vc.values_db)] == pytest.approx(-21 * 3.814697265625)
    assert rc.values_db[0] == pytest.approx(-20 * np.log10(20))


def test_to_db_floor():
    assert to_db(np.array([0.0, 1.0]), 1.0).tolist() == [-300.0, 0.0]


def test_rmse():
    assert rmse([3.0, -4.0]) == pytest.approx(np.sqrt(12.5))
    with pytest.raises(ValueError):
        rmse([])


@given(m=st.integers(2, 4096), n=st.integers(1, 1024), frac=st.floats(0, 0.999))
def test_frame_duration_identity(m, n, frac):
    cp = int(frac * m)
    cfg = SystemConfig(num_delay_bins=m, num_doppler_bins=n, cp_length_samples=cp)
    rep = frame_duration_report(cfg)
    assert rep.otfs_samples == n * m + cp
    assert rep.ofdm_samples == n * (m + cp)
    assert rep.otfs_samples + rep.saved_samples == rep.ofdm_samples
    assert rep.saved_samples == (n - 1) * cp
