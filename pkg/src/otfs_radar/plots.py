"""Static SVG views over the CSV outputs."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import SweepPoint  # noqa: E402
from .metrics import ProfileCut  # noqa: E402

# fixed ids and no timestamp keep reruns byte-identical
plt.rcParams["svg.hashsalt"] = "otfs-radar"
_SVG_META = {"Date": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_profiles(cuts: dict[str, tuple[ProfileCut, ProfileCut]], path, truth: tuple[float, float] | None = None) -> None:
    """Range and velocity profiles of each system side by side."""
    fig, (ax_r, ax_v) = plt.subplots(1, 2, figsize=(10, 4))
    for name, (rc, vc) in cuts.items():
        ax_r.plot(rc.axis, np.maximum(rc.values_db, -60), label=name.upper())
        ax_v.plot(vc.axis, np.maximum(vc.values_db, -60), label=name.upper())
    if truth is not None:
        ax_r.axvline(truth[0], color="k", ls=":", lw=0.8)
        ax_v.axvline(truth[1], color="k", ls=":", lw=0.8)
    ax_r.set_xlabel("range [m]")
    ax_v.set_xlabel("velocity [m/s]")
    for ax in (ax_r, ax_v):
        ax.set_ylabel("normalized magnitude [dB]")
        ax.grid(True, alpha=0.3)
        ax.legend()
    _save(fig, path)


def plot_rmse(points: Sequence[SweepPoint], path, velocity_res: float) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for system in sorted({p.system for p in points}):
        sel = sorted((p for p in points if p.system == system), key=lambda p: p.parameter)
        ax.plot([p.parameter * velocity_res for p in sel], [p.velocity_rmse_m_s for p in sel], "o-", label=system.upper())
    ax.set_xlabel("relative velocity [m/s]")
    ax.set_ylabel("velocity RMSE [m/s]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    _save(fig, path)


def plot_snr_curves(points: Sequence[SweepPoint], path, grid_size: int) -> None:
    """Image SNR and PSLR versus SNR with the low-SNR and saturation asymptotes."""
    sel = sorted((p for p in points if p.system == "otfs"), key=lambda p: p.parameter)
    snr = np.array([p.parameter for p in sel])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(snr, [p.mean_image_snr_db for p in sel], "o-", label="image SNR")
    ax.plot(snr, [p.mean_pslr_db for p in sel], "s-", label="PSLR")
    ax.plot(snr, 10 * np.log10(grid_size) + snr, "k:", lw=0.8, label="MN P_s / sigma^2")
    ax.axhline(10 * np.log10(grid_size), color="k", ls="--", lw=0.8, label="MN")
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("[dB]")
    ax.set_ylim(top=10 * np.log10(grid_size) + 10)
    ax.grid(True, alpha=0.3)
    ax.legend()
    _save(fig, path)
