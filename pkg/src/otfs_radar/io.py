"""File formats written by the CLI, each with a matching reader.

* frame / estimate CSV: one row per Doppler bin ``k``; each delay bin ``l``
  contributes two columns ``re_l, im_l``.
* range-Doppler CSV: header ``velocity_m_s\\range_m, r_0, r_1, ...`` then one
  row per Doppler bin starting with its velocity.
* profile CSV: two columns, axis value and normalized magnitude in dB.
* trials CSV: one :class:`~otfs_radar.metrics.TrialMetrics` per row.
* sweep CSV: one :class:`~otfs_radar.experiments.SweepPoint` per row.
* result JSON: :class:`ResultRecord`.
* detections JSON: list of ``{k, l, range_m, velocity_m_s, magnitude}``.

Floats are written with ``repr`` so files reproduce byte-for-byte.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .experiments import SweepPoint
from .metrics import ProfileCut, TrialMetrics
from .ofdm import RangeDopplerMap


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_frame_csv(path, grid: np.ndarray) -> None:
    grid = np.asarray(grid)
    n, m = grid.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{part}_{l}" for l in range(m) for part in ("re", "im")])
        for k in range(n):
            w.writerow([_fmt(p) for z in grid[k] for p in (z.real, z.imag)])


def read_frame_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    vals = np.array([[float(v) for v in r] for r in rows])
    return vals[:, 0::2] + 1j * vals[:, 1::2]


def write_rd_map_csv(path, rd: RangeDopplerMap) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["velocity_m_s\\range_m"] + [_fmt(r) for r in rd.range_axis_m])
        for v, row in zip(rd.velocity_axis_m_s, rd.magnitude):
            w.writerow([_fmt(v)] + [_fmt(x) for x in row])


def read_rd_map_csv(path) -> RangeDopplerMap:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    ranges = np.array([float(v) for v in rows[0][1:]])
    body = np.array([[float(v) for v in r] for r in rows[1:]])
    return RangeDopplerMap(body[:, 1:], ranges, body[:, 0])


def write_profile_csv(path, cut: ProfileCut) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([cut.axis_label, "magnitude_db"])
        for a, v in zip(cut.axis, cut.values_db):
            w.writerow([_fmt(a), _fmt(v)])


def read_profile_csv(path) -> ProfileCut:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    label = rows[0][0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, 2)
    return ProfileCut(data[:, 0], data[:, 1], label)


def _write_records(path, cls, records: Sequence) -> None:
    names = [f.name for f in fields(cls)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in records:
            w.writerow([_fmt(getattr(r, n)) for n in names])


def _read_records(path, cls) -> list:
    types = {f.name: f.type for f in fields(cls)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs = {}
            for name, value in row.items():
                t = types[name]
                if t in (int, "int"):
                    kwargs[name] = int(value)
                elif t in (float, "float"):
                    kwargs[name] = float(value)
                else:
                    kwargs[name] = value
            out.append(cls(**kwargs))
    return out


def write_trials_csv(path, rows: Sequence[TrialMetrics]) -> None:
    _write_records(path, TrialMetrics, rows)


def read_trials_csv(path) -> list[TrialMetrics]:
    return _read_records(path, TrialMetrics)


def write_sweep_csv(path, points: Sequence[SweepPoint]) -> None:
    _write_records(path, SweepPoint, points)


def read_sweep_csv(path) -> list[SweepPoint]:
    return _read_records(path, SweepPoint)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


@dataclass
class ResultRecord:
    """Everything needed to audit and reproduce one CLI run."""

    spec_hash: str
    spec: dict
    tool_version: str
    timestamp: str
    trials: list[dict] = field(default_factory=list)
    aggregate: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def write_result_json(path, record: ResultRecord) -> None:
    Path(path).write_text(json.dumps(_json_safe(asdict(record)), indent=2, sort_keys=True) + "\n")


def read_result_json(path) -> ResultRecord:
    return ResultRecord(**json.loads(Path(path).read_text()))


def write_detections_json(path, records: Sequence[dict]) -> None:
    Path(path).write_text(json.dumps(_json_safe(list(records)), indent=2) + "\n")


def read_detections_json(path) -> list[dict]:
    return json.loads(Path(path).read_text())
