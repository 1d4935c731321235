"""Experiment description files (YAML) with line-precise validation errors.

Example::

    system:
      preset: automotive_24ghz      # 24 GHz, 10 MHz, M=256, N=64
      cp_length_samples: 128
      snr_db: 10
    ofdm:
      cp_length_samples: 72
    scene:
      quantize: nearest
      targets:
        - {range_m: 975, velocity_m_s: 80, gain: [1.0, 0.0]}
    experiment:
      system: both                  # otfs | ofdm | both
      sweep: none                   # none | velocity | snr
      values: []
      trials: 100
      base_seed: 0
      workers: 1
      output_dir: results

Every key is optional; omitted values take the defaults above.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError, NonIntegerTapError, OutOfAmbiguityRangeError
from .grid import SystemConfig, Tap, TapChannel, Target, scene_to_taps
from .ofdm import OfdmConfig

SYSTEM_KEYS = {
    "preset",
    "carrier_freq_hz",
    "bandwidth_hz",
    "num_delay_bins",
    "num_doppler_bins",
    "symbol_power",
    "noise_variance",
    "snr_db",
    "cp_length_samples",
    "speed_of_light_m_s",
}
OFDM_KEYS = {"cp_length_samples", "window", "range_oversample", "doppler_oversample", "doppler_axis"}
SCENE_KEYS = {"quantize", "targets", "taps"}
TARGET_KEYS = {"range_m", "velocity_m_s", "gain"}
TAP_KEYS = {"k", "l", "gain"}
EXPERIMENT_KEYS = {
    "name",
    "system",
    "sweep",
    "values",
    "trials",
    "base_seed",
    "workers",
    "output_dir",
    "detection_threshold_db",
}
TOP_KEYS = {"system", "ofdm", "scene", "experiment"}

PRESETS = {"automotive_24ghz": SystemConfig.automotive_24ghz, "none": SystemConfig}

#: Defaults for the single-target 975 m / 80 m/s scenario.
DEFAULT_DOCUMENT: dict[str, Any] = {
    "system": {"preset": "automotive_24ghz", "cp_length_samples": 128, "snr_db": 10.0},
    "ofdm": {"cp_length_samples": 72},
    "scene": {
        "quantize": "nearest",
        "targets": [{"range_m": 975.0, "velocity_m_s": 80.0, "gain": [1.0, 0.0]}],
    },
    "experiment": {
        "name": "scenario",
        "system": "both",
        "sweep": "none",
        "values": [],
        "trials": 100,
        "base_seed": 0,
        "workers": 1,
        "output_dir": "results",
        "detection_threshold_db": 13.0,
    },
}

VELOCITY_SWEEP_TAPS = list(range(-24, 25, 3))
SNR_SWEEP_DB = [float(s) for s in range(-20, 31, 5)]


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment description."""

    name: str
    system: str
    cfg: SystemConfig
    ofdm: OfdmConfig
    taps: TapChannel
    targets: tuple[Target, ...]
    quantize: str
    sweep: str
    values: tuple[float, ...]
    trials: int
    base_seed: int
    workers: int
    output_dir: Path
    detection_threshold_db: float
    document: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def systems(self) -> tuple[str, ...]:
        return ("otfs", "ofdm") if self.system == "both" else (self.system,)

    def seeds(self) -> range:
        return range(self.base_seed, self.base_seed + self.trials)

    def spec_hash(self) -> str:
        """SHA-256 over everything that affects results (not output dir or workers)."""
        doc = json.loads(json.dumps(self.document, sort_keys=True, default=str))
        doc.get("experiment", {}).pop("output_dir", None)
        doc.get("experiment", {}).pop("workers", None)
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _line_index(node, path=(), out=None) -> dict:
    """Map key paths of a composed YAML document to 1-based line numbers."""
    if out is None:
        out = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            p = path + (key_node.value,)
            out[p] = key_node.start_mark.line + 1
            _line_index(value_node, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            p = path + (i,)
            out[p] = item.start_mark.line + 1
            _line_index(item, p, out)
    return out


class _Doc:
    """Parsed document plus line lookup for error messages."""

    def __init__(self, data: dict, lines: dict, source: str | None):
        self.data = data
        self.lines = lines
        self.source = source

    def line(self, path) -> int | None:
        path = tuple(path)
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path[:-1]
        return None

    def error(self, path, message: str) -> ConfigError:
        dotted = ".".join(str(p) for p in path)
        return ConfigError(f"{dotted}: {message}" if dotted else message, self.line(path), self.source)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _check_keys(doc: _Doc, mapping, allowed: set, path) -> None:
    if not isinstance(mapping, dict):
        raise doc.error(path, f"expected a mapping, got {type(mapping).__name__}")
    for key in mapping:
        if key not in allowed:
            raise doc.error(tuple(path) + (key,), f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _number(doc: _Doc, value, path, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise doc.error(path, f"expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise doc.error(path, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise doc.error(path, f"expected a finite number, got {value!r}")
    return float(value)


def _gain(doc: _Doc, value, path) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise doc.error(path, "gain must be a number or [re, im]")
        return complex(_number(doc, value[0], path + (0,)), _number(doc, value[1], path + (1,)))
    return complex(_number(doc, value, path))


def _system_config(doc: _Doc, section: dict) -> SystemConfig:
    path = ("system",)
    _check_keys(doc, section, SYSTEM_KEYS, path)
    preset = section.get("preset", "automotive_24ghz")
    if preset not in PRESETS:
        raise doc.error(path + ("preset",), f"unknown preset {preset!r} (choose from {', '.join(PRESETS)})")
    if "snr_db" in section and "noise_variance" in section:
        raise doc.error(path + ("snr_db",), "give either snr_db or noise_variance, not both")
    kwargs = {}
    for key in SYSTEM_KEYS - {"preset", "snr_db"}:
        if key in section:
            integer = key in ("num_delay_bins", "num_doppler_bins", "cp_length_samples")
            kwargs[key] = _number(doc, section[key], path + (key,), integer=integer)
    try:
        cfg = PRESETS[preset](**kwargs)
        if "snr_db" in section:
            cfg = cfg.with_snr_db(_number(doc, section["snr_db"], path + ("snr_db",)))
    except ConfigError as exc:
        culprit = next((k for k in sorted(SYSTEM_KEYS, key=len, reverse=True) if k in str(exc)), None)
        raise doc.error(path + ((culprit,) if culprit else ()), str(exc)) from None
    return cfg


def _ofdm_config(doc: _Doc, section: dict, cfg: SystemConfig) -> OfdmConfig:
    path = ("ofdm",)
    _check_keys(doc, section, OFDM_KEYS, path)
    opts = {}
    for key in ("range_oversample", "doppler_oversample"):
        if key in section:
            opts[key] = _number(doc, section[key], path + (key,), integer=True)
    if "window" in section:
        if section["window"] is not None and not isinstance(section["window"], str):
            raise doc.error(path + ("window",), "window must be a window name or null")
        opts["window"] = section["window"]
    if "doppler_axis" in section:
        opts["doppler_axis"] = section["doppler_axis"]
    cp = section.get("cp_length_samples")
    if cp is not None:
        cp = _number(doc, cp, path + ("cp_length_samples",), integer=True)
    try:
        return OfdmConfig.from_system(cfg, cp, **opts)
    except ValueError as exc:
        culprit = next((k for k in OFDM_KEYS if k in str(exc)), None)
        raise doc.error(path + ((culprit,) if culprit else ()), str(exc)) from None


def _scene(doc: _Doc, section: dict, cfg: SystemConfig) -> tuple[TapChannel, tuple[Target, ...], str]:
    path = ("scene",)
    _check_keys(doc, section, SCENE_KEYS, path)
    quantize = section.get("quantize", "nearest")
    if quantize not in ("exact", "nearest"):
        raise doc.error(path + ("quantize",), "quantize must be 'exact' or 'nearest'")
    targets_raw = section.get("targets") or []
    taps_raw = section.get("taps") or []
    if targets_raw and taps_raw:
        raise doc.error(path + ("taps",), "give either targets or taps, not both")
    if not targets_raw and not taps_raw:
        raise doc.error(path, "scene needs at least one target or tap")
    if taps_raw:
        taps = []
        for i, item in enumerate(taps_raw):
            p = path + ("taps", i)
            _check_keys(doc, item, TAP_KEYS, p)
            for key in ("k", "l"):
                if key not in item:
                    raise doc.error(p, f"tap is missing '{key}'")
            k = _number(doc, item["k"], p + ("k",), integer=True)
            l = _number(doc, item["l"], p + ("l",), integer=True)
            if not (0 <= k < cfg.num_doppler_bins and 0 <= l < cfg.num_delay_bins):
                raise doc.error(p, f"tap (k={k}, l={l}) outside the {cfg.num_doppler_bins}x{cfg.num_delay_bins} grid")
            taps.append(Tap(k, l, _gain(doc, item.get("gain", 1.0), p + ("gain",))))
        try:
            return TapChannel(tuple(taps)), (), quantize
        except ValueError as exc:
            raise doc.error(path + ("taps",), str(exc)) from None
    targets = []
    for i, item in enumerate(targets_raw):
        p = path + ("targets", i)
        _check_keys(doc, item, TARGET_KEYS, p)
        for key in ("range_m", "velocity_m_s"):
            if key not in item:
                raise doc.error(p, f"target is missing '{key}'")
        targets.append(
            Target(
                _number(doc, item["range_m"], p + ("range_m",)),
                _number(doc, item["velocity_m_s"], p + ("velocity_m_s",)),
                _gain(doc, item.get("gain", 1.0), p + ("gain",)),
            )
        )
    for i, tgt in enumerate(targets):
        try:
            scene_to_taps([tgt], cfg, quantize)
        except (OutOfAmbiguityRangeError, NonIntegerTapError) as exc:
            raise doc.error(path + ("targets", i), str(exc).replace("target 0: ", "")) from None
    return scene_to_taps(targets, cfg, quantize), tuple(targets), quantize


def _experiment(doc: _Doc, section: dict) -> dict:
    path = ("experiment",)
    _check_keys(doc, section, EXPERIMENT_KEYS, path)
    out = {}
    system = section.get("system", "both")
    if system not in ("otfs", "ofdm", "both"):
        raise doc.error(path + ("system",), "system must be otfs, ofdm or both")
    sweep = section.get("sweep", "none")
    if sweep not in ("none", "velocity", "snr"):
        raise doc.error(path + ("sweep",), "sweep must be none, velocity or snr")
    values = section.get("values", [])
    if not isinstance(values, list):
        raise doc.error(path + ("values",), "values must be a list")
    values = [_number(doc, v, path + ("values", i), integer=(sweep == "velocity")) for i, v in enumerate(values)]
    if sweep != "none" and not values:
        raise doc.error(path + ("values",), f"{sweep} sweep needs a non-empty list of values")
    trials = _number(doc, section.get("trials", 100), path + ("trials",), integer=True)
    if trials < 1:
        raise doc.error(path + ("trials",), "trials must be >= 1")
    workers = _number(doc, section.get("workers", 1), path + ("workers",), integer=True)
    if workers < 1:
        raise doc.error(path + ("workers",), "workers must be >= 1")
    out.update(
        name=str(section.get("name", "experiment")),
        system=system,
        sweep=sweep,
        values=tuple(float(v) for v in values),
        trials=trials,
        base_seed=_number(doc, section.get("base_seed", 0), path + ("base_seed",), integer=True),
        workers=workers,
        output_dir=Path(str(section.get("output_dir", "results"))),
        detection_threshold_db=_number(doc, section.get("detection_threshold_db", 13.0), path + ("detection_threshold_db",)),
    )
    return out


def parse_document(data: dict, lines: dict | None = None, source: str | None = None) -> ExperimentSpec:
    """Resolve a parsed document (merged over the defaults) into a spec."""
    doc = _Doc(data if data is not None else {}, lines or {}, source)
    _check_keys(doc, doc.data, TOP_KEYS, ())
    merged = _merge(DEFAULT_DOCUMENT, doc.data)
    if "scene" in doc.data:
        # a user scene replaces the default scene entirely
        merged["scene"] = dict(doc.data["scene"])
    user_system = doc.data.get("system") or {}
    if isinstance(user_system, dict) and "noise_variance" in user_system and "snr_db" not in user_system:
        # the default snr_db must not clash with an explicit noise variance
        merged["system"].pop("snr_db", None)
    cfg = _system_config(doc, merged["system"])
    ofdm = _ofdm_config(doc, merged["ofdm"], cfg)
    taps, targets, quantize = _scene(doc, merged["scene"], cfg)
    exp = _experiment(doc, merged["experiment"])
    if exp["system"] in ("ofdm", "both") and taps.max_delay > ofdm.cp_length_samples:
        raise doc.error(("ofdm", "cp_length_samples"), f"OFDM cyclic prefix {ofdm.cp_length_samples} is shorter than delay tap {taps.max_delay}")
    return ExperimentSpec(cfg=cfg, ofdm=ofdm, taps=taps, targets=targets, quantize=quantize, document=merged, **exp)


def load_spec(path: str | Path | None = None, text: str | None = None) -> ExperimentSpec:
    """Load an experiment file (or ``text``); with neither, return the defaults."""
    source = None
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", None, source) from None
    if text is None:
        return parse_document({})
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line, source) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    return parse_document(data, _line_index(node) if node is not None else {}, source)


def with_overrides(spec: ExperimentSpec, **overrides) -> ExperimentSpec:
    """Apply CLI overrides (``None`` values ignored) and keep the hash document in sync."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    if not changes:
        return spec
    document = json.loads(json.dumps(spec.document, default=str))
    for key, value in changes.items():
        document["experiment"][key] = str(value) if isinstance(value, Path) else value
    return replace(spec, document=document, **changes)


def preset_document(kind: str) -> dict:
    """Documents for the shipped experiments: ``scenario``, ``velocity`` or ``snr``."""
    if kind == "scenario":
        return json.loads(json.dumps(DEFAULT_DOCUMENT))
    if kind == "velocity":
        return {
            "scene": {"quantize": "exact", "taps": [{"k": 0, "l": 65, "gain": [1.0, 0.0]}]},
            "experiment": {"name": "velocity_sweep", "sweep": "velocity", "values": VELOCITY_SWEEP_TAPS},
        }
    if kind == "snr":
        return {
            "scene": {"quantize": "exact", "taps": [{"k": 21, "l": 65, "gain": [1.0, 0.0]}]},
            "experiment": {"name": "snr_sweep", "system": "otfs", "sweep": "snr", "values": SNR_SWEEP_DB},
        }
    raise ValueError(f"unknown preset experiment {kind!r}")
