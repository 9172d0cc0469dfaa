"""
Experiment configuration files.

Configurations are JSON objects whose keys carry explicit SI units
(``delay_s``, ``i_balance_a``, ``r_p_ohm``). A minimal two-device file::

    {
      "devices": ["smtj1", "smtj2"],
      "gain": 0.03,
      "polarity": "positive",
      "duration_s": 2.0,
      "seed": 7
    }

Devices are preset names or explicit parameter objects. Couplings default
to every ordered pair at the top-level ``gain``/``polarity``; an explicit
``couplings`` list may give per-edge shorthand (``gain``, ``polarity``) or a
full ``pipeline`` object.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .analog import (
    GainConfig,
    LevelShiftConfig,
    PipelineConfig,
    Polarity,
    ThresholdConfig,
    TransconductanceConfig,
)
from .device import SmtjParams, load_presets, params_from_mapping
from .errors import ConfigError, InvalidConfigurationError, SmtjError
from .simnet import NetworkSpec, SquareWave

__all__ = [
    "ExperimentSpec",
    "parse_spec",
    "load_spec",
    "dump_spec",
    "pipeline_to_dict",
    "pipeline_from_dict",
    "resolve_devices",
    "build_network",
]

_PIPELINE_KEYS = {
    "threshold": (ThresholdConfig, {"i_fixed_a": "i_fixed", "r_var_ohm": "r_var",
                                    "v_high_v": "v_high", "polarity": "polarity"}),
    "gain": (GainConfig, {"r_gain_ohm": "r_gain", "r_gs_ohm": "r_gs", "v_c_v": "v_c"}),
    "shift": (LevelShiftConfig, {"r_1_ohm": "r_1", "r_f_ohm": "r_f", "r_2_ohm": "r_2",
                                 "r_g_ohm": "r_g", "v_bias_v": "v_bias"}),
    "transcond": (TransconductanceConfig, {"v_dd_v": "v_dd", "r_1_ohm": "r_1"}),
}

_DEVICE_KEYS = {
    "tau_balance_s", "slope_b_per_a", "tau0_s", "barrier_kt", "i_crit_a",
    "i_balance_a", "r_p_ohm", "r_ap_ohm", "i_breakdown_a",
}


@dataclass
class ExperimentSpec:
    devices: list
    couplings: list | None = None
    gain: float = 0.0
    polarity: str = "positive"
    delay_s: float = 1e-6
    duration_s: float = 1.0
    sample_dt_s: float | None = None
    seed: int = 0
    sweep_gains: list | None = None
    anneal: dict | None = None
    drive_overrides: dict | None = None
    out_dir: str = "out"
    presets_path: str | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


_FIELD_NAMES = {f.name for f in fields(ExperimentSpec)}


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def _number(value, key, text, *, positive=False, allow_zero=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}", _line_of(text, key))
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", _line_of(text, key))
    if positive and (value < 0 or (not allow_zero and value == 0)):
        raise ConfigError(f"{key} must be {'>' if not allow_zero else '>='} 0", _line_of(text, key))
    return value


def parse_spec(text: str) -> ExperimentSpec:
    """Parse configuration text; errors carry the offending line number."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object", 1)
    unknown = sorted(set(raw) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", _line_of(text, unknown[0]))
    if "devices" not in raw:
        raise ConfigError("missing required key 'devices'", 1)
    devices = raw["devices"]
    if not isinstance(devices, list) or not devices:
        raise ConfigError("devices must be a non-empty list", _line_of(text, "devices"))
    for entry in devices:
        if isinstance(entry, dict):
            bad = sorted(set(entry) - _DEVICE_KEYS)
            if bad:
                raise ConfigError(f"unknown device key {bad[0]!r}", _line_of(text, bad[0]))
        elif not isinstance(entry, str):
            raise ConfigError("device entries must be preset names or objects",
                              _line_of(text, "devices"))
    spec = ExperimentSpec(devices=devices)
    for key in ("gain", "delay_s", "duration_s", "sample_dt_s"):
        if raw.get(key) is not None:
            _number(raw[key], key, text, positive=True, allow_zero=key in ("gain", "delay_s"))
    if "seed" in raw and (isinstance(raw["seed"], bool) or not isinstance(raw["seed"], int)
                          or raw["seed"] < 0):
        raise ConfigError("seed must be a non-negative integer", _line_of(text, "seed"))
    if "polarity" in raw and raw["polarity"] not in ("positive", "negative"):
        raise ConfigError("polarity must be 'positive' or 'negative'", _line_of(text, "polarity"))
    if raw.get("sweep_gains") is not None:
        gains = raw["sweep_gains"]
        if not isinstance(gains, list) or not gains:
            raise ConfigError("sweep_gains must be a non-empty list", _line_of(text, "sweep_gains"))
        for g in gains:
            _number(g, "sweep_gains", text, positive=True)
    for key in ("couplings",):
        if raw.get(key) is not None and not isinstance(raw[key], list):
            raise ConfigError(f"{key} must be a list", _line_of(text, key))
    for key in ("anneal", "drive_overrides"):
        if raw.get(key) is not None and not isinstance(raw[key], dict):
            raise ConfigError(f"{key} must be an object", _line_of(text, key))
    for key, value in raw.items():
        setattr(spec, key, value)
    # surface semantic errors (bad presets, impossible circuits) at parse time
    try:
        resolve_devices(spec)
        build_network(spec, spec.gain if spec.gain else 0.0)
    except ConfigError:
        raise
    except (SmtjError, KeyError, TypeError, ValueError) as exc:
        key = exc.args[0] if isinstance(exc, KeyError) else None
        raise ConfigError(str(exc), _line_of(text, key) if key else None) from None
    return spec


def load_spec(path) -> ExperimentSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def dump_spec(spec: ExperimentSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"


# -- pipelines ---------------------------------------------------------------


def pipeline_to_dict(cfg: PipelineConfig) -> dict:
    out = {}
    for part, (_, keys) in _PIPELINE_KEYS.items():
        stage = getattr(cfg, part)
        out[part] = {
            ext: (getattr(stage, attr).value if attr == "polarity" else getattr(stage, attr))
            for ext, attr in keys.items()
        }
    return out


def pipeline_from_dict(raw: dict) -> PipelineConfig:
    parts = {}
    for part, (cls, keys) in _PIPELINE_KEYS.items():
        sub = raw.get(part, {})
        bad = set(sub) - set(keys)
        if bad:
            raise ConfigError(f"unknown {part} key {sorted(bad)[0]!r}")
        parts[part] = cls(**{keys[k]: v for k, v in sub.items()})
    return PipelineConfig(**parts)


# -- network assembly --------------------------------------------------------


def resolve_devices(spec: ExperimentSpec) -> list[SmtjParams]:
    presets = None
    out = []
    for entry in spec.devices:
        if isinstance(entry, str):
            if presets is None:
                presets = load_presets(spec.presets_path)
            if entry not in presets:
                raise ConfigError(f"unknown preset {entry!r}; available: {', '.join(sorted(presets))}")
            out.append(presets[entry])
        else:
            try:
                out.append(params_from_mapping(entry))
            except KeyError as exc:
                raise ConfigError(f"device is missing key {exc.args[0]!r}") from None
    return out


def _threshold_reference(dev: SmtjParams) -> float:
    """Halfway between the two sensed voltage levels at balance."""
    return 0.5 * (dev.r_p + dev.r_ap) * dev.i_balance


def _edges(spec: ExperimentSpec, n: int):
    if spec.couplings is None:
        return [
            {"source": k, "target": j} for j in range(n) for k in range(n) if j != k
        ] if n > 1 else []
    edges = []
    for e in spec.couplings:
        if not isinstance(e, dict) or "source" not in e or "target" not in e:
            raise ConfigError("each coupling needs 'source' and 'target'")
        j, k = e["target"], e["source"]
        if not (isinstance(j, int) and isinstance(k, int) and 0 <= j < n and 0 <= k < n):
            raise ConfigError(f"coupling refers to unknown device ({k} -> {j})")
        if j == k:
            raise ConfigError(f"device {j} cannot couple to itself")
        edges.append(e)
    return edges


def build_network(spec: ExperimentSpec, gain: float | None = None) -> NetworkSpec:
    """Assemble the network; ``gain`` (if given) overrides every edge gain."""
    devices = resolve_devices(spec)
    n = len(devices)
    edges = _edges(spec, n)
    n_in = [0] * n
    for e in edges:
        n_in[e["target"]] += 1
    rows = [[None] * n for _ in range(n)]
    for e in edges:
        j, k = e["target"], e["source"]
        if "pipeline" in e:
            cfg = pipeline_from_dict(e["pipeline"])
            if gain is not None:
                cfg = cfg.with_gain(gain)
        else:
            g = gain if gain is not None else e.get("gain", spec.gain)
            cfg = PipelineConfig.for_target(
                g,
                Polarity(e.get("polarity", spec.polarity)),
                i_dc=devices[j].i_balance / n_in[j],
                reference_v=e.get("reference_v", _threshold_reference(devices[k])),
            )
        if rows[j][k] is not None:
            raise ConfigError(f"duplicate coupling {k} -> {j}")
        rows[j][k] = cfg
    overrides = {}
    for key, wave in (spec.drive_overrides or {}).items():
        try:
            overrides[int(key)] = SquareWave(
                period=float(wave["period_s"]),
                duty=float(wave.get("duty", 0.5)),
                phase=float(wave.get("phase_s", 0.0)),
            )
        except (KeyError, ValueError, InvalidConfigurationError) as exc:
            raise ConfigError(f"bad drive override for device {key}: {exc}") from None
    return NetworkSpec(tuple(devices), rows, delay=spec.delay_s, drive_overrides=overrides)


def default_sample_dt(devices) -> float:
    return min(d.tau_balance for d in devices) / 20.0
