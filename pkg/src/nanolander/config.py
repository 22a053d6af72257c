"""Scenario configuration: YAML files checked against a per-scenario schema.

Every key has a documented default. Unknown keys and out-of-range values
are rejected with the offending key and its line in the file.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import yaml

KINDS = ("gravity", "hop", "tumble", "coverage", "exclusion", "evolve")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class Key:
    default: Any
    kind: type | tuple
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    required: bool = False


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _prob(x):
    return 0 <= x <= 1


NUM = (int, float)

_SWARM = {
    "n_landers": Key(40, int, lambda v: v >= 1, ">= 1"),
    "r_c": Key(5.0, NUM, _pos, "> 0"),
    "r_s": Key(2.5, NUM, _pos, "> 0"),
    "degree": Key(3, int, _nonneg, ">= 0"),
    "c_cov": Key(1.0, NUM, _pos, "> 0"),
    "c_com": Key(0.2, NUM, _nonneg, ">= 0"),
    "c_obs": Key(1.0, NUM, _pos, "> 0"),
    "com_law": Key("rest_length", str, lambda v: v in ("rest_length", "linear"), "rest_length or linear"),
    "mass": Key(1.0, NUM, _pos, "> 0"),
    "damping": Key(2.0, NUM, _pos, "> 0"),
    "dt": Key(0.1, NUM, _pos, "> 0"),
    "max_steps": Key(3000, int, lambda v: v >= 1, ">= 1"),
    "seed": Key(0, int, _nonneg, ">= 0"),
    "area_side": Key(30.0, NUM, _pos, "> 0"),
    "deploy_side": Key(10.0, NUM, _pos, "> 0"),
    "obstacles": Key([], list, None, "list of [x, y] or [x, y, radius]"),
    "settle_eps": Key(1e-3, NUM, _pos, "> 0"),
    "settle_window": Key(10, int, lambda v: v >= 1, ">= 1"),
}

SCHEMAS: dict[str, dict[str, Key]] = {
    "gravity": {
        "shape": Key(None, (str, type(None)), None, "path to an OBJ file"),
        "builtin": Key("cube", str, lambda v: v in ("cube", "ellipsoid"), "cube or ellipsoid"),
        "size": Key(1.0, NUM, _pos, "> 0"),
        "subdivisions": Key(3, int, lambda v: 0 <= v <= 6, "0..6"),
        "axes": Key([1.0, 1.0, 1.0], list, lambda v: len(v) == 3 and all(a > 0 for a in v), "three positive numbers"),
        "density": Key(2100.0, NUM, _pos, "> 0"),
        "plane": Key("y", str, lambda v: v in ("x", "y", "z"), "x, y or z"),
        "offset": Key(0.0, NUM),
        "resolution": Key(0.1, NUM, _pos, "> 0"),
        "seed": Key(0, int, _nonneg, ">= 0"),
    },
    "hop": {
        "m_s": Key(1.0, NUM, _pos, "> 0"),
        "thrust": Key(0.0445, NUM, _pos, "> 0"),
        "isp": Key(370.0, NUM, _pos, "> 0"),
        "propellant_mass": Key(0.01, NUM, _nonneg, ">= 0"),
        "burn_mass": Key(2e-5, NUM, _nonneg, ">= 0"),
        "g": Key(0.001, NUM, _pos, "> 0"),
        "dt": Key(0.01, NUM, _pos, "> 0"),
        "k_p": Key(0.005, NUM, _pos, "> 0"),
        "k_d": Key(0.005, NUM, _pos, "> 0"),
        "euler0": Key([0.0, 0.0, 0.0], list, lambda v: len(v) == 3, "three angles"),
        "v_esc": Key(None, (int, float, type(None)), lambda v: v is None or v > 0, "> 0"),
        "seed": Key(0, int, _nonneg, ">= 0"),
    },
    "tumble": {
        "m_s": Key(1.0, NUM, _pos, "> 0"),
        "i_s": Key(1.0 / 600.0, NUM, _pos, "> 0"),
        "l": Key(0.1, NUM, _pos, "> 0"),
        "alpha": Key(math.pi / 4, NUM, lambda v: 0 <= v < math.pi / 2, "[0, pi/2)"),
        "beta": Key(0.0, NUM, lambda v: 0 <= v < math.pi / 2, "[0, pi/2)"),
        "eta": Key(0.9, NUM, lambda v: 0 < v <= 1, "(0, 1]"),
        "i_r": Key(0.5 * 0.1 * 0.043**2, NUM, _pos, "> 0"),
        "tau_max": Key(0.01, NUM, _pos, "> 0"),
        "omega_max": Key(2 * math.pi * 100.0, NUM, _pos, "> 0"),
        "wheel_speed": Key(None, (int, float, type(None)), lambda v: v is None or v >= 0, ">= 0"),
        "target_range": Key(None, (int, float, type(None)), lambda v: v is None or v > 0, "> 0"),
        "g": Key(0.001, NUM, _pos, "> 0"),
        "dt": Key(1e-3, NUM, _pos, "> 0"),
        "k_n": Key(1000.0, NUM, _pos, "> 0"),
        "mu_f": Key(0.5, NUM, _nonneg, ">= 0"),
        "settle_time": Key(30.0, NUM, _pos, "> 0"),
        "t_max": Key(5000.0, NUM, _pos, "> 0"),
        "seed": Key(0, int, _nonneg, ">= 0"),
    },
    "coverage": dict(_SWARM),
    "exclusion": {
        **_SWARM,
        "impact_site": Key([3.0, -1.0], list, lambda v: len(v) == 2, "[x, y]"),
        "exclusion_gain": Key(10.0, NUM, _pos, "> 0"),
        "exclusion_radius": Key(2.0, NUM, _pos, "> 0"),
    },
    "evolve": {
        "pop_size": Key(50, int, lambda v: v >= 4 and v % 2 == 0, "even and >= 4"),
        "generations": Key(40, int, lambda v: v >= 1, ">= 1"),
        "p_crossover": Key(0.8, NUM, _prob, "[0, 1]"),
        "p_mutation": Key(0.2, NUM, _prob, "[0, 1]"),
        "eval_seeds": Key([0, 1, 2], list, lambda v: len(v) >= 1 and all(isinstance(s, int) for s in v),
                          "non-empty list of integers"),
        "master_seed": Key(0, int, _nonneg, ">= 0"),
        "area_side": Key(30.0, NUM, _pos, "> 0"),
        "r_c": Key(5.0, NUM, _pos, "> 0"),
        "max_steps": Key(3000, int, lambda v: v >= 1, ">= 1"),
    },
}

SEED_KEY = {kind: "master_seed" if kind == "evolve" else "seed" for kind in KINDS}


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    params: dict
    output_dir: Path | None = None

    @property
    def master_seed(self) -> int:
        return int(self.params[SEED_KEY[self.kind]])

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return ScenarioConfig(self.kind, {**self.params, SEED_KEY[self.kind]: int(seed)}, self.output_dir)

    def digest(self) -> str:
        """SHA-256 of the resolved parameters; independent of key order."""
        blob = json.dumps({"kind": self.kind, "params": self.params}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _line_index(text: str) -> dict[str, int]:
    """1-based line of each top-level key."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value if isinstance(k, yaml.ScalarNode)}


def _type_ok(value, kind) -> bool:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, bool):
        return bool in kinds
    if float in kinds and isinstance(value, int):
        return True
    return isinstance(value, kinds)


def validate(kind: str, raw: dict, lines: dict[str, int] | None = None) -> dict:
    """Fill defaults and check types and ranges for one scenario kind."""
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {', '.join(KINDS)}")
    lines = lines or {}
    where = lambda k: f" (line {lines[k]})" if k in lines else ""  # noqa: E731
    schema = SCHEMAS[kind]
    out = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}{where(key)} for scenario {kind!r}")
    for key, spec in schema.items():
        if key not in raw:
            if spec.required:
                raise ConfigError(f"missing required key {key!r} for scenario {kind!r}")
            value = spec.default
        else:
            value = raw[key]
            if not _type_ok(value, spec.kind):
                raise ConfigError(f"key {key!r}{where(key)} has the wrong type: {value!r}")
            try:
                ok = spec.check is None or spec.check(value)
            except TypeError:
                ok = False
            if not ok:
                raise ConfigError(f"key {key!r}{where(key)} out of range: {value!r} (must be {spec.rule})")
        kinds = spec.kind if isinstance(spec.kind, tuple) else (spec.kind,)
        if float in kinds and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        out[key] = value
    if "obstacles" in out:
        obs = []
        for item in out["obstacles"]:
            if not (isinstance(item, list) and len(item) in (2, 3) and all(_type_ok(v, NUM) for v in item)):
                raise ConfigError(f"key 'obstacles'{where('obstacles')} entries must be [x, y] or [x, y, radius]")
            obs.append([float(v) for v in item] + ([0.0] if len(item) == 2 else []))
        out["obstacles"] = obs
    return out


def parse_config(path: str | Path, kind: str | None = None, output_dir: str | Path | None = None) -> ScenarioConfig:
    """Read a YAML scenario file.

    The file is a flat mapping. It may name its scenario with a ``kind`` key;
    when ``kind`` is also given here the two must agree.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: malformed YAML{at}: {getattr(exc, 'problem', exc)}") from None
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping of keys to values")
    lines = _line_index(text)
    file_kind = raw.pop("kind", None)
    if kind is None:
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        raise ConfigError(f"{path}: file declares kind {file_kind!r} (line {lines.get('kind')}) but {kind!r} was requested")
    if kind is None:
        raise ConfigError(f"{path}: no scenario kind given")
    try:
        params = validate(kind, raw, lines)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ScenarioConfig(kind, params, Path(output_dir) if output_dir is not None else None)
