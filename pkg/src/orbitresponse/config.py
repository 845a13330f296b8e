"""TOML experiment configuration.

A circle config::

    mode = "circle"
    n_max = 12
    scalar = "binary64"          # or "extended(113)"

    [map]
    degree = 2
    t_max = 0.1
    base = { sin = [0.05] }      # constant / cos / sin lists, index k-1
    direction = { sin = [1.0] }

    [observable]
    cos = [1.0]

``[map]`` may be omitted when the file only tunes ``[validation]``.
A torus config replaces ``[map]`` with ``A = [2, 1, 1, 1]`` and
``P1``/``P2`` tables holding ``terms = [[k1, k2, a_cos, b_sin], ...]``;
the observable uses the same ``terms`` layout.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .anosov import TorusMapFamily, TrigPoly2
from .model import CircleMapFamily, TrigPoly
from .numerics import BINARY64, Scalar, parse_scalar
from .validation import Settings


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str
    family: CircleMapFamily | TorusMapFamily | None
    observable: TrigPoly | TrigPoly2 | None
    n_max: int = 12
    scalar: Scalar = BINARY64
    h: float = 1e-3
    abel: bool = False
    validation: Settings = field(default_factory=Settings)


def _require(table: dict, key: str, where: str) -> Any:
    if key not in table:
        raise ConfigError(f"missing required field '{where}{key}'")
    return table[key]


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{name}' must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"field '{name}' must be finite, got {value!r}")
    return float(value)


def _integer(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field '{name}' must be an integer, got {value!r}")
    return value


def _trig(table: Any, name: str) -> TrigPoly:
    if table is None:
        return TrigPoly()
    if not isinstance(table, dict):
        raise ConfigError(f"field '{name}' must be a table")
    unknown = set(table) - {"constant", "cos", "sin"}
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    cos = [_number(v, f"{name}.cos") for v in table.get("cos", [])]
    sin = [_number(v, f"{name}.sin") for v in table.get("sin", [])]
    return TrigPoly(_number(table.get("constant", 0.0), f"{name}.constant"), cos, sin)


def _trig2(table: Any, name: str) -> TrigPoly2:
    if table is None:
        return TrigPoly2()
    if not isinstance(table, dict):
        raise ConfigError(f"field '{name}' must be a table")
    rows = []
    for row in table.get("terms", []):
        if len(row) != 4:
            raise ConfigError(f"'{name}.terms' rows must be [k1, k2, a_cos, b_sin], got {row!r}")
        rows.append((_integer(row[0], f"{name}.terms"), _integer(row[1], f"{name}.terms"),
                     _number(row[2], f"{name}.terms"), _number(row[3], f"{name}.terms")))
    return TrigPoly2(_number(table.get("constant", 0.0), f"{name}.constant"), tuple(rows))


def _settings(table: dict) -> Settings:
    s = Settings()
    for key, value in table.items():
        if not hasattr(s, key):
            raise ConfigError(f"unknown validation field 'validation.{key}'")
        cast = _integer if isinstance(getattr(s, key), int) else _number
        setattr(s, key, cast(value, f"validation.{key}"))
    return s


def from_dict(raw: dict) -> ExperimentConfig:
    mode = raw.get("mode", "circle")
    if mode not in ("circle", "torus"):
        raise ConfigError(f"field 'mode' must be 'circle' or 'torus', got {mode!r}")
    m = raw.get("map")
    if m is not None and not isinstance(m, dict):
        raise ConfigError("field 'map' must be a table")
    try:
        if m is None:
            # validation-only configs carry no map
            family = observable = None
        elif mode == "circle":
            degree = _integer(_require(m, "degree", "map."), "map.degree")
            family = CircleMapFamily(
                degree,
                _trig(m.get("base"), "map.base"),
                _trig(m.get("direction"), "map.direction"),
                _number(m.get("t_max", 0.1), "map.t_max"),
            )
            observable = _trig(raw.get("observable"), "observable")
        else:
            A = _require(m, "A", "map.")
            if not isinstance(A, list) or len(A) != 4:
                raise ConfigError("field 'map.A' must list 4 integers [a11, a12, a21, a22]")
            A = np.array([_integer(v, "map.A") for v in A]).reshape(2, 2)
            family = TorusMapFamily(
                A,
                (_trig2(m.get("P1"), "map.P1"), _trig2(m.get("P2"), "map.P2")),
                _number(m.get("t_max", 0.05), "map.t_max"),
            )
            observable = _trig2(raw.get("observable"), "observable")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid [map]: {exc}") from exc
    n_max = _integer(raw.get("n_max", 12), "n_max")
    if n_max < 1:
        raise ConfigError("field 'n_max' must be >= 1")
    try:
        scalar = parse_scalar(str(raw.get("scalar", "binary64")))
    except ValueError as exc:
        raise ConfigError(f"field 'scalar': {exc}") from exc
    return ExperimentConfig(
        mode=mode,
        family=family,
        observable=observable,
        n_max=n_max,
        scalar=scalar,
        h=_number(raw.get("h", 1e-3), "h"),
        abel=bool(raw.get("abel", False)),
        validation=_settings(raw.get("validation", {})),
    )


def load(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return from_dict(raw)
