"""Scenario configuration: JSON with every exact quantity carried as a
"p/q" string (decimal floats are rejected in exact fields), plus builders
that turn a config into flux / field / comb objects.

Runs are deterministic: a scenario plus a seed fully determines every output
byte of the exact modules.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .combs import CombSpec, build_comb
from .exactnum import as_rational, format_rational
from .field import DensityField, MovingPatch
from .flux import PiecewiseAffineFlux2, counterexample_flux
from .geometry import Point2, Rect, RectUnion
from .illposed import AngularData


class ConfigError(ValueError):
    pass


def _rat(node, what):
    try:
        if isinstance(node, float):
            raise ConfigError(
                f"{what}: decimal floats are not allowed in exact fields")
        return as_rational(node)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{what}: {e}") from e


def _require(cfg, key, what="config"):
    if key not in cfg:
        raise ConfigError(f"{what}: missing key {key!r}")
    return cfg[key]


def build_flux(node):
    kind = _require(node, "kind", "flux")
    if kind == "counterexample":
        return counterexample_flux()
    if kind == "piecewise_affine":
        bps = [(_rat(r, "flux breakpoint"),
                (_rat(v[0], "flux value"), _rat(v[1], "flux value")))
               for r, v in _require(node, "breakpoints", "flux")]
        tail = _require(node, "tail_slope", "flux")
        return PiecewiseAffineFlux2(bps, (_rat(tail[0], "tail"), _rat(tail[1], "tail")))
    raise ConfigError(f"flux: unknown kind {kind!r}")


def build_rect(node, what="rect"):
    (lo1, lo2), (hi1, hi2) = node
    return Rect(Point2(_rat(lo1, what), _rat(lo2, what)),
                Point2(_rat(hi1, what), _rat(hi2, what)))


def build_field(node) -> DensityField:
    background = _rat(_require(node, "background", "field"), "background")
    patches = []
    for p in node.get("patches", []):
        vel = _require(p, "velocity", "patch")
        rects = [build_rect(r, "patch rect") for r in _require(p, "rects", "patch")]
        patches.append(MovingPatch(
            _rat(_require(p, "value", "patch"), "patch value"),
            (_rat(vel[0], "velocity"), _rat(vel[1], "velocity")),
            RectUnion(rects)))
    for c in node.get("combs", []):
        spec = CombSpec(
            k=int(_require(c, "k", "comb")),
            kind=_require(c, "kind", "comb"),
            tooth_count=int(_require(c, "tooth_count", "comb")),
            start_index=int(c.get("start_index", 0)),
            strip_offset=_rat(c.get("strip_offset", 0), "strip_offset"),
        )
        patches.append(build_comb(spec))
    horizon = node.get("horizon", ["0", None])
    t_hi = None if horizon[1] is None else _rat(horizon[1], "horizon")
    return DensityField(background, patches,
                        horizon=(_rat(horizon[0], "horizon"), t_hi))


def build_angle(node) -> AngularData:
    if "cos" in node:
        return AngularData.from_cos(_rat(node["cos"], "beta cos"))
    if "radians" in node:
        return AngularData.from_radians(float(node["radians"]))
    raise ConfigError("beta: needs 'cos' (exact) or 'radians' (float)")


@dataclass
class Scenario:
    name: str
    raw: dict

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls(name=raw.get("name", Path(path).stem), raw=raw)

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def require(self, key):
        return _require(self.raw, key, f"scenario {self.name!r}")


def rational_str(x) -> str:
    return format_rational(x)


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header, rows):
    def fmt(v):
        if isinstance(v, Fraction):
            return format_rational(v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
