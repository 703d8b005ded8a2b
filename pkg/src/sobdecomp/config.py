"""Run configurations: JSON ingestion, validation with field paths, sampling of f."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from numbers import Real

import numpy as np

from .function_space import GridFunction, Mesh
from .geometry import GeometryError, Interval, OpenSetG, open_set_from_spec

TOLERANCE_KEYS = ("membership_tol", "orth_tol", "ode_tol", "neumann_tol", "pythagoras_tol",
                  "oracle_tol", "identity_tol")
TOP_KEYS = ("window", "g_spec", "alpha", "mesh_h", "f_spec", "flank_unbounded", "tolerances", "seed")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path}: {message}")
        self.path = path
        self.message = message


def _num(obj, path, positive=False, nonneg=False) -> float:
    if isinstance(obj, bool) or not isinstance(obj, Real) or not math.isfinite(obj):
        raise ConfigError(path, f"expected a finite number, got {obj!r}")
    if positive and obj <= 0:
        raise ConfigError(path, "must be > 0")
    if nonneg and obj < 0:
        raise ConfigError(path, "must be >= 0")
    return float(obj)


def _pair(obj, path) -> tuple[float, float]:
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        raise ConfigError(path, f"expected [lo, hi], got {obj!r}")
    lo, hi = _num(obj[0], f"{path}[0]"), _num(obj[1], f"{path}[1]")
    if not lo < hi:
        raise ConfigError(path, "need lo < hi")
    return lo, hi


def _check_g_spec(spec, window: Interval, path="g_spec") -> dict:
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected an object")
    kind = spec.get("type")
    if kind == "intervals":
        ivs = spec.get("intervals")
        if not isinstance(ivs, list) or not ivs:
            raise ConfigError(f"{path}.intervals", "expected a nonempty list of [a, b]")
        for i, iv in enumerate(ivs):
            _pair(iv, f"{path}.intervals[{i}]")
        return {"type": "intervals", "intervals": [list(map(float, iv)) for iv in ivs]}
    if kind == "cantor_complement":
        base = _pair(spec.get("base"), f"{path}.base")
        if base[0] < window.lo or base[1] > window.hi:
            raise ConfigError(f"{path}.base", "must lie inside the window")
        depth = spec.get("depth")
        if isinstance(depth, bool) or not isinstance(depth, int) or depth < 0:
            raise ConfigError(f"{path}.depth", "expected a nonnegative integer")
        ratio = _num(spec.get("ratio"), f"{path}.ratio")
        if not 0 < ratio < 1:
            raise ConfigError(f"{path}.ratio", "must lie in (0, 1)")
        return {"type": "cantor_complement", "base": list(base), "depth": depth, "ratio": ratio}
    raise ConfigError(f"{path}.type", f"expected 'intervals' or 'cantor_complement', got {kind!r}")


def _check_f_spec(spec, window: Interval, path="f_spec") -> dict:
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected an object")
    kind = spec.get("type")
    if kind == "hat":
        c = _num(spec.get("center"), f"{path}.center")
        w = _num(spec.get("width"), f"{path}.width", positive=True)
        if c - w / 2 < window.lo or c + w / 2 > window.hi:
            raise ConfigError(path, "hat support must lie inside the window")
        return {"type": "hat", "center": c, "width": w}
    if kind == "gaussian":
        c = _num(spec.get("center"), f"{path}.center")
        s = _num(spec.get("sigma"), f"{path}.sigma", positive=True)
        if not window.lo <= c <= window.hi:
            raise ConfigError(f"{path}.center", "must lie inside the window")
        return {"type": "gaussian", "center": c, "sigma": s}
    if kind == "samples":
        x, y = spec.get("x"), spec.get("y")
        if not isinstance(x, list) or len(x) < 2:
            raise ConfigError(f"{path}.x", "expected a list of at least two numbers")
        if not isinstance(y, list) or len(y) != len(x):
            raise ConfigError(f"{path}.y", "expected a list as long as x")
        xs = [_num(v, f"{path}.x[{i}]") for i, v in enumerate(x)]
        ys = [_num(v, f"{path}.y[{i}]") for i, v in enumerate(y)]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigError(f"{path}.x", "must be strictly increasing")
        if xs[0] < window.lo or xs[-1] > window.hi:
            raise ConfigError(f"{path}.x", "must lie inside the window")
        return {"type": "samples", "x": xs, "y": ys}
    if kind == "polynomial":
        coeffs = spec.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{path}.coeffs", "expected a nonempty list")
        cs = [_num(v, f"{path}.coeffs[{i}]") for i, v in enumerate(coeffs)]
        sup = _pair(spec.get("support", [window.lo, window.hi]), f"{path}.support")
        if sup[0] < window.lo or sup[1] > window.hi:
            raise ConfigError(f"{path}.support", "must lie inside the window")
        return {"type": "polynomial", "coeffs": cs, "support": list(sup)}
    raise ConfigError(f"{path}.type", f"unknown f type {kind!r}")


def sample_f(spec: dict, mesh: Mesh) -> GridFunction:
    """Nodal interpolant of the configured f.

    ``polynomial`` uses ascending coefficients and is zero outside its support.
    """
    x = mesh.nodes
    kind = spec["type"]
    if kind == "hat":
        vals = np.maximum(0.0, 1.0 - np.abs(x - spec["center"]) / (spec["width"] / 2))
    elif kind == "gaussian":
        vals = np.exp(-0.5 * ((x - spec["center"]) / spec["sigma"]) ** 2)
    elif kind == "samples":
        vals = np.interp(x, spec["x"], spec["y"])
    elif kind == "polynomial":
        a, b = spec["support"]
        vals = np.where((x >= a) & (x <= b), np.polynomial.polynomial.polyval(x, spec["coeffs"]), 0.0)
    else:
        raise ValueError(f"unknown f type {kind!r}")
    return GridFunction(mesh, vals)


@dataclass(frozen=True)
class RunConfig:
    window: Interval
    g_spec: dict
    alpha: float
    mesh_h: float
    f_spec: dict
    flank_unbounded: tuple[bool, bool] | None = None
    tolerances: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "expected a JSON object")
        for key in raw:
            if key not in TOP_KEYS:
                raise ConfigError(key, "unknown field")
        for key in ("window", "g_spec", "alpha", "mesh_h", "f_spec"):
            if key not in raw:
                raise ConfigError(key, "missing required field")
        window = Interval(*_pair(raw["window"], "window"))
        g_spec = _check_g_spec(raw["g_spec"], window)
        alpha = _num(raw["alpha"], "alpha", nonneg=True)
        mesh_h = _num(raw["mesh_h"], "mesh_h", positive=True)
        f_spec = _check_f_spec(raw["f_spec"], window)
        flanks = raw.get("flank_unbounded")
        if flanks is not None:
            if (not isinstance(flanks, list) or len(flanks) != 2
                    or not all(isinstance(b, bool) for b in flanks)):
                raise ConfigError("flank_unbounded", "expected [bool, bool]")
            flanks = (flanks[0], flanks[1])
        tols = raw.get("tolerances", {})
        if not isinstance(tols, dict):
            raise ConfigError("tolerances", "expected an object")
        for k, v in tols.items():
            if k not in TOLERANCE_KEYS:
                raise ConfigError(f"tolerances.{k}", "unknown tolerance")
            _num(v, f"tolerances.{k}", nonneg=True)
        seed = raw.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("seed", "expected an integer")
        cfg = cls(window, g_spec, alpha, mesh_h, f_spec, flanks,
                  {k: float(v) for k, v in tols.items()}, seed)
        cfg.validate_resolution()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def to_dict(self) -> dict:
        out = {
            "window": [self.window.lo, self.window.hi],
            "g_spec": self.g_spec,
            "alpha": self.alpha,
            "mesh_h": self.mesh_h,
            "f_spec": self.f_spec,
            "flank_unbounded": list(self.flanks()),
            "tolerances": dict(self.tolerances),
            "seed": self.seed,
        }
        return out

    def replace(self, **changes) -> "RunConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate_resolution()
        return cfg

    def open_set(self) -> OpenSetG:
        try:
            return open_set_from_spec(self.g_spec, self.window)
        except GeometryError as exc:
            raise ConfigError("g_spec", str(exc))

    def validate_resolution(self):
        """Every G and F component must receive at least four cells."""
        G = self.open_set()
        pieces = list(G.intervals) + list(G.f_components)
        shortest = min(iv.length for iv in pieces)
        if self.mesh_h > shortest / 4 * (1 + 1e-9):
            raise ConfigError("mesh_h", f"{self.mesh_h:g} exceeds shortest component/4 = {shortest / 4:g}")

    def flanks(self) -> tuple[bool, bool]:
        """Declared unboundedness of the outer G intervals; default: G touches the window end."""
        if self.flank_unbounded is not None:
            return self.flank_unbounded
        return self.open_set().flank_flags()

    def tol(self, key: str, default):
        return self.tolerances.get(key, default)

    def build(self):
        G = self.open_set()
        mesh = Mesh.from_open_set(G, self.mesh_h)
        return G, mesh, sample_f(self.f_spec, mesh)
