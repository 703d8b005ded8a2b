"""Open sets G on a finite window, their closed complements F, and scale functions.

The real line is replaced by a finite window.  Unbounded components of G on
the line become the flanks of the window: G-intervals that touch a window end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise GeometryError(f"interval needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)


def _as_interval(obj) -> Interval:
    if isinstance(obj, Interval):
        return obj
    lo, hi = obj
    return Interval(float(lo), float(hi))


@dataclass(frozen=True)
class OpenSetG:
    """Finite union of disjoint open intervals inside a window.

    ``intervals`` is sorted and pairwise disjoint with no touching ends.  The
    complement F is the window minus G; only components of positive length
    are kept (a G-interval ending exactly at the window edge leaves no F
    point there).
    """

    window: Interval
    intervals: tuple[Interval, ...] = ()
    _f_components: tuple[Interval, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        prev_hi = -np.inf
        for iv in self.intervals:
            if not self.window.contains(iv):
                raise GeometryError(f"{iv} not contained in window {self.window}")
            if iv.lo <= prev_hi:
                raise GeometryError("intervals must be sorted, disjoint and non-touching")
            prev_hi = iv.hi
        comps = []
        left = self.window.lo
        for iv in self.intervals:
            if iv.lo > left:
                comps.append(Interval(left, iv.lo))
            left = iv.hi
        if left < self.window.hi:
            comps.append(Interval(left, self.window.hi))
        object.__setattr__(self, "_f_components", tuple(comps))

    @property
    def f_components(self) -> tuple[Interval, ...]:
        return self._f_components

    @property
    def measure(self) -> float:
        return float(sum(iv.length for iv in self.intervals))

    @property
    def f_measure(self) -> float:
        return float(sum(c.length for c in self._f_components))

    @property
    def is_proper(self) -> bool:
        """True iff F has positive measure, i.e. the subspace is a proper one."""
        return len(self._f_components) > 0

    def endpoints(self) -> list[float]:
        pts = {self.window.lo, self.window.hi}
        for iv in self.intervals:
            pts.update((iv.lo, iv.hi))
        return sorted(pts)

    def indicator(self, x) -> np.ndarray:
        """1 where x lies in G (open intervals), else 0."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for iv in self.intervals:
            out[(x > iv.lo) & (x < iv.hi)] = 1.0
        return out

    def flank_flags(self) -> tuple[bool, bool]:
        """Whether G touches the left / right window end."""
        if not self.intervals:
            return (False, False)
        return (self.intervals[0].lo == self.window.lo,
                self.intervals[-1].hi == self.window.hi)


def normalize_intervals(raw: Iterable, window) -> OpenSetG:
    """Clip ``raw`` intervals to ``window``, merge overlapping or touching ones."""
    window = _as_interval(window)
    clipped = []
    for item in raw:
        lo, hi = (item.lo, item.hi) if isinstance(item, Interval) else map(float, item)
        lo, hi = max(lo, window.lo), min(hi, window.hi)
        if lo < hi:
            clipped.append((lo, hi))
    if not clipped:
        raise GeometryError("G has zero measure in window")
    clipped.sort()
    merged = [list(clipped[0])]
    for lo, hi in clipped[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return OpenSetG(window, tuple(Interval(lo, hi) for lo, hi in merged))


def _cantor_pieces(lo: Fraction, hi: Fraction, depth: int, ratio: Fraction):
    pieces = [(lo, hi)]
    keep = (1 - ratio) / 2
    for _ in range(depth):
        nxt = []
        for a, b in pieces:
            ell = b - a
            nxt.append((a, a + keep * ell))
            nxt.append((b - keep * ell, b))
        pieces = nxt
    return pieces


def cantor_complement(base, depth: int, ratio: float, window=None) -> OpenSetG:
    """G = window minus the depth-``depth`` generalized Cantor set on ``base``.

    Each step removes the open middle fraction ``ratio`` of every remaining
    closed piece.  Endpoints are computed in exact rationals and rounded once.
    """
    base = _as_interval(base)
    window = base if window is None else _as_interval(window)
    if not window.contains(base):
        raise GeometryError(f"base {base} not contained in window {window}")
    if depth < 0:
        raise GeometryError("depth must be nonnegative")
    if not 0 < ratio < 1:
        raise GeometryError("ratio must lie in (0, 1)")
    pieces = _cantor_pieces(Fraction(base.lo), Fraction(base.hi), int(depth), Fraction(ratio))
    gaps = []
    if window.lo < base.lo:
        gaps.append((window.lo, base.lo))
    for (_, b), (a, _) in zip(pieces[:-1], pieces[1:]):
        gaps.append((float(b), float(a)))
    if base.hi < window.hi:
        gaps.append((base.hi, window.hi))
    return OpenSetG(window, tuple(Interval(lo, hi) for lo, hi in gaps))


def g_measure(G: OpenSetG) -> float:
    return G.measure


def f_components(G: OpenSetG) -> list[Interval]:
    return list(G.f_components)


@dataclass(frozen=True)
class ScaleFunction:
    """Piecewise-linear s with slope 1 on G, 0 on F and s(base_point) = 0."""

    window: Interval
    base_point: float
    breakpoints: np.ndarray
    values: np.ndarray

    @classmethod
    def from_open_set(cls, G: OpenSetG, base_point: float | None = None) -> "ScaleFunction":
        base = G.window.lo if base_point is None else float(base_point)
        if not G.window.lo <= base <= G.window.hi:
            raise GeometryError("base point outside window")
        xs = np.array(sorted(set(G.endpoints()) | {base}))
        dx = np.diff(xs)
        mid = 0.5 * (xs[:-1] + xs[1:])
        vals = np.concatenate([[0.0], np.cumsum(dx * G.indicator(mid))])
        vals -= np.interp(base, xs, vals)
        for a in (xs, vals):
            a.setflags(write=False)
        return cls(G.window, base, xs, vals)

    def __call__(self, x):
        return scale_eval(self, x)


def scale_eval(s: ScaleFunction, x):
    """s(x) = signed measure of G between the base point and x."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < s.window.lo) or np.any(xa > s.window.hi):
        raise GeometryError(f"x outside window {s.window.as_tuple()}")
    out = np.interp(xa, s.breakpoints, s.values)
    return float(out) if out.ndim == 0 else out


def open_set_from_spec(spec: dict, window) -> OpenSetG:
    """Build G from the JSON fragment used in run configurations."""
    kind = spec.get("type")
    if kind == "intervals":
        return normalize_intervals(spec["intervals"], window)
    if kind == "cantor_complement":
        return cantor_complement(spec["base"], int(spec["depth"]), float(spec["ratio"]), window)
    raise GeometryError(f"unknown G spec type {kind!r}")


def open_set_to_spec(G: OpenSetG) -> dict:
    return {"type": "intervals", "intervals": [list(iv.as_tuple()) for iv in G.intervals]}


__all__: Sequence[str] = [
    "GeometryError", "Interval", "OpenSetG", "ScaleFunction", "normalize_intervals",
    "cantor_complement", "g_measure", "f_components", "scale_eval",
    "open_set_from_spec", "open_set_to_spec",
]
