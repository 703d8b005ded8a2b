"""Piecewise-linear model of H^1 on a window and the forms E, E_alpha, E^(s).

All integrals of products of piecewise-linear functions are computed with the
exact cellwise rule, so the only error left in any test is interpolation error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .geometry import OpenSetG


class MeshMismatch(ValueError):
    pass


class NotInSubspace(ValueError):
    pass


@dataclass(frozen=True)
class FormParams:
    alpha: float = 0.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    @property
    def kappa(self) -> float:
        """Decay rate sqrt(2 alpha) of solutions to u''/2 = alpha u."""
        return math.sqrt(2.0 * self.alpha)


def _runs(flags: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs [start, stop) of True entries."""
    padded = np.concatenate([[False], flags, [False]]).astype(np.int8)
    d = np.diff(padded)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


class Mesh:
    """Nodes spanning the window; every cell lies entirely in G or in F.

    Use :meth:`from_open_set` to build a mesh aligned with an open set G.
    """

    def __init__(self, nodes, g_flag, open_set: OpenSetG | None = None, h_max: float | None = None):
        nodes = np.array(nodes, dtype=float)
        g_flag = np.array(g_flag, dtype=bool)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing, at least two")
        if g_flag.shape != (nodes.size - 1,):
            raise ValueError("need one G flag per cell")
        nodes.setflags(write=False)
        g_flag.setflags(write=False)
        self.nodes = nodes
        self.g_flag = g_flag
        self.open_set = open_set
        self.h_max = float(np.max(np.diff(nodes))) if h_max is None else float(h_max)

    @classmethod
    def from_open_set(cls, G: OpenSetG, h: float) -> "Mesh":
        if h <= 0:
            raise ValueError("mesh width must be positive")
        pts = G.endpoints()
        chunks = []
        for a, b in zip(pts[:-1], pts[1:]):
            n = max(1, math.ceil((b - a) / h - 1e-9))
            seg = np.linspace(a, b, n + 1)
            seg[0], seg[-1] = a, b
            chunks.append(seg[:-1])
        nodes = np.concatenate(chunks + [[pts[-1]]])
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        return cls(nodes, G.indicator(mid) > 0.5, open_set=G, h_max=h)

    def __repr__(self):
        return f"Mesh(n_nodes={self.n_nodes}, h_max={self.h_max:.3g})"

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @cached_property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def window_length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])

    @cached_property
    def f_cell_runs(self) -> list[tuple[int, int]]:
        return _runs(~self.g_flag)

    @cached_property
    def g_cell_runs(self) -> list[tuple[int, int]]:
        return _runs(self.g_flag)

    @cached_property
    def f_node_comp(self) -> np.ndarray:
        """F-component index of every node, -1 for nodes not in F."""
        comp = np.full(self.n_nodes, -1, dtype=np.int64)
        for j, (a, b) in enumerate(self.f_cell_runs):
            comp[a:b + 1] = j
        comp.setflags(write=False)
        return comp

    @property
    def n_f_components(self) -> int:
        return len(self.f_cell_runs)

    @property
    def n_f_nodes(self) -> int:
        return int(np.count_nonzero(self.f_node_comp >= 0))

    def is_aligned(self, G: OpenSetG) -> bool:
        if G is self.open_set:
            return True
        if not np.isclose(self.nodes[0], G.window.lo) or not np.isclose(self.nodes[-1], G.window.hi):
            return False
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return bool(np.array_equal(G.indicator(mid) > 0.5, self.g_flag)) and all(
            np.min(np.abs(self.nodes - p)) <= 1e-12 * max(1.0, abs(p)) for p in G.endpoints()
        )

    def check_aligned(self, G: OpenSetG):
        if not self.is_aligned(G):
            raise MeshMismatch("mesh is not aligned with G")

    # sparse P1 matrices with exact integration

    def _assemble(self, local: np.ndarray) -> sp.csr_matrix:
        n = self.n_nodes
        i = np.arange(n - 1)
        rows = np.concatenate([i, i, i + 1, i + 1])
        cols = np.concatenate([i, i + 1, i, i + 1])
        vals = np.concatenate([local[0, 0], local[0, 1], local[1, 0], local[1, 1]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def mass_matrix(self) -> sp.csr_matrix:
        w = self.widths
        return self._assemble(np.array([[w / 3, w / 6], [w / 6, w / 3]]))

    @cached_property
    def stiffness_matrix(self) -> sp.csr_matrix:
        k = 1.0 / self.widths
        return self._assemble(np.array([[k, -k], [-k, k]]))

    def e_alpha_matrix(self, alpha: float) -> sp.csr_matrix:
        alpha = float(alpha)
        cache = self.__dict__.setdefault("_e_alpha", {})
        if alpha not in cache:
            cache[alpha] = (0.5 * self.stiffness_matrix + alpha * self.mass_matrix).tocsr()
        return cache[alpha]

    def sample(self, func) -> "GridFunction":
        return GridFunction(self, np.asarray(func(self.nodes), dtype=float))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Continuous piecewise-linear function given by its nodal values."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.mesh.n_nodes,):
            raise ValueError(f"expected {self.mesh.n_nodes} nodal values, got {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.mesh.widths

    def _other(self, other) -> np.ndarray:
        if isinstance(other, GridFunction):
            _check_same_mesh(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.mesh, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.mesh, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.mesh, self._other(other) - self.values)

    def __mul__(self, c):
        return GridFunction(self.mesh, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.mesh, -self.values)

    def to_csv(self, path):
        write_csv(path, self.mesh.nodes, {"value": self.values})


def _check_same_mesh(u: GridFunction, v: GridFunction):
    if u.mesh is v.mesh:
        return
    if u.mesh.n_nodes != v.mesh.n_nodes or not np.array_equal(u.mesh.nodes, v.mesh.nodes):
        raise MeshMismatch("grid functions live on different meshes")


def inner_L2(u: GridFunction, v: GridFunction) -> float:
    _check_same_mesh(u, v)
    a0, a1 = u.values[:-1], u.values[1:]
    b0, b1 = v.values[:-1], v.values[1:]
    w = u.mesh.widths
    return float(np.sum(w * (2 * a0 * b0 + a0 * b1 + a1 * b0 + 2 * a1 * b1)) / 6.0)


def dirichlet_D(u: GridFunction, v: GridFunction) -> float:
    _check_same_mesh(u, v)
    return float(np.sum(u.slopes * v.slopes * u.mesh.widths))


def inner_e_alpha(u: GridFunction, v: GridFunction, p: FormParams) -> float:
    return 0.5 * dirichlet_D(u, v) + p.alpha * inner_L2(u, v)


def e_alpha_norm(u: GridFunction, p: FormParams) -> float:
    return math.sqrt(max(inner_e_alpha(u, u, p), 0.0))


class Membership(NamedTuple):
    ok: bool
    worst: float


def default_f_s_tol(u: GridFunction) -> float:
    return 1e-9 * (np.max(np.abs(u.values)) / u.mesh.window_length + np.max(np.abs(u.slopes)))


def membership_F_s(u: GridFunction, G: OpenSetG, tol: float | None = None) -> Membership:
    """Is u' = 0 on every F cell?  Returns the verdict and the largest F-slope."""
    u.mesh.check_aligned(G)
    f_cells = ~u.mesh.g_flag
    worst = float(np.max(np.abs(u.slopes[f_cells]))) if f_cells.any() else 0.0
    if tol is None:
        tol = default_f_s_tol(u)
    return Membership(worst <= tol, worst)


def form_subspace(u: GridFunction, v: GridFunction, G: OpenSetG, tol: float | None = None) -> float:
    """E^(s)(u, v) for members of F^(s): du/ds is u' restricted to G."""
    _check_same_mesh(u, v)
    for w in (u, v):
        if not membership_F_s(w, G, tol).ok:
            raise NotInSubspace("not in F^(s): nonzero slope on F")
    g = u.mesh.g_flag
    return 0.5 * float(np.sum(u.slopes[g] * v.slopes[g] * u.mesh.widths[g]))


def random_grid_function(mesh: Mesh, rng: np.random.Generator, passes: int = 8) -> GridFunction:
    """Smoothed random nodal noise: repeated (1, 2, 1)/4 averaging of Gaussian noise."""
    vals = rng.standard_normal(mesh.n_nodes)
    for _ in range(passes):
        padded = np.concatenate([[vals[0]], vals, [vals[-1]]])
        vals = 0.25 * padded[:-2] + 0.5 * padded[1:-1] + 0.25 * padded[2:]
    return GridFunction(mesh, vals / max(np.max(np.abs(vals)), 1e-300))


def write_csv(path, x, columns: dict):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", *columns])
        cols = [np.asarray(c) for c in columns.values()]
        for i, xi in enumerate(x):
            w.writerow([f"{xi:.17g}", *(f"{c[i]:.17g}" for c in cols)])
