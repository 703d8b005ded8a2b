"""Dense reference projections for small meshes.

Shares no assembly or DOF code with :mod:`sobdecomp.projection`: the Gram
matrix is built cell by cell in dense form, and subspaces are described by
linear constraints read off the geometry, whose null space is computed by SVD.
Meant for meshes of a few hundred nodes.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .geometry import OpenSetG

KINDS = ("F_s", "part_full", "part_subspace", "zero_alpha")


def dense_gram(nodes: np.ndarray, alpha: float) -> np.ndarray:
    n = nodes.size
    A = np.zeros((n, n))
    for i in range(n - 1):
        w = nodes[i + 1] - nodes[i]
        A[i:i + 2, i:i + 2] += 0.5 / w * np.array([[1.0, -1.0], [-1.0, 1.0]])
        A[i:i + 2, i:i + 2] += alpha * w / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    return A


def constraints(nodes: np.ndarray, G: OpenSetG, kind: str, f_left: float = 0.0):
    """Rows C and right side d with C v = d describing the subspace."""
    n = nodes.size
    rows, rhs = [], []
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    in_g = G.indicator(mid) > 0.5
    if kind in ("F_s", "part_subspace", "zero_alpha"):
        for i in np.flatnonzero(~in_g):
            r = np.zeros(n)
            r[i], r[i + 1] = -1.0, 1.0
            rows.append(r)
            rhs.append(0.0)
    if kind in ("part_full", "part_subspace"):
        tol = 1e-12 * max(1.0, np.max(np.abs(nodes)))
        for comp in G.f_components:
            for i in np.flatnonzero((nodes >= comp.lo - tol) & (nodes <= comp.hi + tol)):
                r = np.zeros(n)
                r[i] = 1.0
                rows.append(r)
                rhs.append(0.0)
    if kind == "zero_alpha":
        r = np.zeros(n)
        r[0] = 1.0
        rows.append(r)
        rhs.append(f_left)
    if kind not in KINDS:
        raise ValueError(f"unknown oracle kind {kind!r}")
    if not rows:
        return np.zeros((0, n)), np.zeros(0)
    return np.array(rows), np.array(rhs)


def constrained_projection(f: np.ndarray, A: np.ndarray, C: np.ndarray, d: np.ndarray) -> np.ndarray:
    """argmin (f - v)^T A (f - v) subject to C v = d."""
    if C.shape[0] == 0:
        return f.copy()
    v0 = np.linalg.lstsq(C, d, rcond=None)[0]
    Z = sla.null_space(C)
    if Z.shape[1] == 0:
        return v0
    gram = Z.T @ A @ Z
    y = np.linalg.lstsq(gram, Z.T @ A @ (f - v0), rcond=None)[0]
    return v0 + Z @ y


def oracle_subspace_part(nodes, f_values, G: OpenSetG, alpha: float, kind: str) -> np.ndarray:
    """Subspace component f1 of f for one of the four decompositions."""
    nodes = np.asarray(nodes, dtype=float)
    f_values = np.asarray(f_values, dtype=float)
    a = 0.0 if kind == "zero_alpha" else alpha
    A = dense_gram(nodes, a)
    C, d = constraints(nodes, G, kind, f_left=f_values[0])
    return constrained_projection(f_values, A, C, d)
