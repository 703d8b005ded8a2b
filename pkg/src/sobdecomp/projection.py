"""E_alpha-orthogonal decompositions by constrained Galerkin solves.

The constraint u' = 0 on F is imposed exactly: all nodes of one closed
F-component share a single degree of freedom.  Part spaces (functions that
vanish on F) fix every F-node to zero.  Since DOFs are numbered left to
right, every reduced system stays tridiagonal.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .function_space import (
    FormParams,
    GridFunction,
    Mesh,
    NotInSubspace,
    inner_e_alpha,
    membership_F_s,
)
from .geometry import OpenSetG

log = logging.getLogger(__name__)

EPS = 1e-30
DIRECT_MAX_DOFS = 10_000
CG_RTOL = 1e-12


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class DofMap:
    """Node -> DOF index; -1 marks a node held at zero."""

    mesh: Mesh
    node_to_dof: np.ndarray
    n_dofs: int

    @classmethod
    def full(cls, mesh: Mesh) -> "DofMap":
        return cls(mesh, np.arange(mesh.n_nodes), mesh.n_nodes)

    @classmethod
    def subspace(cls, mesh: Mesh) -> "DofMap":
        # a new DOF starts at node i unless cell i-1 is an F cell
        new = np.ones(mesh.n_nodes, dtype=np.int64)
        new[1:] = mesh.g_flag
        dofs = np.cumsum(new) - 1
        return cls(mesh, dofs, int(dofs[-1]) + 1)

    @classmethod
    def part(cls, mesh: Mesh, merged: bool = False) -> "DofMap":
        """Functions vanishing on F.  ``merged`` builds it from the F^(s) map."""
        base = cls.subspace(mesh) if merged else cls.full(mesh)
        return base.fix_nodes(mesh.f_node_comp >= 0)

    def fix_nodes(self, mask) -> "DofMap":
        dofs = self.node_to_dof.copy()
        dead = np.unique(dofs[np.asarray(mask) & (dofs >= 0)])
        dofs[np.isin(dofs, dead)] = -1
        keep = np.unique(dofs[dofs >= 0])
        renum = np.full(self.n_dofs, -1, dtype=np.int64)
        renum[keep] = np.arange(keep.size)
        out = np.where(dofs >= 0, renum[np.maximum(dofs, 0)], -1)
        return DofMap(self.mesh, out, int(keep.size))

    def prolongation(self) -> sp.csc_matrix:
        rows = np.flatnonzero(self.node_to_dof >= 0)
        cols = self.node_to_dof[rows]
        return sp.csc_matrix((np.ones(rows.size), (rows, cols)),
                             shape=(self.mesh.n_nodes, self.n_dofs))

    @property
    def n_fixed_nodes(self) -> int:
        return int(np.count_nonzero(self.node_to_dof < 0))


@dataclass(frozen=True)
class SubspaceBasis:
    """Columns of a sparse (n_nodes x dim) matrix, each a GridFunction."""

    mesh: Mesh
    matrix: sp.csc_matrix

    def __len__(self):
        return self.matrix.shape[1]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def element(self, j: int) -> GridFunction:
        return GridFunction(self.mesh, self.matrix[:, j].toarray().ravel())

    def __iter__(self):
        for j in range(self.dim):
            yield self.element(j)

    def combine(self, coeffs) -> GridFunction:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dim,):
            raise ValueError(f"need {self.dim} coefficients")
        vals = self.matrix @ coeffs if self.dim else np.zeros(self.mesh.n_nodes)
        return GridFunction(self.mesh, vals)


@dataclass(frozen=True)
class DecompResult:
    """f = f1 + f2 with f1 in the subspace and f2 in its complement."""

    f: GridFunction
    f1: GridFunction
    f2: GridFunction
    orth_residual: float
    pythagoras_gap: float
    e_alpha_f: float
    e_alpha_f1: float
    e_alpha_f2: float
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "orth_residual": self.orth_residual,
            "pythagoras_gap": self.pythagoras_gap,
            "e_alpha_f": self.e_alpha_f,
            "e_alpha_f1": self.e_alpha_f1,
            "e_alpha_f2": self.e_alpha_f2,
        }
        out.update(self.extras)
        return out

    def csv_columns(self) -> dict:
        return {"f": self.f.values, "f1": self.f1.values, "f2": self.f2.values}


def solve_spd(A: sp.spmatrix, b: np.ndarray, method: str = "auto") -> np.ndarray:
    """Solve a symmetric positive definite system (b may hold several columns).

    ``auto`` always factorizes: the reduced systems are tridiagonal, so a
    sparse LU is linear-time at every size, while CG would need O(n)
    iterations on a 1-d stiffness matrix.
    """
    n = A.shape[0]
    if n == 0:
        return np.zeros(b.shape)
    if method in ("auto", "direct"):
        lu = spla.splu(sp.csc_matrix(A))
        x = lu.solve(np.asarray(b, dtype=float))
        if not np.all(np.isfinite(x)):
            raise SolverError("direct factorization produced non-finite values")
        return x
    if method != "cg":
        raise ValueError(f"unknown solver method {method!r}")
    A = sp.csr_matrix(A)
    diag = A.diagonal()
    M = sp.diags(1.0 / diag)
    cols = b.reshape(n, -1)
    out = np.empty_like(cols, dtype=float)
    for k in range(cols.shape[1]):
        rhs = cols[:, k]
        bnorm = np.linalg.norm(rhs)
        if bnorm == 0:
            out[:, k] = 0.0
            continue
        x, info = spla.cg(A, rhs, rtol=CG_RTOL, atol=0.0, maxiter=20 * n + 100, M=M)
        rel = np.linalg.norm(rhs - A @ x) / bnorm
        if info != 0 or rel > 10 * CG_RTOL:
            raise SolverError(f"conjugate gradient did not converge: info={info}, relative residual {rel:.3e}")
        out[:, k] = x
    return out.reshape(b.shape)


def _galerkin(f: GridFunction, A: sp.spmatrix, dofmap: DofMap, offset=None, method="auto"):
    """argmin over offset + span(P) of the A-energy of f - v."""
    P = dofmap.prolongation()
    target = f.values if offset is None else f.values - offset
    rhs = P.T @ (A @ target)
    c = solve_spd((P.T @ A @ P).tocsc(), rhs, method)
    vals = P @ c
    if offset is not None:
        vals = vals + offset
    return GridFunction(f.mesh, vals), P


def _orth_residual(f2: GridFunction, A, P) -> float:
    """max_b |a(f2, b)| / (|f2| |b| + eps) over the columns b of P."""
    if P.shape[1] == 0:
        return 0.0
    Af2 = A @ f2.values
    cross = np.abs(P.T @ Af2)
    bnorm = np.sqrt(np.maximum((P.multiply(A @ P)).sum(axis=0).A1, 0.0))
    fnorm = math.sqrt(max(float(f2.values @ Af2), 0.0))
    return float(np.max(cross / (fnorm * bnorm + EPS)))


def _result(f, f1, A, P, p: FormParams, **extras) -> DecompResult:
    f2 = f - f1
    ef, e1, e2 = (inner_e_alpha(u, u, p) for u in (f, f1, f2))
    gap = abs(ef - e1 - e2) / max(ef, EPS)
    return DecompResult(f, f1, f2, _orth_residual(f2, A, P), gap, ef, e1, e2, dict(extras))


def decompose_F_s(f: GridFunction, G: OpenSetG, p: FormParams, method: str = "auto") -> DecompResult:
    """Split f into its F^(s) part f1 and its E_alpha-complement part f2 = P f."""
    if p.alpha == 0:
        from .harmonic import decompose_zero_alpha
        return decompose_zero_alpha(f, G, method=method)
    f.mesh.check_aligned(G)
    A = f.mesh.e_alpha_matrix(p.alpha)
    f1, P = _galerkin(f, A, DofMap.subspace(f.mesh), method=method)
    log.debug("decompose_F_s: %d dofs", P.shape[1])
    return _result(f, f1, A, P, p)


def decompose_part(f: GridFunction, G: OpenSetG, p: FormParams, which: str = "full",
                   method: str = "auto") -> DecompResult:
    """f = f1 + f2 with f1 vanishing on F and f2 the E_alpha-minimal extension of f|F.

    ``which="subspace"`` works inside F^(s) and requires f to belong to it.
    """
    if p.alpha <= 0:
        raise ValueError("decompose_part needs alpha > 0")
    f.mesh.check_aligned(G)
    if which == "subspace":
        if not membership_F_s(f, G).ok:
            raise NotInSubspace("not in F^(s): nonzero slope on F")
        dm = DofMap.part(f.mesh, merged=True)
    elif which == "full":
        dm = DofMap.part(f.mesh, merged=False)
    else:
        raise ValueError(f"which must be 'full' or 'subspace', got {which!r}")
    A = f.mesh.e_alpha_matrix(p.alpha)
    f1, P = _galerkin(f, A, dm, method=method)
    return _result(f, f1, A, P, p)


def harmonic_extension_basis(mesh: Mesh, A: sp.spmatrix) -> SubspaceBasis:
    """One column per F component: value 1 there, 0 on the other components,
    A-harmonic (orthogonal to every function vanishing on F) elsewhere.

    Each column lives between its neighbouring F components, so two global
    solves suffice: one with the even components set to 1, one with the odd.
    """
    comp = mesh.f_node_comp
    m = mesh.n_f_components
    n = mesh.n_nodes
    if m == 0:
        return SubspaceBasis(mesh, sp.csc_matrix((n, 0)))
    free = np.flatnonzero(comp < 0)
    fixed = np.flatnonzero(comp >= 0)
    parity = comp[fixed] % 2
    E = np.zeros((fixed.size, 2))
    E[parity == 0, 0] = 1.0
    E[parity == 1, 1] = 1.0
    A = sp.csr_matrix(A)
    sol = np.zeros((free.size, 2))
    if free.size:
        sol = solve_spd(A[free][:, free].tocsc(), -(A[free][:, fixed] @ E))

    rows, cols, vals = [fixed], [comp[fixed]], [np.ones(fixed.size)]
    if free.size:
        # left and right F component bordering each free node
        idx = np.arange(n)
        last_f = np.maximum.accumulate(np.where(comp >= 0, idx, -1))
        next_f = np.minimum.accumulate(np.where(comp >= 0, idx, n)[::-1])[::-1]
        lf, nf = last_f[free], next_f[free]
        has_l, has_r = lf >= 0, nf < n
        for side, nbr in ((has_l, lf), (has_r, nf)):
            at = np.flatnonzero(side)
            j = comp[nbr[at]]
            rows.append(free[at])
            cols.append(j)
            vals.append(sol[at, j % 2])
    B = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, m))
    return SubspaceBasis(mesh, B)


def basis_H_s_F(G: OpenSetG, p: FormParams, mesh: Mesh) -> SubspaceBasis:
    """Basis of the E_alpha-complement of the part space inside F^(s)."""
    mesh.check_aligned(G)
    return harmonic_extension_basis(mesh, mesh.e_alpha_matrix(p.alpha))


def project_onto_basis(f: GridFunction, basis: SubspaceBasis, p: FormParams,
                       method: str = "auto") -> GridFunction:
    """E_alpha-orthogonal projection of f onto the span of ``basis``."""
    if basis.dim == 0:
        return GridFunction(f.mesh, np.zeros(f.mesh.n_nodes))
    A = f.mesh.e_alpha_matrix(p.alpha)
    B = basis.matrix
    c = solve_spd((B.T @ A @ B).tocsc(), B.T @ (A @ f.values), method)
    return GridFunction(f.mesh, B @ c)


@dataclass
class ThreeWayReport:
    h_full: GridFunction
    h_sub: GridFunction
    p_complement: GridFunction
    identity_gap: float
    identity_gap_abs: float
    orthogonality: dict
    n_f_nodes: int
    n_f_components: int
    dim_complement: int
    constraint_rank: int
    tol: float = 1e-8

    @property
    def dimension_ok(self) -> bool:
        return (self.n_f_nodes == self.n_f_components + self.dim_complement
                and self.dim_complement == self.constraint_rank)

    @property
    def ok(self) -> bool:
        return (self.identity_gap <= self.tol and self.dimension_ok
                and max(self.orthogonality.values(), default=0.0) <= self.tol)

    def to_json(self) -> dict:
        return {
            "identity_gap": self.identity_gap,
            "identity_gap_abs": self.identity_gap_abs,
            "orthogonality": dict(self.orthogonality),
            "n_f_nodes": self.n_f_nodes,
            "n_f_components": self.n_f_components,
            "dim_complement": self.dim_complement,
            "constraint_rank": self.constraint_rank,
            "dimension_ok": self.dimension_ok,
            "ok": self.ok,
        }


def _cos_angle(u: GridFunction, v: GridFunction, p: FormParams) -> float:
    nu = math.sqrt(max(inner_e_alpha(u, u, p), 0.0))
    nv = math.sqrt(max(inner_e_alpha(v, v, p), 0.0))
    return abs(inner_e_alpha(u, v, p)) / (nu * nv + EPS)


def verify_three_way(f: GridFunction, G: OpenSetG, p: FormParams, tol: float = 1e-8,
                     method: str = "auto") -> ThreeWayReport:
    """Check that the F-part of f splits into its H^(s)_F part plus P f.

    The three pieces come from three separate solves: the part decomposition
    of the whole space, a projection onto the harmonic-extension basis, and
    the F^(s) decomposition.
    """
    if p.alpha <= 0:
        raise ValueError("verify_three_way needs alpha > 0")
    mesh = f.mesh
    h_full = decompose_part(f, G, p, "full", method).f2
    h_sub = project_onto_basis(f, basis_H_s_F(G, p, mesh), p, method)
    pc = decompose_F_s(f, G, p, method).f2
    diff = h_full - h_sub - pc
    gap_abs = math.sqrt(max(inner_e_alpha(diff, diff, p), 0.0))
    gap = gap_abs / (math.sqrt(max(inner_e_alpha(h_full, h_full, p), 0.0)) + EPS)
    f_part = f - h_full
    orth = {
        "part_vs_h_sub": _cos_angle(f_part, h_sub, p),
        "part_vs_complement": _cos_angle(f_part, pc, p),
        "h_sub_vs_complement": _cos_angle(h_sub, pc, p),
    }
    n_dofs = DofMap.subspace(mesh).n_dofs
    return ThreeWayReport(
        h_full, h_sub, pc, gap, gap_abs, orth,
        n_f_nodes=mesh.n_f_nodes,
        n_f_components=mesh.n_f_components,
        dim_complement=mesh.n_nodes - n_dofs,
        constraint_rank=int(np.count_nonzero(~mesh.g_flag)),
        tol=tol,
    )
