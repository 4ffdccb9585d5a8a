"""Time-harmonic equations of motion of a lattice with rigid rods.

Rods enter as linearised constraints ``n . (u_b - u_a) = 0`` enforced by
Lagrange multipliers, which are the axial rod tensions.  With prescribed
displacements ``u_p`` the free unknowns solve the saddle-point system::

    [ K_ff - w^2 M_ff   B_f^T ] [u_f]   [ -(K_fp - w^2 M_fp) u_p ]
    [ B_f               0     ] [lam] = [ -B_p u_p               ]

and the forces needed at the prescribed nodes are
``(K - w^2 M) u + B^T lam`` restricted to those nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import DegenerateGeometryError
from .lattice import Lattice

__all__ = [
    "SingularSystemError",
    "DefectivePencilError",
    "HarmonicSystem",
    "HarmonicSolution",
    "PrescribedSolver",
    "assemble",
    "solve_prescribed",
    "bloch_reduce",
    "bloch_bands",
    "principal_frequency",
]


class SingularSystemError(RuntimeError):
    """The constrained dynamic system is singular (floppy mode or resonance)."""

    def __init__(self, message, null_vector=None):
        super().__init__(message)
        self.null_vector = null_vector


class DefectivePencilError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class HarmonicSystem:
    stiffness: sp.csr_matrix
    mass: sp.dia_matrix
    constraints: sp.csr_matrix
    omega: complex

    @property
    def dynamic(self) -> sp.csr_matrix:
        return (self.stiffness - self.omega**2 * self.mass).tocsr()

    def saddle(self) -> sp.csc_matrix:
        B = self.constraints
        return sp.bmat([[self.dynamic, B.T], [B, None]], format="csc")


@dataclass(frozen=True, eq=False)
class HarmonicSolution:
    """Displacements (n_nodes, 2), rod tensions (n_rods,), and the external
    forces (n_prescribed, 2) needed at ``prescribed_ids``."""

    displacements: np.ndarray
    rod_forces: np.ndarray
    prescribed_ids: np.ndarray
    external_forces: np.ndarray

    def external_force(self, node: int) -> np.ndarray:
        idx = np.flatnonzero(self.prescribed_ids == node)
        if len(idx) == 0:
            return np.zeros(2, complex)
        return self.external_forces[idx[0]]


def _dofs(nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=int)
    return np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()


def _unit(v):
    return v / np.linalg.norm(v, axis=1)[:, None]


def assemble(lattice: Lattice, omega) -> HarmonicSystem:
    """Stiffness, mass and rod-constraint matrices over all nodal dofs."""
    if lattice.periodic:
        raise ValueError("assemble works on finite lattices; use bloch_reduce for periodic cells")
    n = 2 * lattice.n_nodes
    a, b = lattice.springs.T
    nvec = _unit(lattice.spring_vectors())
    rows, cols, vals = [], [], []
    for s in range(len(a)):
        ke = lattice.spring_k[s] * np.outer(nvec[s], nvec[s])
        da, db = _dofs([a[s]]), _dofs([b[s]])
        for (ri, rs), (ci, cs) in (((da, 1), (da, 1)), ((da, 1), (db, -1)),
                                   ((db, -1), (da, 1)), ((db, -1), (db, -1))):
            rows.append(np.repeat(ri, 2))
            cols.append(np.tile(ci, 2))
            vals.append((rs * cs * ke).ravel())
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr() if len(a) else sp.csr_matrix((n, n))
    M = sp.diags(np.repeat(lattice.masses, 2), format="dia")

    ra, rb = lattice.rods.T
    rvec = _unit(lattice.rod_vectors())
    nr = len(ra)
    r_idx = np.repeat(np.arange(nr), 4)
    c_idx = np.column_stack([2 * ra, 2 * ra + 1, 2 * rb, 2 * rb + 1]).ravel()
    v = np.column_stack([-rvec, rvec]).ravel()
    B = sp.csr_matrix((v, (r_idx, c_idx)), shape=(nr, n))
    return HarmonicSystem(stiffness=K, mass=M, constraints=B, omega=omega)


def _normalise_prescribed(prescribed):
    if isinstance(prescribed, Mapping):
        ids = np.array(sorted(prescribed), dtype=int)
        vals = np.array([np.asarray(prescribed[i], dtype=complex) for i in ids]).reshape(-1, 2)
        return ids, vals
    ids, vals = prescribed
    return np.asarray(ids, dtype=int), np.asarray(vals, dtype=complex).reshape(-1, 2)


class PrescribedSolver:
    """Factorised saddle-point system for a fixed set of prescribed nodes.

    Reusing one factorisation across many right-hand sides keeps probe
    sweeps cheap.
    """

    def __init__(self, lattice: Lattice, omega, prescribed_ids, *, rtol: float = 1e-10,
                 pivot_tol: float = 1e-13):
        self.lattice = lattice
        self.system = assemble(lattice, omega)
        self.prescribed_ids = np.asarray(prescribed_ids, dtype=int)
        self.rtol = rtol
        n = 2 * lattice.n_nodes
        p = _dofs(self.prescribed_ids)
        mask = np.ones(n, bool)
        mask[p] = False
        f = np.flatnonzero(mask)
        self._p, self._f = p, f
        A = self.system.dynamic.astype(complex)
        B = self.system.constraints.astype(complex)
        self._A_fp = A[f][:, p]
        self._A_pf = A[p][:, f]
        self._A_pp = A[p][:, p]
        self._B_f = B[:, f]
        self._B_p = B[:, p]
        self._saddle = sp.bmat([[A[f][:, f], self._B_f.T], [self._B_f, None]], format="csc")
        try:
            self._lu = spla.splu(self._saddle)
        except RuntimeError as exc:
            raise SingularSystemError(
                f"saddle-point system singular at omega={omega}: {exc}",
                null_vector=_near_null(self._saddle),
            ) from exc
        piv = np.abs(self._lu.U.diagonal())
        if piv.size and piv.min() <= pivot_tol * piv.max():
            raise SingularSystemError(
                f"saddle-point system numerically singular at omega={omega} "
                f"(pivot ratio {piv.min() / piv.max():.1e})",
                null_vector=_near_null(self._saddle),
            )

    def solve(self, values) -> HarmonicSolution:
        values = np.asarray(values, dtype=complex).reshape(-1, 2)
        if len(values) != len(self.prescribed_ids):
            raise ValueError("one displacement per prescribed node required")
        u_p = values.ravel()
        rhs = np.concatenate([-(self._A_fp @ u_p), -(self._B_p @ u_p)])
        x = self._lu.solve(rhs)
        resid = self._saddle @ x - rhs
        scale = np.linalg.norm(rhs) + np.finfo(float).tiny
        if not np.all(np.isfinite(x)) or np.linalg.norm(resid) > self.rtol * scale * 1e3:
            raise SingularSystemError(
                f"saddle-point solve failed at omega={self.system.omega} "
                f"(relative residual {np.linalg.norm(resid) / scale:.2e})",
                null_vector=_near_null(self._saddle),
            )
        nf = len(self._f)
        u_f, lam = x[:nf], x[nf:]
        u = np.zeros(2 * self.lattice.n_nodes, complex)
        u[self._f] = u_f
        u[self._p] = u_p
        r_p = self._A_pf @ u_f + self._A_pp @ u_p + self._B_p.T @ lam
        return HarmonicSolution(
            displacements=u.reshape(-1, 2),
            rod_forces=lam,
            prescribed_ids=self.prescribed_ids,
            external_forces=r_p.reshape(-1, 2),
        )


def _near_null(A, max_dense: int = 4000):
    if A.shape[0] > max_dense:
        return None
    _, s, vh = la.svd(A.toarray())
    return vh[-1].conj()


def solve_prescribed(lattice: Lattice, omega, prescribed) -> HarmonicSolution:
    """Solve with prescribed nodal displacements.

    ``prescribed`` is a mapping ``node -> 2-vector`` or a pair
    ``(node_ids, values)``.
    """
    ids, vals = _normalise_prescribed(prescribed)
    return PrescribedSolver(lattice, omega, ids).solve(vals)


def bloch_reduce(cell: Lattice, k) -> tuple[np.ndarray, np.ndarray]:
    """Reduced stiffness and mass acting on the vertex dofs of a periodic
    cell under Bloch conditions ``u(x + T) = u(x) exp(i k.T)``.

    Each hidden node is eliminated exactly through its two rods.
    """
    if not cell.periodic:
        raise ValueError("bloch_reduce needs a periodic cell")
    k = np.asarray(k, dtype=float)
    verts = cell.vertex_ids
    col = {int(v): i for i, v in enumerate(verts)}
    nv = 2 * len(verts)
    T = cell.translations

    def phase(shift):
        return np.exp(1j * (np.asarray(shift) @ T) @ k)

    K = np.zeros((nv, nv), complex)
    nvec = _unit(cell.spring_vectors())
    for s, (a, b) in enumerate(cell.springs):
        g = np.zeros(nv, complex)
        g[2 * col[a]: 2 * col[a] + 2] -= nvec[s]
        g[2 * col[b]: 2 * col[b] + 2] += phase(cell.spring_shift[s]) * nvec[s]
        K += cell.spring_k[s] * np.outer(g.conj(), g)

    M = np.zeros((nv, nv), complex)
    for v in verts:
        i = 2 * col[v]
        M[i:i + 2, i:i + 2] += cell.masses[v] * np.eye(2)
    rvec = _unit(cell.rod_vectors())
    for hn in cell.hidden_ids:
        mine = np.flatnonzero(cell.rods[:, 0] == hn)
        if len(mine) != 2:
            raise DegenerateGeometryError(f"hidden node {hn} needs exactly two rods")
        N = rvec[mine]
        if abs(np.linalg.det(N)) < 1e-12:
            raise DegenerateGeometryError(f"rods of hidden node {hn} are collinear")
        R = np.zeros((2, nv), complex)
        for row, r in enumerate(mine):
            b = col[cell.rods[r, 1]]
            R[row, 2 * b: 2 * b + 2] += phase(cell.rod_shift[r]) * rvec[r]
        P = np.linalg.solve(N, R)
        M += cell.masses[hn] * (P.conj().T @ P)
    return K, M


def principal_frequency(omega2) -> np.ndarray:
    """Square root with ``Im(omega) <= 0``; real roots taken non-negative."""
    w = np.sqrt(np.asarray(omega2, dtype=complex))
    w = np.where(w.imag > 0, -w, w)
    return np.where((w.imag == 0) & (w.real < 0), -w, w)


def bloch_bands(cell: Lattice, k) -> np.ndarray:
    """Complex Bloch frequencies at wavevector ``k``, sorted by real part."""
    K, M = bloch_reduce(cell, k)
    alpha, beta = la.eig(K, M, right=False, homogeneous_eigvals=True)
    scale = max(np.abs(K).max(), np.abs(M).max(), np.finfo(float).tiny)
    if np.any((np.abs(alpha) < 1e-13 * scale) & (np.abs(beta) < 1e-13 * scale)):
        raise DefectivePencilError(f"singular pencil at k={tuple(k)}")
    with np.errstate(divide="ignore", invalid="ignore"):
        omega2 = np.where(np.abs(beta) > 1e-14 * scale, alpha / beta, np.inf)
    w = principal_frequency(omega2)
    return w[np.lexsort((w.imag, w.real))]
