"""Effective-medium dispersion and comparison with discrete Bloch bands.

Substituting ``u = U exp(i(k.x - w t))`` into the effective law and the
momentum balance ``d_j sigma_ij = -i w p_i`` gives the quadratic pencil::

    w^2 rho U + w [(kS) - (kD)] U - (kCk) U = 0

with ``(kS)_il = k_j S_(ij),l``, ``(kD)_il = k_m D_i,(lm)`` and
``(kCk)_il = k_j C_(ij),(lm) k_m``.  Divergence is taken on the second
stress index, so that ``sigma n`` is the traction.

For the lattice the coupling blocks scale with frequency (``S = w S1``,
``D = w D1``); with ``coupling="scaled"`` the law is read as evaluated at
``w = 1`` and the pencil becomes ``w^2 (rho + kS1 - kD1) U = (kCk) U``.
"""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as la

from .analytics import effective_law
from .core import CellParams, EffectiveLaw, flat_index
from .homogenize import spring_network_elasticity
from .lattice import build_periodic_cell
from .solver import DefectivePencilError, bloch_bands, principal_frequency

__all__ = [
    "BandPoint",
    "pencil",
    "effective_bands",
    "lattice_bands",
    "compare_point",
    "long_wavelength_compare",
    "sort_by_continuity",
    "bands_to_csv",
]


@dataclass(frozen=True)
class BandPoint:
    k: np.ndarray
    omegas: np.ndarray
    polarizations: np.ndarray  # one normalised column per branch


def pencil(law: EffectiveLaw, k, coupling: str = "fixed"):
    """Coefficients ``(A0, A1, A2)`` of ``A2 w^2 + A1 w + A0``."""
    k = np.asarray(k, dtype=float)
    kS = np.zeros((2, 2), complex)
    kD = np.zeros((2, 2), complex)
    kCk = np.zeros((2, 2), complex)
    for i in range(2):
        for l in range(2):
            for j in range(2):
                kS[i, l] += k[j] * law.S[flat_index(i, j), l]
                kD[i, l] += k[j] * law.D[i, flat_index(l, j)]
                for m in range(2):
                    kCk[i, l] += k[j] * law.C[flat_index(i, j), flat_index(l, m)] * k[m]
    if coupling == "fixed":
        return -kCk, kS - kD, law.rho.copy()
    if coupling == "scaled":
        return -kCk, np.zeros((2, 2), complex), law.rho + kS - kD
    raise ValueError(f"unknown coupling mode {coupling!r}")


def _normalise(X):
    n = np.linalg.norm(X, axis=0)
    return X / np.where(n > 0, n, 1.0)


def effective_bands(law: EffectiveLaw, k, coupling: str = "fixed") -> BandPoint:
    """Roots of the effective-medium pencil at wavevector ``k``.

    ``coupling="fixed"`` returns the four roots of the quadratic pencil by
    companion linearisation; ``coupling="scaled"`` returns two frequencies
    with ``Im(w) <= 0``, matching :func:`willis_lattice.solver.bloch_bands`.
    """
    A0, A1, A2 = pencil(law, k, coupling)
    if coupling == "scaled":
        if abs(np.linalg.det(A2)) < 1e-300 and np.allclose(A0, 0):
            raise DefectivePencilError("singular pencil")
        w2, X = la.eig(-A0, A2)
        w = principal_frequency(w2)
    else:
        if abs(np.linalg.det(A2)) < 1e-14 * max(1.0, np.abs(A2).max()) ** 2 and np.allclose(A1, 0):
            raise DefectivePencilError("density singular and no linear term: pencil degenerates")
        Z, I = np.zeros((2, 2)), np.eye(2)
        # z = [U; w U]:  [[0, I], [-A0, -A1]] z = w [[I, 0], [0, A2]] z
        L = np.block([[Z, I], [-A0, -A1]])
        R = np.block([[I, Z], [Z, A2]])
        w, Z4 = la.eig(L, R)
        finite = np.isfinite(w)
        w, X = w[finite], Z4[:2, finite]
    order = np.lexsort((w.imag, w.real))
    return BandPoint(k=np.asarray(k, float), omegas=w[order], polarizations=_normalise(X[:, order]))


def lattice_bands(params: CellParams, k) -> np.ndarray:
    return bloch_bands(build_periodic_cell(params), k)


def _match(a, b):
    """Permutation of ``b`` minimising the summed relative mismatch to ``a``.

    Returns the matched array and whether the runner-up permutation is
    within a factor 2 of the best one on non-degenerate branches.
    """
    tiny = np.finfo(float).tiny
    scored = []
    for perm in itertools.permutations(range(len(b))):
        bb = b[list(perm)]
        cost = np.sum(np.abs(a - bb) / np.maximum(np.abs(bb), tiny))
        scored.append((cost, perm, bb))
    scored.sort(key=lambda t: t[0])
    best = scored[0]
    ambiguous = False
    if len(scored) > 1:
        spread = np.abs(b - b[0]).max() / max(np.abs(b).max(), tiny)
        ambiguous = spread > 1e-10 and scored[1][0] < 2 * best[0]
    return best[2], ambiguous


def compare_point(params: CellParams, k, *, law1: Optional[EffectiveLaw] = None,
                  cell=None) -> list[dict]:
    """Discrete and effective frequencies at one wavevector, matched by branch.

    ``law1`` is the analytic law at ``w = 1`` (built when omitted).  Rows
    carry ``k1, k2, kh, branch, discrete, effective, mismatch, ambiguous``;
    ``ambiguous`` marks points where the alternative branch pairing fits
    almost as well as the chosen one (near a crossing).
    """
    k = np.asarray(k, float)
    if law1 is None:
        law1 = effective_law(params, 1.0, spring_network_elasticity(params.K, params.h))
    if cell is None:
        cell = build_periodic_cell(params)
    kh = float(np.linalg.norm(k) * params.h)
    disc = bloch_bands(cell, k)
    eff = effective_bands(law1, k, coupling="scaled").omegas
    eff_m, ambiguous = _match(disc, eff)
    mism = np.abs(disc - eff_m) / np.maximum(np.abs(eff_m), np.finfo(float).tiny)
    ambiguous = bool(kh > 0 and ambiguous)
    if ambiguous:
        warnings.warn(f"branch matching ambiguous at k={tuple(k)}", RuntimeWarning)
    return [{"k1": float(k[0]), "k2": float(k[1]), "kh": kh, "branch": b,
             "discrete": disc[b], "effective": eff_m[b],
             "mismatch": float(mism[b]) if kh > 0 else 0.0, "ambiguous": ambiguous}
            for b in range(len(disc))]


def long_wavelength_compare(params: CellParams, kh_values: Iterable[float],
                            directions: Sequence = ((1.0, 0.0), (0.0, 1.0)), *,
                            C=None, kh_max: float = 0.1) -> list[dict]:
    """Discrete Bloch frequencies vs the analytic effective medium along
    each direction at the requested ``|k| h``.

    Rows are those of :func:`compare_point`, ordered by direction, then
    ``|k| h``, then branch.
    """
    kh_values = list(kh_values)
    if any(kh > kh_max for kh in kh_values):
        raise ValueError(f"|k|h exceeds the long-wavelength bound {kh_max}")
    if C is None:
        C = spring_network_elasticity(params.K, params.h)
    law1 = effective_law(params, 1.0, C)
    cell = build_periodic_cell(params)
    rows = []
    for d in directions:
        d = np.asarray(d, float) / np.linalg.norm(d)
        for kh in kh_values:
            rows.extend(compare_point(params, d * kh / params.h, law1=law1, cell=cell))
    return rows


def sort_by_continuity(points: Sequence[BandPoint]) -> list[BandPoint]:
    """Reorder branches so each follows the nearest polarisation of the
    previous k-point."""
    if not points:
        return []
    out = [points[0]]
    for pt in points[1:]:
        prev = out[-1].polarizations
        overlap = np.abs(prev.conj().T @ pt.polarizations)
        nb = overlap.shape[1]
        best = max(itertools.permutations(range(nb)),
                   key=lambda perm: sum(overlap[i, perm[i]] for i in range(min(len(perm), overlap.shape[0]))))
        perm = list(best)
        out.append(BandPoint(k=pt.k, omegas=pt.omegas[perm], polarizations=pt.polarizations[:, perm]))
    return out


def bands_to_csv(points: Sequence[BandPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k1", "k2", "branch", "re_omega", "im_omega"])
    for pt in points:
        for b, om in enumerate(pt.omegas):
            w.writerow([repr(float(pt.k[0])), repr(float(pt.k[1])), b,
                        repr(float(om.real)), repr(float(om.imag))])
    return buf.getvalue()
