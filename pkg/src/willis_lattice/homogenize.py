"""Numerical extraction of the effective law from finite lattices.

Stress is measured from the forces that a cell's own members (its four
rods per pair and half of each of its four shared springs) exert at the
cell's four vertices::

    sigma_ij = (1 / 2h^2) * sum_v f_i(v) * (x_v - x_c)_j

which is the per-length force on the top (D) and right (C) corners of the
cell, antisymmetrised against the bottom and left corners.  Momentum is the
mass-weighted nodal velocity of the cell divided by its area.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .analytics import effective_law, rod_force_resolution
from .core import (
    CellParams,
    EffectiveLaw,
    GradientState,
    block_matrix,
    grad_to_vec4,
    law_from_block,
    vec4_to_grad,
)
from .lattice import Lattice, LatticeSpec, build_finite_sample, build_periodic_cell, jittered
from .solver import HarmonicSolution, PrescribedSolver, SingularSystemError

__all__ = [
    "ProbeResponse",
    "ConvergenceReport",
    "BoundaryForceProfile",
    "PerturbationStats",
    "probe_states",
    "sample_lattice",
    "anchor_cell",
    "cell_stress",
    "cell_momentum",
    "measure_cell_response",
    "measure_law",
    "boundary_force_profile",
    "richardson",
    "extract_effective_law",
    "spring_network_elasticity",
    "perturbation_study",
]

BLOCK_LABELS = (
    [("C", i, j) for i in range(4) for j in range(4)]
    + [("S", i, j) for i in range(4) for j in range(2)]
    + [("D", i, j) for i in range(2) for j in range(4)]
    + [("rho", i, j) for i in range(2) for j in range(2)]
)
_OFFSET = {"C": (0, 0), "S": (0, 4), "D": (4, 0), "rho": (4, 4)}


def _entry_name(block, i, j):
    return f"{block}[{i + 1},{j + 1}]"


@dataclass(frozen=True)
class ProbeResponse:
    probe: GradientState
    sigma: np.ndarray
    p: np.ndarray
    h: float


def probe_states() -> list[GradientState]:
    """Four unit-gradient probes (one per gradient slot) then two unit
    translations."""
    probes = []
    for a in range(4):
        g = np.zeros(4)
        g[a] = 1.0
        probes.append(GradientState.from_gradient(vec4_to_grad(g)))
    probes.append(GradientState(u0=[1, 0]))
    probes.append(GradientState(u0=[0, 1]))
    return probes


def sample_lattice(params: CellParams, n: int = 5, **options) -> Lattice:
    return build_finite_sample(LatticeSpec(params, n, n), **options)


def anchor_cell(lattice: Lattice) -> int:
    """Cell whose centre is nearest the sample centroid (major cells first)."""
    centroid = lattice.positions[lattice.vertex_ids].mean(axis=0)
    d = np.linalg.norm(lattice.cell_centers - centroid, axis=1)
    if lattice.major is not None:
        d = d + np.where(lattice.major, 0.0, 1e-9 * lattice.params.h)
    return int(np.argmin(d))


def _spring_lookup(lattice: Lattice) -> dict:
    return {tuple(sorted(map(int, ab))): s for s, ab in enumerate(lattice.springs)}


def cell_stress(lattice: Lattice, solution: HarmonicSolution, cell: int,
                springs: Optional[dict] = None) -> np.ndarray:
    """Vertex-force stress of one cell as a 4-vector."""
    springs = _spring_lookup(lattice) if springs is None else springs
    u = solution.displacements
    xc = lattice.cell_centers[cell]
    A, B, C, D = lattice.cell_vertices[cell]
    forces: dict[int, np.ndarray] = {v: np.zeros(2, complex) for v in (A, B, C, D)}

    for a, b in ((A, B), (B, C), (C, D), (D, A)):
        s = springs[tuple(sorted((int(a), int(b))))]
        sa, sb = lattice.springs[s]
        d = lattice.positions[sb] - lattice.positions[sa]
        n = d / np.linalg.norm(d)
        f = lattice.spring_k[s] * (n @ (u[sb] - u[sa])) * n
        # each diamond edge is shared by two cells
        forces[sb] += 0.5 * f
        forces[sa] -= 0.5 * f

    rods = np.flatnonzero(lattice.cell_of[lattice.rods[:, 0]] == cell)
    for r in rods:
        a, b = lattice.rods[r]
        d = lattice.positions[b] - lattice.positions[a]
        forces[int(b)] += solution.rod_forces[r] * d / np.linalg.norm(d)

    sigma = np.zeros((2, 2), complex)
    for v, f in forces.items():
        sigma += np.outer(f, lattice.positions[v] - xc)
    sigma /= 2.0 * lattice.params.h**2
    return grad_to_vec4(sigma)


def cell_momentum(lattice: Lattice, solution: HarmonicSolution, cell: int, omega) -> np.ndarray:
    u = solution.displacements
    nodes = np.flatnonzero(lattice.cell_of == cell)
    p = (lattice.masses[nodes, None] * u[nodes]).sum(axis=0)
    verts = lattice.cell_vertices[cell]
    p = p + 0.25 * (lattice.masses[verts, None] * u[verts]).sum(axis=0)
    return -1j * omega * p / (2.0 * lattice.params.h**2)


def _prescribed_ids(lattice: Lattice, free_interior: bool) -> np.ndarray:
    v = lattice.vertex_ids
    return v[lattice.boundary[v]] if free_interior else v


def _probe_values(lattice, ids, probe: GradientState, cell):
    return probe.displacement(lattice.positions[ids] - lattice.cell_centers[cell])


def measure_cell_response(params: CellParams, probe: GradientState, omega, h, *,
                          n: int = 5, free_interior: bool = False,
                          cell: Optional[int] = None) -> ProbeResponse:
    """Drive a finite sample with the affine field of ``probe`` (anchored at
    the sampled cell's centre) and measure that cell's stress and momentum."""
    lattice = sample_lattice(params.with_h(h), n)
    cell = anchor_cell(lattice) if cell is None else cell
    ids = _prescribed_ids(lattice, free_interior)
    sol = PrescribedSolver(lattice, omega, ids).solve(_probe_values(lattice, ids, probe, cell))
    return ProbeResponse(probe=probe, sigma=cell_stress(lattice, sol, cell),
                         p=cell_momentum(lattice, sol, cell, omega), h=h)


def measure_law(params: CellParams, omega, h=None, *, n: int = 5, free_interior: bool = False,
                lattice: Optional[Lattice] = None) -> np.ndarray:
    """6x6 block matrix measured column by column from the six probes."""
    if omega == 0:
        raise ValueError("velocity columns need omega != 0")
    if lattice is None:
        lattice = sample_lattice(params.with_h(h), n)
    cell = anchor_cell(lattice)
    ids = _prescribed_ids(lattice, free_interior)
    solver = PrescribedSolver(lattice, omega, ids)
    springs = _spring_lookup(lattice)
    L = np.zeros((6, 6), complex)
    for col, probe in enumerate(probe_states()):
        sol = solver.solve(_probe_values(lattice, ids, probe, cell))
        resp = np.concatenate([cell_stress(lattice, sol, cell, springs),
                               cell_momentum(lattice, sol, cell, omega)])
        # translation probes drive velocity -i omega e_k
        L[:, col] = resp if col < 4 else resp / (-1j * omega)
    return L


@dataclass(frozen=True)
class BoundaryForceProfile:
    """Inertial part of the boundary forces on a finite sample.

    ``edge`` is one of ``top``, ``bottom``, ``left``, ``right``;
    ``expected`` is ``+-2 h t`` on the top/bottom rows and zero on the sides;
    ``tracking`` is ``|u - u_field|`` at each listed vertex.
    """

    node_ids: np.ndarray
    positions: np.ndarray
    edge: np.ndarray
    corner: np.ndarray
    inertial: np.ndarray
    expected: np.ndarray
    tracking: np.ndarray
    scale: float
    support: str

    def select(self, edge: str, include_corners: bool = False) -> np.ndarray:
        mask = self.edge == edge
        if not include_corners:
            mask &= ~self.corner
        return np.flatnonzero(mask)

    def relative_errors(self, edge: str, include_corners: bool = False) -> np.ndarray:
        idx = self.select(edge, include_corners)
        diff = np.linalg.norm(self.inertial[idx] - self.expected[idx], axis=1)
        ref = np.linalg.norm(self.expected[idx], axis=1)
        return diff / np.where(ref > 0, ref, self.scale)


def boundary_force_profile(params: CellParams, probe: GradientState, omega, h, *,
                           n: int = 7, support: str = "top-bottom") -> BoundaryForceProfile:
    """Inertial boundary forces, separated by linearity (full masses minus
    massless solve).

    ``support="top-bottom"`` loads only the apex rows at the top and bottom,
    leaving the sides and interior free; ``support="boundary"`` also holds the
    side vertices.
    """
    if n < 5:
        raise ValueError("boundary_force_profile needs at least 5x5 cells")
    lattice = sample_lattice(params.with_h(h), n)
    v = lattice.vertex_ids
    x = lattice.positions
    tol = 1e-9 * h
    ymax, ymin = x[v, 1].max(), x[v, 1].min()
    xmax, xmin = x[v, 0].max(), x[v, 0].min()
    top = v[np.abs(x[v, 1] - ymax) < tol]
    bottom = v[np.abs(x[v, 1] - ymin) < tol]
    left = v[np.abs(x[v, 0] - xmin) < tol]
    right = v[np.abs(x[v, 0] - xmax) < tol]
    if support == "top-bottom":
        ids = np.concatenate([top, bottom])
    elif support == "boundary":
        ids = v[lattice.boundary[v]]
    else:
        raise ValueError(f"unknown support {support!r}")
    origin = x[v].mean(axis=0)
    field_at = lambda nodes: probe.displacement(x[nodes] - origin)  # noqa: E731

    values = field_at(ids)
    full = PrescribedSolver(lattice, omega, ids).solve(values)
    massless = replace(lattice, masses=np.zeros_like(lattice.masses))
    bare = PrescribedSolver(massless, omega, ids).solve(values)

    listed = np.concatenate([top, bottom, left, right])
    edge = np.array(["top"] * len(top) + ["bottom"] * len(bottom)
                    + ["left"] * len(left) + ["right"] * len(right))
    corner = np.zeros(len(listed), bool)
    for row in (top, bottom):
        ends = row[np.argsort(x[row, 0])][[0, -1]]
        corner |= np.isin(listed, ends) & np.isin(edge, ["top", "bottom"])
    inertial = np.array([full.external_force(i) - bare.external_force(i) for i in listed])

    expected = np.zeros((len(listed), 2), complex)
    for k, (node, e) in enumerate(zip(listed, edge)):
        if e in ("top", "bottom"):
            t = rod_force_resolution(-omega**2 * params.m * field_at([node])[0], params.c).t
            if params.has_second_pair:
                t = t - rod_force_resolution(
                    -omega**2 * params.m_prime * field_at([node])[0], params.c_prime).t
            expected[k] = (2 * h if e == "top" else -2 * h) * t
    t0 = rod_force_resolution(-omega**2 * params.m * probe.u0, params.c).t
    scale = float(np.linalg.norm(2 * h * t0)) or 1.0
    tracking = np.linalg.norm(full.displacements[listed] - field_at(listed), axis=1)
    return BoundaryForceProfile(node_ids=listed, positions=x[listed], edge=edge, corner=corner,
                                inertial=inertial, expected=expected, tracking=tracking,
                                scale=scale, support=support)


def richardson(h_values: Sequence[float], values, orders: Optional[Sequence[float]] = None):
    """Extrapolate ``values(h)`` to ``h = 0`` assuming
    ``V(h) = V0 + a1 h**p1 + a2 h**p2 + ...``.

    With ``len(h_values) = N`` the default orders are ``1 .. N-1``, which is
    exact polynomial extrapolation.  ``values`` may carry trailing axes.
    """
    h = np.asarray(h_values, dtype=float)
    V = np.asarray(values)
    if orders is None:
        orders = range(1, len(h))
    A = np.column_stack([np.ones_like(h)] + [h**p for p in orders])
    flat = V.reshape(len(h), -1)
    coef, *_ = np.linalg.lstsq(A.astype(flat.dtype), flat, rcond=None)
    return coef[0].reshape(V.shape[1:])


def _fit_rate(h, err):
    err = np.asarray(err, dtype=float)
    if np.all(err <= 0):
        return np.inf
    if np.any(err <= 0):
        return np.nan
    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope)


@dataclass
class ConvergenceReport:
    """Per-entry relative errors of the measured law against the analytic
    law, for each h and after extrapolation.

    Entries whose raw error stays at round-off for every h are reported with
    rate ``inf`` (exact at all h).
    """

    omega: complex
    h_values: list
    entries: list
    errors: np.ndarray
    extrapolated_errors: np.ndarray
    fitted_rate: np.ndarray
    monotone: np.ndarray
    exact: np.ndarray
    measured: list = field(default_factory=list)
    analytic: Optional[EffectiveLaw] = None
    extrapolated: Optional[EffectiveLaw] = None

    def entry(self, name: str) -> int:
        return self.entries.index(name)

    def to_json(self) -> str:
        doc = {
            "omega": [float(np.real(self.omega)), float(np.imag(self.omega))],
            "h_values": [float(h) for h in self.h_values],
            **(self.extrapolated.to_dict() if self.extrapolated is not None else {}),
            "analytic": self.analytic.to_dict() if self.analytic is not None else None,
            "errors": {e: {"per_h": self.errors[:, k].tolist(),
                           "extrapolated": float(self.extrapolated_errors[k]),
                           "monotone": bool(self.monotone[k]),
                           "exact": bool(self.exact[k])}
                       for k, e in enumerate(self.entries)},
            "rates": {e: (None if not np.isfinite(self.fitted_rate[k]) else float(self.fitted_rate[k]))
                      for k, e in enumerate(self.entries)},
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "entry", "abs_err", "rel_err"])
        for i, h in enumerate(self.h_values):
            for k, e in enumerate(self.entries):
                ref = _law_entry(self.analytic, e)
                val = _law_entry(law_from_block(self.measured[i]), e)
                w.writerow([repr(float(h)), e, repr(float(abs(val - ref))), repr(float(self.errors[i, k]))])
        return buf.getvalue()


def _law_entry(law: EffectiveLaw, name: str) -> complex:
    block, rest = name.split("[")
    i, j = (int(t) - 1 for t in rest.rstrip("]").split(","))
    return getattr(law, block)[i, j]


def extract_effective_law(params: CellParams, omega, h_list: Sequence[float], *, n: int = 5,
                          stiffness_exponent: float = 0.0, roundoff: float = 1e-12,
                          executor=None):
    """Measure the law at each h, extrapolate to h -> 0 and compare with the
    analytic law.

    Returns ``(law, report)``.  Entries whose error does not decrease
    monotonically are flagged in ``report.monotone`` and a warning is issued.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise ValueError("h_list needs at least three values")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h_list must be strictly decreasing")

    def one(h):
        lat = sample_lattice(params.with_h(h), n, stiffness_exponent=stiffness_exponent)
        return measure_law(params, omega, lattice=lat)

    measured = list(executor.map(one, h_list)) if executor is not None else [one(h) for h in h_list]

    # stiffness K h^a: only a = 0 has an h-independent analytic target
    C = spring_network_elasticity(params.K * h_list[-1]**stiffness_exponent, h_list[-1])
    analytic = effective_law(params, omega, C)
    ref = block_matrix(analytic)
    names, idx = [], []
    for block, i, j in BLOCK_LABELS:
        r0, c0 = _OFFSET[block]
        if ref[r0 + i, c0 + j] != 0:
            names.append(_entry_name(block, i, j))
            idx.append((r0 + i, c0 + j))
    rows, cols = np.array(idx).T
    vals = np.array([M[rows, cols] for M in measured])
    errors = np.abs(vals - ref[rows, cols]) / np.abs(ref[rows, cols])

    extrap_block = richardson(h_list, np.array(measured))
    extrap_err = np.abs(extrap_block[rows, cols] - ref[rows, cols]) / np.abs(ref[rows, cols])
    exact = np.all(errors <= roundoff, axis=0)
    rates = np.array([np.inf if exact[k] else _fit_rate(h_list, errors[:, k]) for k in range(len(names))])
    monotone = exact | np.all(np.diff(errors, axis=0) < 0, axis=0)
    if not np.all(monotone):
        bad = [names[k] for k in np.flatnonzero(~monotone)]
        warnings.warn(f"non-monotone convergence in {bad}; extrapolation unreliable", RuntimeWarning)

    law = law_from_block(extrap_block)
    report = ConvergenceReport(omega=omega, h_values=h_list, entries=names, errors=errors,
                               extrapolated_errors=extrap_err, fitted_rate=rates,
                               monotone=monotone, exact=exact, measured=measured,
                               analytic=analytic, extrapolated=law)
    return law, report


def spring_network_elasticity(K_stiffness, h) -> np.ndarray:
    """Elasticity of the massless diamond network from affine energy probes.

    The energy density of gradient ``G`` is the per-cell sum of
    ``(k/2) (n . G d)**2`` over the cell's two springs ``d = l n``, divided by
    the cell area; ``C`` follows by polarisation in the 4-vector basis.
    """
    cell = build_periodic_cell(CellParams(h=h, K=K_stiffness, m=1.0, c=0.5))
    d = cell.spring_vectors()
    area = abs(np.linalg.det(cell.translations))

    def energy(g):
        G = vec4_to_grad(g)
        stretch = np.einsum("si,ij,sj->s", d / np.linalg.norm(d, axis=1)[:, None], G, d)
        return 0.5 * np.sum(cell.spring_k * stretch**2) / area

    C = np.zeros((4, 4))
    e = np.eye(4)
    for a in range(4):
        C[a, a] = 2 * energy(e[a])
        for b in range(a + 1, 4):
            C[a, b] = C[b, a] = energy(e[a] + e[b]) - energy(e[a]) - energy(e[b])
    return C


@dataclass(frozen=True)
class PerturbationStats:
    """Relative deviations ``||L_trial - L_0|| / ||L_0||`` of the measured 6x6
    law under per-cell jitter; resonant trials are excluded and counted."""

    epsilon: float
    deviations: np.ndarray
    excluded: tuple
    mean: float
    worst: float

    @property
    def n_excluded(self) -> int:
        return len(self.excluded)


def perturbation_study(params: CellParams, omega, epsilon: float, trials: int, seed: int, *,
                       h: float = 0.02, n: int = 5, free_interior: bool = True) -> PerturbationStats:
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    base = sample_lattice(params.with_h(h), n)
    L0 = measure_law(params, omega, lattice=base, free_interior=free_interior)
    rng = np.random.default_rng(seed)
    devs, excluded = [], []
    for trial in range(trials):
        lat = jittered(base, epsilon, rng)
        try:
            L = measure_law(params, omega, lattice=lat, free_interior=free_interior)
        except SingularSystemError:
            excluded.append(trial)
            continue
        devs.append(np.linalg.norm(L - L0) / np.linalg.norm(L0))
    devs = np.array(devs)
    return PerturbationStats(epsilon=epsilon, deviations=devs, excluded=tuple(excluded),
                             mean=float(devs.mean()) if len(devs) else np.nan,
                             worst=float(devs.max()) if len(devs) else np.nan)
