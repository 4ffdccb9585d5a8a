"""Explicit discrete lattices: a periodic primitive cell or a finite sample.

Network vertices lie on ``{(p h, q h) : p + q odd}`` and are joined by the
diamond springs of stiffness ``K h**a``.  Every cell is a diamond centred
on a point with ``p + q`` even, with corners A (left), B (bottom), C (right)
and D (top).  Hidden mass pairs sit on the horizontal axis of their cell
and are tied to B and D by four rigid rods.

Finite samples consist of ``nx * ny`` *major* cells centred at
``(2 i h, 2 j h)`` together with the ``(nx - 1) * (ny - 1)`` interstitial
cells centred at ``((2 i + 1) h, (2 j + 1) h)`` that fill the gaps, so the
top row exposes ``nx`` apex vertices with ``nx - 1`` notch vertices one
row below them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import CellParams

__all__ = [
    "VERTEX",
    "HIDDEN",
    "Lattice",
    "LatticeSpec",
    "build",
    "build_periodic_cell",
    "build_finite_sample",
    "jittered",
    "validate",
    "to_json",
    "from_json",
]

VERTEX = 0
HIDDEN = 1

_KIND_NAMES = {VERTEX: "vertex", HIDDEN: "hidden"}
# corner order of a cell, offsets in units of h from the centre
_CORNERS = {"A": (-1, 0), "B": (0, -1), "C": (1, 0), "D": (0, 1)}
_EDGES = (("A", "B"), ("B", "C"), ("C", "D"), ("D", "A"))


@dataclass(frozen=True, eq=False)
class Lattice:
    """Nodes, springs and rods of a discrete model.

    Edge endpoints ``(a, b)`` carry an integer ``shift``: endpoint ``b`` is the
    image of node ``b`` translated by ``shift @ translations`` (periodic
    cells only; zero for finite samples).
    """

    params: CellParams
    positions: np.ndarray
    masses: np.ndarray
    kind: np.ndarray
    cell_of: np.ndarray
    pair_of: np.ndarray
    role: np.ndarray
    boundary: np.ndarray
    springs: np.ndarray
    spring_k: np.ndarray
    spring_l0: np.ndarray
    spring_shift: np.ndarray
    rods: np.ndarray
    rod_l0: np.ndarray
    rod_shift: np.ndarray
    cell_centers: np.ndarray
    cell_vertices: np.ndarray
    cell_vertex_shift: np.ndarray
    translations: Optional[np.ndarray] = None
    major: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    @property
    def n_cells(self) -> int:
        return len(self.cell_centers)

    @property
    def periodic(self) -> bool:
        return self.translations is not None

    @property
    def vertex_ids(self) -> np.ndarray:
        return np.flatnonzero(self.kind == VERTEX)

    @property
    def hidden_ids(self) -> np.ndarray:
        return np.flatnonzero(self.kind == HIDDEN)

    def image(self, node: int, shift) -> np.ndarray:
        """Position of ``node`` translated by the lattice shift."""
        x = self.positions[node]
        if self.translations is None:
            return x
        return x + np.asarray(shift) @ self.translations

    def rod_vectors(self) -> np.ndarray:
        a, b = self.rods.T
        xb = self.positions[b]
        if self.translations is not None:
            xb = xb + self.rod_shift @ self.translations
        return xb - self.positions[a]

    def spring_vectors(self) -> np.ndarray:
        a, b = self.springs.T
        xb = self.positions[b]
        if self.translations is not None:
            xb = xb + self.spring_shift @ self.translations
        return xb - self.positions[a]

    def total_mass(self) -> complex:
        return complex(self.masses.sum())


@dataclass(frozen=True)
class LatticeSpec:
    params: CellParams
    nx: int = 1
    ny: int = 1
    kind: str = "finite-sample"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be at least 1")
        if self.kind not in ("periodic-cell", "finite-sample"):
            raise ValueError(f"unknown lattice kind {self.kind!r}")


def _pair_layout(params: CellParams):
    """(x offset in units of h, mass, pair id, role) for each hidden node."""
    h, m, d = params.h, params.m, params.delta
    nodes = [
        (-params.c, h * m, 0, +1),
        (params.c, -h * m + d * h**2, 0, -1),
    ]
    if params.has_second_pair:
        mp = params.m_prime
        nodes += [
            (-params.c_prime, -h * mp + d * h**2, 1, -1),
            (params.c_prime, h * mp, 1, +1),
        ]
    return nodes


def _stiffness(params: CellParams, stiffness_exponent: float) -> float:
    return params.K * params.h**stiffness_exponent


def build_periodic_cell(params: CellParams, *, stiffness_exponent: float = 0.0,
                        vertex_mass: float = 0.0) -> Lattice:
    """One primitive cell with translations ``(h, h)`` and ``(h, -h)``.

    The single network vertex is the top corner D; the other corners are its
    images: ``A = D - T1``, ``B = D - T1 + T2``, ``C = D + T2``.
    """
    h = params.h
    T = np.array([[h, h], [h, -h]])
    corner_shift = {"A": (-1, 0), "B": (-1, 1), "C": (0, 1), "D": (0, 0)}

    positions = [np.array([0.0, h])]
    masses = [complex(vertex_mass)]
    kind, cell_of, pair_of, role = [VERTEX], [-1], [-1], [0]
    for xo, mass, pid, r in _pair_layout(params):
        positions.append(np.array([xo * h, 0.0]))
        masses.append(mass)
        kind.append(HIDDEN)
        cell_of.append(0)
        pair_of.append(pid)
        role.append(r)

    k = _stiffness(params, stiffness_exponent)
    springs = [(0, 0), (0, 0)]
    spring_shift = [corner_shift["A"], corner_shift["C"]]
    rods, rod_shift = [], []
    for node in range(1, len(positions)):
        for corner in ("B", "D"):
            rods.append((node, 0))
            rod_shift.append(corner_shift[corner])

    lat = Lattice(
        params=params,
        positions=np.array(positions),
        masses=np.array(masses, dtype=complex),
        kind=np.array(kind),
        cell_of=np.array(cell_of),
        pair_of=np.array(pair_of),
        role=np.array(role),
        boundary=np.zeros(len(positions), bool),
        springs=np.array(springs, dtype=int),
        spring_k=np.full(2, k),
        spring_l0=np.full(2, h * np.sqrt(2.0)),
        spring_shift=np.array(spring_shift, dtype=int),
        rods=np.array(rods, dtype=int),
        rod_l0=np.zeros(len(rods)),
        rod_shift=np.array(rod_shift, dtype=int),
        cell_centers=np.zeros((1, 2)),
        cell_vertices=np.zeros((1, 4), dtype=int),
        cell_vertex_shift=np.array([[corner_shift[c] for c in "ABCD"]], dtype=int),
        translations=T,
        meta={"stiffness_exponent": stiffness_exponent, "vertex_mass": vertex_mass},
    )
    rod_l0 = np.linalg.norm(lat.rod_vectors(), axis=1)
    return replace(lat, rod_l0=rod_l0)


def build_finite_sample(spec: LatticeSpec, *, stiffness_exponent: float = 0.0,
                        vertex_mass: float = 0.0) -> Lattice:
    """Rectangular sample of ``nx * ny`` major cells plus interstitial cells.

    Vertices shared between cells are merged and every spring appears once.
    A vertex is flagged as boundary when it has fewer than four springs.
    """
    params = spec.params
    h = params.h
    centers = [(2 * i, 2 * j, True) for j in range(spec.ny) for i in range(spec.nx)]
    centers += [(2 * i + 1, 2 * j + 1, False)
                for j in range(spec.ny - 1) for i in range(spec.nx - 1)]

    vid: dict[tuple[int, int], int] = {}
    positions, masses, kind, cell_of, pair_of, role = [], [], [], [], [], []

    def vertex(p, q):
        key = (p, q)
        if key not in vid:
            vid[key] = len(positions)
            positions.append(np.array([p * h, q * h], dtype=float))
            masses.append(complex(vertex_mass))
            kind.append(VERTEX)
            cell_of.append(-1)
            pair_of.append(-1)
            role.append(0)
        return vid[key]

    cell_vertices = []
    for (cp, cq, _) in centers:
        cell_vertices.append([vertex(cp + dp, cq + dq) for dp, dq in _CORNERS.values()])

    k = _stiffness(params, stiffness_exponent)
    spring_set: dict[tuple[int, int], None] = {}
    for cv in cell_vertices:
        corner = dict(zip("ABCD", cv))
        for a, b in _EDGES:
            key = tuple(sorted((corner[a], corner[b])))
            spring_set.setdefault(key, None)
    springs = np.array(list(spring_set), dtype=int)

    rods = []
    layout = _pair_layout(params)
    for ci, (cp, cq, _) in enumerate(centers):
        B, D = cell_vertices[ci][1], cell_vertices[ci][3]
        for xo, mass, pid, r in layout:
            nid = len(positions)
            positions.append(np.array([cp * h + xo * h, cq * h]))
            masses.append(mass)
            kind.append(HIDDEN)
            cell_of.append(ci)
            pair_of.append(pid)
            role.append(r)
            rods.append((nid, B))
            rods.append((nid, D))
    rods = np.array(rods, dtype=int)
    positions = np.array(positions)

    degree = np.zeros(len(positions), int)
    np.add.at(degree, springs.ravel(), 1)
    kind = np.array(kind)
    boundary = (kind == VERTEX) & (degree < 4)

    return Lattice(
        params=params,
        positions=positions,
        masses=np.array(masses, dtype=complex),
        kind=kind,
        cell_of=np.array(cell_of),
        pair_of=np.array(pair_of),
        role=np.array(role),
        boundary=boundary,
        springs=springs,
        spring_k=np.full(len(springs), k),
        spring_l0=np.linalg.norm(positions[springs[:, 1]] - positions[springs[:, 0]], axis=1),
        spring_shift=np.zeros((len(springs), 2), dtype=int),
        rods=rods,
        rod_l0=np.linalg.norm(positions[rods[:, 1]] - positions[rods[:, 0]], axis=1),
        rod_shift=np.zeros((len(rods), 2), dtype=int),
        cell_centers=np.array([(p * h, q * h) for p, q, _ in centers], dtype=float),
        cell_vertices=np.array(cell_vertices, dtype=int),
        cell_vertex_shift=np.zeros((len(centers), 4, 2), dtype=int),
        major=np.array([mj for _, _, mj in centers]),
        meta={"nx": spec.nx, "ny": spec.ny,
              "stiffness_exponent": stiffness_exponent, "vertex_mass": vertex_mass},
    )


def build(spec: LatticeSpec, **options) -> Lattice:
    if spec.kind == "periodic-cell":
        return build_periodic_cell(spec.params, **options)
    return build_finite_sample(spec, **options)


def jittered(lattice: Lattice, epsilon: float, rng: np.random.Generator) -> Lattice:
    """Copy of ``lattice`` with per-cell pair masses and per-spring stiffness
    scaled by independent factors ``1 + epsilon * U(-1, 1)``.

    Each pair keeps its net mass ``delta h**2``.
    """
    p = lattice.params
    h = p.h
    n_pairs = 2 if p.has_second_pair else 1
    factors = 1.0 + epsilon * rng.uniform(-1.0, 1.0, size=(lattice.n_cells, n_pairs))
    spring_factors = 1.0 + epsilon * rng.uniform(-1.0, 1.0, size=len(lattice.springs))

    masses = lattice.masses.copy()
    for nid in lattice.hidden_ids:
        pid = lattice.pair_of[nid]
        mag = (p.m if pid == 0 else p.m_prime) * factors[lattice.cell_of[nid], pid]
        if lattice.role[nid] > 0:
            masses[nid] = h * mag
        else:
            masses[nid] = -h * mag + p.delta * h**2
    return replace(lattice, masses=masses, spring_k=lattice.spring_k * spring_factors)


def validate(lattice: Lattice, rtol: float = 1e-12) -> list[str]:
    """Check the lattice invariants; returns a list of violations."""
    p = lattice.params
    h = p.h
    problems = []

    rod_len = np.linalg.norm(lattice.rod_vectors(), axis=1)
    for r, (a, b) in enumerate(lattice.rods):
        pid = lattice.pair_of[a]
        c = p.c if pid == 0 else p.c_prime
        expected = h * np.sqrt(1.0 + c**2) if c is not None else np.nan
        l0 = lattice.rod_l0[r]
        if not (abs(l0 - expected) <= rtol * expected and abs(rod_len[r] - l0) <= rtol * expected):
            problems.append(f"rod {r} ({a}-{b}): rest length {l0!r} != h*sqrt(1+c^2) = {expected!r}")

    spring_len = np.linalg.norm(lattice.spring_vectors(), axis=1)
    bad = np.flatnonzero(np.abs(spring_len - lattice.spring_l0) > rtol * h)
    for s in bad:
        problems.append(f"spring {s}: rest length {lattice.spring_l0[s]!r} != geometric {spring_len[s]!r}")
    keys = [(min(a, b), max(a, b), *sh) for (a, b), sh in zip(lattice.springs, lattice.spring_shift)]
    if len(set(keys)) != len(keys):
        problems.append("duplicate springs")

    net = p.delta * h**2
    for ci in range(lattice.n_cells):
        for pid in (0, 1) if p.has_second_pair else (0,):
            members = np.flatnonzero((lattice.cell_of == ci) & (lattice.pair_of == pid))
            if len(members) != 2:
                problems.append(f"cell {ci} pair {pid}: {len(members)} members")
                continue
            total = lattice.masses[members].sum()
            if abs(total - net) > 1e-12 * max(h * p.m, abs(net)):
                problems.append(f"cell {ci} pair {pid}: masses sum to {total!r}, expected delta*h^2 = {net!r}")

    for nid in lattice.hidden_ids:
        ci = lattice.cell_of[nid]
        mine = np.flatnonzero(lattice.rods[:, 0] == nid)
        targets = sorted((int(lattice.rods[r, 1]), tuple(lattice.rod_shift[r])) for r in mine)
        cv, cs = lattice.cell_vertices[ci], lattice.cell_vertex_shift[ci]
        expected = sorted((int(cv[i]), tuple(cs[i])) for i in (1, 3))
        if targets != expected:
            problems.append(f"hidden node {nid}: rods {targets} do not join B and D of cell {ci}")
    if np.any(np.isin(lattice.rods[:, 1], lattice.hidden_ids)):
        problems.append("rod ends on a hidden node")

    if lattice.translations is not None:
        T = lattice.translations
        if not np.allclose(T, [[h, h], [h, -h]], rtol=0, atol=rtol * h):
            problems.append("translation vectors differ from (h, h), (h, -h)")
        area = abs(np.linalg.det(T))
        if abs(area - 2 * h**2) > rtol * h**2:
            problems.append(f"cell area {area!r} != 2 h^2")
    return problems


def to_json(lattice: Lattice) -> str:
    """Serialise to the lattice JSON document."""
    doc = {
        "h": lattice.params.h,
        "nodes": [
            {"id": i, "x": float(x), "y": float(y), "mass_re": float(m.real), "mass_im": float(m.imag),
             "kind": _KIND_NAMES[int(k)], "cell": int(c), "pair": int(pr), "role": int(r)}
            for i, ((x, y), m, k, c, pr, r) in enumerate(zip(
                lattice.positions, lattice.masses, lattice.kind,
                lattice.cell_of, lattice.pair_of, lattice.role))
        ],
        "springs": [
            {"a": int(a), "b": int(b), "k": float(k), "l0": float(l0), "shift": [int(s) for s in sh]}
            for (a, b), k, l0, sh in zip(lattice.springs, lattice.spring_k, lattice.spring_l0,
                                         lattice.spring_shift)
        ],
        "rods": [
            {"a": int(a), "b": int(b), "l0": float(l0), "shift": [int(s) for s in sh]}
            for (a, b), l0, sh in zip(lattice.rods, lattice.rod_l0, lattice.rod_shift)
        ],
        "cells": [
            {"x": float(x), "y": float(y), "vertices": [int(v) for v in cv],
             "shifts": [[int(s) for s in sh] for sh in cs]}
            for (x, y), cv, cs in zip(lattice.cell_centers, lattice.cell_vertices,
                                      lattice.cell_vertex_shift)
        ],
        "translations": None if lattice.translations is None else lattice.translations.tolist(),
    }
    return json.dumps(doc, indent=1)


def from_json(text: str, params: CellParams) -> Lattice:
    doc = json.loads(text)
    nodes = doc["nodes"]
    kinds = {v: k for k, v in _KIND_NAMES.items()}
    kind = np.array([kinds[n["kind"]] for n in nodes])
    springs = np.array([(s["a"], s["b"]) for s in doc["springs"]], dtype=int).reshape(-1, 2)
    degree = np.zeros(len(nodes), int)
    np.add.at(degree, springs.ravel(), 1)
    T = doc.get("translations")
    return Lattice(
        params=params,
        positions=np.array([(n["x"], n["y"]) for n in nodes], dtype=float),
        masses=np.array([complex(n["mass_re"], n["mass_im"]) for n in nodes]),
        kind=kind,
        cell_of=np.array([n.get("cell", -1) for n in nodes]),
        pair_of=np.array([n.get("pair", -1) for n in nodes]),
        role=np.array([n.get("role", 0) for n in nodes]),
        boundary=(kind == VERTEX) & (degree < 4) & (T is None),
        springs=springs,
        spring_k=np.array([s["k"] for s in doc["springs"]], dtype=float),
        spring_l0=np.array([s["l0"] for s in doc["springs"]], dtype=float),
        spring_shift=np.array([s.get("shift", [0, 0]) for s in doc["springs"]], dtype=int).reshape(-1, 2),
        rods=np.array([(r["a"], r["b"]) for r in doc["rods"]], dtype=int).reshape(-1, 2),
        rod_l0=np.array([r["l0"] for r in doc["rods"]], dtype=float),
        rod_shift=np.array([r.get("shift", [0, 0]) for r in doc["rods"]], dtype=int).reshape(-1, 2),
        cell_centers=np.array([(c["x"], c["y"]) for c in doc["cells"]], dtype=float),
        cell_vertices=np.array([c["vertices"] for c in doc["cells"]], dtype=int),
        cell_vertex_shift=np.array([c["shifts"] for c in doc["cells"]], dtype=int),
        translations=None if T is None else np.array(T, dtype=float),
    )
