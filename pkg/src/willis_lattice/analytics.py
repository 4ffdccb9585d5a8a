"""Closed-form physics of one cell in the limit h -> 0.

Hidden masses sit at ``(-c h, 0)`` and ``(c h, 0)`` and are tied by rigid
rods to the top vertex ``D = (0, h)`` and bottom vertex ``B = (0, -h)``.
Their displacements are ``u0 + h s`` and ``u0 - h s`` where ``s`` follows
from the linearised rod constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CellParams,
    DegenerateGeometryError,
    EffectiveLaw,
    GradientState,
    HiddenState,
    ParameterError,
    PrimedTensors,
    flat_index,
)

__all__ = [
    "RodForceResolution",
    "hidden_displacement",
    "hidden_state",
    "momentum_density",
    "rod_force_resolution",
    "inertial_stress",
    "coupling_tensors",
    "density_tensor",
    "primed_tensors",
    "symmetric_variant_params",
    "effective_law",
]


def _check_c(c):
    if c == 0:
        raise DegenerateGeometryError("inclination c = 0: rods collinear with the B-D axis")


def hidden_displacement(w, c) -> np.ndarray:
    """Hidden-mass displacement amplitude ``s = (w2/c, c*w1)``.

    Solves ``(w - s).(c, 1) = 0`` and ``(w + s).(-c, 1) = 0``.  Replacing
    ``c`` by ``-c`` negates ``s``.
    """
    _check_c(c)
    w = np.asarray(w, dtype=complex)
    return np.array([w[1] / c, c * w[0]])


def hidden_state(params: CellParams, state: GradientState):
    s = hidden_displacement(state.w, params.c)
    s_prime = hidden_displacement(state.w, params.c_prime) if params.has_second_pair else None
    return HiddenState(s=s, s_prime=s_prime)


def momentum_density(params: CellParams, state: GradientState, omega) -> np.ndarray:
    """Complex momentum density of one cell.

    Single pair: ``p = -i w m s + (delta/2)(-i w u0)``.  With the second
    pair the term ``-i w m' (-s')`` is added and the density becomes
    ``delta``.
    """
    v0 = -1j * omega * state.u0
    s = hidden_displacement(state.w, params.c)
    p = -1j * omega * params.m * s
    if params.has_second_pair:
        s2 = hidden_displacement(state.w, params.c_prime)
        p = p + 1j * omega * params.m_prime * s2
        return p + params.delta * v0
    return p + 0.5 * params.delta * v0


@dataclass(frozen=True)
class RodForceResolution:
    """Rod forces on the vertices B and D balancing a force pair (F, -F) on
    the hidden masses; all values per unit h."""

    alpha: complex
    beta: complex
    F_ED: np.ndarray
    F_EB: np.ndarray
    F_FD: np.ndarray
    F_FB: np.ndarray
    t: np.ndarray


def rod_force_resolution(F, c) -> RodForceResolution:
    """Resolve the force ``F`` (per unit h) on mass E, and ``-F`` on mass F,
    into axial rod forces.

    ``F_ED = alpha (c, 1)``, ``F_EB = beta (c, -1)`` with
    ``(alpha + beta) c = -F1`` and ``alpha - beta = -F2``.  The force needed
    at vertex D is ``t = -F_ED - F_FD = (c F2, F1/c)``.
    """
    _check_c(c)
    F = np.asarray(F, dtype=complex)
    alpha = 0.5 * (-F[0] / c - F[1])
    beta = 0.5 * (-F[0] / c + F[1])
    F_ED = alpha * np.array([c, 1.0])
    F_EB = beta * np.array([c, -1.0])
    F_FB = -F_ED
    F_FD = -F_EB
    t = -F_ED - F_FD
    return RodForceResolution(alpha, beta, F_ED, F_EB, F_FD, F_FB, t)


def inertial_stress(params: CellParams, u0, omega) -> np.ndarray:
    """Stress (row i, column j) carried by the accelerating hidden masses."""
    u0 = np.asarray(u0, dtype=complex)
    mc = params.m * params.c
    m_over_c = params.m / params.c
    if params.has_second_pair:
        mc -= params.m_prime * params.c_prime
        m_over_c -= params.m_prime / params.c_prime
    w2 = omega**2
    return np.array([[0.0, -w2 * mc * u0[1]], [0.0, -w2 * m_over_c * u0[0]]], dtype=complex)


def coupling_tensors(params: CellParams, omega) -> tuple[np.ndarray, np.ndarray]:
    """Stress-velocity coupling ``S`` (4x2) and momentum-gradient coupling
    ``D = S^T`` (2x4)."""
    a = params.m * params.c
    b = params.m / params.c
    if params.has_second_pair:
        a -= params.m_prime * params.c_prime
        b -= params.m_prime / params.c_prime
    S = np.zeros((4, 2), dtype=complex)
    S[flat_index(0, 1), 1] = -1j * omega * a
    S[flat_index(1, 1), 0] = -1j * omega * b
    return S, S.T.copy()


def density_tensor(params: CellParams) -> np.ndarray:
    scale = 1.0 if params.has_second_pair else 0.5
    return scale * params.delta * np.eye(2, dtype=complex)


def primed_tensors(S, D, omega) -> PrimedTensors:
    Sp = np.real_if_close(-1j * omega * np.asarray(S, dtype=complex), tol=1000)
    Dp = np.real_if_close(-1j * omega * np.asarray(D, dtype=complex), tol=1000)
    return PrimedTensors(S_prime=Sp, D_prime=Dp)


def symmetric_variant_params(m, c, c_prime) -> float:
    """Second-pair mass ``m' = m c / c'`` that removes the rotation coupling."""
    if not c_prime > 0:
        raise ParameterError("c_prime must be positive")
    return m * c / c_prime


def effective_law(params: CellParams, omega, C_network) -> EffectiveLaw:
    S, D = coupling_tensors(params, omega)
    return EffectiveLaw(C=np.asarray(C_network, dtype=complex), S=S, D=D, rho=density_tensor(params))
