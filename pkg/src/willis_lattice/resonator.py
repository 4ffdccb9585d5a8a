"""Core-shell resonator: a rigid shell of mass ``m_shell`` holding a core of
mass ``m_core`` on springs of total stiffness ``k_total`` with a parallel
dashpot ``gamma``.

Driving the shell at frequency ``w`` (time factor ``exp(-i w t)``) gives
the apparent mass::

    m_eff = m_shell + m_core k~ / (k~ - w^2 m_core),   k~ = k_total - i w gamma

which is negative just above the core resonance ``w0 = sqrt(k_total/m_core)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import ParameterError

__all__ = [
    "ResonatorParams",
    "ResonancePoleError",
    "InfeasibleTargetError",
    "effective_mass",
    "direct_effective_mass",
    "negative_band",
    "design_for_mass",
    "sweep_csv",
]


class ResonancePoleError(ArithmeticError):
    """Undamped drive exactly at the core resonance."""


class InfeasibleTargetError(ValueError):
    pass


@dataclass(frozen=True)
class ResonatorParams:
    m_shell: float
    m_core: float
    k_total: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.m_shell >= 0:
            raise ParameterError("resonator.m_shell must be >= 0")
        if not self.m_core > 0:
            raise ParameterError("resonator.m_core must be > 0")
        if not self.k_total > 0:
            raise ParameterError("resonator.k_total must be > 0")
        if not self.gamma >= 0:
            raise ParameterError("resonator.gamma must be >= 0")

    @property
    def omega0(self) -> float:
        return float(np.sqrt(self.k_total / self.m_core))


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    return omega


def effective_mass(res: ResonatorParams, omega):
    """Apparent mass ``F / (-w^2 u_shell)``; scalar or array in ``omega``."""
    omega = _check_omega(omega)
    kt = res.k_total - 1j * omega * res.gamma
    den = kt - omega**2 * res.m_core
    if res.gamma == 0 and np.any(np.abs(den) <= 1e-14 * res.k_total):
        raise ResonancePoleError(f"undamped resonance at omega = {res.omega0}")
    out = res.m_shell + res.m_core * kt / den
    return out[()] if out.ndim == 0 else out


def direct_effective_mass(res: ResonatorParams, omega: float) -> complex:
    """Same quantity from the 2x2 equations of motion, shell displaced by 1."""
    kt = res.k_total - 1j * omega * res.gamma
    # shell: (kt - w^2 ms) u_s - kt u_c = F ;  core: -kt u_s + (kt - w^2 mc) u_c = 0
    # unknowns (u_c, F) with u_s = 1
    M = np.array([[-kt, -1.0], [kt - omega**2 * res.m_core, 0.0]], dtype=complex)
    rhs = np.array([-(kt - omega**2 * res.m_shell), kt], dtype=complex)
    _, F = np.linalg.solve(M, rhs)
    return complex(F / (-(omega**2)))


def negative_band(res: ResonatorParams) -> Optional[tuple[float, float]]:
    """Frequency interval ``(lo, hi)`` on which ``Re(m_eff) < 0``.

    ``hi`` may be ``inf``.  Returns ``None`` when the interval is empty,
    which only happens with damping; without damping the band is always
    ``(w0, w0 sqrt(1 + m_core/m_shell))``.
    """
    ms, mc, k, g = res.m_shell, res.m_core, res.k_total, res.gamma
    # Re(m_eff) < 0  <=>  a x^2 + b x + c0 < 0 with x = w^2
    a = ms * mc**2
    b = -2 * ms * k * mc + ms * g**2 - k * mc**2 + mc * g**2
    c0 = k**2 * (ms + mc)
    if a == 0:
        if b >= 0:
            return None
        return float(np.sqrt(-c0 / b)), float("inf")
    disc = b * b - 4 * a * c0
    if disc <= 0:
        return None
    r = np.sqrt(disc)
    x1 = (-b - r) / (2 * a)
    x2 = (-b + r) / (2 * a)
    if x2 <= 0:
        return None
    return float(np.sqrt(max(x1, 0.0))), float(np.sqrt(x2))


def design_for_mass(target, omega: float, m_shell: float, m_core: Optional[float] = None) -> ResonatorParams:
    """Resonator whose effective mass at ``omega`` equals ``target``.

    The core mass is free; by default ``|target - m_shell|`` is used.  Any
    target with ``Re(target) < m_shell`` and ``Im(target) >= 0`` is
    reachable with positive parameters.
    """
    target = complex(target)
    if not omega > 0:
        raise ValueError("omega must be positive")
    if target.imag < 0:
        raise InfeasibleTargetError("target mass has negative imaginary part (active medium)")
    if not target.real < m_shell:
        raise InfeasibleTargetError("Re(target) must be below m_shell")
    delta = target - m_shell
    mc = abs(delta) if m_core is None else float(m_core)
    kt = omega**2 / (1.0 / mc - 1.0 / delta)
    k, gamma = kt.real, -kt.imag / omega
    if gamma < 0 and gamma > -1e-12 * abs(kt) / omega:
        gamma = 0.0
    if not (k > 0 and gamma >= 0):
        raise InfeasibleTargetError("no positive-parameter resonator for this target")
    return ResonatorParams(m_shell=m_shell, m_core=mc, k_total=k, gamma=gamma)


def sweep_csv(res: ResonatorParams, omegas: Iterable[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["omega", "re_meff", "im_meff"])
    for om in omegas:
        try:
            m = complex(effective_mass(res, om))
        except ResonancePoleError:
            m = complex(np.nan, np.nan)
        w.writerow([repr(float(om)), repr(m.real), repr(m.imag)])
    return buf.getvalue()
