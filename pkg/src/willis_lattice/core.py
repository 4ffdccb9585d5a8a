"""Domain types and the fixed 2D vector basis.

Gradient convention: ``G[l, k] = du_l/dx_k``.  Second-order tensors are
flattened column-major into 4-vectors, so that

    stress   -> (s11, s21, s12, s22)
    gradient -> (du1/dx1, du2/dx1, du1/dx2, du2/dx2)

Flat position of Cartesian pair ``(i, j)`` (0-based) is ``i + 2*j``.

Time dependence is ``exp(-i omega t)`` everywhere; velocity is ``v = -i omega u``.
All quantities are nondimensional.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "ParameterError",
    "DegenerateGeometryError",
    "CellParams",
    "GradientState",
    "HiddenState",
    "EffectiveLaw",
    "PrimedTensors",
    "flat_index",
    "grad_to_vec4",
    "vec4_to_grad",
    "block_matrix",
    "law_from_block",
]


class ParameterError(ValueError):
    """Raised when physical parameters violate their invariants."""


class DegenerateGeometryError(ValueError):
    """Raised when rods become collinear (inclination parameter zero)."""


def flat_index(i: int, j: int) -> int:
    """Position of Cartesian pair (i, j) in the 4-vector basis (0-based)."""
    return i + 2 * j


@dataclass(frozen=True)
class CellParams:
    """Physical parameters of one unit cell.

    Masses of a pair are ``h*m`` and ``-h*m + delta*h**2``; the optional
    second pair (``m_prime``, ``c_prime``) adds ``-h*m' + delta*h**2`` at
    ``(-c' h, 0)`` and ``h*m'`` at ``(c' h, 0)``.
    """

    h: float
    K: float
    m: float
    c: float
    delta: complex = 0.0
    m_prime: Optional[float] = None
    c_prime: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "delta", complex(self.delta))
        if not self.h > 0:
            raise ParameterError("cell.h must be positive")
        if not self.K > 0:
            raise ParameterError("cell.K must be positive")
        if not self.m > 0:
            raise ParameterError("cell.m must be positive")
        if not 0 < self.c < 1:
            raise ParameterError("cell.c must lie in (0, 1)")
        if self.delta.imag < 0:
            raise ParameterError("cell.delta must have non-negative imaginary part")
        if (self.m_prime is None) != (self.c_prime is None):
            raise ParameterError("cell.m_prime and cell.c_prime must be given together")
        if self.m_prime is not None:
            if not self.m_prime > 0:
                raise ParameterError("cell.m_prime must be positive")
            if not self.c_prime > 0:
                raise ParameterError("cell.c_prime must be positive")

    @property
    def has_second_pair(self) -> bool:
        return self.m_prime is not None

    @property
    def area(self) -> float:
        return 2.0 * self.h**2

    def with_h(self, h: float) -> "CellParams":
        return replace(self, h=h)


def _cvec(x, n=2) -> np.ndarray:
    a = np.asarray(x, dtype=complex).reshape(-1)
    if a.shape != (n,):
        raise ValueError(f"expected a {n}-vector, got shape {np.shape(x)}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    return a


@dataclass(frozen=True)
class GradientState:
    """Local field at a cell centre: displacement ``u0`` and derivatives
    ``q = du/dx1``, ``w = du/dx2``."""

    u0: np.ndarray = field(default_factory=lambda: np.zeros(2, complex))
    q: np.ndarray = field(default_factory=lambda: np.zeros(2, complex))
    w: np.ndarray = field(default_factory=lambda: np.zeros(2, complex))

    def __post_init__(self):
        for name in ("u0", "q", "w"):
            object.__setattr__(self, name, _cvec(getattr(self, name)))

    @classmethod
    def from_gradient(cls, G, u0=(0, 0)) -> "GradientState":
        G = np.asarray(G, dtype=complex)
        return cls(u0=u0, q=G[:, 0], w=G[:, 1])

    @property
    def gradient(self) -> np.ndarray:
        return np.column_stack([self.q, self.w])

    def displacement(self, x) -> np.ndarray:
        """Affine field ``u0 + G x`` at points ``x`` (shape (..., 2))."""
        x = np.asarray(x, dtype=float)
        return self.u0 + x @ self.gradient.T

    def __add__(self, other: "GradientState") -> "GradientState":
        return GradientState(self.u0 + other.u0, self.q + other.q, self.w + other.w)

    def __mul__(self, a) -> "GradientState":
        return GradientState(a * self.u0, a * self.q, a * self.w)

    __rmul__ = __mul__


@dataclass(frozen=True)
class HiddenState:
    s: np.ndarray
    s_prime: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EffectiveLaw:
    """Blocks of ``[sigma; p] = [[C, S], [D, rho]] [grad u; v]``."""

    C: np.ndarray
    S: np.ndarray
    D: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        shapes = {"C": (4, 4), "S": (4, 2), "D": (2, 4), "rho": (2, 2)}
        for name, shape in shapes.items():
            a = np.array(getattr(self, name), dtype=complex)
            if a.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {a.shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def to_dict(self) -> dict:
        return {
            name: {"re": getattr(self, name).real.tolist(), "im": getattr(self, name).imag.tolist()}
            for name in ("C", "S", "D", "rho")
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EffectiveLaw":
        blocks = {
            name: np.asarray(d[name]["re"], float) + 1j * np.asarray(d[name]["im"], float)
            for name in ("C", "S", "D", "rho")
        }
        return cls(**blocks)


@dataclass(frozen=True)
class PrimedTensors:
    """``S' = -i omega S`` and ``D' = -i omega D``."""

    S_prime: np.ndarray
    D_prime: np.ndarray

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(S3, D3)`` with ``S3[i, j, k] = S'_{ijk}`` (stress ij from
        displacement k) and ``D3[k, i, j] = D'_{kij}`` (momentum k from
        du_i/dx_j)."""
        S3 = np.zeros((2, 2, 2), dtype=self.S_prime.dtype)
        D3 = np.zeros((2, 2, 2), dtype=self.D_prime.dtype)
        for i in range(2):
            for j in range(2):
                S3[i, j, :] = self.S_prime[flat_index(i, j), :]
                D3[:, i, j] = self.D_prime[:, flat_index(i, j)]
        return S3, D3


def grad_to_vec4(G) -> np.ndarray:
    """Flatten a 2x2 gradient (``G[l, k] = du_l/dx_k``) to the 4-vector basis."""
    G = np.asarray(G)
    if G.shape != (2, 2):
        raise ValueError("gradient must be 2x2")
    return G.reshape(4, order="F").copy()


def vec4_to_grad(v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (4,):
        raise ValueError("expected a 4-vector")
    return v.reshape(2, 2, order="F").copy()


def block_matrix(law: EffectiveLaw) -> np.ndarray:
    """6x6 matrix mapping ``(grad u, v)`` to ``(sigma, p)``."""
    return np.block([[law.C, law.S], [law.D, law.rho]])


def law_from_block(M) -> EffectiveLaw:
    M = np.asarray(M, dtype=complex)
    return EffectiveLaw(C=M[:4, :4], S=M[:4, 4:], D=M[4:, :4], rho=M[4:, 4:])
