"""Ground-subspace states of the Kramers qubit and their Bloch-sphere image.

Basis order is ``(|g1>, |g2>)`` = (spin up, spin down); the North pole of the
Bloch sphere is ``|g1>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BlochVector",
    "DensityMatrix",
    "PureState",
    "as_density",
    "bloch_from_rho",
    "bloch_map",
    "pure_from_populations",
    "time_reverse_state",
]

NORM_TOL = 1e-9


@dataclass(frozen=True)
class PureState:
    c1: complex
    c2: complex

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=complex)

    @property
    def norm2(self) -> float:
        return abs(self.c1) ** 2 + abs(self.c2) ** 2

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2 - 1.0) <= tol

    def rho(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())

    @classmethod
    def from_vector(cls, v) -> "PureState":
        return cls(complex(v[0]), complex(v[1]))


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray

    def __post_init__(self):
        r = np.array(self.rho, dtype=complex)
        if r.shape != (2, 2):
            raise ValueError(f"density matrix must be 2x2, got {r.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @classmethod
    def from_elements(cls, rho11: float, rho12: complex) -> "DensityMatrix":
        return cls(np.array([[rho11, rho12], [np.conj(rho12), 1.0 - rho11]], dtype=complex))

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityMatrix":
        return cls(state.rho())

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = NORM_TOL, pos_tol: float = NORM_TOL) -> None:
        r = self.rho
        if np.abs(r - r.conj().T).max() > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(r) - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {np.trace(r).real} != 1")
        if np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() < -pos_tol:
            raise ValueError("density matrix is not positive semidefinite")

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


@dataclass(frozen=True)
class BlochVector:
    Sx: float
    Sy: float
    Sz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.Sx, self.Sy, self.Sz])

    @property
    def length(self) -> float:
        return math.sqrt(self.Sx ** 2 + self.Sy ** 2 + self.Sz ** 2)

    def __neg__(self) -> "BlochVector":
        return BlochVector(-self.Sx, -self.Sy, -self.Sz)


def as_density(state) -> np.ndarray:
    """Return the 2x2 density matrix for a PureState, DensityMatrix or raw array."""
    if isinstance(state, PureState):
        return state.rho()
    if isinstance(state, DensityMatrix):
        return np.asarray(state.rho)
    a = np.asarray(state, dtype=complex)
    if a.shape == (2,):
        return np.outer(a, a.conj())
    if a.shape == (2, 2):
        return a
    raise TypeError(f"cannot interpret {type(state).__name__} as a qubit state")


def bloch_from_rho(rho: np.ndarray) -> np.ndarray:
    """``(rho12 + rho21, i rho12 - i rho21, rho11 - rho22)`` as a real array."""
    r12 = rho[0, 1]
    r21 = rho[1, 0]
    return np.array([
        (r12 + r21).real,
        (1j * r12 - 1j * r21).real,
        (rho[0, 0] - rho[1, 1]).real,
    ])


def bloch_map(state) -> BlochVector:
    """Spin vector of a pure or mixed state."""
    if isinstance(state, PureState):
        c1, c2 = state.c1, state.c2
        p = c1.conjugate() * c2
        return BlochVector(2.0 * p.real, 2.0 * p.imag, abs(c1) ** 2 - abs(c2) ** 2)
    return BlochVector(*bloch_from_rho(as_density(state)))


def time_reverse_state(state: PureState) -> PureState:
    """Kramers time reversal ``(c1, c2) -> (-c2*, c1*)``; applying it twice gives ``-state``."""
    return PureState(-state.c2.conjugate(), state.c1.conjugate())


def pure_from_populations(rho11: float, delta_phi: float = 0.0) -> PureState:
    """Pure state with ``|c1|^2 = rho11`` and relative phase ``arg(c2) - arg(c1) = delta_phi``."""
    if not 0.0 <= rho11 <= 1.0:
        raise ValueError(f"rho11 must lie in [0, 1], got {rho11}")
    return PureState(complex(math.sqrt(rho11)), math.sqrt(1.0 - rho11) * complex(math.cos(delta_phi), math.sin(delta_phi)))
