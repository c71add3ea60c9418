"""Gyroelectric Drude response and quasi-static polarizability of a nanosphere.

Conventions
-----------
* ``cross_matrix(v)`` is the dyadic ``v x 1``; it acts on a vector ``a`` as
  ``cross_matrix(v) @ a == np.cross(v, a)``.
* The relative permittivity tensor is
  ``eps_t (1 - u u) + i eps_g (u x 1) + eps_a u u`` with ``u`` the bias
  direction.
* ``omega0`` is the cyclotron frequency magnitude along ``u`` (rad/s).

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DrudeParams",
    "PermittivityIA",
    "Polarizability",
    "ResonanceError",
    "antisymmetric_part",
    "cross_matrix",
    "gyro_permittivity_tensor",
    "imag_axis_elements",
    "permittivity_complex",
    "permittivity_imag_axis",
    "polarizability_general",
    "polarizability_gyro",
    "symmetric_part",
    "tensor_from_text",
    "tensor_to_text",
]


class ResonanceError(ArithmeticError):
    """A quasi-static plasmon pole was hit (singular ``eps + 2`` denominator)."""

    def __init__(self, message: str, denominator: complex):
        super().__init__(f"{message} (denominator = {denominator!r})")
        self.denominator = denominator


@dataclass(frozen=True)
class DrudeParams:
    omega_p: float  # rad/s
    gamma_coll: float  # rad/s

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValueError(f"omega_p must be positive, got {self.omega_p}")
        if not self.gamma_coll >= 0:
            raise ValueError(f"gamma_coll must be non-negative, got {self.gamma_coll}")


@dataclass(frozen=True)
class PermittivityIA:
    """Drude permittivity elements at the imaginary frequency ``omega = i xi``.

    All stored values are real. ``i_eps_g_over_w0`` is ``i eps_g / omega0``
    (s/rad), which stays finite as the bias vanishes.
    """

    xi: float
    eps_t: float
    i_eps_g_over_w0: float
    eps_a: float
    omega0: float = 0.0

    @property
    def eps_g(self) -> complex:
        """Gyrotropic element, purely imaginary on the imaginary axis."""
        return -1j * self.omega0 * self.i_eps_g_over_w0


# --------------------------------------------------------------------------
# tensor helpers
# --------------------------------------------------------------------------

def cross_matrix(v) -> np.ndarray:
    """Matrix of ``v x 1`` so that ``cross_matrix(v) @ a == v x a``."""
    x, y, z = v
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=np.result_type(x, y, z, float))


def symmetric_part(t: np.ndarray) -> np.ndarray:
    return 0.5 * (t + t.T)


def antisymmetric_part(t: np.ndarray) -> np.ndarray:
    return 0.5 * (t - t.T)


def tensor_to_text(t: np.ndarray) -> str:
    """Row-major text form: nine ``re im`` pairs, one per line."""
    t = np.asarray(t, dtype=complex)
    if t.shape != (3, 3):
        raise ValueError(f"expected a 3x3 tensor, got shape {t.shape}")
    return "\n".join(f"{z.real:.17g} {z.imag:.17g}" for z in t.ravel()) + "\n"


def tensor_from_text(text: str) -> np.ndarray:
    pairs = [line.split() for line in text.strip().splitlines() if line.strip()]
    if len(pairs) != 9 or any(len(p) != 2 for p in pairs):
        raise ValueError("tensor text must hold exactly nine 're im' pairs")
    return np.array([complex(float(a), float(b)) for a, b in pairs]).reshape(3, 3)


def _unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = np.linalg.norm(u)
    if n == 0.0:
        raise ValueError("bias direction must be non-zero")
    return u / n


# --------------------------------------------------------------------------
# permittivity
# --------------------------------------------------------------------------

def permittivity_complex(omega: complex, omega0: float, drude: DrudeParams):
    """Gyroelectric Drude elements ``(eps_t, eps_g, eps_a)`` at complex ``omega``.

    Direct evaluation of the textbook magnetized-plasma formulas; used off
    the imaginary axis and as the oracle for :func:`permittivity_imag_axis`.
    """
    w = complex(omega)
    wp2 = drude.omega_p ** 2
    wg = w + 1j * drude.gamma_coll
    eps_t = 1.0 - wp2 * (1.0 + 1j * drude.gamma_coll / w) / (wg ** 2 - omega0 ** 2)
    eps_g = (1.0 / w) * wp2 * omega0 / (omega0 ** 2 - wg ** 2)
    eps_a = 1.0 - wp2 / (w * wg)
    return eps_t, eps_g, eps_a


def permittivity_imag_axis(xi: float, omega0_mag: float, drude: DrudeParams) -> PermittivityIA:
    """Permittivity elements at ``omega = i xi`` from the exact real substitution."""
    if not xi > 0:
        raise ValueError(f"xi must be positive (integration starts at 0+), got {xi}")
    if omega0_mag < 0:
        raise ValueError(f"omega0_mag must be non-negative, got {omega0_mag}")
    eps_t, ig, eps_a = imag_axis_elements(xi, omega0_mag, drude)
    return PermittivityIA(xi=xi, eps_t=eps_t, i_eps_g_over_w0=ig, eps_a=eps_a, omega0=omega0_mag)


def imag_axis_elements(xi, omega0_mag: float, drude: DrudeParams):
    """Vectorized ``(eps_t, i eps_g / omega0, eps_a)`` at ``omega = i xi`` (no checks)."""
    wp2 = drude.omega_p ** 2
    s = xi + drude.gamma_coll
    ig = wp2 / (xi * (s * s + omega0_mag * omega0_mag))
    return 1.0 + ig * s, ig, 1.0 + wp2 / (xi * s)


def gyro_permittivity_tensor(eps_t, eps_g, eps_a, u_hat) -> np.ndarray:
    u = _unit(u_hat)
    uu = np.outer(u, u)
    return eps_t * (np.eye(3) - uu) + 1j * eps_g * cross_matrix(u) + eps_a * uu


# --------------------------------------------------------------------------
# polarizability
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Polarizability:
    alpha: np.ndarray  # m^3
    alpha0: float  # 4 pi R^3
    u_hat: np.ndarray | None = None

    @property
    def symmetric(self) -> np.ndarray:
        return symmetric_part(self.alpha)

    @property
    def antisymmetric(self) -> np.ndarray:
        return antisymmetric_part(self.alpha)


def polarizability_general(eps_rel: np.ndarray, R: float) -> Polarizability:
    """Quasi-static polarizability of a sphere with arbitrary permittivity tensor.

    ``alpha = alpha0 (eps + 2)^-1 (eps - 1)`` with ``alpha0 = 4 pi R^3``.
    """
    eps_rel = np.asarray(eps_rel, dtype=complex)
    alpha0 = 4.0 * math.pi * R ** 3
    m = eps_rel + 2.0 * np.eye(3)
    det = np.linalg.det(m)
    scale = max(np.abs(m).max(), 1.0)
    if abs(det) <= 1e-12 * scale ** 3:
        raise ResonanceError("eps + 2 is singular", det)
    alpha = alpha0 * np.linalg.solve(m, eps_rel - np.eye(3))
    return Polarizability(alpha=alpha, alpha0=alpha0)


def polarizability_gyro(perm, u_hat, R: float) -> Polarizability:
    """Closed-form polarizability of a gyroelectric sphere.

    Parameters
    ----------
    perm : PermittivityIA or tuple
        Either an imaginary-axis evaluation or a complex ``(eps_t, eps_g, eps_a)``.
    u_hat : array_like
        Bias direction; normalized here.
    R : float
        Sphere radius (m).
    """
    if isinstance(perm, PermittivityIA):
        eps_t, eps_g, eps_a = perm.eps_t, perm.eps_g, perm.eps_a
    else:
        eps_t, eps_g, eps_a = perm
    u = _unit(u_hat)
    alpha0 = 4.0 * math.pi * R ** 3
    den_t = (eps_t + 2.0) ** 2 - eps_g ** 2
    if den_t == 0:
        raise ResonanceError("transverse plasmon pole (eps_t + 2)^2 = eps_g^2", den_t)
    if eps_a + 2.0 == 0:
        raise ResonanceError("axial plasmon pole eps_a = -2", eps_a + 2.0)
    uu = np.outer(u, u)
    one_t = np.eye(3) - uu
    alpha = alpha0 * (
        np.eye(3)
        - 3.0 / den_t * ((eps_t + 2.0) * one_t - 1j * eps_g * cross_matrix(u))
        - 3.0 / (eps_a + 2.0) * uu
    )
    return Polarizability(alpha=np.asarray(alpha, dtype=complex), alpha0=alpha0, u_hat=u)
