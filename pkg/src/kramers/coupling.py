"""State-dependent effective Hamiltonian of the Kramers ground doublet.

The chain is: spin expectation -> magnetic moment -> static field at the
nanosphere -> oriented cyclotron frequency -> effective bias ``omega_ef`` ->
2x2 Hamiltonian. Two independent routes are provided:

* closed form, first order in the cyclotron frequency (cross-product form for
  arbitrary dipole vectors, plus a fast path for the toy chiral/linear pair);
* quadrature of the full imaginary-frequency response of the gyroelectric
  sphere, which keeps every order in ``omega0``.

All functions are pure; configs are frozen dataclasses.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constants import CONST
from .medium import DrudeParams, cross_matrix, imag_axis_elements
from .quadrature import QuadResult, integrate_semi_infinite
from .states import PureState, as_density, bloch_from_rho

__all__ = [
    "CyclotronState",
    "DipoleVectors",
    "EffectiveHamiltonian",
    "HamiltonianModel",
    "QMatrixSet",
    "SystemConfig",
    "coefficient_A",
    "energy_scales",
    "hamiltonian_closed_form",
    "hamiltonian_cross_product",
    "hamiltonian_quadrature",
    "hamiltonian_trace_form",
    "hydrogen_like_dipoles",
    "interaction_tensor",
    "omega0_perp",
    "q_matrices",
    "spin_state_to_cyclotron",
    "time_reversal_symmetry_check",
    "toy_dipoles",
    "w_vector",
]

Z_HAT = np.array([0.0, 0.0, 1.0])
SIGMA_Y = np.array([[0, -1j], [1j, 0]])

# Recognized values of SystemConfig.fault_injection (used by the self-test).
FAULTS = ("population_sum",)


@dataclass(frozen=True)
class DipoleVectors:
    """Transition dipoles ``<g1|d|e>`` (chiral) and ``<g2|d|e>`` (linear), C m."""

    gd_vec: np.ndarray
    gc_vec: np.ndarray

    def __post_init__(self):
        for name in ("gd_vec", "gc_vec"):
            v = np.array(getattr(self, name), dtype=complex)
            if v.shape != (3,):
                raise ValueError(f"{name} must be a complex 3-vector, got shape {v.shape}")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def s_dip1(self) -> np.ndarray:
        """Handedness direction of the chiral dipole, ``i gd x gd* / |gd|^2``.

        Unit length for a circular dipole; zero vector if ``gd`` vanishes.
        """
        n2 = float(np.vdot(self.gd_vec, self.gd_vec).real)
        if n2 == 0.0:
            return np.zeros(3)
        return (1j * np.cross(self.gd_vec, self.gd_vec.conj())).real / n2


def toy_dipoles(gamma_d: complex, gamma_c: complex, handedness: int) -> DipoleVectors:
    """``gd = (gamma_d/sqrt2)(x +- i y)``, ``gc = gamma_c z``."""
    gd = gamma_d / math.sqrt(2.0) * np.array([1.0, handedness * 1j, 0.0])
    gc = gamma_c * Z_HAT
    return DipoleVectors(gd, gc)


def hydrogen_like_dipoles(gamma_c: complex) -> DipoleVectors:
    """Spin-orbit doublet of a ``p1/2 -> s1/2`` type transition.

    The chiral dipole is the ``-`` handedness member with ``|gd| = sqrt2 |gc|``.
    """
    return toy_dipoles(-math.sqrt(2.0) * gamma_c, gamma_c, -1)


@dataclass(frozen=True)
class SystemConfig:
    """Physical parameters of the atom + nanosphere system (SI units).

    ``gd_vec``/``gc_vec`` override the toy dipole vectors built from
    ``gamma_d``, ``gamma_c`` and ``handedness``; the scalars are then only
    used for the energy scales.
    """

    d: float
    R: float
    drude: DrudeParams
    m_star: float
    omega_a: float
    gamma_d: complex
    gamma_c: complex
    handedness: int = 1
    g_sp_override: float | None = None
    radiation_enabled: bool = False
    gd_vec: tuple | None = None
    gc_vec: tuple | None = None
    fault_injection: str | None = None

    def __post_init__(self):
        if not (self.R > 0 and self.d >= self.R):
            raise ValueError(f"need d >= R > 0, got d={self.d}, R={self.R}")
        if not self.omega_a > 0:
            raise ValueError(f"omega_a must be positive, got {self.omega_a}")
        if not self.m_star > 0:
            raise ValueError(f"m_star must be positive, got {self.m_star}")
        if self.handedness not in (1, -1):
            raise ValueError(f"handedness must be +1 or -1, got {self.handedness}")
        if self.g_sp_override is not None and not self.g_sp_override >= 0:
            raise ValueError(f"g_sp_override must be non-negative, got {self.g_sp_override}")
        if (self.gd_vec is None) != (self.gc_vec is None):
            raise ValueError("gd_vec and gc_vec must be given together")
        if self.fault_injection is not None and self.fault_injection not in FAULTS:
            raise ValueError(f"unknown fault_injection {self.fault_injection!r}; expected one of {FAULTS}")
        object.__setattr__(self, "gamma_d", complex(self.gamma_d))
        object.__setattr__(self, "gamma_c", complex(self.gamma_c))

    @property
    def is_toy(self) -> bool:
        return self.gd_vec is None

    def dipoles(self) -> DipoleVectors:
        if self.is_toy:
            return toy_dipoles(self.gamma_d, self.gamma_c, self.handedness)
        return DipoleVectors(np.asarray(self.gd_vec), np.asarray(self.gc_vec))

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class CyclotronState:
    m_s: np.ndarray  # J/T
    B0: np.ndarray  # T
    omega0: np.ndarray  # rad/s
    omega_ef: np.ndarray  # rad/s
    omega0_perp: float  # rad/s


@dataclass(frozen=True)
class QMatrixSet:
    Q11: np.ndarray
    Q22: np.ndarray
    Q12: np.ndarray
    Q21: np.ndarray

    def get(self, m: int, n: int) -> np.ndarray:
        return {(1, 1): self.Q11, (2, 2): self.Q22, (1, 2): self.Q12, (2, 1): self.Q21}[(m, n)]


@dataclass(frozen=True)
class EffectiveHamiltonian:
    h: np.ndarray  # J
    E_d: float  # J
    E_cr: complex  # J
    A: float
    lamb_shift: float = 0.0  # J, equal diagonal part (quadrature path only)

    def traceless(self) -> np.ndarray:
        return self.h - 0.5 * np.trace(self.h) * np.eye(2)


# --------------------------------------------------------------------------
# geometry and cyclotron chain
# --------------------------------------------------------------------------

def interaction_tensor(d: float) -> np.ndarray:
    """Near-field dipole coupling ``(3 z z - 1)/(4 pi d^3)`` (m^-3)."""
    if not d > 0:
        raise ValueError(f"d must be positive, got {d}")
    return (3.0 * np.outer(Z_HAT, Z_HAT) - np.eye(3)) / (4.0 * math.pi * d ** 3)


def w_vector(u) -> np.ndarray:
    """``u + 3 (u x z) x z``: transverse components scaled by -2, z kept."""
    u = np.asarray(u)
    return u + 3.0 * np.cross(np.cross(u, Z_HAT), Z_HAT)


def omega0_perp(config: SystemConfig) -> float:
    """Transverse cyclotron scale ``alpha_fs hbar^2 / (2 m_e m* c d^3)`` (rad/s)."""
    c = CONST
    return c.alpha_fs * c.hbar ** 2 / (2.0 * c.m_e * config.m_star * c.c_light * config.d ** 3)


def _spin_expectation(rho: np.ndarray, fault: str | None) -> np.ndarray:
    s = bloch_from_rho(rho)
    if fault == "population_sum":
        # Deliberate defect: sigma_z expectation replaced by minus the trace.
        s = s.copy()
        s[2] = -(rho[0, 0] + rho[1, 1]).real
    return s


def spin_state_to_cyclotron(state, config: SystemConfig) -> CyclotronState:
    """Cyclotron quantities sourced by the atom's spin moment.

    Accepts a PureState, a DensityMatrix or a raw vector/matrix.
    """
    c = CONST
    rho = as_density(state)
    S = _spin_expectation(rho, config.fault_injection)
    m_s = (c.hbar * c.q / (2.0 * c.m_e)) * S
    B0 = c.mu0 / (4.0 * math.pi * config.d ** 3) * (3.0 * m_s[2] * Z_HAT - m_s)
    omega0 = -c.q * B0 / config.m_star
    return CyclotronState(
        m_s=m_s, B0=B0, omega0=omega0, omega_ef=w_vector(omega0), omega0_perp=omega0_perp(config)
    )


# --------------------------------------------------------------------------
# coupling constant
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=256)
def _A_approx(gamma_ratio: float, wa_ratio: float, rtol: float, max_intervals: int) -> QuadResult:
    g, wa2 = gamma_ratio, wa_ratio ** 2

    def f(x):
        den = 3.0 * x * (x + g) + 1.0
        return 3.0 * x * x / (den * den * (wa2 + x * x))

    return integrate_semi_infinite(f, 1.0, rtol=rtol, max_intervals=max_intervals)


def coefficient_A(
    config: SystemConfig,
    mode: str = "approx",
    omega0_mag: float | None = None,
    *,
    rtol: float = 1e-8,
    max_intervals: int = 400,
    full: bool = False,
):
    """Dimensionless coupling constant ``A``.

    Parameters
    ----------
    mode : {"approx", "exact"}
        ``approx`` is the zero-bias limit; ``exact`` keeps the full bias
        dependence of the transverse response at ``omega0_mag``.
    omega0_mag : float, optional
        Cyclotron frequency magnitude (rad/s); required for ``exact``.
    full : bool
        Return the :class:`QuadResult` (value and error bound) instead of a float.

    Raises
    ------
    QuadratureError
        If refinement does not converge within ``max_intervals``.
    """
    wp = config.drude.omega_p
    if mode == "approx":
        res = _A_approx(config.drude.gamma_coll / wp, config.omega_a / wp, rtol, max_intervals)
    elif mode == "exact":
        if omega0_mag is None or omega0_mag < 0:
            raise ValueError("exact mode needs a non-negative omega0_mag")
        drude, wa2, w0 = config.drude, config.omega_a ** 2, float(omega0_mag)

        def f(xi):
            eps_t, ig, _ = imag_axis_elements(xi, w0, drude)
            den = (eps_t + 2.0) ** 2 + (w0 * ig) ** 2
            return ig / den * 3.0 * xi * wp / (wa2 + xi * xi)

        res = integrate_semi_infinite(f, wp, rtol=rtol, max_intervals=max_intervals)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'approx' or 'exact'")
    return res if full else float(res.value)


# --------------------------------------------------------------------------
# Q matrices and the closed-form Hamiltonian
# --------------------------------------------------------------------------

def q_matrices(dipoles: DipoleVectors) -> QMatrixSet:
    gd, gc = dipoles.gd_vec, dipoles.gc_vec
    Q11 = np.outer(gd, gd.conj()) + np.outer(gc, gc.conj())
    Q22 = np.outer(gd.conj(), gd) + np.outer(gc.conj(), gc)
    Q12 = -np.outer(gd, gc) + np.outer(gc, gd)
    Q21 = np.outer(gd.conj(), gc.conj()) - np.outer(gc.conj(), gd.conj())
    return QMatrixSet(Q11, Q22, Q12, Q21)


def _energy_unit(config: SystemConfig, A: float) -> float:
    """``A R^3 omega0_perp / (2 pi^2 eps0 d^6 omega_p)``, energy per squared dipole (J/(C m)^2)."""
    return (
        A * config.R ** 3 * omega0_perp(config)
        / (2.0 * math.pi ** 2 * CONST.epsilon0 * config.d ** 6 * config.drude.omega_p)
    )


def energy_scales(config: SystemConfig, A: float | None = None) -> tuple[float, complex, float]:
    """``(E_d, E_cr, A)``.

    ``E_cr = 2 sqrt2 (gamma_c / gamma_d*) E_d`` is evaluated as
    ``2 sqrt2 gamma_c gamma_d`` times the unit energy so it stays finite when
    ``gamma_d`` vanishes.
    """
    if A is None:
        A = coefficient_A(config)
    unit = _energy_unit(config, A)
    if config.is_toy:
        gd2 = abs(config.gamma_d) ** 2
    else:
        gd = np.asarray(config.gd_vec, dtype=complex)
        gd2 = float(np.vdot(gd, gd).real)
    E_d = unit * gd2
    E_cr = 2.0 * math.sqrt(2.0) * config.gamma_c * config.gamma_d * unit
    return E_d, complex(E_cr), A


def _K(config: SystemConfig, A: float) -> float:
    """Prefactor ``A alpha0 / (16 pi^3 eps0 d^6)`` of the cross-product form (J/(C m)^2)."""
    alpha0 = 4.0 * math.pi * config.R ** 3
    return A * alpha0 / (16.0 * math.pi ** 3 * CONST.epsilon0 * config.d ** 6)


class HamiltonianModel:
    """Precomputed closed-form Hamiltonian ``rho -> h`` for repeated evaluation.

    The toy dipole pair uses the two-constant form; arbitrary dipole vectors go
    through the cross-product form. Both are linear in the spin vector.
    """

    def __init__(self, config: SystemConfig, A: float | None = None):
        self.config = config
        self.E_d, self.E_cr, self.A = energy_scales(config, A)
        self.sign = config.handedness
        self.toy = config.is_toy and config.fault_injection is None
        if not self.toy:
            dp = config.dipoles()
            gd, gc = dp.gd_vec, dp.gc_vec
            self._K = _K(config, self.A)
            self._v_diag = (1j * np.cross(gd, gd.conj()) + 1j * np.cross(gc, gc.conj())).real
            self._v_off = np.cross(gc, gd)

    def matrix(self, rho: np.ndarray) -> np.ndarray:
        if self.toy:
            dz = (rho[0, 0] - rho[1, 1]).real
            if self.sign > 0:
                off = self.E_cr * rho[1, 0]
            else:
                off = self.E_cr * rho[0, 1]
            hd = self.sign * self.E_d * dz
            ho = self.sign * off
            return np.array([[hd, ho], [np.conj(ho), -hd]], dtype=complex)
        cyc = spin_state_to_cyclotron(rho, self.config)
        v = cyc.omega_ef / self.config.drude.omega_p
        h11 = -self._K * float(v @ self._v_diag)
        h12 = -2j * self._K * complex(v @ self._v_off)
        return np.array([[h11, h12], [np.conj(h12), -h11]], dtype=complex)

    def __call__(self, state) -> np.ndarray:
        return self.matrix(as_density(state))


def hamiltonian_closed_form(state, config: SystemConfig, A: float | None = None) -> EffectiveHamiltonian:
    model = HamiltonianModel(config, A)
    return EffectiveHamiltonian(model(state), model.E_d, model.E_cr, model.A)


def hamiltonian_cross_product(state, config: SystemConfig, A: float | None = None) -> EffectiveHamiltonian:
    """Cross-product form evaluated for any dipole vectors (toy included)."""
    if A is None:
        A = coefficient_A(config)
    dp = config.dipoles()
    gd, gc = dp.gd_vec, dp.gc_vec
    K = _K(config, A)
    v = spin_state_to_cyclotron(state, config).omega_ef / config.drude.omega_p
    h11 = -K * complex(v @ (1j * np.cross(gd, gd.conj()) + 1j * np.cross(gc, gc.conj())))
    h12 = -2j * K * complex(v @ np.cross(gc, gd))
    h = np.array([[h11.real, h12], [np.conj(h12), -h11.real]], dtype=complex)
    E_d, E_cr, _ = energy_scales(config, A)
    return EffectiveHamiltonian(h, E_d, E_cr, A)


def hamiltonian_trace_form(state, config: SystemConfig, A: float | None = None) -> EffectiveHamiltonian:
    """``h_mn = -i K tr{Q_mn (omega_ef/omega_p x 1)}``, every element computed independently."""
    if A is None:
        A = coefficient_A(config)
    Q = q_matrices(config.dipoles())
    K = _K(config, A)
    X = cross_matrix(spin_state_to_cyclotron(state, config).omega_ef / config.drude.omega_p)
    h = np.empty((2, 2), dtype=complex)
    for m in (1, 2):
        for n in (1, 2):
            h[m - 1, n - 1] = -1j * K * np.trace(Q.get(m, n) @ X)
    E_d, E_cr, _ = energy_scales(config, A)
    return EffectiveHamiltonian(h, E_d, E_cr, A)


# --------------------------------------------------------------------------
# quadrature path
# --------------------------------------------------------------------------

def _response_kernel(xi, w0: float, u: np.ndarray, config: SystemConfig) -> np.ndarray:
    """``alpha(i xi)/alpha0 / (wa - i xi) + transpose / (wa + i xi)``, as a (n, 2, 3, 3) real stack."""
    xi = np.asarray(xi, dtype=float)
    eps_t, ig, eps_a = imag_axis_elements(xi, w0, config.drude)
    eps_g = -1j * w0 * ig
    den_t = (eps_t + 2.0) ** 2 - eps_g ** 2
    uu = np.outer(u, u)
    one_t = np.eye(3) - uu
    J = cross_matrix(u)
    a = (
        np.eye(3)[None]
        - (3.0 * (eps_t + 2.0) / den_t)[:, None, None] * one_t[None]
        + (3j * eps_g / den_t)[:, None, None] * J[None]
        - (3.0 / (eps_a + 2.0))[:, None, None] * uu[None]
    )
    wa = config.omega_a
    M = a / (wa - 1j * xi)[:, None, None] + np.swapaxes(a, 1, 2) / (wa + 1j * xi)[:, None, None]
    return np.stack([M.real, M.imag], axis=1)


def hamiltonian_quadrature(
    state,
    config: SystemConfig,
    *,
    rtol: float = 1e-8,
    max_intervals: int = 400,
) -> EffectiveHamiltonian:
    """Hamiltonian from the full imaginary-axis response of the gyroelectric sphere.

    The bias magnitude and direction are those sourced by ``state``. The
    returned ``h`` includes the equal diagonal (Lamb) shift, which is also
    reported separately in ``lamb_shift``; use :meth:`EffectiveHamiltonian.traceless`
    for comparisons.

    Raises
    ------
    QuadratureError
        If the tensor integral does not converge within ``max_intervals``.
    """
    cyc = spin_state_to_cyclotron(state, config)
    w0 = float(np.linalg.norm(cyc.omega0))
    u = cyc.omega0 / w0 if w0 > 0 else Z_HAT
    res = integrate_semi_infinite(
        lambda xi: _response_kernel(xi, w0, u, config),
        config.drude.omega_p, rtol=rtol, max_intervals=max_intervals,
    )
    M = res.value[0] + 1j * res.value[1]
    C = interaction_tensor(config.d)
    alpha0 = 4.0 * math.pi * config.R ** 3
    Kt = C @ M @ C * (alpha0 / (2.0 * math.pi * CONST.epsilon0))
    Q = q_matrices(config.dipoles())
    h = np.empty((2, 2), dtype=complex)
    for m in (1, 2):
        for n in (1, 2):
            h[m - 1, n - 1] = -np.trace(Q.get(m, n) @ Kt)
    E_d, E_cr, A = energy_scales(config)
    return EffectiveHamiltonian(h, E_d, E_cr, A, lamb_shift=float(0.5 * np.trace(h).real))


# --------------------------------------------------------------------------
# symmetry check
# --------------------------------------------------------------------------

def time_reversal_symmetry_check(
    builder: Callable, n_samples: int = 100, seed: int = 0, rtol: float = 1e-10
) -> tuple[bool, float]:
    """Check ``h(c) = sigma_y h(Tc)* sigma_y`` on random pure states.

    ``builder`` maps a PureState to a 2x2 matrix (or an EffectiveHamiltonian).
    Returns ``(passed, max deviation)``; the threshold is ``rtol`` times the
    largest Frobenius norm of ``h`` seen.
    """
    rng = np.random.default_rng(seed)

    def h_of(s):
        out = builder(s)
        return np.asarray(out.h if isinstance(out, EffectiveHamiltonian) else out, dtype=complex)

    dev, scale = 0.0, 0.0
    for _ in range(n_samples):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        s = PureState(complex(v[0]), complex(v[1]))
        sr = PureState(-s.c2.conjugate(), s.c1.conjugate())
        h, hr = h_of(s), h_of(sr)
        mapped = SIGMA_Y @ hr.conj() @ SIGMA_Y
        dev = max(dev, float(np.abs(h - mapped).max()))
        scale = max(scale, float(np.linalg.norm(h)), float(np.linalg.norm(hr)))
    return dev <= rtol * scale, dev
