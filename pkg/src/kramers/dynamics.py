"""Nonlinear ground-doublet dynamics, observables and analytic oracles.

Time is integrated in the dimensionless variable ``tau = E_ref t / hbar``
where ``E_ref`` is the diagonal energy scale ``E_d`` (see
:func:`reference_energy` for the degenerate case). The Hamiltonian is rebuilt
from the instantaneous state at every stage of the stepper; the state is never
renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CONST
from .coupling import HamiltonianModel, SystemConfig
from .integrator import IntegrationError, IntegratorStats, dopri5
from .states import BlochVector, DensityMatrix, PureState, as_density, bloch_from_rho

__all__ = [
    "IntegrationError",
    "RadiationParams",
    "Tolerances",
    "Trajectory",
    "analytic_pure_chiral",
    "assemble_trajectory",
    "canonical_flow_residual",
    "energy_closed_form",
    "energy_expectation",
    "evolve_density",
    "evolve_pure",
    "fixed_point_residual",
    "g_sp_physical",
    "population_drift_closed_form",
    "population_drift_rate",
    "precession_frequency",
    "radiation_term",
    "reference_energy",
    "t_min",
]

NORM_ABORT = 1e-6
POSITIVITY_ABORT = 1e-6
# |gamma_c| / |gamma_d| above which the radiation model is flagged as stretched.
RADIATION_VALIDITY_RATIO = 0.2


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-11
    atol: float = 1e-14
    max_steps: int = 20_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol >= 0):
            raise ValueError("rtol must be positive and atol non-negative")


@dataclass(frozen=True)
class RadiationParams:
    omega_m: float  # rad/s
    Gamma_sp: float  # 1/s
    g_sp: float
    gamma_m_mag: float  # T m^3
    within_validity: bool = True


# --------------------------------------------------------------------------
# scales
# --------------------------------------------------------------------------

def _model(config: SystemConfig, model: HamiltonianModel | None) -> HamiltonianModel:
    return model if model is not None else HamiltonianModel(config)


def reference_energy(model: HamiltonianModel) -> float:
    """Energy used to nondimensionalize time.

    ``E_d`` normally; if it vanishes, the size of the Hamiltonian built from a
    handful of probe states; if that vanishes too (no dynamics at all), the
    energy ``hbar * 1 rad/s`` so that ``tau`` equals ``t`` in seconds.
    """
    if model.E_d > 0:
        return model.E_d
    probes = [np.diag([1.0, 0.0]), np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([[0.5, -0.5j], [0.5j, 0.5]])]
    scale = max(float(np.abs(model.matrix(p)).max()) for p in probes)
    return scale if scale > 0 else CONST.hbar


def t_min(config: SystemConfig, model: HamiltonianModel | None = None) -> float:
    """Shortest precession period ``pi hbar / E_d`` (s); ``pi`` tau-units in the degenerate case."""
    return math.pi * CONST.hbar / reference_energy(_model(config, model))


def g_sp_physical(E_d: float) -> float:
    """Radiation factor ``alpha_fs (8/3) (E_d / m_e c^2)^2``."""
    c = CONST
    return c.alpha_fs * 8.0 / 3.0 * (E_d / (c.m_e * c.c_light ** 2)) ** 2


def _g_sp(config: SystemConfig, model: HamiltonianModel) -> float:
    return config.g_sp_override if config.g_sp_override is not None else g_sp_physical(model.E_d)


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------

def precession_frequency(state, config: SystemConfig, model: HamiltonianModel | None = None) -> float:
    """Spin precession frequency ``(h11 - h22)/hbar`` (rad/s)."""
    h = _model(config, model).matrix(as_density(state))
    return float((h[0, 0] - h[1, 1]).real / CONST.hbar)


def energy_expectation(state, config: SystemConfig, model: HamiltonianModel | None = None) -> float:
    """``tr(rho H(rho))`` (J); equals ``c^dagger H(c) c`` for a pure state."""
    rho = as_density(state)
    return float(np.trace(rho @ _model(config, model).matrix(rho)).real)


def energy_closed_form(state: PureState, config: SystemConfig, model: HamiltonianModel | None = None) -> float:
    """Polynomial form of the energy for the toy dipole pair (J).

    ``+``: ``E_d D^2 + 2 Re{E_cr c1*^2 c2^2}``;
    ``-``: ``-(E_d D^2 + 2 Re{E_cr} |c1 c2|^2)``, with ``D = |c1|^2 - |c2|^2``.
    The amplitudes need not be normalized.
    """
    m = _model(config, model)
    c1, c2 = complex(state.c1), complex(state.c2)
    D = abs(c1) ** 2 - abs(c2) ** 2
    if config.handedness > 0:
        return m.E_d * D * D + 2.0 * (m.E_cr * c1.conjugate() ** 2 * c2 ** 2).real
    return -(m.E_d * D * D + 2.0 * m.E_cr.real * abs(c1 * c2) ** 2)


def population_drift_rate(state, config: SystemConfig, model: HamiltonianModel | None = None) -> float:
    """``d rho11 / dt = (2/hbar) Im{h12 rho21}`` (1/s)."""
    rho = as_density(state)
    h = _model(config, model).matrix(rho)
    return float(2.0 / CONST.hbar * (h[0, 1] * rho[1, 0]).imag)


def population_drift_closed_form(state: PureState, config: SystemConfig, model: HamiltonianModel | None = None) -> float:
    """Toy-model drift written through ``gamma_c / gamma_d*`` (1/s)."""
    m = _model(config, model)
    if config.gamma_d == 0:
        return 0.0
    ratio = config.gamma_c / config.gamma_d.conjugate()
    c1, c2 = complex(state.c1), complex(state.c2)
    pref = math.sqrt(2.0) * 4.0 * m.E_d / CONST.hbar
    if config.handedness < 0:
        return -pref * abs(c1 * c2) ** 2 * ratio.imag
    return pref * (ratio * (c1.conjugate() * c2) ** 2).imag


def fixed_point_residual(state: PureState, config: SystemConfig, model: HamiltonianModel | None = None) -> float:
    """``|H(c) c - <H> c| / E_ref``; zero exactly for nonlinear eigenstates."""
    m = _model(config, model)
    c = np.array([state.c1, state.c2], dtype=complex)
    Hc = m.matrix(np.outer(c, c.conj())) @ c
    e = np.vdot(c, Hc)
    return float(np.linalg.norm(Hc - e * c) / reference_energy(m))


def canonical_flow_residual(
    state: PureState, config: SystemConfig, model: HamiltonianModel | None = None, step: float = 1e-6
) -> float:
    """``|H(c) c - (1/2) dE/dc*| / E_ref`` with a central-difference Wirtinger gradient.

    ``E(c) = c^dagger H(c c^dagger) c`` is differentiated as a real function of
    ``Re c`` and ``Im c``; ``d/dc* = (d/dx + i d/dy)/2``.
    """
    m = _model(config, model)
    c = np.array([state.c1, state.c2], dtype=complex)
    scale = reference_energy(m)

    def E(v):
        return float(np.vdot(v, m.matrix(np.outer(v, v.conj())) @ v).real) / scale

    grad = np.zeros(2, dtype=complex)
    for k in range(2):
        for delta, weight in ((step, 1.0), (1j * step, 1j)):
            vp, vm = c.copy(), c.copy()
            vp[k] += delta
            vm[k] -= delta
            grad[k] += weight * (E(vp) - E(vm)) / (2.0 * step)
    grad *= 0.5
    Hc = m.matrix(np.outer(c, c.conj())) @ c / scale
    return float(np.linalg.norm(Hc - 0.5 * grad))


def radiation_term(rho, config: SystemConfig, model: HamiltonianModel | None = None):
    """Parametric radiation loss ``(RadiationParams, L_m rho)``; ``L_m rho`` in 1/s.

    The rate is ``g_sp (2 E_d/hbar) |hbar omega_m / (2 E_d)|^3``, i.e.
    ``|rho11 - rho22|^3`` for the toy model. Ignores ``radiation_enabled``.
    """
    m = _model(config, model)
    rho = as_density(rho)
    h = m.matrix(rho)
    hb = CONST.hbar
    omega_m = float(2.0 * h[0, 0].real / hb)
    g = _g_sp(config, m)
    if m.E_d > 0:
        Gamma = g * 2.0 * m.E_d / hb * abs(h[0, 0].real / m.E_d) ** 3
    else:
        Gamma = 0.0
    gm = CONST.mu0 * hb / 2.0 * CONST.e_charge / CONST.m_e * math.sqrt(2.0)
    valid = abs(config.gamma_c) <= RADIATION_VALIDITY_RATIO * abs(config.gamma_d)
    params = RadiationParams(omega_m=omega_m, Gamma_sp=Gamma, g_sp=g, gamma_m_mag=gm, within_validity=valid)
    if omega_m > 0:
        rt = rho[0, 0]
    elif omega_m < 0:
        rt = -rho[1, 1]
    else:
        return params, np.zeros((2, 2), dtype=complex)
    L = -Gamma * np.array([[rt, rho[0, 1] / 2], [rho[1, 0] / 2, -rt]], dtype=complex)
    return params, L


# --------------------------------------------------------------------------
# analytic oracle
# --------------------------------------------------------------------------

def analytic_pure_chiral(state0: PureState, config: SystemConfig, t, model: HamiltonianModel | None = None):
    """Exact evolution when the linear dipole vanishes.

    Moduli are frozen and the phases rotate oppositely at ``+-E_d D / hbar``.
    Returns a PureState for scalar ``t`` and an ``(n, 2)`` array otherwise.
    """
    if config.gamma_c != 0 or not config.is_toy:
        raise ValueError("analytic_pure_chiral requires the toy dipoles with gamma_c = 0")
    m = _model(config, model)
    c1, c2 = complex(state0.c1), complex(state0.c2)
    D = abs(c1) ** 2 - abs(c2) ** 2
    phase = config.handedness * m.E_d * D * np.asarray(t, dtype=float) / CONST.hbar
    u1 = c1 * np.exp(-1j * phase)
    u2 = c2 * np.exp(1j * phase)
    if np.ndim(t) == 0:
        return PureState(complex(u1), complex(u2))
    return np.stack([u1, u2], axis=-1)


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Sample:
    t: float
    tau: float
    state: object
    bloch: BlochVector
    energy: float
    omega_m: float
    Gamma_sp: float


@dataclass
class Trajectory:
    """Sampled solution with per-sample observables, ordered by increasing ``t``.

    ``states`` is ``(n, 2)`` for pure runs and ``(n, 2, 2)`` for density runs.
    """

    kind: str
    t: np.ndarray
    tau: np.ndarray
    states: np.ndarray
    bloch: np.ndarray
    energy: np.ndarray
    omega_m: np.ndarray
    Gamma_sp: np.ndarray
    config: SystemConfig
    time_scale: float  # seconds per tau unit
    t_min: float
    stats: IntegratorStats
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    def rho(self, i: int) -> np.ndarray:
        s = self.states[i]
        return np.outer(s, s.conj()) if self.kind == "pure" else s

    def state_at(self, i: int):
        s = self.states[i]
        if self.kind == "pure":
            return PureState(complex(s[0]), complex(s[1]))
        return DensityMatrix(s)

    def samples(self):
        for i in range(len(self.t)):
            yield Sample(
                float(self.t[i]), float(self.tau[i]), self.state_at(i), BlochVector(*self.bloch[i]),
                float(self.energy[i]), float(self.omega_m[i]), float(self.Gamma_sp[i]),
            )

    @property
    def final_state(self):
        return self.state_at(-1)

    def norm_drift(self) -> float:
        if self.kind == "pure":
            n = np.sum(np.abs(self.states) ** 2, axis=1)
        else:
            n = np.trace(self.states, axis1=1, axis2=2).real
        return float(np.abs(n - 1.0).max())


def _sample_grid(t_span, samples: int | None, sample_times):
    if sample_times is not None:
        ts = np.asarray(sample_times, dtype=float)
        if ts.ndim != 1 or ts.size == 0:
            raise ValueError("sample_times must be a non-empty 1-D array")
        return float(ts[0]), ts
    if np.ndim(t_span) == 0:
        t0, t1 = 0.0, float(t_span)
    else:
        t0, t1 = (float(x) for x in t_span)
    if samples is None:
        samples = 1001
    if samples < 2:
        raise ValueError("need at least two samples")
    return t0, np.linspace(t0, t1, samples)


def _toy_rhs_pure(m: HamiltonianModel, E_ref: float):
    s = float(m.sign)
    ed = m.E_d / E_ref
    eps = m.E_cr / E_ref

    def f(_tau, c):
        c1, c2 = complex(c[0]), complex(c[1])
        dz = c1.real ** 2 + c1.imag ** 2 - c2.real ** 2 - c2.imag ** 2
        p = c1.conjugate() * c2 if s > 0 else c1 * c2.conjugate()
        h11 = s * ed * dz
        h12 = s * eps * p
        return np.array([-1j * (h11 * c1 + h12 * c2), -1j * (h12.conjugate() * c1 - h11 * c2)])

    return f


def _general_rhs_pure(m: HamiltonianModel, E_ref: float):
    def f(_tau, c):
        h = m.matrix(np.outer(c, c.conj())) / E_ref
        return -1j * (h @ c)

    return f


def _observables(kind, ys, config, m, E_ref):
    n = len(ys)
    bloch = np.empty((n, 3))
    energy = np.empty(n)
    omega_m = np.empty(n)
    gamma = np.empty(n)
    g = _g_sp(config, m)
    hb = CONST.hbar
    for i, y in enumerate(ys):
        rho = np.outer(y, y.conj()) if kind == "pure" else y
        h = m.matrix(rho)
        bloch[i] = bloch_from_rho(rho)
        energy[i] = np.trace(rho @ h).real
        omega_m[i] = 2.0 * h[0, 0].real / hb
        gamma[i] = g * 2.0 * m.E_d / hb * abs(h[0, 0].real / m.E_d) ** 3 if m.E_d > 0 else 0.0
    return bloch, energy, omega_m, gamma


def assemble_trajectory(kind, ts_tau, ys, t_scale, config, m, E_ref, stats, meta) -> Trajectory:
    """Sort samples by time and attach observables (``ys`` flat or 2x2 for density runs)."""
    order = np.argsort(ts_tau, kind="stable")
    ts_tau, ys = ts_tau[order], ys[order]
    if kind == "density":
        ys = ys.reshape(-1, 2, 2)
    bloch, energy, omega_m, gamma = _observables(kind, ys, config, m, E_ref)
    return Trajectory(
        kind=kind, t=ts_tau * t_scale, tau=ts_tau, states=ys, bloch=bloch, energy=energy,
        omega_m=omega_m, Gamma_sp=gamma, config=config, time_scale=t_scale,
        t_min=math.pi * t_scale, stats=stats, meta=meta,
    )


def _run(kind, f, y0, config, m, t_span, samples, sample_times, tol, stop, check):
    E_ref = reference_energy(m)
    t_scale = CONST.hbar / E_ref
    t0, ts = _sample_grid(t_span, samples, sample_times)
    meta = {"E_ref_J": E_ref, "E_d_J": m.E_d, "E_cr_J": m.E_cr, "A": m.A}
    stop_tau = None
    if stop is not None:
        def stop_tau(tau, y):
            return stop(tau * t_scale, y)
    try:
        taus, ys, stats = dopri5(
            f, y0, t0 / t_scale, ts / t_scale, rtol=tol.rtol, atol=tol.atol,
            max_steps=tol.max_steps, check=check, stop=stop_tau,
        )
    except IntegrationError as err:
        if err.partial is not None and len(err.partial[0]):
            pt, py, pstats = err.partial
            err.partial = assemble_trajectory(kind, pt, py, t_scale, config, m, E_ref, pstats, meta)
        else:
            err.partial = None
        raise IntegrationError(err.message, err.t * t_scale, err.partial, unit=" s") from None
    return assemble_trajectory(kind, taus, ys, t_scale, config, m, E_ref, stats, meta)


def evolve_pure(
    state0: PureState,
    config: SystemConfig,
    t_span=None,
    *,
    samples: int | None = None,
    sample_times=None,
    tol: Tolerances = Tolerances(),
    stop=None,
    model: HamiltonianModel | None = None,
) -> Trajectory:
    """Integrate ``i hbar dc/dt = H(c) c`` for a pure state.

    Parameters
    ----------
    t_span : float or (t0, t1)
        End time, or start and end time (s). ``t1 < t0`` integrates backward.
    samples : int
        Number of equally spaced samples including both ends (default 1001).
    sample_times : array_like, optional
        Explicit monotone sample times (s); overrides ``t_span``/``samples``.
    stop : callable, optional
        ``stop(t, y) -> bool`` evaluated at samples; True ends the run early.

    Raises
    ------
    IntegrationError
        On step underflow or if the norm drifts by more than 1e-6; the
        exception's ``partial`` attribute holds the trajectory so far.
    """
    if config.radiation_enabled:
        raise ValueError("radiation acts on mixed states; use evolve_density")
    if not state0.is_normalized():
        raise ValueError(f"initial state is not normalized (|c|^2 = {state0.norm2})")
    m = _model(config, model)
    E_ref = reference_energy(m)
    f = _toy_rhs_pure(m, E_ref) if m.toy else _general_rhs_pure(m, E_ref)

    def check(_tau, y):
        drift = abs(float(np.vdot(y, y).real) - 1.0)
        if drift > NORM_ABORT:
            return f"norm drift {drift:.3g} exceeds {NORM_ABORT}"
        return None

    return _run("pure", f, state0.vector, config, m, t_span, samples, sample_times, tol, stop, check)


def evolve_density(
    rho0,
    config: SystemConfig,
    t_span=None,
    *,
    samples: int | None = None,
    sample_times=None,
    tol: Tolerances = Tolerances(),
    stop=None,
    model: HamiltonianModel | None = None,
) -> Trajectory:
    """Integrate ``d rho/dt = -(i/hbar)[H(rho), rho] (+ L_m rho)``.

    Radiation is included when ``config.radiation_enabled``. Arguments as in
    :func:`evolve_pure`. Aborts if an eigenvalue of ``rho`` drops below -1e-6
    or the trace drifts by more than 1e-6.
    """
    dm = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(as_density(rho0))
    dm.validate()
    m = _model(config, model)
    E_ref = reference_energy(m)
    g = _g_sp(config, m)
    rad = config.radiation_enabled and g > 0 and m.E_d > 0
    rate = g * 2.0 * m.E_d / E_ref if rad else 0.0
    ed = m.E_d
    s = float(m.sign)
    eps = m.E_cr / E_ref
    edh = m.E_d / E_ref

    def f(_tau, y):
        r11, r12, r21, r22 = complex(y[0]), complex(y[1]), complex(y[2]), complex(y[3])
        if m.toy:
            h11 = s * edh * (r11 - r22).real
            h12 = s * eps * (r21 if s > 0 else r12)
        else:
            h = m.matrix(np.array([[r11, r12], [r21, r22]])) / E_ref
            h11, h12 = h[0, 0].real, complex(h[0, 1])
        h21 = h12.conjugate()
        # -i [h, rho] with h22 = -h11
        d11 = -1j * (h12 * r21 - r12 * h21)
        d12 = -1j * (2.0 * h11 * r12 + h12 * (r22 - r11))
        d21 = -1j * (h21 * (r11 - r22) - 2.0 * h11 * r21)
        d22 = -d11
        if rad:
            w = h11 * E_ref / ed  # hbar omega_m / (2 E_d)
            if w != 0.0:
                G = rate * abs(w) ** 3
                rt = r11 if w > 0 else -r22
                d11 -= G * rt
                d22 += G * rt
                d12 -= 0.5 * G * r12
                d21 -= 0.5 * G * r21
        return np.array([d11, d12, d21, d22])

    def check(_tau, y):
        tr = (y[0] + y[3]).real
        if abs(tr - 1.0) > NORM_ABORT:
            return f"trace drift {abs(tr - 1.0):.3g} exceeds {NORM_ABORT}"
        half = 0.5 * (y[0] - y[3]).real
        off = 0.5 * abs(y[1] + y[2].conjugate())
        lam = 0.5 * tr - math.hypot(half, off)
        if lam < -POSITIVITY_ABORT:
            return f"positivity violated (eigenvalue {lam:.3g}); tighten tolerances"
        return None

    traj_stop = None
    if stop is not None:
        def traj_stop(t, y):
            return stop(t, y.reshape(2, 2))

    traj = _run("density", f, np.asarray(dm.rho).ravel(), config, m, t_span, samples,
                sample_times, tol, traj_stop, check)
    traj.meta["radiation"] = rad
    traj.meta["g_sp"] = g
    traj.meta["radiation_within_validity"] = (
        abs(config.gamma_c) <= RADIATION_VALIDITY_RATIO * abs(config.gamma_d)
    )
    return traj
