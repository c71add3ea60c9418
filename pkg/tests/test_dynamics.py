import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kramers.constants import CONST, YEAR_S
from kramers.coupling import HamiltonianModel
from kramers.dynamics import (
    IntegrationError,
    Tolerances,
    analytic_pure_chiral,
    canonical_flow_residual,
    energy_closed_form,
    energy_expectation,
    evolve_density,
    evolve_pure,
    fixed_point_residual,
    g_sp_physical,
    population_drift_closed_form,
    population_drift_rate,
    precession_frequency,
    radiation_term,
    t_min,
)
from kramers.presets import base_system
from kramers.states import (
    BlochVector,
    DensityMatrix,
    PureState,
    bloch_from_rho,
    bloch_map,
    pure_from_populations,
    time_reverse_state,
)

HBAR = CONST.hbar
EQUATOR = PureState(1 / math.sqrt(2), 1 / math.sqrt(2))
amp = st.floats(-1, 1, allow_nan=False)


@st.composite
def pure_states(draw):
    v = np.array([complex(draw(amp), draw(amp)), complex(draw(amp), draw(amp))])
    n = np.linalg.norm(v)
    if n < 1e-3:
        return PureState(1, 0)
    v = v / n
    return PureState(complex(v[0]), complex(v[1]))


# ---------------------------------------------------------------- states

def test_bloch_examples():
    assert bloch_map(PureState(1, 0)) == BlochVector(0, 0, 1)
    assert bloch_map(DensityMatrix(np.eye(2) / 2)).length == 0
    b = bloch_map(PureState(math.sqrt(0.7), math.sqrt(0.3)))
    np.testing.assert_allclose(b.as_array(), [2 * math.sqrt(0.21), 0, 0.4], atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(pure_states())
def test_time_reversal_state_properties(s):
    t = time_reverse_state(s)
    tt = time_reverse_state(t)
    assert tt.c1 == -s.c1 and tt.c2 == -s.c2
    np.testing.assert_allclose(bloch_map(t).as_array(), -bloch_map(s).as_array(), atol=1e-15)
    np.testing.assert_allclose(bloch_map(s).as_array(), bloch_from_rho(s.rho()), atol=1e-15)
    assert bloch_map(s).length == pytest.approx(1.0, abs=1e-12)


def test_time_reverse_pole():
    t = time_reverse_state(PureState(1, 0))
    assert t.c1 == 0 and t.c2 == 1


# ---------------------------------------------------------------- observables

def test_precession_frequency_examples():
    cfg = base_system(1)
    m = HamiltonianModel(cfg)
    assert precession_frequency(PureState(1, 0), cfg, m) == pytest.approx(2 * m.E_d / HBAR, rel=1e-14)
    assert precession_frequency(EQUATOR, cfg, m) == pytest.approx(0, abs=1e-6)
    minus = base_system(-1)
    assert precession_frequency(pure_from_populations(0.7), minus) == pytest.approx(-0.8 * m.E_d / HBAR, rel=1e-12)


def test_energy_examples():
    plus = base_system(1, 0.2, 0.0)
    m = HamiltonianModel(plus)
    assert energy_expectation(PureState(1, 0), plus, m) == pytest.approx(m.E_d, rel=1e-14)
    assert energy_expectation(EQUATOR, plus, m) == pytest.approx(m.E_cr.real / 2, rel=1e-12)
    minus = base_system(-1, 0.2, 0.0)
    assert energy_expectation(PureState(1, 0), minus) == pytest.approx(-m.E_d, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(pure_states(), st.sampled_from([1, -1]), st.floats(0, 10), st.floats(-180, 180))
def test_energy_polynomial_matches_expectation(s, h, ratio, phase):
    cfg = base_system(h, ratio, phase)
    m = HamiltonianModel(cfg)
    a = energy_expectation(s, cfg, m)
    b = energy_closed_form(s, cfg, m)
    assert a == pytest.approx(b, abs=1e-13 * (m.E_d + abs(m.E_cr)))


@settings(max_examples=200, deadline=None)
@given(pure_states(), st.sampled_from([1, -1]), st.floats(0, 10), st.floats(-180, 180))
def test_population_drift_forms_agree(s, h, ratio, phase):
    cfg = base_system(h, ratio, phase)
    m = HamiltonianModel(cfg)
    a = population_drift_rate(s, cfg, m)
    b = population_drift_closed_form(s, cfg, m)
    assert a == pytest.approx(b, abs=1e-12 * (m.E_d + abs(m.E_cr)) / HBAR)


def test_population_drift_sign_and_poles():
    cfg = base_system(-1, 0.1, -90.0)
    rng = np.random.default_rng(2)
    for _ in range(50):
        r = rng.uniform(0.01, 0.99)
        assert population_drift_rate(pure_from_populations(r, rng.uniform(0, 6.3)), cfg) > 0
    assert population_drift_rate(PureState(1, 0), cfg) == 0
    assert population_drift_rate(PureState(0, 1j), cfg) == 0


def test_population_drift_matches_trajectory_slope():
    cfg = base_system(-1, 0.1, -90.0)
    m = HamiltonianModel(cfg)
    s0 = pure_from_populations(0.7, 0.4)
    T = t_min(cfg, m)
    h = 1e-4 * T
    tr = evolve_pure(s0, cfg, sample_times=np.array([-2 * h, -h, 0.0, h, 2 * h]) + 2 * h, model=m)
    r = np.abs(tr.states[:, 0]) ** 2
    # Fourth-order central difference at the middle sample.
    slope = (r[0] - 8 * r[1] + 8 * r[3] - r[4]) / (12 * h)
    mid = PureState(complex(tr.states[2, 0]), complex(tr.states[2, 1]))
    assert slope == pytest.approx(population_drift_rate(mid, cfg, m), rel=1e-6)


def test_fixed_point_residual_examples():
    cfg = base_system(-1, 0.1, -90.0)
    assert fixed_point_residual(PureState(1, 0), cfg) < 1e-15
    assert fixed_point_residual(PureState(0, 1), cfg) < 1e-15
    assert fixed_point_residual(pure_from_populations(0.7, 0.3), cfg) > 1e-2
    T = t_min(cfg)
    tr = evolve_pure(pure_from_populations(0.7, 0.3), cfg, 60 * T, samples=11)
    end = PureState(complex(tr.states[-1, 0]), complex(tr.states[-1, 1]))
    assert fixed_point_residual(end, cfg) < 1e-6


@settings(max_examples=40, deadline=None)
@given(pure_states(), st.floats(0, 10), st.floats(-180, 180))
def test_canonical_flow(s, ratio, phase):
    assert canonical_flow_residual(s, base_system(1, ratio, phase)) < 1e-6


# ---------------------------------------------------------------- radiation

def test_radiation_factor_and_rate():
    cfg = base_system()
    m = HamiltonianModel(cfg)
    g = g_sp_physical(m.E_d)
    assert g == pytest.approx(1.3e-33, rel=0.1)
    p, L = radiation_term(np.diag([1.0, 0.0]), cfg, m)
    assert p.Gamma_sp == pytest.approx(g * 2 * m.E_d / HBAR, rel=1e-14)
    assert 1 / p.Gamma_sp / YEAR_S == pytest.approx(6e19, rel=0.5)
    assert p.omega_m > 0
    np.testing.assert_allclose(L, -p.Gamma_sp * np.diag([1.0, -1.0]))
    q, L0 = radiation_term(np.eye(2) / 2, cfg, m)
    assert q.Gamma_sp == 0 and not np.any(L0)


def test_radiation_branches_and_validity():
    cfg = base_system(1, 0.5, 0.0).replace(g_sp_override=0.05)
    m = HamiltonianModel(cfg)
    rho = DensityMatrix.from_elements(0.2, 0.1 + 0.2j).rho
    p, L = radiation_term(rho, cfg, m)
    assert p.omega_m < 0 and not p.within_validity
    G = p.Gamma_sp
    assert G == pytest.approx(0.05 * 2 * m.E_d / HBAR * 0.6 ** 3, rel=1e-12)
    np.testing.assert_allclose(L, -G * np.array([[-0.8, rho[0, 1] / 2], [rho[1, 0] / 2, 0.8]]))
    assert np.trace(L) == 0


# ---------------------------------------------------------------- integration

@pytest.mark.parametrize("r11", [0.55, 0.7, 0.9])
def test_analytic_oracle(r11):
    cfg = base_system(1)
    m = HamiltonianModel(cfg)
    s0 = pure_from_populations(r11, 1.1)
    T_spin = t_min(cfg, m) / abs(2 * r11 - 1)
    tr = evolve_pure(s0, cfg, 20 * T_spin, samples=2001, model=m)
    ex = analytic_pure_chiral(s0, cfg, tr.t, model=m)
    S = np.stack([bloch_from_rho(np.outer(c, c.conj())) for c in ex])
    assert np.max(np.abs(tr.bloch - S)) < 1e-7
    # Moduli are frozen.
    assert np.ptp(tr.bloch[:, 2]) < 1e-9


def test_analytic_oracle_properties():
    cfg = base_system(1)
    m = HamiltonianModel(cfg)
    s0 = pure_from_populations(0.7, 0.5)
    assert analytic_pure_chiral(s0, cfg, 0.0, m) == s0
    T_spin = 2 * math.pi / abs(precession_frequency(s0, cfg, m))
    back = analytic_pure_chiral(s0, cfg, T_spin, m)
    np.testing.assert_allclose(bloch_map(back).as_array(), bloch_map(s0).as_array(), atol=1e-14)
    pole = analytic_pure_chiral(PureState(1, 0), cfg, 1e-5, m)
    assert pole.c1 == pytest.approx(np.exp(-1j * m.E_d * 1e-5 / HBAR)) and pole.c2 == 0
    with pytest.raises(ValueError):
        analytic_pure_chiral(s0, base_system(1, 0.1, 0.0), 1.0)


def test_equator_is_stationary():
    cfg = base_system(1)
    tr = evolve_pure(EQUATOR, cfg, 10 * t_min(cfg), samples=101)
    assert np.max(np.abs(tr.bloch - tr.bloch[0])) < 1e-12


def test_minus_branch_population_increases():
    cfg = base_system(-1, 0.1, -90.0)
    tr = evolve_pure(pure_from_populations(0.7), cfg, 40 * t_min(cfg), samples=801)
    r = np.abs(tr.states[:, 0]) ** 2
    assert np.all(np.diff(r) > -1e-12) and r[-1] > 0.999999


def test_density_matches_pure():
    cfg = base_system(1, 0.3, -50.0)
    s0 = pure_from_populations(0.7, 0.2)
    T = t_min(cfg)
    a = evolve_pure(s0, cfg, 10 * T, samples=201)
    b = evolve_density(DensityMatrix.from_pure(s0), cfg, 10 * T, samples=201)
    assert np.max(np.abs(a.bloch - b.bloch)) < 1e-7
    assert b.norm_drift() < 1e-9


def test_general_path_matches_toy_dynamics():
    cfg = base_system(-1, 0.2, -60.0)
    dv = cfg.dipoles()
    general = cfg.replace(gd_vec=dv.gd_vec, gc_vec=dv.gc_vec)
    s0 = pure_from_populations(0.6, 0.1)
    T = t_min(cfg)
    a = evolve_pure(s0, cfg, 5 * T, samples=51)
    b = evolve_pure(s0, general, 5 * T, samples=51)
    assert np.max(np.abs(a.bloch - b.bloch)) < 1e-8


def test_conservation_h_plus():
    cfg = base_system(1, 0.1, -90.0)
    tr = evolve_pure(pure_from_populations(0.7, 0.3), cfg, 100 * t_min(cfg), samples=1001)
    assert tr.norm_drift() < 1e-9
    assert np.max(np.abs(tr.energy / tr.energy[0] - 1)) < 1e-6


def test_h_minus_energy_with_real_and_imaginary_crossing():
    real = base_system(-1, 0.1, 0.0)
    m = HamiltonianModel(real)
    T = t_min(real, m)
    tr = evolve_pure(pure_from_populations(0.7, 0.3), real, 20 * T, samples=401)
    dE = np.diff(tr.energy) / np.diff(tr.t)
    assert np.max(np.abs(dE)) < 1e-9 * m.E_d / T
    imag = base_system(-1, 0.1, -90.0)
    tr = evolve_pure(pure_from_populations(0.7, 0.3), imag, 5 * T, samples=401)
    dE = np.diff(tr.energy) / np.diff(tr.t)
    r11 = np.abs(tr.states[:, 0]) ** 2
    D = 2 * r11 - 1
    drift = np.diff(r11) / np.diff(tr.t)
    # E = -E_d D^2 here, so dE/dt = -4 E_d D drho11/dt.
    Dm = 0.5 * (D[1:] + D[:-1])
    assert np.all(np.abs(dE) > 0)
    assert np.all(np.sign(dE) == -np.sign(Dm) * np.sign(drift))


def test_radiation_figures_converge():
    plus = base_system(1, 0.1, 0.0).replace(radiation_enabled=True, g_sp_override=0.05)
    T = t_min(plus)
    tr = evolve_density(DensityMatrix.from_pure(pure_from_populations(0.7)), plus, 300 * T, samples=601)
    assert abs(tr.bloch[-1, 2]) < 0.5 * abs(tr.bloch[0, 2])
    assert tr.norm_drift() < 1e-9
    assert tr.meta["radiation"] and tr.meta["radiation_within_validity"]
    minus = base_system(-1, 0.1, -90.0).replace(radiation_enabled=True, g_sp_override=0.05)
    tr = evolve_density(DensityMatrix.from_elements(0.7, 0.18), minus, 60 * T, samples=601)
    assert tr.bloch[-1, 2] > 0.999


def test_time_reversal_trajectory_identity():
    cfg = base_system(-1, 0.4, -120.0)
    T = t_min(cfg)
    s0 = pure_from_populations(0.4, 2.0)
    fwd = evolve_pure(time_reverse_state(s0), cfg, 8 * T, samples=161)
    back = evolve_pure(s0, cfg, (0.0, -8 * T), samples=161)
    assert np.all(np.diff(back.t) > 0)
    assert np.max(np.abs(fwd.bloch + back.bloch[::-1])) < 1e-6


def test_trajectory_record():
    cfg = base_system(1, 0.1, 0.0)
    tr = evolve_pure(pure_from_populations(0.7), cfg, 2 * t_min(cfg), samples=11)
    assert len(tr) == 11 and np.all(np.diff(tr.t) > 0)
    for smp in tr.samples():
        np.testing.assert_allclose(smp.bloch.as_array(), bloch_map(smp.state).as_array(), atol=1e-12)
    assert tr.tau[-1] == pytest.approx(2 * math.pi, rel=1e-12)


def test_input_validation():
    cfg = base_system()
    with pytest.raises(ValueError):
        evolve_pure(PureState(1, 1), cfg, 1e-6)
    with pytest.raises(ValueError):
        evolve_pure(PureState(1, 0), cfg.replace(radiation_enabled=True), 1e-6)
    with pytest.raises(ValueError):
        evolve_density(np.diag([1.2, -0.2]), cfg, 1e-6)
    with pytest.raises(ValueError):
        Tolerances(rtol=0)


def test_norm_abort_keeps_partial():
    cfg = base_system(1, 10.0, -90.0)
    with pytest.raises(IntegrationError) as ei:
        evolve_pure(pure_from_populations(0.7), cfg, 100 * t_min(cfg), samples=101, tol=Tolerances(rtol=0.1, atol=0.1))
    assert ei.value.partial is not None and len(ei.value.partial.t) >= 1
    assert ei.value.t > 0


def test_degenerate_system_is_static():
    cfg = base_system().replace(gamma_d=0.0, gamma_c=0.0)
    tr = evolve_pure(pure_from_populations(0.7), cfg, 10.0, samples=11)
    assert np.max(np.abs(tr.bloch - tr.bloch[0])) == 0
    assert not np.any(HamiltonianModel(cfg)(pure_from_populations(0.3)))
