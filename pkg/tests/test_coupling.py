import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kramers.constants import CONST
from kramers.coupling import (
    DipoleVectors,
    HamiltonianModel,
    SystemConfig,
    coefficient_A,
    energy_scales,
    hamiltonian_closed_form,
    hamiltonian_cross_product,
    hamiltonian_quadrature,
    hamiltonian_trace_form,
    hydrogen_like_dipoles,
    interaction_tensor,
    omega0_perp,
    q_matrices,
    spin_state_to_cyclotron,
    time_reversal_symmetry_check,
    toy_dipoles,
    w_vector,
)
from kramers.medium import DrudeParams
from kramers.presets import base_system
from kramers.states import DensityMatrix, PureState, time_reverse_state

EQUATOR = PureState(1 / math.sqrt(2), 1 / math.sqrt(2))
amp = st.floats(-1, 1, allow_nan=False)


@st.composite
def pure_states(draw):
    v = np.array([complex(draw(amp), draw(amp)), complex(draw(amp), draw(amp))])
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([1.0, 0.0]), 1.0
    v = v / n
    return PureState(complex(v[0]), complex(v[1]))


def configs():
    return st.builds(base_system, st.sampled_from([1, -1]), st.floats(0, 10), st.floats(-180, 180))


def test_spin_field_scales():
    cfg = base_system()
    w = omega0_perp(cfg)
    assert w / (2 * math.pi) == pytest.approx(0.2e9, rel=0.05)
    eq = spin_state_to_cyclotron(EQUATOR, cfg)
    assert np.linalg.norm(eq.B0) == pytest.approx(7.4e-6, rel=0.05)
    assert eq.omega0[2] == 0 and eq.omega0[0] != 0
    assert np.linalg.norm(eq.omega0) == pytest.approx(w, rel=1e-12)
    pole = spin_state_to_cyclotron(PureState(1, 0), cfg)
    # Along the axis the dipole field is twice the transverse one.
    assert np.linalg.norm(pole.B0) == pytest.approx(2 * np.linalg.norm(eq.B0), rel=1e-12)
    assert pole.omega0[2] == pytest.approx(-2 * w, rel=1e-12)


def test_mixed_state_has_no_field():
    cyc = spin_state_to_cyclotron(DensityMatrix(np.eye(2) / 2), base_system())
    assert not np.any(cyc.m_s) and not np.any(cyc.B0) and not np.any(cyc.omega0)


@settings(max_examples=100, deadline=None)
@given(pure_states())
def test_cyclotron_invariants(s):
    cfg = base_system()
    c = spin_state_to_cyclotron(s, cfg)
    assert c.omega_ef[2] == pytest.approx(c.omega0[2], abs=1e-6)
    np.testing.assert_allclose(c.omega_ef[:2], -2 * c.omega0[:2], atol=1e-6)
    assert c.omega0[2] == pytest.approx(2 * omega0_perp(cfg) * (abs(s.c2) ** 2 - abs(s.c1) ** 2), abs=1e-3)
    r = spin_state_to_cyclotron(time_reverse_state(s), cfg)
    np.testing.assert_allclose(r.omega0, -c.omega0, atol=1e-6)


def test_interaction_tensor_and_w():
    d = 3e-9
    C = interaction_tensor(d)
    k = 1 / (4 * math.pi * d ** 3)
    np.testing.assert_allclose(C @ [0, 0, 1], [0, 0, 2 * k])
    np.testing.assert_allclose(C @ [1, 0, 0], [-k, 0, 0])
    np.testing.assert_allclose(w_vector([1, 0, 0]), [-2, 0, 0])
    np.testing.assert_allclose(w_vector([0, 0, 1]), [0, 0, 1])


def _A_oracle(gamma_ratio, wa_ratio):
    # Same integral in x = xi / omega_p, split at the scales, scipy's adaptive routine.
    def f(x):
        return 3 * x ** 2 / ((3 * x * (x + gamma_ratio) + 1) ** 2 * (wa_ratio ** 2 + x ** 2))

    pieces = [0, 0.1, 1, 10, wa_ratio, 10 * wa_ratio, np.inf]
    return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=500)[0] for a, b in zip(pieces, pieces[1:]))


def test_coupling_constant_against_oracle():
    cfg = base_system()
    A = coefficient_A(cfg)
    assert A == pytest.approx(1.58e-4, rel=0.01)
    assert A == pytest.approx(_A_oracle(0.1, 50.0), rel=1e-8)


def test_coupling_constant_properties():
    cfg = base_system()
    res = coefficient_A(cfg, full=True)
    finer = coefficient_A(cfg, rtol=1e-11, max_intervals=800)
    assert abs(float(res.value) / finer - 1) < 1e-8
    big_gamma = cfg.replace(drude=DrudeParams(cfg.drude.omega_p, 1e4 * cfg.drude.omega_p))
    assert 0 < coefficient_A(big_gamma) < 1e-4 * float(res.value)
    ex = coefficient_A(cfg, "exact", omega0_mag=1e-6 * cfg.drude.omega_p)
    assert ex == pytest.approx(float(res.value), rel=1e-4)
    with pytest.raises(ValueError):
        coefficient_A(cfg, "exact")
    with pytest.raises(ValueError):
        coefficient_A(cfg, "bogus")


def test_q_matrices_structure():
    gd, gc = 3e-29 * (1 + 0.5j), 1e-29 * (0.3 - 2j)
    Q = q_matrices(toy_dipoles(gd, gc, 1))
    np.testing.assert_allclose(Q.Q12, Q.Q21.conj().T, rtol=1e-14)
    np.testing.assert_allclose(Q.Q12, -Q.Q12.T)
    np.testing.assert_allclose(Q.Q11, Q.Q22.conj())
    z = q_matrices(toy_dipoles(gd, 0.0, 1))
    assert not np.any(z.Q12) and not np.any(z.Q21)
    # Antisymmetric part of Q11 pairs with i gd x gd* = |gd|^2 z.
    dv = toy_dipoles(gd, 0.0, 1)
    np.testing.assert_allclose((1j * np.cross(dv.gd_vec, dv.gd_vec.conj())).real, [0, 0, abs(gd) ** 2], rtol=1e-14)
    A11 = 0.5 * (Q.Q11 - Q.Q11.T)
    np.testing.assert_allclose(A11[0, 1], -1j * abs(gd) ** 2 / 2, rtol=1e-14)


@pytest.mark.parametrize("h", [1, -1])
def test_handedness_direction(h):
    dv = toy_dipoles(2.0 + 1j, 0.5, h)
    np.testing.assert_allclose(dv.s_dip1, [0, 0, h], atol=1e-15)


def test_dipole_sign_swap_invariance():
    base = base_system(1, 0.3, 40.0)
    dv = base.dipoles()
    swapped = base.replace(gd_vec=dv.gc_vec, gc_vec=-dv.gd_vec)
    general = base.replace(gd_vec=dv.gd_vec, gc_vec=dv.gc_vec)
    for s in (PureState(0.6, 0.8j), PureState(1, 0)):
        np.testing.assert_allclose(hamiltonian_cross_product(s, swapped).h, hamiltonian_cross_product(s, general).h,
                                   rtol=1e-13, atol=1e-13 * abs(general_scale(base)))


def general_scale(cfg):
    return energy_scales(cfg)[0]


def test_headline_energy():
    cfg = base_system()
    E_d, E_cr, A = energy_scales(cfg)
    assert 1 / (math.pi * CONST.hbar / E_d) == pytest.approx(63e3, rel=0.05)
    assert E_cr == 0
    h = hamiltonian_closed_form(EQUATOR, cfg).h
    assert not np.any(h)


@settings(max_examples=150, deadline=None)
@given(pure_states(), configs())
def test_closed_forms_agree(s, cfg):
    a = hamiltonian_closed_form(s, cfg).h
    b = hamiltonian_cross_product(s, cfg).h
    c = hamiltonian_trace_form(s, cfg).h
    scale = max(np.abs(a).max(), 1e-300)
    assert np.abs(a - b).max() <= 1e-12 * scale
    assert np.abs(a - c).max() <= 1e-12 * scale
    np.testing.assert_array_equal(a, a.conj().T)
    assert a[0, 0] == -a[1, 1] and a[0, 0].imag == 0


def test_toy_matrix_form():
    cfg = base_system(-1, 0.2, 70.0)
    m = HamiltonianModel(cfg)
    c1, c2 = 0.6, 0.8 * np.exp(0.3j)
    h = m(PureState(c1, c2))
    D = abs(c1) ** 2 - abs(c2) ** 2
    assert h[0, 0] == pytest.approx(-m.E_d * D, rel=1e-14)
    assert h[0, 1] == pytest.approx(-m.E_cr * c2.conjugate() * c1, rel=1e-14)
    assert m.E_cr == pytest.approx(2 * math.sqrt(2) * cfg.gamma_c / cfg.gamma_d.conjugate() * m.E_d, rel=1e-14)


def test_hydrogen_like_dipoles():
    dv = hydrogen_like_dipoles(1.0)
    np.testing.assert_allclose(dv.s_dip1, [0, 0, -1], atol=1e-15)
    assert np.linalg.norm(dv.gd_vec) == pytest.approx(math.sqrt(2))


def test_quadrature_against_closed_form():
    cfg = base_system(1, 0.1, -90.0)
    for s in (PureState(1, 0), PureState(0.6, 0.8j), PureState(0.3, math.sqrt(0.91))):
        q = hamiltonian_quadrature(s, cfg)
        c = hamiltonian_closed_form(s, cfg)
        assert np.linalg.norm(q.traceless() - c.traceless()) <= 0.01 * np.linalg.norm(c.traceless())
        np.testing.assert_allclose(q.h, q.h.conj().T, rtol=0, atol=1e-14 * np.linalg.norm(q.h))
        assert q.lamb_shift == pytest.approx(0.5 * np.trace(q.h).real)


def test_quadrature_discrepancy_shrinks_with_distance():
    s = PureState(1, 0)
    devs = []
    for d in (5e-9, 10e-9):
        cfg = base_system(1, 0.1, -90.0).replace(d=d)
        q = hamiltonian_quadrature(s, cfg, rtol=1e-11).traceless()
        c = hamiltonian_closed_form(s, cfg).traceless()
        devs.append(np.linalg.norm(q - c) / np.linalg.norm(c))
    assert devs[1] < devs[0]


def test_quadrature_limits():
    cfg = base_system(1, 0.3, 20.0)
    q = hamiltonian_quadrature(DensityMatrix(np.eye(2) / 2), cfg)
    assert np.abs(q.traceless()).max() <= 1e-12 * abs(q.lamb_shift)
    up = hamiltonian_quadrature(PureState(1, 0), base_system()).h
    down = hamiltonian_quadrature(PureState(0, 1), base_system()).h
    assert (up[0, 0] - up[1, 1]) == pytest.approx(-(down[0, 0] - down[1, 1]), rel=1e-10)


@pytest.mark.parametrize("h", [1, -1])
def test_time_reversal_check(h):
    model = HamiltonianModel(base_system(h, 0.7, 33.0))
    ok, dev = time_reversal_symmetry_check(model)
    assert ok
    bad, _ = time_reversal_symmetry_check(lambda s: model(s) + 1e-3 * model.E_d * np.diag([1, -1]))
    assert not bad
    assert time_reversal_symmetry_check(lambda s: np.zeros((2, 2)))[0]


def test_time_reversal_check_general_vectors():
    rng = np.random.default_rng(3)
    gd = rng.normal(size=3) + 1j * rng.normal(size=3)
    gc = rng.normal(size=3) + 1j * rng.normal(size=3)
    cfg = base_system().replace(gd_vec=gd * 1e-29, gc_vec=gc * 1e-29)
    assert time_reversal_symmetry_check(HamiltonianModel(cfg))[0]
    assert time_reversal_symmetry_check(lambda s: hamiltonian_quadrature(s, cfg), n_samples=5, rtol=1e-7)[0]


def test_config_validation():
    cfg = base_system()
    with pytest.raises(ValueError):
        cfg.replace(d=1e-9, R=2e-9)
    with pytest.raises(ValueError):
        cfg.replace(handedness=0)
    with pytest.raises(ValueError):
        cfg.replace(m_star=-1.0)
    with pytest.raises(ValueError):
        cfg.replace(fault_injection="bogus")
    assert isinstance(cfg, SystemConfig)
    assert isinstance(cfg.dipoles(), DipoleVectors)
