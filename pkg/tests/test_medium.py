import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kramers.medium import (
    DrudeParams,
    PermittivityIA,
    ResonanceError,
    antisymmetric_part,
    cross_matrix,
    gyro_permittivity_tensor,
    permittivity_complex,
    permittivity_imag_axis,
    polarizability_general,
    polarizability_gyro,
    symmetric_part,
    tensor_from_text,
    tensor_to_text,
)

WP = 2 * math.pi * 1e12
DRUDE = DrudeParams(omega_p=WP, gamma_coll=0.1 * WP)

finite = st.floats(-5, 5, allow_nan=False)
unit_vec = st.tuples(finite, finite, finite).filter(lambda v: sum(x * x for x in v) > 1e-3)


def test_high_frequency_limit():
    p = permittivity_imag_axis(1e6 * WP, 0.3 * WP, DRUDE)
    assert p.eps_t == pytest.approx(1.0, abs=1e-10)
    assert p.eps_a == pytest.approx(1.0, abs=1e-10)
    assert p.i_eps_g_over_w0 * WP == pytest.approx(0.0, abs=1e-10)


def test_unbiased_value_at_plasma_frequency():
    p = permittivity_imag_axis(WP, 0.0, DRUDE)
    assert p.eps_t == pytest.approx(1 + 1 / 1.1, rel=1e-14)
    assert p.eps_a == pytest.approx(1 + 1 / 1.1, rel=1e-14)
    assert p.eps_g == 0


def test_imag_axis_matches_complex_evaluation():
    w0 = 1e-3 * WP
    p = permittivity_imag_axis(WP, w0, DRUDE)
    et, eg, ea = permittivity_complex(1j * WP, w0, DRUDE)
    assert p.eps_t == pytest.approx(et.real, rel=1e-12) and abs(et.imag) < 1e-12
    assert p.eps_a == pytest.approx(ea.real, rel=1e-12)
    assert p.eps_g == pytest.approx(eg, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(0, 10), st.floats(1e-3, 2))
def test_imag_axis_real_and_consistent(xf, w0f, gf):
    dr = DrudeParams(omega_p=WP, gamma_coll=gf * WP)
    p = permittivity_imag_axis(xf * WP, w0f * WP, dr)
    et, eg, ea = permittivity_complex(1j * xf * WP, w0f * WP, dr)
    assert p.eps_t >= 1 and p.eps_a >= 1
    assert p.eps_t == pytest.approx(et.real, rel=1e-10)
    assert abs(p.eps_g - eg) <= 1e-10 * max(abs(eg), 1e-300) + 1e-300


def test_imag_axis_rejects_bad_input():
    with pytest.raises(ValueError):
        permittivity_imag_axis(0.0, 1.0, DRUDE)
    with pytest.raises(ValueError):
        permittivity_imag_axis(1.0, -1.0, DRUDE)


def test_vacuum_gives_zero_polarizability():
    assert np.abs(polarizability_general(np.eye(3), 1e-9).alpha).max() == 0


def test_clausius_mossotti_isotropic():
    eps, R = 3.7 + 0.2j, 2e-9
    a = polarizability_general(eps * np.eye(3), R)
    cm = 4 * math.pi * R ** 3 * (eps - 1) / (eps + 2)
    np.testing.assert_allclose(a.alpha, cm * np.eye(3), rtol=1e-13)
    b = polarizability_gyro((eps, 0.0, eps), [0, 0, 1], R)
    np.testing.assert_allclose(b.alpha, cm * np.eye(3), rtol=1e-13)


def test_uniaxial_block_diagonal():
    et, ea = 2.5, 4.0
    a = polarizability_gyro((et, 0.0, ea), [0, 0, 1], 1.0).alpha / (4 * math.pi)
    np.testing.assert_allclose(a, np.diag([(et - 1) / (et + 2)] * 2 + [(ea - 1) / (ea + 2)]), rtol=1e-14)


@settings(max_examples=300, deadline=None)
@given(st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False), unit_vec)
def test_gyro_equals_general_inversion(et, eg, ea, u):
    eps = gyro_permittivity_tensor(et, eg, ea, u)
    m = eps + 2 * np.eye(3)
    if np.linalg.cond(m) > 1e6 or abs((et + 2) ** 2 - eg ** 2) < 1e-6 or abs(ea + 2) < 1e-6:
        return
    a = polarizability_general(eps, 1.0).alpha
    b = polarizability_gyro((et, eg, ea), u, 1.0).alpha
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max() + 1e-14


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-2, 1e2), st.floats(1e-3, 3), unit_vec)
def test_imag_axis_polarizability_parity(xf, w0f, u):
    plus = polarizability_gyro(permittivity_imag_axis(xf * WP, w0f * WP, DRUDE), u, 1.0)
    # Reversing the bias flips the gyrotropic element only.
    p = permittivity_imag_axis(xf * WP, w0f * WP, DRUDE)
    minus = polarizability_gyro((p.eps_t, -p.eps_g, p.eps_a), u, 1.0)
    assert np.abs(plus.alpha.imag).max() <= 1e-12 * np.abs(plus.alpha).max()
    # The closed form is alpha0 (1 - ...), so rounding is relative to alpha0.
    tol = 16 * np.finfo(float).eps * plus.alpha0
    np.testing.assert_allclose(plus.symmetric, minus.symmetric, rtol=0, atol=tol)
    np.testing.assert_allclose(plus.antisymmetric, -minus.antisymmetric, rtol=0, atol=tol)
    np.testing.assert_allclose(plus.symmetric + plus.antisymmetric, plus.alpha, rtol=0, atol=tol)
    # Antisymmetric part is proportional to u x 1.
    J = cross_matrix(np.asarray(u) / np.linalg.norm(u))
    A = plus.antisymmetric
    coef = np.sum(A * J) / np.sum(J * J)
    np.testing.assert_allclose(A, coef * J, rtol=0, atol=tol)


def test_resonance_reports_denominator():
    with pytest.raises(ResonanceError) as ei:
        polarizability_gyro((-2.0, 0.0, 1.0), [0, 0, 1], 1.0)
    assert ei.value.denominator == 0


def test_decomposition_helpers():
    rng = np.random.default_rng(0)
    t = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    eps = np.finfo(float).eps
    np.testing.assert_allclose(symmetric_part(t) + antisymmetric_part(t), t, rtol=0, atol=4 * eps * np.abs(t).max())
    np.testing.assert_allclose(cross_matrix([1, 2, 3]) @ [4, 5, 6], np.cross([1, 2, 3], [4, 5, 6]))


def test_tensor_text_roundtrip():
    rng = np.random.default_rng(1)
    t = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    np.testing.assert_array_equal(tensor_from_text(tensor_to_text(t)), t)


def test_permittivity_record():
    p = PermittivityIA(xi=1.0, eps_t=2.0, i_eps_g_over_w0=0.5, eps_a=3.0, omega0=4.0)
    assert p.eps_g == -2j
