import math

import numpy as np
import pytest
from scipy import integrate

from kramers.quadrature import QuadratureError, integrate_interval, integrate_semi_infinite


def test_polynomial_exact():
    res = integrate_interval(lambda x: x ** 6 - 3 * x ** 2, 0.0, 2.0)
    assert float(res.value) == pytest.approx(2 ** 7 / 7 - 8, rel=1e-14)


def test_vector_integrand_componentwise():
    res = integrate_interval(lambda x: np.stack([np.sin(x), 1e-9 * np.cos(x)], axis=-1), 0.0, math.pi)
    assert res.value[0] == pytest.approx(2.0, rel=1e-12)
    assert abs(res.value[1]) < 1e-18


@pytest.mark.parametrize("scale", [0.3, 1.0, 7.0])
def test_semi_infinite_against_scipy(scale):
    def f(x):
        return x ** 2 / ((1 + x * x) ** 2 * (4 + x * x))

    ref, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13)
    res = integrate_semi_infinite(f, scale, rtol=1e-10)
    assert float(res.value) == pytest.approx(ref, rel=1e-9)
    assert float(res.value) == pytest.approx(math.pi / 36, rel=1e-9)


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureError):
        integrate_interval(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 1e-6, 1.0, rtol=1e-14, max_intervals=4)
