import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pamchaos.errors import NonIntegrableEndpoint, PreconditionError
from pamchaos.quadrature import (
    QuadratureSpec,
    SimplexIntegrand,
    integrate_singular_1d,
    sandwich_exponent_fit,
    simplex_bound_check,
    simplex_integral_J,
    simplex_integral_J_nested,
)


def graded_riemann(f, a, b, n=10_000_000, q=20.0):
    """Midpoint rule on a mesh graded toward both endpoints.

    ``f`` receives (x, x - a, b - x) with the distances computed exactly.
    """
    w = (np.arange(n // 2) + 0.5) / (n // 2)
    h = 0.5 * (b - a)
    total = 0.0
    near = h * w ** q
    for x, da, db in ((a + near, near, 2 * h - near), (b - near, 2 * h - near, near)):
        total += np.sum(f(x, da, db) * h * q * w ** (q - 1.0)) / (n // 2)
    return total


# (integrand of (x, x-a, b-x), a, b, left exponent, right exponent)
REGRESSION = [
    (lambda x, l, r: l ** -0.5, 0.0, 1.0, -0.5, 0.0),
    (lambda x, l, r: l ** -0.6 * (x + 0.5) ** -0.6, 0.0, 1.0, -0.6, 0.0),
    (lambda x, l, r: l ** -0.9 * r ** -0.5, 0.0, 1.0, -0.9, -0.5),
    (lambda x, l, r: np.log1p(x) * l ** -0.75, 0.0, 2.0, 0.25, 0.0),
    (lambda x, l, r: np.exp(-x) * l ** 0.3, 0.0, 3.0, 0.3, 0.0),
    (lambda x, l, r: np.sin(r) * r ** -0.4, 0.0, np.pi / 2, 0.0, 0.6),
    (lambda x, l, r: l ** -0.2 * r ** -0.7, 1.0, 4.0, -0.2, -0.7),
    (lambda x, l, r: l ** 0.5 * r ** 0.5, 0.0, 1.0, 0.5, 0.5),
    (lambda x, l, r: 1.0 / (1.0 + x * x), -1.0, 1.0, 0.0, 0.0),
    (lambda x, l, r: l ** -0.3 * np.exp(-x * x) * r ** -0.85, 0.0, 2.0, -0.3, -0.85),
]


@pytest.mark.parametrize("case", REGRESSION, ids=[f"integrand{i}" for i in range(len(REGRESSION))])
def test_singular_matches_graded_riemann(case):
    f, a, b, le, re = case
    val = integrate_singular_1d(lambda x, l, r: float(f(x, l, r)), a, b, le, re, distances=True)
    ref = graded_riemann(f, a, b)
    assert val == pytest.approx(ref, rel=1e-6)


def test_inverse_sqrt():
    assert integrate_singular_1d(lambda x: x ** -0.5, 0, 1, -0.5) == pytest.approx(2.0, rel=1e-12)


def test_beta_integral():
    val = integrate_singular_1d(lambda x: x ** -0.9 * (1 - x) ** -0.5, 0, 1, -0.9, -0.5)
    ref = math.gamma(0.1) * math.gamma(0.5) / math.gamma(0.6)
    assert val == pytest.approx(ref, rel=1e-10)


def test_sandwich_value_between_bounds():
    # u^-a (u+x)^-b lies between (1+x)^-b u^-a and x^-b u^-a on (0, 1]
    val = integrate_singular_1d(lambda u: u ** -0.6 * (u + 0.5) ** -0.6, 0, 1, -0.6)
    lo, hi = 1.5 ** -0.6 / 0.4, 0.5 ** -0.6 / 0.4
    assert lo < val < hi


def test_nonintegrable_endpoint():
    with pytest.raises(NonIntegrableEndpoint):
        integrate_singular_1d(lambda x: 1 / x, 0, 1, -1.0)


def test_quadrature_spec_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)


def test_simplex_volume():
    assert simplex_integral_J(SimplexIntegrand(3, (0, 0, 0), 2.0)) == pytest.approx(4 / 3, rel=1e-14)


def test_simplex_single_inverse_sqrt():
    assert simplex_integral_J(SimplexIntegrand(1, (-0.5,), 1.0)) == pytest.approx(2.0, rel=1e-14)


def test_simplex_pi():
    spec = SimplexIntegrand(2, (-0.5, -0.5), 1.0)
    assert simplex_integral_J(spec) == pytest.approx(math.pi, rel=1e-12)
    assert simplex_integral_J_nested(spec) == pytest.approx(math.pi, rel=1e-9)


def test_simplex_closed_matches_nested_m3():
    spec = SimplexIntegrand(3, (-0.3, 0.2, -0.6), 2.0)
    assert simplex_integral_J(spec) == pytest.approx(simplex_integral_J_nested(spec), rel=1e-8)


def test_simplex_grid_oracle_m2():
    # 2-d midpoint grid in gap coordinates, smooth exponents
    n = 2000
    g = (np.arange(n) + 0.5) / n
    r1, r2 = np.meshgrid(g, g, indexing="ij")
    mask = r2 > r1
    vals = np.where(mask, r1 ** 0.4 * np.abs(r2 - r1) ** 0.7, 0.0)
    ref = vals.sum() / n ** 2
    assert simplex_integral_J(SimplexIntegrand(2, (0.4, 0.7), 1.0)) == pytest.approx(ref, rel=2e-3)


@pytest.mark.parametrize("m", range(1, 9))
def test_simplex_zero_exponents(m):
    t = 1.7
    assert simplex_integral_J(SimplexIntegrand(m, (0.0,) * m, t)) == pytest.approx(
        t ** m / math.factorial(m), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=6),
    t=st.floats(0.01, 10.0),
    c=st.floats(0.1, 10.0),
)
def test_simplex_scaling(alpha, t, c):
    m = len(alpha)
    a = SimplexIntegrand(m, tuple(alpha), t)
    b = SimplexIntegrand(m, tuple(alpha), c * t)
    assert simplex_integral_J(b) == pytest.approx(c ** (sum(alpha) + m) * simplex_integral_J(a), rel=1e-8)


def test_simplex_rejects_exponent_at_floor():
    with pytest.raises(PreconditionError):
        SimplexIntegrand(1, (-1.0 + 5e-7,), 1.0)


def test_simplex_bound_check_examples():
    zero = SimplexIntegrand(3, (0, 0, 0), 1.3)
    assert simplex_bound_check(zero, 1.0)
    assert simplex_bound_check(zero, 2.0)
    assert simplex_bound_check(SimplexIntegrand(2, (-0.5, -0.5), 1.0), 4.0)
    assert not simplex_bound_check(SimplexIntegrand(2, (-0.5, -0.5), 1.0), 0.0)


def test_sandwich_slope_moderate():
    slope = sandwich_exponent_fit(0.6, 0.6, 1.0, np.geomspace(1e-6, 1e-10, 5))
    assert slope == pytest.approx(-0.2, abs=0.02)


def test_sandwich_slope_strong():
    slope = sandwich_exponent_fit(0.9, 0.9, 1.0, [1e-2, 1e-3, 1e-4, 1e-5])
    assert slope == pytest.approx(-0.8, abs=0.02)


def test_sandwich_requires_superunit_sum():
    with pytest.raises(PreconditionError):
        sandwich_exponent_fit(0.5, 0.5, 1.0, [1e-2, 1e-3, 1e-4, 1e-5])


def test_sandwich_requires_two_decades():
    with pytest.raises(PreconditionError):
        sandwich_exponent_fit(0.6, 0.6, 1.0, [1e-2, 8e-3, 5e-3, 2e-3])
