import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import hyp1f1

from pamchaos.errors import DegenerateTimes, NonIntegrable, NonpositiveTime, OutOfRange
from pamchaos.kernels import (
    GammaKernel,
    covariance_R,
    fourier_chaos_kernel,
    gauss_abs_moment,
    heat_kernel,
    lambda_kernel_f,
    lambda_kernel_min,
    noise_constant,
    pair_kernel_g,
    shifted_abs_moment,
    shifted_abs_moment_quad,
)


@pytest.mark.parametrize("beta,a,b,expected", [
    (0.5, 2.0, 3.0, 2.0),
    (0.7, 1.0, 1.0, 1.0),
    (0.3, 1.0, -1.0, (2 - 2 ** 0.6) / 2),
])
def test_covariance_examples(beta, a, b, expected):
    assert covariance_R(beta, a, b) == pytest.approx(expected, rel=1e-12)


def test_covariance_vectorized():
    a = np.linspace(0, 3, 7)
    np.testing.assert_allclose(covariance_R(0.5, a, 1.5), np.minimum(a, 1.5), atol=1e-14)


@pytest.mark.parametrize("alpha,expected", [(0, 1.0), (2, 1.0), (1, math.sqrt(2 / math.pi))])
def test_gauss_abs_moment_examples(alpha, expected):
    assert gauss_abs_moment(alpha) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha", [-0.9, -0.5, 0.5, 1.0, 2.0, 3.0])
def test_gauss_abs_moment_vs_quadrature(alpha):
    dens = lambda z: z ** alpha * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    near, _ = integrate.quad(dens, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    far, _ = integrate.quad(dens, 1, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    assert gauss_abs_moment(alpha) == pytest.approx(2 * (near + far), rel=1e-10)


def test_gauss_abs_moment_divergent():
    with pytest.raises(NonIntegrable):
        gauss_abs_moment(-1.0)


@pytest.mark.parametrize("alpha,shift", [(-0.6, 0.0), (-0.6, 0.8), (0.4, 2.5), (-0.2, 6.0)])
def test_shifted_moment_closed_form_matches_quadrature(alpha, shift):
    assert shifted_abs_moment_quad(alpha, shift) == pytest.approx(
        shifted_abs_moment(alpha, shift), rel=1e-8)


def test_noise_constant_white_value():
    # at H = 1/2 the spectral measure is the white-noise normalization
    assert noise_constant(0.5) == pytest.approx(1 / (2 * math.pi))


def test_lambda_kernel_examples():
    assert lambda_kernel_f(0.37, 0.5) == 1.0
    assert lambda_kernel_f(0.0, 0.3) == pytest.approx(gauss_abs_moment(0.4) ** 2, rel=1e-12)
    assert lambda_kernel_f(1.0, 0.8) == math.inf
    with pytest.raises(OutOfRange):
        lambda_kernel_f(1.2, 0.6)


def _f_mc(lam, Hk, n=400_000, seed=3):
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal(n)
    # integrate X2 analytically given X1 (independent of the quadrature path)
    alpha = 1 - 2 * Hk
    sigma = math.sqrt(1 - lam * lam)
    inner = sigma ** alpha * gauss_abs_moment(alpha) * hyp1f1(
        -alpha / 2, 0.5, -0.5 * (lam * x1 / sigma) ** 2)
    vals = np.abs(x1) ** alpha * inner
    return vals.mean(), vals.std() / math.sqrt(n)


@pytest.mark.parametrize("lam,Hk", [(0.3, 0.3), (0.8, 0.2), (0.5, 0.6)])
def test_lambda_kernel_vs_mc(lam, Hk):
    m, se = _f_mc(lam, Hk)
    assert abs(lambda_kernel_f(lam, Hk) - m) < 4 * se + 1e-12


@pytest.mark.parametrize("Hk", [0.55, 0.65, 0.7])
def test_lambda_kernel_upper_bound(Hk):
    alpha = 1 - 2 * Hk
    for lam in np.linspace(0.0, 0.95, 12):
        bound = (1 - lam * lam) ** (0.5 - Hk) * gauss_abs_moment(alpha) ** 2
        assert lambda_kernel_f(float(lam), Hk) <= bound * (1 + 1e-9)


@pytest.mark.parametrize("Hk", [0.2, 0.4, 0.6, 0.7])
def test_lambda_kernel_bounded_away_from_zero(Hk):
    lo = lambda_kernel_min(Hk)
    grid = [lambda_kernel_f(float(x), Hk) for x in np.linspace(0, 1, 21)]
    assert 0 < lo <= min(grid) + 1e-9
    assert max(grid) < math.inf


def test_lambda_kernel_continuous_near_one():
    a = lambda_kernel_f(1 - 1e-6, 0.3)
    b = lambda_kernel_f(1.0, 0.3)
    assert a == pytest.approx(b, rel=1e-3)


def test_pair_kernel_gaussian_case():
    assert pair_kernel_g(2.0, 3.0, 0.5) == pytest.approx(2 * math.pi / math.sqrt(6), rel=1e-12)


def _g_mc(a, b, Hk, n=1_000_000, seed=11):
    """Monte Carlo over the defining double integral.

    eta1 is drawn from the density proportional to |eta1|^alpha exp(-b eta1^2/2)
    (exact through a Gamma variable) and the eta2 integral is done in closed form.
    """
    rng = np.random.default_rng(seed)
    alpha = 1 - 2 * Hk
    y = rng.gamma((alpha + 1) / 2, 1.0, n)
    eta1 = np.sqrt(2 * y / b) * rng.choice([-1.0, 1.0], n)
    mass1 = math.sqrt(2 * math.pi / b) * b ** (-alpha / 2) * gauss_abs_moment(alpha)
    mass2 = math.sqrt(2 * math.pi / a) * a ** (-alpha / 2) * gauss_abs_moment(alpha)
    inner = hyp1f1(-alpha / 2, 0.5, -0.5 * a * eta1 ** 2)
    vals = mass1 * mass2 * inner
    return vals.mean(), vals.std() / math.sqrt(n)


@pytest.mark.parametrize("a,b,Hk", [(1.0, 1.0, 0.75), (0.5, 2.0, 0.3), (3.0, 0.2, 0.6)])
def test_pair_kernel_vs_mc(a, b, Hk):
    m, se = _g_mc(a, b, Hk)
    g = pair_kernel_g(a, b, Hk)
    assert abs(g - m) < 0.01 * g
    assert abs(g - m) < 4 * se + 1e-12


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.05, 5), b=st.floats(0.05, 5), c=st.floats(0.1, 10), Hk=st.floats(0.15, 0.85))
def test_pair_kernel_scaling(a, b, c, Hk):
    lhs = pair_kernel_g(c * a, c * b, Hk)
    rhs = c ** (2 * Hk - 2) * pair_kernel_g(a, b, Hk)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_pair_kernel_rejects_nonpositive():
    with pytest.raises(OutOfRange):
        pair_kernel_g(0.0, 1.0, 0.6)


def test_normal_shift_bound_single_constant():
    # E|lam Z + b|^(-alpha) <= C (lam v b)^(-alpha) with one C on the grid
    ratios = []
    for alpha in (0.2, 0.5, 0.8):
        for lam in np.geomspace(1e-3, 10, 9):
            for b in np.geomspace(1e-3, 10, 9):
                val = lam ** (-alpha) * shifted_abs_moment(-alpha, b / lam)
                ratios.append(val * max(lam, b) ** alpha)
    ratios = np.array(ratios)
    assert np.all(np.isfinite(ratios))
    assert ratios.max() < 10.0


def test_fourier_kernel_zero_frequency():
    assert fourier_chaos_kernel(1.0, [0.3], [0.2, 0.5, 0.7], np.zeros((3, 1))) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=4, unique=True),
       st.data())
def test_fourier_kernel_modulus_and_permutation(s, data):
    n = len(s)
    xi = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n)))[:, None]
    val = fourier_chaos_kernel(1.0, [0.4], s, xi)
    assert abs(val) <= 1 + 1e-15
    perm = np.array(data.draw(st.permutations(range(n))))
    again = fourier_chaos_kernel(1.0, [0.4], np.array(s)[perm], xi[perm])
    assert again == pytest.approx(val, rel=1e-12, abs=1e-300)


def test_fourier_kernel_degenerate_times():
    with pytest.raises(DegenerateTimes):
        fourier_chaos_kernel(1.0, [0.0], [0.3, 0.3], np.ones((2, 1)))


def test_heat_kernel_mode_and_errors():
    assert heat_kernel(1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    with pytest.raises(NonpositiveTime):
        heat_kernel(0.0, 0.0)


def test_heat_kernel_normalized():
    val, _ = integrate.quad(lambda x: heat_kernel(0.7, x), -np.inf, np.inf, epsabs=1e-13)
    assert val == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("x", [0.0, 0.6, -1.7])
def test_heat_kernel_semigroup(x):
    s, t = 0.3, 0.8
    val, _ = integrate.quad(lambda y: heat_kernel(s, x - y) * heat_kernel(t, y),
                            -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12)
    assert val == pytest.approx(heat_kernel(s + t, x), abs=1e-8)


def test_heat_kernel_two_dimensional():
    assert heat_kernel(2.0, np.zeros(2), d=2) == pytest.approx(1 / (4 * math.pi))


def test_gamma_kernel_modes():
    white = GammaKernel(0.5)
    assert white.mode == "Dirac"
    with pytest.raises(TypeError):
        white(0.3)
    col = GammaKernel(0.7)
    assert col.mode == "Density"
    assert col(0.5) == pytest.approx(0.7 * 0.4 * 0.5 ** -0.6)
    # mass over [0, 1] matches quadrature of the density
    s = 0.3
    v, _ = integrate.quad(lambda r: col(s - r), 0, 1, points=[s], limit=200)
    assert col.mass(s, 0.0, 1.0) == pytest.approx(v, rel=1e-6)
