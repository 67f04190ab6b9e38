import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pamchaos import field
from pamchaos.errors import EmbeddingNotPSD, GridMismatch, PreconditionError, SizeLimit
from pamchaos.field import (
    FieldGrid,
    Method,
    child_seeds,
    covariance_validate,
    sample_sheet,
    sample_sheets,
    sheet_covariance,
)
from pamchaos.params import validate

METHODS = [Method.CHOLESKY, Method.CIRCULANT]
T = np.linspace(0.0, 1.0, 5)
X = np.linspace(-1.0, 1.0, 5)


@pytest.mark.parametrize("method", METHODS, ids=lambda m: m.value)
def test_zero_on_coordinate_hyperplanes(method):
    p = validate(2, 0.7, [0.3, 0.6])
    g = sample_sheet(T, [X, np.linspace(0, 2, 5)], p, method, seed=4)
    assert np.all(g.values[0] == 0)
    assert np.all(g.values[:, 2, :] == 0)
    assert np.all(g.values[:, :, 0] == 0)
    assert np.all(np.isfinite(g.values))


@pytest.mark.parametrize("method", METHODS, ids=lambda m: m.value)
def test_deterministic_given_seed(method):
    p = validate(1, 0.6, [0.4])
    a = sample_sheet(T, [X], p, method, seed=77)
    b = sample_sheet(T, [X], p, method, seed=77)
    c = sample_sheet(T, [X], p, method, seed=78)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, c.values)


def test_batch_matches_single_samples():
    p = validate(1, 0.6, [0.4])
    batch = sample_sheets(T, [X], p, Method.CIRCULANT, seed=5, count=7, batch=3)
    seeds = child_seeds(5, 7)
    for g, s in zip(batch, seeds):
        assert g.seed == s
        np.testing.assert_array_equal(g.values, sample_sheet(T, [X], p, Method.CIRCULANT, s).values)


def _rect_increment(v, i0, i1, j0, j1):
    return v[:, i1, j1] - v[:, i0, j1] - v[:, i1, j0] + v[:, i0, j0]


@pytest.mark.parametrize("method", METHODS, ids=lambda m: m.value)
def test_brownian_sheet_disjoint_rectangles_uncorrelated(method):
    p = validate(1, 0.5, [0.5])
    grid = np.array([0.0, 0.5, 1.0])
    n = 10_000
    v = np.stack([g.values for g in sample_sheets(grid, [grid], p, method, seed=21, count=n)])
    a = _rect_increment(v, 0, 1, 0, 1)
    b = _rect_increment(v, 1, 2, 1, 2)
    c = _rect_increment(v, 0, 1, 1, 2)
    for x, y in [(a, b), (a, c), (b, c)]:
        assert abs(np.corrcoef(x, y)[0, 1]) < 3 / math.sqrt(n)
    # each increment has variance equal to the rectangle area
    assert a.var() == pytest.approx(0.25, rel=4 * math.sqrt(2 / n))


PAIRS = [((0.2, 0.5), (0.2, 0.5)), ((1.0, 1.0), (0.5, -0.5)), ((0.6, -1.0), (1.0, 0.3)),
         ((0.4, 0.7), (0.8, 0.7)), ((1.0, -0.5), (0.2, -0.9)), ((0.8, 0.1), (0.8, 1.0)),
         ((0.3, 0.3), (0.9, 0.9)), ((0.5, -0.2), (0.5, 0.2)), ((1.0, 1.0), (1.0, 1.0)),
         ((0.7, -0.6), (0.1, -0.6))]


@pytest.mark.parametrize("method", METHODS, ids=lambda m: m.value)
def test_covariance_at_fixed_pairs(method):
    p = validate(1, 0.7, [0.35])
    tgrid = np.round(np.arange(0, 1.0001, 0.1), 10)
    xgrid = np.round(np.arange(-1, 1.0001, 0.1), 10)
    n = 10_000
    v = np.stack([g.values for g in sample_sheets(tgrid, [xgrid], p, method, seed=8, count=n)])

    def at(pt):
        return v[:, int(np.argmin(abs(tgrid - pt[0]))), int(np.argmin(abs(xgrid - pt[1])))]

    for P, Q in PAIRS:
        prod = at(P) * at(Q)
        se = prod.std(ddof=1) / math.sqrt(n)
        assert abs(prod.mean() - sheet_covariance(p, P, Q)) < 3 * se


@pytest.mark.parametrize("method", METHODS, ids=lambda m: m.value)
def test_pointwise_variance(method):
    p = validate(2, 0.6, [0.3, 0.8])
    grid_t = np.array([0.0, 0.5, 1.0])
    grid_x = np.array([-1.0, 0.0, 0.5])
    n = 5_000
    v = np.stack([g.values for g in sample_sheets(grid_t, [grid_x, grid_x], p, method, seed=2,
                                                   count=n)])
    for i, j, k in [(1, 0, 2), (2, 2, 0), (2, 0, 0)]:
        w2 = v[:, i, j, k] ** 2
        exact = grid_t[i] ** 1.2 * abs(grid_x[j]) ** 0.6 * abs(grid_x[k]) ** 1.6
        assert abs(w2.mean() - exact) < 3 * w2.std(ddof=1) / math.sqrt(n)


def test_time_self_similarity():
    p = validate(1, 0.75, [0.5])
    n, c = 5_000, 4.0
    t = np.array([0.25, 1.0])
    x = np.array([1.0])
    v = np.stack([g.values[:, 0] for g in sample_sheets(t, [x], p, Method.CIRCULANT, seed=3,
                                                         count=n)])
    small = v[:, 0] ** 2
    big = v[:, 1] ** 2 / c ** (2 * 0.75)
    se = math.hypot(small.std(), big.std()) / math.sqrt(n)
    assert abs(small.mean() - big.mean()) < 3 * se


def test_covariance_validate_self_consistency_and_mismatch():
    gen = validate(1, 0.7, [0.7])
    tgrid, xgrid = np.linspace(0, 1, 6), np.linspace(0, 1, 6)
    samples = sample_sheets(tgrid, [xgrid], gen, Method.CIRCULANT, seed=10, count=10_000)
    good = covariance_validate(samples, gen)
    assert good.passed and good.fraction >= 0.99
    bad = covariance_validate(samples, validate(1, 0.7, [0.3]))
    assert not bad.passed


def test_covariance_validate_preconditions():
    p = validate(1, 0.6, [0.5])
    one = [sample_sheet(T, [X], p, seed=1)]
    with pytest.raises(PreconditionError):
        covariance_validate(one, p)
    mixed = sample_sheets(T, [X], p, count=100) + [sample_sheet(T, [X[:3]], p)]
    with pytest.raises(GridMismatch):
        covariance_validate(mixed, p)
    with pytest.raises(GridMismatch):
        covariance_validate(sample_sheets(T, [X], p, count=100), validate(2, 0.6, [0.5, 0.5]))


def test_size_limits():
    p = validate(1, 0.6, [0.5])
    with pytest.raises(SizeLimit):
        sample_sheet(np.linspace(0, 1, 65), [np.linspace(0, 1, 65)], p, Method.CHOLESKY)
    big = np.arange(field.CIRCULANT_MAX_AXIS + 1, dtype=float)
    with pytest.raises(SizeLimit):
        sample_sheet(big, [np.array([1.0])], p, Method.CIRCULANT)


def test_grid_errors():
    p = validate(1, 0.6, [0.5])
    with pytest.raises(GridMismatch):
        sample_sheet(T, [X, X], p)
    with pytest.raises(PreconditionError):
        sample_sheet([0.0, 0.5, 0.4], [X], p)
    with pytest.raises(PreconditionError):
        sample_sheet([0.0, 0.3, 1.0], [X], p, Method.CIRCULANT)


def test_circulant_fallback_warns(monkeypatch):
    def refuse(points, hurst):
        raise EmbeddingNotPSD("forced")

    monkeypatch.setattr(field, "_circulant_factor", refuse)
    p = validate(1, 0.6, [0.5])
    with pytest.warns(RuntimeWarning, match="falling back"):
        g = sample_sheet(T, [X], p, Method.CIRCULANT, seed=1)
    assert np.all(np.isfinite(g.values))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), H0=st.floats(0.5, 0.95), H=st.floats(0.05, 0.95),
       method=st.sampled_from(METHODS))
def test_binary_round_trip(seed, H0, H, method):
    g = sample_sheet(T, [X], validate(1, H0, [H]), method, seed)
    back = FieldGrid.from_bytes(g.to_bytes())
    assert back.seed == seed and back.method is method
    assert back.exponents == g.exponents
    assert back.values.tobytes() == g.values.tobytes()
    assert all(np.array_equal(a, b) for a, b in zip(back.axes, g.axes))


def test_csv_layout():
    g = sample_sheet([0.0, 1.0], [[0.5]], validate(1, 0.6, [0.5]), seed=3)
    lines = g.to_csv().splitlines()
    assert lines[0] == "t,x1,value"
    assert len(lines) == 3
    assert float(lines[2].split(",")[2]) == g.values[1, 0]
