import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pamchaos.errors import DimensionMismatch, EmptyDimension, OutOfRange, TimeRoughness
from pamchaos.params import (
    CRITICAL_TOL,
    VERDICT_CODES,
    Verdict,
    chen_conditions,
    classify,
    classify_grid,
    validate,
)


def test_validate_aggregates_single():
    p = validate(1, 0.5, [0.3])
    assert (p.d_star, p.H_star, p.H_total) == (1, 0.3, 0.3)


def test_validate_aggregates_three():
    p = validate(3, 0.7, [0.4, 0.6, 0.8])
    assert p.d_star == 1
    assert p.H_star == pytest.approx(0.4)
    assert p.H_total == pytest.approx(1.8)


def test_validate_rejects_rough_time():
    with pytest.raises(TimeRoughness):
        validate(1, 0.3, [0.5])


@pytest.mark.parametrize("args,exc", [
    ((0, 0.5, []), EmptyDimension),
    ((1, 1.0, [0.5]), OutOfRange),
    ((1, 0.5, [1.0]), OutOfRange),
    ((1, 0.5, [0.0]), OutOfRange),
    ((1, 0.5, [float("nan")]), OutOfRange),
    ((2, 0.5, [0.5]), DimensionMismatch),
])
def test_validate_errors(args, exc):
    with pytest.raises(exc):
        validate(*args)


@pytest.mark.parametrize("d,H0,H,verdict,cond", [
    (1, 0.5, [0.3], Verdict.GLOBAL_UNIQUE, "eq1.4"),
    (2, 0.5, [0.45, 0.5], Verdict.NO_LOCAL_SOLUTION, None),
    (2, 0.8, [0.5, 0.5], Verdict.LOCAL_UNIQUE, "eq1.7b"),
    (1, 0.6, [0.1], Verdict.INDETERMINATE, None),
])
def test_classify_examples(d, H0, H, verdict, cond):
    v = classify(validate(d, H0, H))
    assert v.verdict is verdict
    if cond:
        assert v.matched_condition == cond


@pytest.mark.parametrize("d,H0,H,expected", [
    (1, 0.5, [0.3], (True, False)),
    (2, 0.75, [0.4, 0.7], (True, False)),
    (2, 0.9, [0.5, 0.5], (False, True)),
])
def test_chen_examples(d, H0, H, expected):
    assert chen_conditions(validate(d, H0, H)) == expected


def test_boundary_falls_through():
    # exactly on the d = 1 white threshold: not solvable
    assert classify(validate(1, 0.5, [0.25])).verdict is Verdict.NO_LOCAL_SOLUTION
    # the critical tolerance is honoured
    p = validate(2, 0.7, [0.5, 0.5 + 0.5 * CRITICAL_TOL])
    assert classify(p).verdict is Verdict.LOCAL_UNIQUE


def test_margins_are_raw_differences():
    v = classify(validate(2, 0.6, [0.7, 0.6]))
    assert v.margins["critical"] == pytest.approx(0.3)
    assert v.margins["necessary"] == pytest.approx(1.3 + 1.2 - 2.0)


hurst = st.floats(0.01, 0.99)
time_h = st.one_of(st.just(0.5), st.floats(0.5, 0.99))


def _safe(d, H0, H):
    try:
        return validate(d, H0, H)
    except OutOfRange:
        return None


@settings(max_examples=300, deadline=None)
@given(d=st.integers(1, 4), H0=time_h, data=st.data())
def test_classifier_invariants(d, H0, data):
    H = data.draw(st.lists(hurst, min_size=d, max_size=d))
    p = _safe(d, H0, H)
    if p is None:
        return
    v = classify(p)
    if p.white:
        assert v.verdict in (Verdict.GLOBAL_UNIQUE, Verdict.NO_LOCAL_SOLUTION)
        if v.verdict is Verdict.GLOBAL_UNIQUE:
            assert p.d_star <= 1
    if chen_conditions(p)[0]:
        assert v.verdict is Verdict.GLOBAL_UNIQUE
    if v.verdict is Verdict.GLOBAL_UNIQUE:
        assert v.margins["sufficient"] > 0
    if v.verdict is Verdict.NO_LOCAL_SOLUTION and not p.white:
        assert v.margins["necessary"] <= 0
    # grid classifier agrees with the scalar one
    assert VERDICT_CODES[int(classify_grid(d, H0, p.H_total))] is v.verdict


@settings(max_examples=200, deadline=None)
@given(d=st.integers(1, 3), H0=time_h, data=st.data())
def test_classifier_monotone_in_each_exponent(d, H0, data):
    H = data.draw(st.lists(hurst, min_size=d, max_size=d))
    i = data.draw(st.integers(0, d - 1))
    bump = data.draw(st.floats(0.0, 0.5))
    p = _safe(d, H0, H)
    H2 = list(H)
    H2[i] = min(H2[i] + bump, 0.99)
    q = _safe(d, H0, H2)
    if p is None or q is None:
        return
    solvable = (Verdict.GLOBAL_UNIQUE, Verdict.LOCAL_UNIQUE)
    if classify(p).verdict in solvable:
        assert classify(q).verdict is not Verdict.NO_LOCAL_SOLUTION


def test_classify_grid_shapes():
    g = classify_grid(1, np.array([0.5, 0.6])[:, None], np.linspace(0.01, 0.99, 7)[None, :])
    assert g.shape == (2, 7)
    assert VERDICT_CODES[g[0, 0]] is Verdict.NO_LOCAL_SOLUTION
    assert VERDICT_CODES[g[0, -1]] is Verdict.GLOBAL_UNIQUE


def test_to_dict_round_trip_fields():
    p = validate(2, 0.7, [0.3, 0.8])
    d = p.to_dict()
    assert d["H"] == [0.3, 0.8] and math.isclose(d["H_total"], 1.1)
    assert classify(p).to_dict()["verdict"] in {v.value for v in Verdict}
