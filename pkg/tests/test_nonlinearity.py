import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blowup.errors import EmptyGrid, InvalidSplit, NotExponentialType, NotPowerType, OutOfDomain
from blowup.nonlinearity import (Exp, ExpPoly, Pow, ProbeGrid, Sum, Tabulated, Zero, classify_regime, eval_h,
                                 parse_hspec, scaling_exponent, translation_scaling, uniqueness_condition_probe)


@pytest.mark.parametrize("a,regime", [(1.0, "H1"), (1.5, "H1"), (2.0, "H2"), (3.0, "H3"), (4.0, "H3")])
def test_exponential_regimes(a, regime):
    rep = classify_regime(Exp(a))
    assert rep.regime == regime
    if regime == "H3":
        assert abs(rep.lam - (a - 2.0)) < 1e-3


def test_subcritical_power_is_h1():
    assert classify_regime(Pow(3.0)).regime == "H1"


def test_exppoly_regime_carries_lambda():
    rep = classify_regime(ExpPoly(2.0, 1.0))
    assert rep.regime == "H3" and abs(rep.lam - 2.0) < 1e-2


@pytest.mark.parametrize("s", [5.0, 10.0, 20.0])
def test_exp4_ratio_tends_to_two(s):
    # closed form of h e^{-2s} / ∫_0^s h e^{-2t} for a = 4
    ratio = 2 * math.exp(2 * s) / (math.exp(2 * s) - 1)
    assert abs(ratio - 2.0) < 1e-3


@given(st.floats(0.5, 10.0))
def test_power_scaling_exponent_exact(beta):
    assert scaling_exponent(Pow(beta)) == pytest.approx(beta, rel=1e-12, abs=1e-12)


def test_exponential_is_not_power_type():
    with pytest.raises(NotPowerType):
        scaling_exponent(Exp(1.0))


def test_translation_scaling_examples():
    assert translation_scaling(Exp(4.0), 1.0) == pytest.approx(math.exp(4.0), rel=1e-9)
    assert translation_scaling(ExpPoly(2.0, 1.0), 1.0) == pytest.approx(math.exp(4.0), rel=1e-3)
    assert translation_scaling(Exp(4.0), 0.0) == 1.0


@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_translation_scaling_is_multiplicative(t1, t2):
    h = Exp(3.0)
    lhs = translation_scaling(h, t1 + t2)
    assert abs(lhs - translation_scaling(h, t1) * translation_scaling(h, t2)) <= 1e-3 * lhs


def test_power_is_not_exponential_type():
    with pytest.raises(NotExponentialType):
        translation_scaling(Pow(3.0), 1.0)


_table = Tabulated([0.0, 1.0, 2.0, 4.0, 8.0], [0.0, 0.5, 2.0, 2.0, 9.0])


@pytest.mark.parametrize("spec", [Exp(1.0), Pow(1.5), ExpPoly(1.0, 2.0), _table, Sum(Pow(3.0), Exp(0.5))])
@given(xs=st.lists(st.floats(0.0, 8.0), min_size=2, max_size=30))
def test_eval_h_is_nondecreasing(spec, xs):
    xs = sorted(xs)
    vals = [eval_h(spec, x) for x in xs]
    assert all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(vals, vals[1:]))


def test_table_domain_is_enforced():
    with pytest.raises(OutOfDomain):
        eval_h(_table, 9.0)
    with pytest.raises(ValueError):
        Tabulated([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])


def test_parse_hspec_grammar(tmp_path):
    assert parse_hspec("exp:a=2") == Exp(2.0)
    assert parse_hspec("pow:beta=3") == Pow(3.0)
    assert parse_hspec("exppoly:lambda=2,beta=1") == ExpPoly(2.0, 1.0)
    path = tmp_path / "h.csv"
    path.write_text("s,h\n0,0\n1,1\n2,4\n")
    assert eval_h(parse_hspec(f"table:{path}"), 2.0) == pytest.approx(4.0)
    for bad in ("exp", "exp:b=1", "cosh:a=1", "pow:beta=-1"):
        with pytest.raises(ValueError):
            parse_hspec(bad)


def test_probe_linear_concave_part_needs_no_c0():
    res = uniqueness_condition_probe(Zero(), Pow(1.0))
    assert res.passed and res.c0 == 0.0
    assert np.allclose(res.m_values, 1.0)


def test_probe_convex_plus_concave_table():
    s = np.linspace(0.0, 200.0, 401)
    concave = Tabulated(s, np.arctan(s))
    res = uniqueness_condition_probe(Pow(2.0), concave, ProbeGrid(eps0=0.1))
    assert res.passed and math.isfinite(res.c0)


def test_probe_rejects_bad_splits():
    with pytest.raises(EmptyGrid):
        uniqueness_condition_probe(Zero(), Pow(1.0), ProbeGrid(n_b=0))
    with pytest.raises(InvalidSplit):
        uniqueness_condition_probe(Pow(0.5), Pow(1.0))
    with pytest.raises(InvalidSplit):
        uniqueness_condition_probe(Zero(), Pow(2.0))
