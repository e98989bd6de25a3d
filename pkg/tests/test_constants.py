import math

import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from blowup.constants import (amplitude_constant_cq, boundary_b, c_alpha, c_lambda, constant_set, critical_residual,
                              gradient_constant_bq, gradient_dominated_b, power_case_constant, solve_a_critical,
                              solve_a_subcritical, subcritical_residual)
from blowup.errors import DegenerateParameter

Q_GRID = (1.1, 1.25, 1.5, 1.75, 1.9)
L_GRID = (0.0, 0.5, 1.0, 5.0)


def test_a_critical_examples():
    assert solve_a_critical(4 / 3) == pytest.approx(2.517046, abs=1e-6)
    assert abs(critical_residual(1.5, solve_a_critical(1.5))) < 1e-12


def test_a_critical_limit_q_to_two():
    # a - a^{q/2} ≈ (1 - q/2) a ln a near q = 2, so the root tends to a ln a = 2
    limit = brentq(lambda a: a * math.log(a) - 2.0, 1.5, 3.0)
    assert solve_a_critical(1.999) == pytest.approx(limit, rel=1e-3)


@pytest.mark.parametrize("q", Q_GRID)
@pytest.mark.parametrize("l", L_GRID)
def test_root_residuals(q, l):
    assert abs(critical_residual(q, solve_a_critical(q))) < 1e-12
    assert abs(subcritical_residual(q, l, solve_a_subcritical(q, l))) < 1e-12


@pytest.mark.parametrize("q", [1.5, 1.2])
def test_a_subcritical_closed_form_at_l0(q):
    assert solve_a_subcritical(q, 0.0) == pytest.approx((2 - q) ** (2 / (2 - q)), rel=1e-12)


def test_a_subcritical_examples():
    assert solve_a_subcritical(1.5, 0.0) == pytest.approx(0.0625, abs=1e-14)
    assert solve_a_subcritical(1.2, 0.0) == pytest.approx(0.57243, abs=1e-5)


@pytest.mark.parametrize("q", Q_GRID)
def test_bq_reduces_to_gradient_law(q):
    b = gradient_constant_bq(q, solve_a_subcritical(q, 0.0))
    assert b == pytest.approx((q - 1) ** (-1 / (q - 1)), rel=1e-10)


@given(st.floats(1.01, 1.99), st.floats(0.0, 20.0))
def test_constants_positive(q, l):
    a = solve_a_subcritical(q, l)
    assert a > 0 and gradient_constant_bq(q, a) > 0 and amplitude_constant_cq(q, a) > 0


def test_subcritical_root_for_tiny_l():
    # the right side (~1e-27) sits below the round-off of the residual at the l = 0 root
    q, l = 1.73828125, 0.0078125
    a = solve_a_subcritical(q, l)
    assert a >= solve_a_subcritical(q, 0.0)
    assert abs(subcritical_residual(q, l, a)) < 1e-15


def test_formula_examples():
    assert gradient_constant_bq(1.5, 0.0625) == pytest.approx(4.0)
    assert gradient_constant_bq(4 / 3, 1.0) == pytest.approx(8.0)
    assert amplitude_constant_cq(1.5, 0.0625) == pytest.approx(4.0)
    assert amplitude_constant_cq(1.5, 1.0) == pytest.approx(1.0)
    assert amplitude_constant_cq(4 / 3, 1.0) == pytest.approx(4.0)
    assert c_alpha(3.0) == 2.0
    assert c_lambda(2.0) == 0.5
    assert power_case_constant(3.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert gradient_dominated_b(1.5) == pytest.approx(4.0)


def test_boundary_coefficient_matches_exact_solution():
    # u = 1/d solves -u'' + u^3 + |u'|^{3/2} = 0 exactly
    assert boundary_b(3.0) == pytest.approx(1.0, rel=1e-12)


def test_degenerate_parameters():
    for call in (lambda: c_alpha(1.0), lambda: power_case_constant(1.0), lambda: solve_a_critical(2.0),
                 lambda: solve_a_subcritical(1.0, 0.0)):
        with pytest.raises(DegenerateParameter):
            call()


def test_constant_set_contents():
    cs = dict(constant_set(1.5, 0.0, beta=3.0, lambda_=2.0).items())
    assert cs["b_q"] == pytest.approx(4.0) and cs["c_alpha"] == 2.0 and cs["c_lambda"] == 0.5
    assert "a_critical" not in dict(constant_set(2.0).items())
