import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blowup.constants import c_alpha
from blowup.errors import DegenerateParameter, GridTooCoarse
from blowup.grids import GradedGrid
from blowup.nonlinearity import Exp, Pow
from blowup.ode_blowup import (EXPLICIT_KINDS, Asymptote, Blowup, LimitAtInfinity, OdeSpec, Value, c_Ml_relation,
                               explicit_profile, residual, solve_1d_bvp, solve_annulus, solve_c_Ml,
                               solve_radial_large)

PARAMS = {
    "MaximalExpLog": {},
    "HalfspaceExpLambda": {"lam": 2.0},
    "PowerDecay": {"alpha": 3.0},
    "MixedDecay": {"q": 1.5, "l": 1.0},
    "GradientOnly": {"q": 1.5, "M": 2.0, "l": 1.0},
}


@pytest.mark.parametrize("kind", EXPLICIT_KINDS)
def test_explicit_profiles_solve_their_odes(kind):
    prof = explicit_profile(kind, **PARAMS[kind])
    sample = prof.sample(prof.log_grid(0.1, 10.0, 1000))
    assert residual(sample, prof.ode) < 1e-8


def test_explicit_profile_values():
    assert explicit_profile("MaximalExpLog").value(1.0) == pytest.approx(math.log(2.0))
    assert explicit_profile("PowerDecay", alpha=3.0).value(1.0) == pytest.approx(0.5)
    assert explicit_profile("GradientOnly", q=1.5, M=2.0, l=1.0).value(0.0) == pytest.approx(2.0)
    assert explicit_profile("HalfspaceExpLambda", lam=2.0).value(1.0) == pytest.approx(-math.log(2.0) / 4)
    assert explicit_profile("PowerDecay", alpha=3.0).ode.alpha == c_alpha(3.0)


def test_residual_detects_perturbation():
    prof = explicit_profile("MaximalExpLog")
    x = prof.log_grid(0.1, 10.0, 10_000)
    s = prof.sample(x)
    s.values = s.values + 1e-3 * np.sin(x)
    assert residual(s, prof.ode) > 1e-4


def test_residual_needs_five_nodes():
    prof = explicit_profile("MaximalExpLog")
    with pytest.raises(GridTooCoarse):
        residual(prof.sample(np.linspace(1.0, 2.0, 4)), prof.ode)


@pytest.mark.parametrize("M,l,q,c", [(2.0, 1.0, 1.5, 2.0), (3.0, 1.0, 1.5, 1.0), (2.0, 1.0, 4 / 3, (2 / 3) ** -0.5)])
def test_c_Ml_examples(M, l, q, c):
    assert solve_c_Ml(M, l, q) == pytest.approx(c, rel=1e-12)


@given(st.floats(1.05, 1.95), st.floats(0.0, 5.0), st.floats(0.1, 5.0))
def test_c_Ml_relation_by_quadrature(q, l, gap):
    c = solve_c_Ml(l + gap, l, q)
    assert c_Ml_relation(c, q) == pytest.approx(gap, rel=1e-9, abs=1e-9)


def test_c_Ml_rejects_infinite_M():
    with pytest.raises(DegenerateParameter):
        solve_c_Ml(math.inf, 0.0, 1.5)


def test_bvp_maximal_exponential():
    ode = OdeSpec(alpha=1.0, beta=0.0, h=Exp(1.0))
    sol = solve_1d_bvp(ode, (Blowup(), Asymptote()), GradedGrid(100.0, n=20001))
    x = np.linspace(0.1, 10.0, 200)
    exact = explicit_profile("MaximalExpLog").value(x)
    assert np.max(np.abs(sol.at_distance(x) - exact)) < 1e-6


def test_bvp_gradient_only():
    ode = OdeSpec(alpha=0.0, q=1.5)
    exact = explicit_profile("GradientOnly", q=1.5, M=2.0, l=1.0)
    sol = solve_1d_bvp(ode, (Value(2.0), LimitAtInfinity(1.0)), GradedGrid(1e8, n=40001, offset=1.0))
    x = np.linspace(0.0, 50.0, 200)
    assert np.max(np.abs(sol.at_distance(x) - exact.value(x))) < 1e-6


def test_bvp_halfspace_exponential():
    ode = explicit_profile("HalfspaceExpLambda", lam=2.0).ode
    exact = explicit_profile("HalfspaceExpLambda", lam=2.0)
    sol = solve_1d_bvp(ode, (Blowup(), Value(float(exact.value(10.0)))), GradedGrid(10.0))
    assert sol.at_distance(1.0) == pytest.approx(-math.log(2.0) / 4, abs=1e-6)


def test_constant_is_the_only_q2_gradient_solution():
    sol = solve_1d_bvp(OdeSpec(alpha=0.0, q=2.0), (Value(3.0), Value(3.0)), GradedGrid(10.0))
    assert np.max(np.abs(sol.values - 3.0)) < 1e-10


def test_bvp_is_planar_only():
    with pytest.raises(ValueError):
        solve_1d_bvp(OdeSpec(), (Value(1.0), Value(0.0)), GradedGrid(1.0), N=2)


@pytest.fixture(scope="module")
def liouville_disks():
    return {R: solve_radial_large(Exp(1.0), 2.0, R, 2, beta=0.0) for R in (10.0, 20.0, 40.0)}


@pytest.mark.parametrize("R", [10.0, 20.0, 40.0])
def test_radial_matches_liouville_solution(liouville_disks, R):
    # exact large solution of -Δu + e^u = 0 in the disk: log(8R²/(R²-ρ²)²)
    d = np.geomspace(1e-3, 0.9 * R, 60)
    rho = R - d
    exact = np.log(8 * R**2 / (R**2 - rho**2) ** 2)
    assert np.max(np.abs(liouville_disks[R].at_distance(d) - exact)) < 1e-5


def test_radial_decreases_in_R(liouville_disks):
    d = np.geomspace(1e-3, 9.0, 80)
    u10, u20, u40 = (liouville_disks[R].at_distance(d) for R in (10.0, 20.0, 40.0))
    assert np.all(u10 >= u20) and np.all(u20 >= u40)


def test_radial_power_absorption_profile():
    prof = solve_radial_large(Pow(2.0), 1.5, 10.0, 3)
    u = prof.values  # ascending ρ
    assert np.all(u > 0) and np.all(np.diff(u) > 0)
    assert u[0] < 0.2   # small at the center of a large ball


@pytest.fixture(scope="module")
def annuli():
    out = -3 * math.log(5.0) - 1.0
    return {R: solve_annulus(Exp(1.0), 2.0, R, 5.0, Blowup(), out, 2, beta=0.0) for R in (50.0, 100.0)}


def test_annulus_lower_bound(annuli):
    x = np.geomspace(1e-3, 4.9, 60)
    w = -2 * np.log(x) - math.log(5.0) - 1.0
    assert np.all(annuli[50.0].at_distance(x) >= w)


def test_annulus_increases_in_R(annuli):
    x = np.geomspace(1e-3, 4.9, 60)
    assert np.all(annuli[100.0].at_distance(x) >= annuli[50.0].at_distance(x))


def test_annulus_below_disk(annuli, liouville_disks):
    x = np.geomspace(1e-3, 4.9, 60)
    assert np.all(annuli[50.0].at_distance(x) <= liouville_disks[40.0].at_distance(x))


def test_annulus_large_R_tends_to_planar_problem():
    out = -3 * math.log(5.0) - 1.0
    ann = solve_annulus(Exp(1.0), 2.0, 1e3, 5.0, Blowup(), out, 2, beta=0.0)
    line = solve_1d_bvp(OdeSpec(alpha=1.0, beta=0.0, h=Exp(1.0)), (Blowup(), Value(out)), GradedGrid(5.0))
    x = np.linspace(0.1, 4.9, 50)
    # curvature enters at order (N-1) d / R, so the gap shrinks like 1/R
    assert np.max(np.abs(ann.at_distance(x) - line.at_distance(x))) < 5e-3
