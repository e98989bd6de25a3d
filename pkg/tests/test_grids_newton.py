import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from blowup.errors import NewtonDivergence
from blowup.grids import GradedGrid, derivative, fd_weights, three_point
from blowup.newton import NewtonConfig, newton_solve


@given(st.lists(st.floats(0.01, 1.0), min_size=5, max_size=5), st.integers(0, 4))
def test_fornberg_weights_exact_on_polynomials(steps, m):
    x = np.cumsum(steps)
    z = float(x[2])
    w = fd_weights(z, x, 2)
    p = np.polynomial.Polynomial(np.arange(1.0, m + 2))
    for k in range(3):
        assert w[k] @ p(x) == pytest.approx(p.deriv(k)(z), rel=1e-6, abs=1e-6)


def test_three_point_second_derivative_of_quadratic():
    x = np.geomspace(1e-3, 1.0, 50)
    u = 3 * x**2 - x
    _, _, w1, w2 = three_point(x)
    d2 = w2[0] * u[:-2] + w2[1] * u[1:-1] + w2[2] * u[2:]
    assert np.allclose(d2, 6.0, rtol=1e-8)
    assert np.allclose(derivative(x, u), 6 * x - 1, rtol=1e-7, atol=1e-9)


def test_graded_grid_nodes():
    g = GradedGrid(10.0, n=101)
    b = g.blowup_nodes()
    assert b[0] == pytest.approx(1e-2) and b[-1] == pytest.approx(10.0)
    assert np.allclose(b[1:] / b[:-1], b[1] / b[0])
    v = GradedGrid(10.0, n=101, offset=0.5, per_decade=200).value_nodes()
    assert v[0] == 0.0 and v[-1] == 10.0 and len(v) > 101 and np.all(np.diff(v) > 0)


def test_graded_grid_validation():
    with pytest.raises(ValueError):
        GradedGrid(1.0, n=3)
    with pytest.raises(ValueError):
        GradedGrid(1.0, n=10**6)


def _bratu(n, lam):
    x = np.linspace(0, 1, n + 2)[1:-1]
    h = 1.0 / (n + 1)
    L = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2

    def system(u, jac):
        F = -(L @ u) - lam * np.exp(u)
        scale = np.abs(L) @ np.abs(u) + lam * np.exp(u) + 1.0
        J = (-L - sp.diags(lam * np.exp(u))).tocsr() if jac else None
        return F, scale, J
    return x, system


def test_newton_converges_on_bratu():
    _, system = _bratu(200, 1.0)
    u, info = newton_solve(system, np.zeros(200))
    F, scale, _ = system(u, False)
    assert np.max(np.abs(F / scale)) < 1e-10 and info.iterations < 10


def test_newton_reports_divergence():
    # no solution beyond the Bratu fold (λ* ≈ 3.51)
    _, system = _bratu(100, 5.0)
    with pytest.raises(NewtonDivergence):
        newton_solve(system, np.zeros(100), NewtonConfig(max_iter=40, floor_residual=0.0))
