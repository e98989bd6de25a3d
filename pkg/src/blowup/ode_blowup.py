"""One-dimensional and radial blow-up boundary value problems.

All problems share one discretization: the unknown lives on a graded grid in
the distance x to the blow-up (or left) end, and the equation

    -u'' + b(x) u' + A(u) + β G(u') = f

is discretized with nonuniform three-point stencils.  A(u) is either α·h(u)
or α|u|^{p-1}u, and G(v) = (v² + ε²)^{q/2}.  Radial terms enter through the
drift b(x).  Blow-up is imposed either by matching a leading-order asymptote
at an offset node or by M-continuation of a Dirichlet datum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .constants import amplitude_constant_cq, c_alpha, c_lambda, solve_a_subcritical
from .errors import (
    ContinuationStall,
    DegenerateParameter,
    GridTooCoarse,
    NewtonDivergence,
    UnsupportedBalance,
)
from .grids import GradedGrid, derivative, fd_weights, three_point
from .newton import NewtonConfig, newton_solve
from .nonlinearity import Exp, NonlinearitySpec

EPS_REG = 1e-8
LAYER_NODES_PER_DECADE = 400


# -- boundary conditions -----------------------------------------------------------
@dataclass(frozen=True)
class Blowup:
    pass


@dataclass(frozen=True)
class Value:
    value: float


@dataclass(frozen=True)
class LimitAtInfinity:
    value: float


@dataclass(frozen=True)
class Asymptote:
    """Far-end Dirichlet datum taken from the blow-up asymptote."""


@dataclass(frozen=True)
class Center:
    """Regularity at the center of a ball (u' = 0)."""


@dataclass(frozen=True)
class Neumann:
    pass


# -- the ODE -------------------------------------------------------------------------
@dataclass(frozen=True)
class OdeSpec:
    """-u'' + α A(u) + β |u'|^q = 0 with A = h (if given) or |u|^{p-1} u."""

    alpha: float = 1.0
    p: float = 1.0
    beta: float = 1.0
    q: float = 2.0
    h: Optional[NonlinearitySpec] = None

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.p <= 0 or self.q < 0:
            raise DegenerateParameter("need alpha, beta >= 0, p > 0, q >= 0")

    def absorption(self, u):
        if self.alpha == 0:
            return np.zeros_like(u)
        if self.h is not None:
            return self.alpha * self.h(u)
        return self.alpha * np.sign(u) * np.abs(u) ** self.p

    def dabsorption(self, u):
        if self.alpha == 0:
            return np.zeros_like(u)
        if self.h is not None:
            return self.alpha * self.h.deriv(u)
        return self.alpha * self.p * np.maximum(np.abs(u), 1e-300) ** (self.p - 1.0)

    def gradient(self, v):
        """(G(v), G'(v)) scaled by β."""
        if self.beta == 0:
            z = np.zeros_like(v)
            return z, z
        if self.q == 2.0:
            return self.beta * v * v, 2.0 * self.beta * v
        if self.q == 0.0:
            return self.beta * np.ones_like(v), np.zeros_like(v)
        if self.q >= 1.0:
            av = np.abs(v)
            return self.beta * av**self.q, self.beta * self.q * np.sign(v) * av ** (self.q - 1.0)
        # q < 1: smoothed |v|^q that still vanishes at v = 0
        r2 = v * v + EPS_REG**2
        g = r2 ** (0.5 * self.q)
        return self.beta * (g - EPS_REG**self.q), self.beta * self.q * v * g / r2

    def absorption_type(self):
        """('exp', a, C) for C e^{au}, ('pow', p, C) for C u^p, ('none', 0, 0) or ('other', ...)."""
        if self.alpha == 0:
            return "none", 0.0, 0.0
        h = self.h
        if h is None:
            return "pow", self.p, self.alpha
        if h.kind == "exp":
            return "exp", h.a, self.alpha * h.coef
        if h.kind == "pow":
            return ("pow", h.beta, self.alpha * h.coef) if h.coef > 0 else ("none", 0.0, 0.0)
        if h.kind == "exppoly" and h.beta == 0:
            return "exp", 2.0 + h.lam, self.alpha * h.coef
        return "other", 0.0, 0.0


# -- leading-order blow-up asymptotes ------------------------------------------------------
@dataclass(frozen=True)
class LogLaw:
    """u ~ k log(1/ξ) + C."""

    k: float
    C: float
    name: str = "log"

    def value(self, xi):
        return -self.k * np.log(xi) + self.C

    def deriv(self, xi):
        return -self.k / np.asarray(xi, dtype=float)

    def offset_for(self, M):
        return math.exp((self.C - M) / self.k)


@dataclass(frozen=True)
class LogLogLaw:
    """u ~ k ℓ - log(m ℓ)/a with ℓ = log(e + 1/ξ), i.e. k log(1/ξ) - log(m log(1/ξ))/a near 0."""

    k: float
    a: float
    m: float
    name: str = "loglog"

    def _ell(self, xi):
        return np.log(math.e + 1.0 / np.asarray(xi, dtype=float))

    def value(self, xi):
        ell = self._ell(xi)
        return self.k * ell - np.log(self.m * ell) / self.a

    def deriv(self, xi):
        xi = np.asarray(xi, dtype=float)
        ell = self._ell(xi)
        return -(self.k - 1.0 / (self.a * ell)) / (xi * (1.0 + math.e * xi))

    def offset_for(self, M):
        g = lambda t: float(self.value(math.exp(t))) - M
        lo, hi = -700.0, 50.0
        if g(lo) < 0:
            return math.exp(lo)
        if g(hi) > 0:
            return math.exp(hi)
        return math.exp(brentq(g, lo, hi, xtol=1e-14))


@dataclass(frozen=True)
class PowerLaw:
    """u ~ c ξ^{-k}."""

    c: float
    k: float
    name: str = "power"

    def value(self, xi):
        return self.c * np.asarray(xi, dtype=float) ** (-self.k)

    def deriv(self, xi):
        return -self.k * self.c * np.asarray(xi, dtype=float) ** (-self.k - 1.0)

    def offset_for(self, M):
        return (self.c / M) ** (1.0 / self.k)


def blowup_asymptote(ode: OdeSpec):
    """Dominant-balance asymptote of the blow-up solution near ξ = 0."""
    kind, rate, C = ode.absorption_type()
    b, q = ode.beta, ode.q
    grad = b > 0 and q > 1
    if kind == "pow" and rate <= 1 and grad:
        kind = "none"  # sublinear absorption cannot balance the gradient term
    if kind == "exp" and C > 0:
        if grad and q == 2.0:
            k = 2.0 / rate
            if rate > 2.0 * b:
                return LogLaw(k, math.log((k - b * k * k) / C) / rate, "exp+grad")
            if rate < 2.0 * b:
                return LogLaw(1.0 / b, 0.0, "grad-log")
            return LogLogLaw(1.0 / b, rate, 0.5 * rate * C, "exp=grad")
        return LogLaw(2.0 / rate, math.log(2.0 / (C * rate)) / rate, "exp")
    if kind == "pow" and C > 0 and rate > 1:
        k = 2.0 / (rate - 1.0)
        A = (2.0 * (rate + 1.0) / (C * (rate - 1.0) ** 2)) ** (1.0 / (rate - 1.0))
        if grad and q == 2.0:
            return LogLaw(1.0 / b, 0.0, "grad-log")
        if grad:
            qc = 2.0 * rate / (rate + 1.0)
            if q > qc + 1e-12:
                return _gradient_power(b, q)
            if abs(q - qc) <= 1e-12:
                g = lambda c: k * (k + 1.0) - C * c ** (rate - 1.0) - b * k**q * c ** (q - 1.0)
                hi = 1.0
                while g(hi) > 0:
                    hi *= 2.0
                return PowerLaw(brentq(g, 1e-300, hi, xtol=1e-300, rtol=1e-15), k, "balanced")
        return PowerLaw(A, k, "pow")
    if kind == "none" and grad:
        if q == 2.0:
            return LogLaw(1.0 / b, 0.0, "grad-log")
        return _gradient_power(b, q)
    raise UnsupportedBalance(f"no known blow-up asymptote for {ode}")


def _gradient_power(b, q):
    k = (2.0 - q) / (q - 1.0)
    ck = (b * (q - 1.0)) ** (-1.0 / (q - 1.0))
    return PowerLaw(ck / k, k, "grad-pow")


# -- profiles --------------------------------------------------------------------------------
@dataclass
class Profile1D:
    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    left_bc: object
    right_bc: object
    dimension_N: int = 1
    dist: Optional[np.ndarray] = None
    geometry: str = "line"  # line | ball | annulus
    R: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def distances(self):
        return self.grid if self.dist is None else self.dist

    def at_distance(self, d):
        """Interpolate u at distance d from the blow-up end."""
        dist = self.distances()
        order = np.argsort(dist)
        spline = CubicSpline(dist[order], self.values[order])
        return spline(d)


def _assemble(x, u, ode, drift, f, left, right, N, jac):
    n = len(x)
    _, _, w1, w2 = three_point(x)
    um, u0, up = u[:-2], u[1:-1], u[2:]
    D1 = w1[0] * um + w1[1] * u0 + w1[2] * up
    D2 = w2[0] * um + w2[1] * u0 + w2[2] * up
    A = ode.absorption(u0)
    G, dG = ode.gradient(D1)
    b = drift[1:-1]
    fi = f[1:-1]
    F = np.empty(n)
    scale = np.empty(n)
    F[1:-1] = -D2 + b * D1 + A + G - fi
    scale[1:-1] = np.abs(D2) + np.abs(b * D1) + np.abs(A) + np.abs(G) + np.abs(fi)
    F[0] = u[0] - left
    scale[0] = 1.0 + abs(left)
    hl = x[-1] - x[-2]
    if isinstance(right, Center):
        lap = 2.0 * N * (u[-2] - u[-1]) / hl**2
        Ar = ode.absorption(u[-1:])[0]
        F[-1] = -lap + Ar - f[-1]
        scale[-1] = abs(lap) + abs(Ar) + abs(f[-1])
    elif isinstance(right, Neumann):
        F[-1] = (u[-1] - u[-2]) / hl
        scale[-1] = 1.0 + abs(F[-1])
    else:
        F[-1] = u[-1] - right
        scale[-1] = 1.0 + abs(right)
    scale = scale + 1e-12 * np.max(scale) + 1e-300
    if not jac:
        return F, scale, None
    c = b + dG
    lower = np.empty(n - 1)
    diag = np.empty(n)
    upper = np.empty(n - 1)
    lower[:-1] = -w2[0] + c * w1[0]
    diag[1:-1] = -w2[1] + c * w1[1] + ode.dabsorption(u0)
    upper[1:] = -w2[2] + c * w1[2]
    diag[0], upper[0] = 1.0, 0.0
    if isinstance(right, Center):
        lower[-1] = -2.0 * N / hl**2
        diag[-1] = 2.0 * N / hl**2 + ode.dabsorption(u[-1:])[0]
    elif isinstance(right, Neumann):
        lower[-1], diag[-1] = -1.0 / hl, 1.0 / hl
    else:
        lower[-1], diag[-1] = 0.0, 1.0
    J = sp.diags([lower, diag, upper], [-1, 0, 1], format="csc")
    return F, scale, J


def _solve(x, u0, ode, drift, f, left, right, N, newton):
    system = lambda u, jac: _assemble(x, u, ode, drift, f, left, right, N, jac)
    return newton_solve(system, u0, newton)


def _rhs(f, x):
    if callable(f):
        return np.asarray(f(x), dtype=float)
    return np.full_like(x, float(f))


def _right_value(right, asym, L):
    if isinstance(right, (Value, LimitAtInfinity)):
        return float(right.value)
    if isinstance(right, Asymptote):
        if asym is None:
            raise UnsupportedBalance("Asymptote condition needs a known asymptote")
        return float(asym.value(L))
    return right  # Center / Neumann objects are passed through


def solve_1d_bvp(ode: OdeSpec, bcs, grid: GradedGrid, N: int = 1, *, f=0.0,
                 newton: NewtonConfig = NewtonConfig(), eps_check: bool = True) -> Profile1D:
    """Half-line / interval problem on [0, grid.length] in planar geometry.

    ``bcs = (left, right)`` with left in {Blowup, Value} and right in
    {Value, LimitAtInfinity, Asymptote, Neumann}.  LimitAtInfinity imposes its
    value at the truncation point x = length.
    """
    if N != 1:
        raise ValueError("solve_1d_bvp is planar; use solve_radial_large or solve_annulus for N > 1")
    left, right = bcs
    L = grid.length
    asym = None
    try:
        asym = blowup_asymptote(ode)
    except UnsupportedBalance:
        if isinstance(left, Blowup):
            raise

    def run(x):
        rv = _right_value(right, asym, L)
        if isinstance(left, Blowup):
            lv = float(asym.value(x[0]))
            guess = asym.value(x)
            if isinstance(rv, float):
                guess = guess + (rv - guess[-1]) * (x - x[0]) / (x[-1] - x[0])
        else:
            lv = float(left.value)
            if isinstance(right, LimitAtInfinity):
                guess = rv + (lv - rv) / (1.0 + x)
            elif isinstance(rv, float):
                guess = lv + (rv - lv) * x / L
            else:
                guess = np.full_like(x, lv)
        u, info = _solve(x, guess, ode, np.zeros_like(x), _rhs(f, x), lv, rv, 1, newton)
        return u, info

    x = grid.blowup_nodes() if isinstance(left, Blowup) else _value_nodes(grid, ode, float(left.value))
    u, info = run(x)
    diag = {"newton_iterations": info.iterations, "discrete_residual": info.residual}
    if isinstance(left, Blowup) and eps_check:
        x2 = grid.blowup_nodes(0.5 * x[0])
        u2, _ = run(x2)
        mask = x2 >= x[0]
        diag["eps_check"] = float(np.max(np.abs(np.interp(x2[mask], x, u) - u2[mask])))
    if asym is not None:
        diag["asymptote"] = asym
    return Profile1D(x, u, derivative(x, u), left, right, 1, dist=x, geometry="line", diagnostics=diag)


# -- M-continuation for radial problems ----------------------------------------------------
@dataclass(frozen=True)
class MSchedule:
    """Dirichlet-datum schedule M0, M1, ... for realizing u = +∞ on the boundary.

    Logarithmic layers double M.  Power layers u ~ c d^{-k} would need dozens
    of doublings, so there M grows by ``layer_shrink**k`` per level, which
    shrinks the layer width d_M by ``layer_shrink``.
    """

    M0: Optional[float] = None
    factor: float = 2.0
    max_doublings: int = 12
    tol: float = 1e-6
    max_substeps: int = 8
    layer_shrink: float = 8.0

    def next_M(self, M: float, asym=None) -> float:
        if isinstance(asym, PowerLaw):
            return M * max(self.factor, self.layer_shrink**asym.k)
        return M * self.factor


def _layer_nodes(grid: GradedGrid, asym, M: float) -> np.ndarray:
    """Value nodes graded toward the virtual singular point -d_M of the asymptote."""
    if asym is None:
        return grid.value_nodes()
    d = asym.offset_for(M)
    if not np.isfinite(d) or d <= 0:
        return grid.value_nodes()
    return replace(grid, offset=d, per_decade=grid.per_decade or LAYER_NODES_PER_DECADE).value_nodes()


def _value_nodes(grid: GradedGrid, ode: OdeSpec, M: float) -> np.ndarray:
    """Nodes for a finite Dirichlet datum M at x = 0 (explicit offsets are respected)."""
    if grid.offset > 0:
        return grid.value_nodes()
    try:
        asym = blowup_asymptote(ode)
    except UnsupportedBalance:
        asym = None
    return _layer_nodes(grid, asym, M)


def _continue_in_M(grid, ode, coeffs, right, N, schedule, probe, newton):
    """Follow Dirichlet data M -> ∞ at x = 0 until ``probe(x, u)`` is Cauchy.

    ``coeffs(x)`` returns (drift, f) on the current nodes.  The grid is rebuilt
    for each M so the first cells track the boundary-layer width, with a fixed
    number of nodes per decade so the discretization error does not drift with M.
    """
    try:
        asym = blowup_asymptote(ode)
    except UnsupportedBalance:
        asym = None
    M = schedule.M0
    if M is None:
        M = max(float(asym.value(0.01 * grid.length)), 1.0) if asym is not None else 1.0
    rv = right.value if isinstance(right, Value) else right

    def solve_at(M, u_guess, x):
        drift, f = coeffs(x)
        return _solve(x, u_guess, ode, drift, f, M, rv, N, newton)[0]

    def first_guess(x, M):
        if asym is None:
            base = np.full_like(x, M)
        else:
            base = asym.value(x + asym.offset_for(M))
        if isinstance(rv, float):
            base = base + (rv - base[-1]) * x / x[-1]
        return base

    def predict(x_prev, u_prev, M_prev, x, M_new):
        if asym is None:
            out = np.interp(x, x_prev, u_prev)
            out[0] = M_new
            return out
        w = u_prev - asym.value(x_prev + asym.offset_for(M_prev))
        return asym.value(x + asym.offset_for(M_new)) + np.interp(x, x_prev, w)

    def advance(x_prev, u_prev, M_prev, M_new, depth=0):
        x = _layer_nodes(grid, asym, M_new)
        try:
            return x, solve_at(M_new, predict(x_prev, u_prev, M_prev, x, M_new), x)
        except NewtonDivergence:
            if depth >= schedule.max_substeps:
                raise
            M_mid = 0.5 * (M_prev + M_new)
            x_mid, u_mid = advance(x_prev, u_prev, M_prev, M_mid, depth + 1)
            return advance(x_mid, u_mid, M_mid, M_new, depth + 1)

    x = _layer_nodes(grid, asym, M)
    u = solve_at(M, first_guess(x, M), x)
    history = [(M, float(probe(x, u)))]
    for _ in range(schedule.max_doublings):
        M_new = schedule.next_M(M, asym)
        try:
            x, u = advance(x, u, M, M_new)
        except NewtonDivergence as exc:
            raise ContinuationStall(f"Newton failed between M={M:g} and M={M_new:g}: {exc}", history) from None
        M = M_new
        pv = float(probe(x, u))
        history.append((M, pv))
        if abs(pv - history[-2][1]) < schedule.tol * max(1.0, abs(pv)):
            return x, u, M, history
    raise ContinuationStall(f"probe value not Cauchy after {schedule.max_doublings} doublings", history)


def solve_radial_large(spec: NonlinearitySpec, q: float, R: float, N: int = 2, grid: Optional[GradedGrid] = None, *,
                       beta: float = 1.0, f=0.0, schedule: MSchedule = MSchedule(),
                       newton: NewtonConfig = NewtonConfig()) -> Profile1D:
    """Radial large solution of -Δω + h(ω) + β|∇ω|^q = f in B_R ⊂ R^N."""
    grid = replace(grid or GradedGrid(R), length=R)
    ode = OdeSpec(alpha=1.0, beta=beta, q=q, h=spec)

    def coeffs(x):  # x = distance to the boundary; x[-1] = R is the center
        drift = np.zeros_like(x)
        drift[1:-1] = (N - 1) / (R - x[1:-1])
        return drift, _rhs(f, R - x)

    x, u, M, history = _continue_in_M(grid, ode, coeffs, Center(), N, schedule, lambda x, v: v[-1], newton)
    rho = (R - x)[::-1]
    du = -derivative(x, u)[::-1]
    diag = {"M_final": M, "history": history}
    return Profile1D(rho, u[::-1], du, Center(), Blowup(), N, dist=x[::-1].copy(), geometry="ball", R=R,
                     diagnostics=diag)


def solve_annulus(spec: NonlinearitySpec, q: float, R: float, S: float, inner_bc, outer_value: float, N: int = 2,
                  grid: Optional[GradedGrid] = None, *, beta: float = 1.0, f=0.0, schedule: MSchedule = MSchedule(),
                  newton: NewtonConfig = NewtonConfig()) -> Profile1D:
    """Radial problem on R < ρ < R+S with blow-up (or datum M) at ρ = R."""
    if R <= 0 or S <= 0:
        raise DegenerateParameter("annulus needs R, S > 0")
    grid = replace(grid or GradedGrid(S), length=S)
    ode = OdeSpec(alpha=1.0, beta=beta, q=q, h=spec)
    right = Value(float(outer_value))

    def coeffs(x):
        return -(N - 1) / (R + x), _rhs(f, R + x)

    if isinstance(inner_bc, Blowup):
        probe = lambda x, v: np.interp(0.5 * S, x, v)
        x, u, M, history = _continue_in_M(grid, ode, coeffs, right, N, schedule, probe, newton)
        diag = {"M_final": M, "history": history}
    else:
        M = float(inner_bc.value)
        x = _value_nodes(grid, ode, M)
        drift, rhs = coeffs(x)
        guess = M + (float(outer_value) - M) * x / S
        u, info = _solve(x, guess, ode, drift, rhs, M, float(outer_value), N, newton)
        diag = {"newton_iterations": info.iterations}
    return Profile1D(R + x, u, derivative(x, u), inner_bc, right, N, dist=x, geometry="annulus", R=R, diagnostics=diag)


# -- explicit profiles --------------------------------------------------------------------------
@dataclass(frozen=True)
class ExplicitProfile:
    kind: str
    params: tuple
    value: Callable
    deriv: Callable
    ode: OdeSpec
    singular_point: float = 0.0  # where the closed form blows up (may lie left of 0)

    def log_grid(self, lo: float, hi: float, n: int = 1000) -> np.ndarray:
        """Nodes on [lo, hi], log-graded toward the profile's singular point."""
        s = self.singular_point
        return s + np.geomspace(lo - s, hi - s, n)

    def sample(self, xi) -> Profile1D:
        xi = np.asarray(xi, dtype=float)
        return Profile1D(xi, self.value(xi), self.deriv(xi), Blowup() if self.value(xi[:1])[0] > self.value(xi[-1:])[0] else None,
                         None, 1, dist=xi, geometry="line", diagnostics={"kind": self.kind})


def solve_c_Ml(M: float, l: float, q: float) -> float:
    """c with ∫_0^∞ ((q-1)s + c)^{-1/(q-1)} ds = M - l."""
    if not 1.0 < q < 2.0:
        raise DegenerateParameter("solve_c_Ml needs 1 < q < 2")
    if math.isinf(M):
        raise DegenerateParameter("M = ∞ corresponds to the c = 0 family")
    if not 0 <= l < M:
        raise DegenerateParameter("need 0 <= l < M")
    return ((2.0 - q) * (M - l)) ** (-(q - 1.0) / (2.0 - q))


def c_Ml_relation(c: float, q: float) -> float:
    """∫_0^∞ ((q-1)s + c)^{-1/(q-1)} ds by quadrature (independent of the closed form)."""
    # s = c x / (q-1) keeps the integrand O(1) when c is large or small
    k = 1.0 / (q - 1.0)
    val, _ = quad(lambda x: (1.0 + x) ** (-k), 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=500)
    return val * c ** (1.0 - k) / (q - 1.0)


def explicit_profile(kind: str, **params) -> ExplicitProfile:
    """Closed-form half-line profiles: MaximalExpLog, HalfspaceExpLambda,
    PowerDecay, MixedDecay, GradientOnly."""
    key = kind.lower().replace("_", "")
    items = tuple(sorted(params.items()))
    if key == "maximalexplog":
        return ExplicitProfile("MaximalExpLog", items,
                               lambda x: -2.0 * np.log(x) + math.log(2.0),
                               lambda x: -2.0 / np.asarray(x, dtype=float),
                               OdeSpec(alpha=1.0, beta=0.0, h=Exp(1.0)))
    if key == "halfspaceexplambda":
        lam = float(params["lam"])
        if lam <= 0:
            raise DegenerateParameter("lambda must be positive")
        k = 2.0 / (lam + 2.0)
        return ExplicitProfile("HalfspaceExpLambda", items,
                               lambda x: -k * np.log(x) - math.log(2.0) / (lam + 2.0),
                               lambda x: -k / np.asarray(x, dtype=float),
                               OdeSpec(alpha=c_lambda(lam), beta=1.0, q=2.0, h=Exp(lam + 2.0)))
    if key == "powerdecay":
        al = float(params["alpha"])
        if al <= 1:
            raise DegenerateParameter("alpha must exceed 1")
        k = 2.0 / (al - 1.0)
        return ExplicitProfile("PowerDecay", items,
                               lambda x: (1.0 + np.asarray(x, dtype=float)) ** (-k),
                               lambda x: -k * (1.0 + np.asarray(x, dtype=float)) ** (-k - 1.0),
                               OdeSpec(alpha=c_alpha(al), p=al, beta=0.0), -1.0)
    if key == "mixeddecay":
        q, l = float(params["q"]), float(params.get("l", 0.0))
        if not 1 < q < 2:
            raise DegenerateParameter("MixedDecay needs 1 < q < 2")
        k = (2.0 - q) / (q - 1.0)
        cq = amplitude_constant_cq(q, solve_a_subcritical(q, l))
        r = q / (2.0 - q)
        K1 = ((2.0 - q) * l / 2.0) ** r * cq ** (r - 1.0)
        K2 = cq ** (q - 1.0)
        return ExplicitProfile("MixedDecay", items,
                               lambda x: (1.0 + np.asarray(x, dtype=float)) ** (-k),
                               lambda x: -k * (1.0 + np.asarray(x, dtype=float)) ** (-k - 1.0),
                               OdeSpec(alpha=K1, p=r, beta=K2, q=q), -1.0)
    if key == "gradientonly":
        q, M, l = float(params["q"]), float(params["M"]), float(params["l"])
        c = solve_c_Ml(M, l, q)
        k = (2.0 - q) / (q - 1.0)
        return ExplicitProfile("GradientOnly", items,
                               lambda x: l + ((q - 1.0) * np.asarray(x, dtype=float) + c) ** (-k) / (2.0 - q),
                               lambda x: -((q - 1.0) * np.asarray(x, dtype=float) + c) ** (-1.0 / (q - 1.0)),
                               OdeSpec(alpha=0.0, beta=1.0, q=q), -c / (q - 1.0))
    raise ValueError(f"unknown explicit profile {kind!r}")


EXPLICIT_KINDS = ("MaximalExpLog", "HalfspaceExpLambda", "PowerDecay", "MixedDecay", "GradientOnly")


# -- residual check -----------------------------------------------------------------------------
def _drift_for(profile: Profile1D, y):
    N = profile.dimension_N
    if profile.geometry == "ball":
        return (N - 1) / (profile.R - y)
    if profile.geometry == "annulus":
        return -(N - 1) / (profile.R + y)
    return np.zeros_like(y)


def residual(profile: Profile1D, ode: OdeSpec, f=0.0) -> float:
    """Max relative ODE residual at interior nodes from 5-point (4th-order) stencils."""
    y = profile.distances()
    u = profile.values
    order = np.argsort(y)
    y, u = y[order], u[order]
    n = len(y)
    if n < 5:
        raise GridTooCoarse("residual needs at least 5 nodes")
    D1 = np.empty(n - 4)
    D2 = np.empty(n - 4)
    for j, i in enumerate(range(2, n - 2)):
        w = fd_weights(y[i], y[i - 2:i + 3], 2)
        D1[j] = w[1] @ u[i - 2:i + 3]
        D2[j] = w[2] @ u[i - 2:i + 3]
    yi = y[2:-2]
    b = _drift_for(profile, yi)
    A = ode.absorption(u[2:-2])
    G, _ = ode.gradient(D1)
    fi = _rhs(f, yi)
    R = -D2 + b * D1 + A + G - fi
    scale = np.abs(D2) + np.abs(b * D1) + np.abs(A) + np.abs(G) + np.abs(fi) + 1e-300
    return float(np.max(np.abs(R) / scale))
