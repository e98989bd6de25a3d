"""Closed-form and root-found blow-up constants."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from scipy.optimize import brentq

from .errors import DegenerateParameter, NoRoot


def _check_q(q):
    if not 1.0 < q < 2.0:
        raise DegenerateParameter(f"q={q} must lie in (1, 2)")


def _root(f, df, lo, hi):
    """Brent on a sign-changing bracket, then Newton polishing."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoRoot(f"no sign change on [{lo:g}, {hi:g}]")
    x = brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    for _ in range(3):
        d = df(x)
        if d == 0:
            break
        x_new = x - f(x) / d
        if not lo <= x_new <= hi or abs(f(x_new)) >= abs(f(x)):
            break
        x = x_new
    return x


def critical_residual(q, a):
    return a - a ** (q / 2.0) - (2.0 - q)


def subcritical_rhs(q, l):
    return ((2.0 - q) * l / 2.0) ** (q / (2.0 - q))


def subcritical_residual(q, l, a):
    return a / (2.0 - q) - a ** (q / 2.0) - subcritical_rhs(q, l)


def solve_a_critical(q: float) -> float:
    """Root a > 1 of a - a^{q/2} = 2 - q.

    The left side is convex in a and negative at a = 1, so the root in
    (1, ∞) is unique.
    """
    _check_q(q)
    f = lambda a: critical_residual(q, a)
    df = lambda a: 1.0 - 0.5 * q * a ** (q / 2.0 - 1.0)
    return _root(f, df, 1.0 + 1e-9, 10.0)


def solve_a_subcritical(q: float, l: float) -> float:
    """Positive root of a/(2-q) - a^{q/2} = ((2-q) l / 2)^{q/(2-q)}.

    At l = 0 the root is (2-q)^{2/(2-q)} in closed form; for l > 0 the
    convex left side crosses the constant once to the right of that point.
    """
    _check_q(q)
    if l < 0:
        raise DegenerateParameter("l must be nonnegative")
    a0 = (2.0 - q) ** (2.0 / (2.0 - q))
    if l == 0:
        return a0
    f = lambda a: subcritical_residual(q, l, a)
    df = lambda a: 1.0 / (2.0 - q) - 0.5 * q * a ** (q / 2.0 - 1.0)
    if f(a0) >= 0:
        # rhs is below the round-off of f(a0); the slope there is exactly 1/2
        return a0 + 2.0 * subcritical_rhs(q, l)
    hi = max(2.0 * a0, 1e-12)
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e100:
            raise NoRoot(f"no bracket for q={q}, l={l}")
    return _root(f, df, a0, hi)


def gradient_constant_bq(q: float, a: float) -> float:
    _check_q(q)
    if a <= 0:
        raise DegenerateParameter("a must be positive")
    return (1.0 / a) ** ((2.0 - q) / (2.0 * (q - 1.0))) * ((2.0 - q) / (q - 1.0)) ** (1.0 / (q - 1.0))


def amplitude_constant_cq(q: float, a: float) -> float:
    _check_q(q)
    if a <= 0:
        raise DegenerateParameter("a must be positive")
    return ((2.0 - q) / ((q - 1.0) * math.sqrt(a))) ** ((2.0 - q) / (q - 1.0))


def c_alpha(alpha: float) -> float:
    if alpha == 1.0:
        raise DegenerateParameter("c_alpha needs alpha != 1")
    return 2.0 * (alpha + 1.0) / (alpha - 1.0) ** 2


def c_lambda(lambda_: float) -> float:
    if lambda_ + 2.0 == 0.0:
        raise DegenerateParameter("c_lambda needs lambda != -2")
    return 4.0 * lambda_ / (lambda_ + 2.0) ** 2


def power_case_constant(beta: float) -> float:
    """Normal-gradient coefficient b for h = s^β when gradient absorption is weak."""
    if beta == 1.0:
        raise DegenerateParameter("power_case_constant needs beta != 1")
    return 2.0 / (beta - 1.0) * c_alpha(beta) ** (1.0 / (beta - 1.0))


def gradient_dominated_b(q: float) -> float:
    """b = (q-1)^{-1/(q-1)}: gradient-dominated normal coefficient."""
    _check_q(q)
    return (q - 1.0) ** (-1.0 / (q - 1.0))


def critical_q(beta: float) -> float:
    """q = 2β/(1+β), where absorption and gradient terms balance for h = s^β."""
    return 2.0 * beta / (1.0 + beta)


def boundary_b(beta: float) -> float:
    """b at q = 2β/(1+β) for h = s^β.

    Routed through the power-type gradient law with l = β + 1, which reproduces
    the exact solution u = 1/d at β = 3, q = 3/2 (b = 1).
    """
    q = critical_q(beta)
    return gradient_constant_bq(q, solve_a_subcritical(q, beta + 1.0))


def exponential_gradient_b(a: float, q: float) -> float:
    """Coefficient of d·∂u/∂ν for h = e^{as}: 1 if q = 2 and a <= 2, else 2/a."""
    if q == 2.0 and a <= 2.0:
        return 1.0
    return 2.0 / a


@dataclass(frozen=True)
class ConstantSet:
    q: float
    l: float = 0.0
    beta: Optional[float] = None
    lambda_: Optional[float] = None
    alpha: Optional[float] = None
    a_critical: Optional[float] = None
    a_subcritical: Optional[float] = None
    b_q: Optional[float] = None
    c_q: Optional[float] = None
    c_alpha: Optional[float] = None
    c_lambda: Optional[float] = None
    b_power: Optional[float] = None
    b_gradient: Optional[float] = None

    def items(self):
        return [(k, v) for k, v in asdict(self).items() if v is not None]


def constant_set(q: float, l: float = 0.0, beta: Optional[float] = None, lambda_: Optional[float] = None) -> ConstantSet:
    kw = dict(q=q, l=l, beta=beta, lambda_=lambda_)
    if 1.0 < q < 2.0:
        a_sub = solve_a_subcritical(q, l)
        kw.update(
            a_critical=solve_a_critical(q),
            a_subcritical=a_sub,
            b_q=gradient_constant_bq(q, a_sub),
            c_q=amplitude_constant_cq(q, a_sub),
            b_gradient=gradient_dominated_b(q),
        )
    if beta is not None and beta != 1.0:
        kw.update(alpha=beta, c_alpha=c_alpha(beta), b_power=power_case_constant(beta))
    if lambda_ is not None:
        kw.update(c_lambda=c_lambda(lambda_))
    return ConstantSet(**kw)
