"""Keller–Osserman profile transforms.

Two improper integrals define the one-dimensional blow-up profiles:

    Fq2:    F^{-1}(s) = ∫_s^∞ e^{-t} / sqrt(∫_0^t h(ξ) e^{-2ξ} dξ) dt
    Ftilde: F̃^{-1}(s) = ∫_s^∞ 1 / sqrt(2 ∫_0^t h(ξ) dξ) dt

The inner integral is a cumulative primitive built by adaptive Gauss–Legendre
bisection; the outer integral runs over doubling panels with QUADPACK and a
geometric remainder estimate for the tail.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import quad as _quad

from .errors import DivergentOffset, DivergentTail, Inconclusive, OutOfDomain, QuadFailure
from .nonlinearity import LimitDetectionConfig, NonlinearitySpec, classify_regime, detect_limit


class Variant(str, Enum):
    FQ2 = "Fq2"
    FTILDE = "Ftilde"

    @classmethod
    def parse(cls, v) -> "Variant":
        if isinstance(v, Variant):
            return v
        key = str(v).strip().lower()
        if key in ("fq2", "q2", "f"):
            return cls.FQ2
        if key in ("ftilde", "tilde"):
            return cls.FTILDE
        raise ValueError(f"unknown transform variant {v!r}")


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-11
    inner_rel: float = 1e-14
    panel_rel: float = 1e-12
    first_width: float = 0.05
    max_panels: int = 160
    n_nodes: int = 241


_X10, _W10 = np.polynomial.legendre.leggauss(10)
_X20, _W20 = np.polynomial.legendre.leggauss(20)


def _gl(f, a, b, x=_X20, w=_W20):
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(half * x + 0.5 * (a + b))))


class _Primitive:
    """Lazily extended cumulative integral P(t) = ∫_{a0}^t w."""

    def __init__(self, w, a0=0.0, rel=1e-14):
        self.w = w
        self.a0 = a0
        self.rel = rel
        self.knots = [a0]
        self.cum = [0.0]
        self.step = 1e-3

    def _segment(self, a, b, depth=0):
        i10 = _gl(self.w, a, b, _X10, _W10)
        i20 = _gl(self.w, a, b)
        base = abs(i20) + abs(self.cum[-1])
        if not math.isfinite(i20) or abs(i20 - i10) <= self.rel * base or depth >= 48:
            self.knots.append(b)
            self.cum.append(self.cum[-1] + i20)
            return
        m = 0.5 * (a + b)
        self._segment(a, m, depth + 1)
        self._segment(m, b, depth + 1)

    def ensure(self, t):
        while self.knots[-1] < t:
            a = self.knots[-1]
            self.step = max(self.step, 0.5 * (a - self.a0))
            self._segment(a, a + self.step)
            self.step *= 2.0

    def __call__(self, t):
        if t <= self.a0:
            return 0.0
        self.ensure(t)
        j = bisect_right(self.knots, t) - 1
        base = self.cum[j]
        if t == self.knots[j]:
            return base
        return base + _gl(self.w, self.knots[j], t)


class _Integrand:
    """g(t), the outer integrand of the chosen variant."""

    def __init__(self, spec: NonlinearitySpec, variant: Variant, rel: float):
        lo, hi = spec.table_range
        if lo > 0:
            raise OutOfDomain("tabulated h must cover s = 0 for the transforms")
        self.spec = spec
        self.variant = variant
        self.hi = hi
        if variant is Variant.FQ2:
            w = lambda x: spec.weighted(x)
        else:
            w = lambda x: spec(x)
        self.prim = _Primitive(w, 0.0, rel)

    def __call__(self, t):
        if t > self.hi:
            raise OutOfDomain(f"transform needs h beyond the table (t={t:g})")
        with np.errstate(over="ignore", invalid="ignore"):
            inner = self.prim(t)
            if self.variant is Variant.FQ2:
                if not inner > 0:
                    return math.inf if inner == 0 else math.nan
                return math.exp(-t) / math.sqrt(inner)
            if not inner > 0:
                return math.inf if inner == 0 else math.nan
            return 1.0 / math.sqrt(2.0 * inner)


def _panel(g, a, b, cfg, substitute=False):
    if substitute:
        f = lambda u: g(a + u * u) * 2.0 * u if u > 0 else 0.0
        val, err, info = _quad(f, 0.0, math.sqrt(b - a), epsabs=0.0, epsrel=cfg.panel_rel, limit=200, full_output=1)[:3]
    else:
        val, err, info = _quad(g, a, b, epsabs=0.0, epsrel=cfg.panel_rel, limit=200, full_output=1)[:3]
    if not math.isfinite(val) or err > 1e-7 * abs(val) + 1e-300:
        raise QuadFailure(f"panel [{a:g}, {b:g}] did not converge (est. error {err:g})")
    return val


def _tail(g, s, cfg: QuadConfig, width=None):
    """∫_s^∞ g with doubling panels and a certified geometric remainder."""
    w = max(s, cfg.first_width) if width is None else width
    edges = [s, s + w]
    total = _panel(g, s, s + w, cfg, substitute=True)
    panels = [total]
    ratios = []
    while True:
        a = edges[-1]
        b = a + 2.0 * (b_prev := a - edges[-2])
        if b > g.hi:
            raise DivergentTail(f"tail needs h beyond its table (t={b:g})")
        p = _panel(g, a, b, cfg)
        edges.append(b)
        total += p
        panels.append(p)
        if p == 0.0:
            return total
        r = p / panels[-2] if panels[-2] > 0 else math.inf
        ratios.append(r)
        tol = min(cfg.abs_tol, cfg.rel_tol * abs(total))
        if r < 1.0:
            est = p * r / (1.0 - r)
            if est <= tol:
                return total + est
            if len(ratios) >= 3:
                dr = abs(ratios[-1] - ratios[-2])
                if dr * est / (1.0 - r) ** 2 <= tol and abs(ratios[-2] - ratios[-3]) >= dr:
                    return total + est
        far = b >= 1e4 * max(1.0, s)
        if far and len(ratios) >= 8 and all(x >= 1.0 - 1e-9 for x in ratios[-8:]):
            raise DivergentTail(f"tail panels stopped decaying at t={b:g}")
        if len(panels) >= cfg.max_panels:
            raise DivergentTail(f"tail remainder test failed after {len(panels)} panels (ratio {r:.6g})")


def ko_inverse(spec: NonlinearitySpec, variant, s: float, quad: QuadConfig = QuadConfig()) -> float:
    """F^{-1}(s) or F̃^{-1}(s); s = 0 is allowed when the integral converges there."""
    if s < 0:
        raise OutOfDomain("ko_inverse needs s >= 0")
    g = _Integrand(spec, Variant.parse(variant), quad.inner_rel)
    return _tail(g, float(s), quad)


@dataclass
class KOProfile:
    """Tabulated transform with exact evaluation backed by quadrature.

    ``s`` ascends, ``finv`` = F^{-1}(s) descends, ``g`` = -(F^{-1})'(s).
    """

    spec: NonlinearitySpec
    variant: Variant
    s: np.ndarray
    finv: np.ndarray
    g: np.ndarray
    quad: QuadConfig = field(default_factory=QuadConfig)
    _integrand: object = field(default=None, repr=False)

    @property
    def inverse_table(self):
        return np.column_stack([self.s, self.finv])

    @property
    def delta_range(self):
        return float(self.finv[-1]), float(self.finv[0])

    def integrand(self, t):
        return self._integrand(float(t))

    def inverse(self, t: float) -> float:
        """F^{-1}(t) for t inside the table: node value plus one short quadrature."""
        t = float(t)
        if not self.s[0] <= t <= self.s[-1]:
            raise OutOfDomain(f"s={t:g} outside the tabulated range")
        j = int(np.searchsorted(self.s, t))
        if self.s[j] == t:
            return float(self.finv[j])
        return float(self.finv[j]) + _panel(self._integrand, t, float(self.s[j]), self.quad)

    def forward(self, delta):
        """F(δ): bisection on the monotone table, then Newton polishing."""
        if np.ndim(delta):
            return np.array([self.forward(d) for d in np.ravel(delta)]).reshape(np.shape(delta))
        d = float(delta)
        lo, hi = self.delta_range
        if not lo <= d <= hi:
            raise OutOfDomain(f"δ={d:g} outside the profile range [{lo:g}, {hi:g}]")
        # finv descends: find j with finv[j] >= d >= finv[j+1]
        j = int(np.searchsorted(-self.finv, -d, side="right")) - 1
        j = min(max(j, 0), len(self.s) - 2)
        s0, s1 = self.s[j], self.s[j + 1]
        f0, f1 = self.finv[j], self.finv[j + 1]
        x = s0 + (s1 - s0) * (f0 - d) / (f0 - f1) if f0 != f1 else s0
        for _ in range(8):
            step = (self.inverse(x) - d) / self.integrand(x)
            x_new = min(max(x + step, s0), s1)
            if abs(x_new - x) <= 1e-14 * abs(x) + 1e-300:
                x = x_new
                break
            x = x_new
        return x

    def derivative(self, delta):
        """F'(δ) = -1 / g(F(δ))."""
        if np.ndim(delta):
            return np.array([self.derivative(d) for d in np.ravel(delta)]).reshape(np.shape(delta))
        return -1.0 / self.integrand(self.forward(delta))


def build_profile(spec: NonlinearitySpec, variant, range, quad: QuadConfig = QuadConfig()) -> KOProfile:
    s_min, s_max = map(float, range)
    if not 0 < s_min < s_max:
        raise ValueError("need 0 < s_min < s_max")
    variant = Variant.parse(variant)
    g = _Integrand(spec, variant, quad.inner_rel)
    s = np.geomspace(s_min, s_max, quad.n_nodes)
    finv = np.empty_like(s)
    finv[-1] = _tail(g, s_max, quad)
    for j in reversed(np.arange(len(s) - 1)):
        finv[j] = finv[j + 1] + _panel(g, s[j], s[j + 1], quad)
    gv = np.array([g(x) for x in s])
    return KOProfile(spec, variant, s, finv, gv, quad, g)


def _ladder(profile, detect):
    top = float(profile.s[-1])
    ts = []
    t = top
    while t >= max(detect.s0, float(profile.s[0])) and len(ts) < 8:
        ts.append(t)
        t /= 2.0
    return ts[::-1]


def asymptotic_slope(profile: KOProfile, detect: LimitDetectionConfig = LimitDetectionConfig()) -> float:
    """lim_{δ→0} -δ F'(δ) = lim_{t→∞} F^{-1}(t) / g(t)."""
    ts = _ladder(profile, detect)
    vals = [profile.inverse(t) / profile.integrand(t) for t in ts]
    lim, ok = detect_limit(vals, detect.rel_tol, 0.0)
    if not ok:
        raise Inconclusive("-δF'(δ) did not stabilize", list(zip(ts, vals)))
    return lim


def log_offset(profile: KOProfile, detect: LimitDetectionConfig = LimitDetectionConfig()) -> float:
    """lim_{δ→0} (F(δ) + log δ) for Fq2 under (h1)."""
    if profile.variant is not Variant.FQ2:
        raise ValueError("log_offset is defined for the Fq2 transform")
    report = classify_regime(profile.spec, detect)
    if report.regime != "H1":
        raise DivergentOffset(f"F(δ) + log δ → -∞ under {report.regime}", report.regime)
    ts = _ladder(profile, detect)
    vals = [t + math.log(profile.inverse(t)) for t in ts]
    lim, ok = detect_limit(vals, detect.rel_tol, 0.0, abs_floor=1.0)
    if not ok:
        raise Inconclusive("F(δ) + log δ did not stabilize", list(zip(ts, vals)))
    return lim


@dataclass
class CheckReport:
    rows: list  # (lam, delta, ratio, predicted, abs_err)
    slope: float
    slope_pred: float

    @property
    def slope_err(self):
        return abs(self.slope - self.slope_pred)

    @property
    def max_err(self):
        return max([r[4] for r in self.rows] + [self.slope_err])


def homogeneity_check(profile: KOProfile, alpha: float, lambdas) -> CheckReport:
    """Compare F̃(λδ)/F̃(δ) with λ^{-2/(α-1)} at the smallest resolvable δ."""
    if profile.variant is not Variant.FTILDE:
        raise ValueError("homogeneity_check applies to the Ftilde transform")
    expo = -2.0 / (alpha - 1.0)
    lo, hi = profile.delta_range
    rows = []
    for lam in lambdas:
        d = lo * 1.0001 * max(1.0, 1.0 / lam)
        if lam * d > hi:
            raise OutOfDomain(f"λ={lam} pushes λδ outside the profile range")
        ratio = profile.forward(lam * d) / profile.forward(d)
        pred = lam**expo
        rows.append((lam, d, ratio, pred, abs(ratio - pred)))
    d = lo * 1.0001
    slope = d * profile.derivative(d) / profile.forward(d)
    return CheckReport(rows, slope, expo)
