"""Absorption terms h, regime classification and scaling-law extraction.

A `NonlinearitySpec` is an immutable description of a nondecreasing function
h.  Parametric kinds are evaluated exactly; tabulated ones use monotone cubic
(PCHIP) interpolation, so the nondecreasing property of the data carries over
to the interpolant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import (
    EmptyGrid,
    Inconclusive,
    InvalidSplit,
    NotExponentialType,
    NotPowerType,
    OutOfDomain,
)

KINDS = ("exp", "pow", "exppoly", "table", "sum")


@dataclass(frozen=True)
class NonlinearitySpec:
    """Parametric or tabulated nondecreasing function h.

    kind:
      ``exp``      coef * e^{a s}
      ``pow``      coef * |s|^{beta-1} s   (odd extension, as in -Δu + |u|^{β-1}u)
      ``exppoly``  coef * e^{(2+lam) s} * max(s, 0)^beta
      ``table``    PCHIP through ``table`` = ((s0, h0), (s1, h1), ...)
      ``sum``      sum of ``parts``
    """

    kind: str
    a: float = 0.0
    beta: float = 0.0
    lam: float = 0.0
    coef: float = 1.0
    table: tuple = ()
    parts: tuple = ()
    domain_floor: float = -math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.coef < 0:
            raise ValueError("coef must be nonnegative (h nondecreasing)")
        if self.kind == "exp" and not self.a > 0:
            raise ValueError("exp requires a > 0")
        if self.kind == "pow" and not self.beta > 0:
            raise ValueError("pow requires beta > 0")
        if self.kind == "exppoly" and (self.lam < 0 or self.beta < 0):
            raise ValueError("exppoly requires lambda >= 0 and beta >= 0")
        if self.kind == "table":
            s = np.array([p[0] for p in self.table], dtype=float)
            h = np.array([p[1] for p in self.table], dtype=float)
            if len(s) < 2 or np.any(np.diff(s) <= 0):
                raise ValueError("table abscissae must be strictly increasing (>= 2 rows)")
            if np.any(np.diff(h) < 0):
                raise ValueError("tabulated h must be nondecreasing")
        if self.kind == "sum" and not self.parts:
            raise ValueError("sum needs at least one part")

    # -- evaluation ---------------------------------------------------------
    @cached_property
    def _interp(self):
        s = np.array([p[0] for p in self.table], dtype=float)
        h = np.array([p[1] for p in self.table], dtype=float)
        return PchipInterpolator(s, h, extrapolate=False)

    @property
    def table_range(self):
        if self.kind == "table":
            return self.table[0][0], self.table[-1][0]
        if self.kind == "sum":
            lo, hi = -math.inf, math.inf
            for p in self.parts:
                plo, phi = p.table_range
                lo, hi = max(lo, plo), min(hi, phi)
            return lo, hi
        return -math.inf, math.inf

    @property
    def floor(self):
        lo = self.table_range[0]
        return max(self.domain_floor, lo)

    def __call__(self, s):
        """Vectorized h(s) with no domain check (internal fast path)."""
        s = np.asarray(s, dtype=float)
        c = self.coef
        if self.kind == "exp":
            return c * np.exp(self.a * s)
        if self.kind == "pow":
            return c * np.sign(s) * np.abs(s) ** self.beta
        if self.kind == "exppoly":
            base = np.exp((2.0 + self.lam) * s)
            if self.beta == 0:
                return c * base
            return c * base * np.maximum(s, 0.0) ** self.beta
        if self.kind == "table":
            return c * self._interp(s)
        return sum(p(s) for p in self.parts)

    def deriv(self, s):
        """h'(s); singular derivatives at 0 are capped for use in Jacobians."""
        s = np.asarray(s, dtype=float)
        c = self.coef
        if self.kind == "exp":
            return c * self.a * np.exp(self.a * s)
        if self.kind == "pow":
            return c * self.beta * np.maximum(np.abs(s), 1e-8) ** (self.beta - 1.0)
        if self.kind == "exppoly":
            k = 2.0 + self.lam
            base = np.exp(k * s)
            if self.beta == 0:
                return c * k * base
            sp = np.maximum(s, 0.0)
            spm = np.maximum(s, 1e-8)
            return np.where(s > 0, c * base * (k * sp**self.beta + self.beta * spm ** (self.beta - 1.0)), 0.0)
        if self.kind == "table":
            return c * self._interp.derivative()(s)
        return sum(p.deriv(s) for p in self.parts)

    def log(self, s):
        """log h(s) for h(s) > 0, stable for exponential kinds at large s."""
        s = np.asarray(s, dtype=float)
        lc = math.log(self.coef) if self.coef > 0 else -math.inf
        if self.kind == "exp":
            return lc + self.a * s
        if self.kind == "pow":
            return lc + self.beta * np.log(s)
        if self.kind == "exppoly":
            out = lc + (2.0 + self.lam) * s
            return out + self.beta * np.log(s) if self.beta else out
        if self.kind == "sum":
            logs = np.array([p.log(s) for p in self.parts])
            return np.logaddexp.reduce(logs, axis=0)
        return np.log(self(s))

    def weighted(self, s, shift=2.0):
        """h(s) e^{-shift*s} computed without intermediate overflow."""
        s = np.asarray(s, dtype=float)
        if self.kind == "exp":
            return self.coef * np.exp((self.a - shift) * s)
        if self.kind == "exppoly":
            out = self.coef * np.exp((2.0 + self.lam - shift) * s)
            return out * np.maximum(s, 0.0) ** self.beta if self.beta else out
        if self.kind == "sum":
            return sum(p.weighted(s, shift) for p in self.parts)
        return self(s) * np.exp(-shift * s)

    def scaled(self, c):
        return _replace(self, coef=self.coef * c)

    def describe(self):
        if self.kind == "exp":
            txt = f"exp:a={self.a:g}"
        elif self.kind == "pow":
            txt = f"pow:beta={self.beta:g}"
        elif self.kind == "exppoly":
            txt = f"exppoly:lambda={self.lam:g},beta={self.beta:g}"
        elif self.kind == "table":
            txt = f"table[{len(self.table)}]"
        else:
            return "+".join(p.describe() for p in self.parts)
        if self.coef != 1.0:
            txt += f",coef={self.coef:g}"
        return txt


def _replace(spec, **kw):
    from dataclasses import replace

    return replace(spec, **kw)


def Exp(a, coef=1.0):
    return NonlinearitySpec("exp", a=float(a), coef=float(coef))


def Pow(beta, coef=1.0, domain_floor=-math.inf):
    return NonlinearitySpec("pow", beta=float(beta), coef=float(coef), domain_floor=domain_floor)


def ExpPoly(lam, beta, coef=1.0):
    return NonlinearitySpec("exppoly", lam=float(lam), beta=float(beta), coef=float(coef))


def Tabulated(s, h):
    rows = tuple((float(x), float(y)) for x, y in zip(s, h))
    return NonlinearitySpec("table", table=rows)


def Sum(*parts):
    return NonlinearitySpec("sum", parts=tuple(parts))


def Zero():
    return NonlinearitySpec("pow", beta=1.0, coef=0.0)


def eval_h(spec: NonlinearitySpec, s: float) -> float:
    """h(s) with the domain contract enforced."""
    lo, hi = spec.table_range
    if s < spec.domain_floor or s < lo or s > hi or math.isnan(s):
        raise OutOfDomain(f"s={s} outside the domain of {spec.describe()}")
    return float(spec(s))


# -- h-spec grammar -------------------------------------------------------------
def parse_hspec(text: str) -> NonlinearitySpec:
    """Parse ``exp:a=..``, ``pow:beta=..``, ``exppoly:lambda=..,beta=..``,
    ``table:<path>``; terms may be joined with ``+``."""
    text = text.strip()
    if "+" in text and not text.startswith("table:"):
        return Sum(*(parse_hspec(t) for t in text.split("+")))
    if ":" not in text:
        raise ValueError(f"bad h-spec {text!r}")
    kind, rest = text.split(":", 1)
    kind = kind.strip().lower()
    if kind == "table":
        return read_table(rest.strip())
    kv = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        kv[key.strip().lower()] = float(val)
    coef = kv.pop("coef", 1.0)
    try:
        if kind == "exp":
            spec = Exp(kv.pop("a"), coef)
        elif kind == "pow":
            spec = Pow(kv.pop("beta"), coef)
        elif kind == "exppoly":
            spec = ExpPoly(kv.pop("lambda"), kv.pop("beta", 0.0), coef)
        else:
            raise ValueError(f"unknown h kind {kind!r}")
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc} in {text!r}") from None
    if kv:
        raise ValueError(f"unexpected parameters {sorted(kv)} in {text!r}")
    return spec


def read_table(path) -> NonlinearitySpec:
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise
                continue  # header line
    return Tabulated([r[0] for r in rows], [r[1] for r in rows])


# -- limit detection -------------------------------------------------------------
@dataclass(frozen=True)
class LimitDetectionConfig:
    """Geometric sample ladder s0*2^k (k = 0.. while <= s_max) and tolerances."""

    s0: float = 1.25
    s_max: float = 40.0
    rel_tol: float = 1e-3
    zero_tol: float = 1e-3
    shifts: tuple = (-5.0, -2.0, -1.0, 1.0, 2.0, 5.0)
    t_values: tuple = (0.5, 2.0, 3.0, 4.0)
    power_s: float = 1e6
    translation_s: tuple = (1e2, 1e3, 1e4, 1e5)

    def ladder(self, s_hi=None):
        top = self.s_max if s_hi is None else min(self.s_max, s_hi)
        out = []
        s = self.s0
        while s <= top * (1 + 1e-12):
            out.append(s)
            s *= 2.0
        return out


def detect_limit(values, rel_tol=1e-3, zero_tol=1e-3, abs_floor=0.0):
    """Return (limit, converged) for a sequence sampled along a doubling ladder.

    Rules, in order: the last three values agree to ``rel_tol`` (relative to
    max(|v|, abs_floor)); they all sit below ``zero_tol``; monotone decay to
    zero with step quotients <= 0.8; differences shrinking fast enough that
    the remaining drift is within tolerance; geometric convergence with stable
    difference quotients, extrapolated by Aitken's formula.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 3 or not np.all(np.isfinite(v[-3:])):
        return float("nan"), False
    last = v[-3:]
    scale = np.max(np.abs(last))
    if np.ptp(last) <= rel_tol * max(scale, abs_floor):
        return float(last[-1]), True
    if scale <= zero_tol:
        return 0.0, True
    if len(v) >= 4:
        tail = v[-4:]
        if np.all(tail > 0):
            quo = tail[1:] / tail[:-1]
            if np.all(quo <= 0.8) and np.all(np.diff(quo) <= 0.05 * quo[:-1]):
                return 0.0, True
        # differences shrinking at least geometrically bound the remaining drift
        d = np.abs(np.diff(v[-4:]))
        if np.all(d[:-1] > 0):
            quo = d[1:] / d[:-1]
            if np.all(quo < 0.8) and quo[1] <= 1.05 * quo[0]:
                drift = d[-1] * quo[-1] / (1.0 - quo[-1])
                if drift <= rel_tol * max(scale, abs_floor):
                    return float(last[-1]), True
        d = np.diff(tail)
        if np.all(d != 0):
            r = d[1:] / d[:-1]
            if abs(r[1]) < 0.8 and abs(r[1] - r[0]) <= 0.1 * abs(r[0]):
                lim = tail[-1] - d[-1] ** 2 / (d[-1] - d[-2])
                if abs(lim) <= zero_tol:
                    lim = 0.0
                return float(lim), True
    return float("nan"), False


@dataclass(frozen=True)
class RegimeReport:
    regime: str  # "H1" | "H2" | "H3"
    lam: float
    diagnostics: tuple
    converged: bool


def _lower(spec):
    return max(0.0, spec.floor)


def _weighted_integral(spec, a, b):
    val, _ = quad(lambda t: float(spec.weighted(t)), a, b, epsabs=0.0, epsrel=1e-11, limit=200)
    return val


def classify_regime(spec: NonlinearitySpec, detect: LimitDetectionConfig = LimitDetectionConfig()) -> RegimeReport:
    """Classify h into the mutually exclusive growth classes (h1)/(h2)/(h3)."""
    lo = _lower(spec)
    ladder = [s for s in detect.ladder(spec.table_range[1]) if s > lo]
    if len(ladder) < 4:
        raise Inconclusive("sample ladder too short for limit detection", ())
    cum = []
    acc, prev = 0.0, lo
    for s in ladder:
        acc += _weighted_integral(spec, prev, s)
        prev = s
        cum.append(acc)
    ratios = [float(spec.weighted(s)) / c for s, c in zip(ladder, cum)]
    diag = tuple(zip(ladder, ratios))
    lam, ok = detect_limit(ratios, detect.rel_tol, detect.zero_tol)
    if not ok:
        raise Inconclusive("ratio h(s)e^{-2s}/int_0^s h e^{-2t} did not stabilize", diag)
    if lam > detect.zero_tol:
        return RegimeReport("H3", lam, diag, True)

    # ratio -> 0: (h1) if the tail integral converges, (h2) if it diverges
    top = ladder[-1]
    panels = [_weighted_integral(spec, s, 2 * s) for s in ladder[-3:]] if spec.table_range[1] >= 2 * top else []
    if panels:
        quo = [panels[i + 1] / panels[i] if panels[i] > 0 else 0.0 for i in range(len(panels) - 1)]
        converges = panels[-1] <= detect.rel_tol * cum[-1] or all(0 <= x < 1 - detect.rel_tol for x in quo)
        diverges = all(x >= 1 for x in quo)
    else:
        converges = diverges = False
    if converges and not diverges:
        decay, ok = detect_limit([float(spec.weighted(s)) for s in ladder], detect.rel_tol, detect.zero_tol)
        if ok and decay == 0.0:
            return RegimeReport("H1", 0.0, diag, True)
        raise Inconclusive("tail integral converges but h(s)e^{-2s} does not vanish", diag)
    if diverges:
        for c in detect.shifts:
            seq = [float(spec.log(s + c) - spec.log(s)) for s in ladder if s + c > lo]
            if len(seq) < 3:
                continue
            # unbounded if log h(s+c)/h(s) keeps rising without decelerating
            d1, d2 = seq[-2] - seq[-3], seq[-1] - seq[-2]
            if d2 > detect.rel_tol and d2 >= 0.5 * d1:
                raise Inconclusive(f"h(s+{c:g})/h(s) grows along the ladder; not (h2)", diag)
        return RegimeReport("H2", 0.0, diag, True)
    raise Inconclusive("tail integral test undecided", diag)


def scaling_exponent(spec: NonlinearitySpec, detect: LimitDetectionConfig = LimitDetectionConfig()) -> float:
    """alpha with h(st)/h(s) -> t^alpha, estimated at large s for several t."""
    ts = detect.t_values
    hi = spec.table_range[1]
    s = detect.power_s if math.isinf(hi) else hi / max(ts)
    est = []
    for t in ts:
        num, den = spec(s * t), spec(s)
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = float(num) / float(den) if den > 0 else math.nan
        if math.isfinite(ratio) and ratio > 0:
            est.append(math.log(ratio) / math.log(t))
        else:
            est.append(float((spec.log(s * t) - spec.log(s)) / math.log(t)))
    est = np.array(est)
    if not np.all(np.isfinite(est)) or np.ptp(est) > detect.rel_tol * max(1.0, np.max(np.abs(est))):
        raise NotPowerType(f"scaling estimates disagree across t: {est.tolist()}")
    return float(np.mean(est))


def _omega_log(spec, t, detect):
    if t == 0:
        return 0.0
    hi = spec.table_range[1]
    ss = [s for s in detect.translation_s if s + abs(t) <= hi]
    vals = [float(spec.log(s + t) - spec.log(s)) for s in ss]
    # an absolute tolerance on log ω is a relative one on ω
    lim, ok = detect_limit(vals, detect.rel_tol * 1e-2, 0.0, abs_floor=1.0)
    if not ok:
        raise NotExponentialType(f"h(s+{t})/h(s) has no detectable limit: {vals}")
    return lim


def translation_scaling(spec: NonlinearitySpec, t: float, detect: LimitDetectionConfig = LimitDetectionConfig()) -> float:
    """omega(t) = lim h(s+t)/h(s), validated as an exponential e^{(lam+2) t}."""
    pairs = ((0.5, 1.0), (1.0, 1.0), (1.0, 2.0), (-1.0, 2.0))
    rates = []
    for t1, t2 in pairs:
        l1, l2, l12 = (_omega_log(spec, x, detect) for x in (t1, t2, t1 + t2))
        if abs(math.exp(l1 + l2) - math.exp(l12)) > detect.rel_tol * math.exp(l12):
            raise NotExponentialType(f"omega({t1})omega({t2}) != omega({t1 + t2})")
        rates += [l1 / t1, l2 / t2]
    rates = np.array(rates)
    if np.min(rates) <= 0 or np.ptp(rates) > detect.rel_tol * np.max(rates):
        raise NotExponentialType(f"log omega(t)/t not a positive constant: {rates.tolist()}")
    return math.exp(_omega_log(spec, t, detect))


# -- uniqueness condition probe --------------------------------------------------
@dataclass(frozen=True)
class ProbeGrid:
    a_values: tuple = tuple(np.linspace(0.0, 50.0, 101))
    eps0: float = 0.1
    n_eps: int = 12
    n_b: int = 21
    c0_max: float = math.inf
    shape_tol: float = 1e-9


@dataclass
class ProbeResult:
    c0: float
    violations: list = field(default_factory=list)
    m_values: tuple = ()

    @property
    def passed(self):
        return not self.violations and math.isfinite(self.c0)


def _second_diff(f, s):
    v = f(s)
    return v[2:] - 2 * v[1:-1] + v[:-2], np.max(np.abs(v)) + 1.0


def uniqueness_condition_probe(convex_part: NonlinearitySpec, concave_part: NonlinearitySpec,
                               sample: ProbeGrid = ProbeGrid()) -> ProbeResult:
    """Smallest c0 for which h((1+e)a+eb) - (1+e)h(a) >= e b m(a) - c0 e (1+a)
    holds on the grid, with h = convex + concave and m(a) = h2(2a+1) - h2(2a)."""
    a = np.asarray(sample.a_values, dtype=float)
    if sample.eps0 <= 0 or sample.n_eps < 1 or sample.n_b < 1 or a.size == 0:
        raise EmptyGrid("probe grid is empty")
    eps = sample.eps0 * np.arange(1, sample.n_eps + 1) / (sample.n_eps + 1)
    b = np.linspace(0.0, 1.0 / sample.eps0, sample.n_b)

    s_hi = 2 * a.max() + 1 + (a.max() + 1.0 / sample.eps0)
    s = np.linspace(a.min(), s_hi, 2001)
    d2, scale = _second_diff(convex_part, s)
    if np.any(d2 < -sample.shape_tol * scale):
        raise InvalidSplit("first part is not convex on the probe range")
    d2, scale = _second_diff(concave_part, s)
    if np.any(d2 > sample.shape_tol * scale):
        raise InvalidSplit("second part is not concave on the probe range")
    if np.any(np.diff(concave_part(s)) <= 0) and concave_part.coef != 0:
        raise InvalidSplit("concave part must be increasing")

    def h(x):
        return convex_part(x) + concave_part(x)

    m = concave_part(2 * a + 1) - concave_part(2 * a)
    A, E, B = np.meshgrid(a, eps, b, indexing="ij")
    M = m[:, None, None]
    lhs = h((1 + E) * A + E * B) - (1 + E) * h(A) - E * B * M
    need = -lhs / (E * (1 + A))
    need = np.where(np.abs(need) < 1e-10 * (1 + np.abs(h(A)) / (1 + A)), 0.0, need)
    c0 = max(0.0, float(np.max(need)))
    bad = np.argwhere(need > sample.c0_max)
    violations = [(float(A[i, j, k]), float(E[i, j, k]), float(B[i, j, k])) for i, j, k in bad]
    return ProbeResult(c0=c0 if not violations else math.inf, violations=violations, m_values=tuple(m))
