"""Boundary-gradient traces of a 2D field along inward normal rays, and blow-up rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..errors import DepthOutOfRange, PoorFit
from ..grids import fd_weights
from ..ko_transform import KOProfile
from .domain import HalfStrip
from .solver import Field2D, Equation

MIN_R2 = 0.99


@dataclass
class TraceSamples:
    """∂u/∂ν and ∂u/∂τ at x - δν(x); arrays are indexed [depth, angle]."""

    component: str
    angles: np.ndarray
    depths: np.ndarray
    du_dn: np.ndarray
    du_dtau: np.ndarray
    u: np.ndarray
    M: float
    first_cell: float
    layer_width: float
    scale: float
    case_id: str = ""

    def rows(self):
        """(θ, d, du_dn, du_dtau) tuples, angle-major."""
        for k, th in enumerate(self.angles):
            for j, d in enumerate(self.depths):
                yield float(th), float(d), float(self.du_dn[j, k]), float(self.du_dtau[j, k])


def depth_range(field: Field2D, component: str) -> tuple:
    return 3.0 * field.first_cell(component), 0.3 * field.domain.diam


def fit_window(field: Field2D, component: str) -> tuple:
    """[max(5 first cell, 1e3 d_M), 0.2 scale]: clear of the truncation layer."""
    asym = Equation(field.meta["h_spec"], field.meta["q"], field.meta["beta"]).asymptote() \
        if "h_spec" in field.meta else None
    d_M = asym.offset_for(field.M) if asym is not None else 0.0
    lo = max(5.0 * field.first_cell(component), 1e3 * d_M)
    return lo, 0.2 * field.domain.scale


def _d_derivative(d: np.ndarray, U: np.ndarray) -> np.ndarray:
    """∂u/∂d on rows sorted by d: 5-point Fornberg stencils (one-sided at the ends)."""
    n = len(d)
    out = np.empty_like(U)
    for i in range(n):
        lo = min(max(i - 2, 0), n - 5)
        w = fd_weights(d[i], d[lo:lo + 5], 1)[1]
        out[i] = w @ U[lo:lo + 5]
    return out


def _t_derivative(U: np.ndarray, ht: float, periodic: bool) -> np.ndarray:
    """Fourth-order central difference along the columns."""
    if periodic:
        roll = lambda k: np.roll(U, -k, axis=1)
    else:
        ext = np.concatenate([U[:, 2:0:-1], U, U[:, -2:-4:-1]], axis=1)  # mirror ghosts
        roll = lambda k: ext[:, 2 + k:2 + k + U.shape[1]]
    return (-roll(2) + 8.0 * roll(1) - 8.0 * roll(-1) + roll(-2)) / (12.0 * ht)


def _lagrange_rows(x: np.ndarray, xq: float, order: int = 4):
    """Indices and weights of the ``order`` nodes around xq."""
    j = int(np.searchsorted(x, xq)) - order // 2
    j = min(max(j, 0), len(x) - order)
    idx = np.arange(j, j + order)
    return idx, fd_weights(xq, x[idx], 0)[0]


def _angle_weights(t: np.ndarray, period: Optional[float], tq: float):
    K = len(t)
    ht = t[1] - t[0]
    if period is None:
        return _lagrange_rows(t, tq)
    tq = tq % period
    k0 = int(math.floor((tq - t[0]) / ht))
    offs = np.arange(k0 - 1, k0 + 3)
    nodes = t[0] + offs * ht
    return offs % K, fd_weights(tq, nodes, 0)[0]


def boundary_gradient_trace(field: Field2D, angles=None, depths=None, component: Optional[str] = None,
                            case_id: str = "") -> TraceSamples:
    """Sample the normal and tangential derivatives on inward normal rays.

    Defaults: all grid columns (at most 16, evenly picked) and 12 depths
    spaced geometrically across the fit window.
    """
    dom = field.domain
    component = component or dom.components[-1]
    rows = field.side_rows(component)
    d = field.nodes.d[rows]
    U = field.values[rows]
    lo, hi = depth_range(field, component)
    if depths is None:
        w0, w1 = fit_window(field, component)
        depths = np.geomspace(max(w0, lo), min(w1, hi), 12)
    depths = np.atleast_1d(np.asarray(depths, dtype=float))
    bad = depths[(depths < lo * (1 - 1e-12)) | (depths > hi * (1 + 1e-12))]
    if bad.size:
        raise DepthOutOfRange(f"depths {bad.tolist()} outside [{lo:.3g}, {hi:.3g}]")
    K = len(field.t)
    if angles is None:
        angles = field.t[np.unique(np.linspace(0, K - 1, min(K, 16)).round().astype(int))]
    angles = np.atleast_1d(np.asarray(angles, dtype=float))

    polar = not isinstance(dom, HalfStrip)
    periodic = polar or dom.lateral_bc.value == "periodic"
    ht = field.t[1] - field.t[0]
    Ud = _d_derivative(d, U)
    Ut = _t_derivative(U, ht, periodic)
    period = (2.0 * math.pi if polar else dom.W) if periodic else None

    nd, na = len(depths), len(angles)
    dn, dt, uu = np.empty((nd, na)), np.empty((nd, na)), np.empty((nd, na))
    s_rows = field.nodes.s[rows]
    for j, delta in enumerate(depths):
        ri, rw = _lagrange_rows(d, delta)
        ud, ut, u0 = rw @ Ud[ri], rw @ Ut[ri], rw @ U[ri]
        r = rw @ s_rows[ri] if polar else 1.0
        for k, th in enumerate(angles):
            ci, cw = _angle_weights(field.t, period, th)
            # d grows inward on every component, so ∂/∂ν = -∂/∂d
            dn[j, k] = -(ud[ci] @ cw)
            dt[j, k] = (ut[ci] @ cw) / r
            uu[j, k] = u0[ci] @ cw
    asym = None
    if "h_spec" in field.meta:
        asym = Equation(field.meta["h_spec"], field.meta["q"], field.meta["beta"]).asymptote()
    d_M = asym.offset_for(field.M) if asym is not None else 0.0
    return TraceSamples(component, angles, depths, dn, dt, uu, field.M, field.first_cell(component), d_M,
                        dom.scale, case_id or field.meta.get("case_id", ""))


# -- fits --------------------------------------------------------------------------------------
@dataclass(frozen=True)
class PurePower:
    """|∂u/∂ν| ≈ b d^{-γ}; γ=None fits the exponent too."""

    gamma: Optional[float] = None
    corrections: int = 2   # c₁d + c₂d² absorb regular finite-d terms
    log_terms: int = 0     # e_k / log(1/d)^k, for balances with logarithmic corrections


@dataclass(frozen=True)
class KOProfileRatio:
    """|∂u/∂ν| / |F̃'(d)| → b (expected 1)."""

    profile: KOProfile
    corrections: int = 2
    log_terms: int = 0


FitModel = Union[PurePower, KOProfileRatio]


@dataclass
class AsymptoticsReport:
    case_id: str
    component: str
    model: str
    angles: np.ndarray
    window: tuple
    gamma_fit: float
    b_fit: float
    tangential_ratio: float
    r2: float
    gamma_pred: Optional[float] = None
    b_pred: Optional[float] = None
    per_angle: dict = field(default_factory=dict)

    @property
    def rel_err(self) -> float:
        errs = []
        if self.gamma_pred is not None and np.isfinite(self.gamma_fit):
            errs.append(abs(self.gamma_fit - self.gamma_pred) / abs(self.gamma_pred))
        if self.b_pred is not None:
            errs.append(abs(self.b_fit - self.b_pred) / abs(self.b_pred))
        return max(errs) if errs else float("nan")


def _lstsq(A: np.ndarray, y: np.ndarray):
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(res @ res) / tot if tot > 0 else (1.0 if float(res @ res) <= 1e-24 * len(y) else 0.0)
    return coef, r2


def _in_window(trace: TraceSamples) -> np.ndarray:
    keep = trace.u.max(axis=1) <= 0.9 * trace.M if np.isfinite(trace.M) else np.ones(len(trace.depths), bool)
    return keep & (trace.du_dn.min(axis=1) > 0)


def fit_blowup_constant(trace: TraceSamples, model: FitModel = PurePower(), *, gamma_pred: Optional[float] = None,
                        b_pred: Optional[float] = None, min_r2: float = MIN_R2) -> AsymptoticsReport:
    """Least-squares blow-up rate per angle; reports the angle means and the worst R².

    Raises PoorFit (carrying the report) when R² < ``min_r2``.
    """
    keep = _in_window(trace)
    d = trace.depths[keep]
    if len(d) < 4:
        raise PoorFit(f"only {len(d)} depth samples in the fit window", None)
    g = np.abs(trace.du_dn[keep])
    nc = model.corrections
    poly = [d**i for i in range(1, nc + 1)] + [np.log(1.0 / d) ** -i for i in range(1, model.log_terms + 1)]
    gammas, bs, r2s = [], [], []
    ld = np.log(d)
    if isinstance(model, PurePower):
        for k in range(g.shape[1]):
            y = np.log(g[:, k])
            if model.gamma is None:
                coef, r2 = _lstsq(np.column_stack([np.ones_like(d), -ld, *poly]), y)
                gammas.append(coef[1])
            else:
                A = np.column_stack([np.ones_like(d), *poly])
                coef, _ = _lstsq(A, y + model.gamma * ld)
                resid = y - (coef[0] - model.gamma * ld + A[:, 1:] @ coef[1:])
                tot = float(np.sum((y - y.mean()) ** 2))
                r2 = 1.0 - float(resid @ resid) / tot if tot > 0 else 1.0
                gammas.append(model.gamma)
            bs.append(math.exp(coef[0]))
            r2s.append(r2)
        name = "PurePower" if model.gamma is None else f"PurePower(gamma={model.gamma:g})"
    else:
        fp = np.abs(model.profile.derivative(d))
        A = np.column_stack([np.ones_like(d), *poly])
        for k in range(g.shape[1]):
            ratio = g[:, k] / fp
            coef, _ = _lstsq(A, ratio)
            bs.append(coef[0])
            # exponent from the same samples, for reporting
            pc, r2 = _lstsq(np.column_stack([np.ones_like(d), -ld, *poly]), np.log(g[:, k]))
            gammas.append(pc[1])
            r2s.append(r2)
        name = "KOProfileRatio"
    finest = int(np.argmin(d))
    tang = float(np.max(np.abs(trace.du_dtau[keep][finest]) / g[finest]))
    report = AsymptoticsReport(
        case_id=trace.case_id, component=trace.component, model=name, angles=trace.angles,
        window=(float(d.min()), float(d.max())), gamma_fit=float(np.mean(gammas)), b_fit=float(np.mean(bs)),
        tangential_ratio=tang, r2=float(np.min(r2s)), gamma_pred=gamma_pred, b_pred=b_pred,
        per_angle={"gamma": np.array(gammas), "b": np.array(bs), "r2": np.array(r2s)})
    if report.r2 < min_r2:
        raise PoorFit(f"R² = {report.r2:.4f} < {min_r2}", report)
    return report
