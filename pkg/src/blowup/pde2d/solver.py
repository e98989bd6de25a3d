"""Finite-difference Newton solver for -Δu + h(u) + β|∇u|^q = f on graded tensor grids.

Disk and annulus use polar grids (a single center node for the disk); the
half-strip uses a Cartesian grid.  The coordinate normal to the blow-up
boundary is called s (r or ξ₁) and the tangential one t (θ or ξ').  Every
node is an unknown; Dirichlet and center-copy nodes carry trivial rows.

Nodes also store their exact distance d to the nearest blow-up boundary:
near r = R the value R - d rounds away distances below ~1e-16 R, while
boundary layers can be far thinner, so stencil spacings come from d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline, interp1d

from ..errors import ContinuationStall, MeshTooCoarse, NewtonDivergence, UnsupportedBalance
from ..grids import weights_from_spacing
from ..newton import NewtonConfig, newton_solve
from ..nonlinearity import Exp, NonlinearitySpec
from ..ode_blowup import EPS_REG, MSchedule, OdeSpec, blowup_asymptote
from .domain import Annulus, Disk, Domain2D, HalfStrip, LateralBC, SourceSpec


EPS = np.finfo(float).eps
NOISE_WEIGHT = 1e10  # a residual at rounding level counts as 1e-10 relative


@dataclass(frozen=True)
class GridConfig:
    """Tensor grid: node density across the layer direction, Ntheta along the boundary.

    ``grading='geometric'`` places nodes geometrically in the distance d to
    the blow-up boundary at max(per_decade, Nr/8) nodes per decade.  Beyond
    ``core_rel * length`` the nodes do not depend on M, so levels of an
    M-continuation share their interior discretization; inside it they are
    graded toward d = -offset, with offset=None meaning the layer width d_M of
    the one-dimensional asymptote.  ``grading='power'`` is the polynomial
    family d_j = length (j/Nr)^gamma_g.
    """

    Nr: int = 512
    Ntheta: int = 64
    grading: str = "geometric"
    gamma_g: float = 3.0
    offset: Optional[float] = None
    per_decade: int = 40
    core_rel: float = 1e-3
    max_nr: int = 6000

    def __post_init__(self):
        if self.Nr < 8 or self.Ntheta < 4:
            raise ValueError("grid needs Nr >= 8 and Ntheta >= 4")
        if self.grading not in ("geometric", "power"):
            raise ValueError(f"unknown grading {self.grading!r}")
        if not 0 < self.core_rel < 1:
            raise ValueError("core_rel must lie in (0, 1)")

    @property
    def density(self) -> float:
        """Nodes per decade of the geometric grading."""
        return max(float(self.per_decade), self.Nr / 8.0)

    def refined(self, factor: int = 2) -> "GridConfig":
        return replace(self, Nr=self.Nr * factor, Ntheta=self.Ntheta * factor, per_decade=self.per_decade * factor)


def layer_distances(length: float, cfg: GridConfig, offset: float) -> np.ndarray:
    """Distances 0 = d_0 < ... < d_n = length, fine near d = 0."""
    if cfg.grading == "power":
        j = np.linspace(0.0, 1.0, cfg.Nr)
        return length * j**cfg.gamma_g
    pd = cfg.density
    ratio = 10.0 ** (1.0 / pd)
    d_core = cfg.core_rel * length
    n_out = int(math.ceil(pd * math.log10(length / d_core))) + 1
    outer = np.geomspace(d_core, length, n_out)
    offset = max(offset, 1e-300)
    n_in = int(math.ceil(pd * math.log10((d_core + offset) / offset))) + 1
    n_in = max(n_in, int(math.ceil(1.0 / (ratio - 1.0))) + 1)
    if n_in + n_out > cfg.max_nr:
        raise MeshTooCoarse(f"layer grading needs {n_in + n_out} nodes (cap {cfg.max_nr})")
    inner = np.geomspace(offset, d_core + offset, n_in) - offset
    inner[0] = 0.0
    d = np.concatenate([inner[:-1], outer])
    d[-1] = length
    return d


@dataclass(frozen=True)
class Nodes:
    """s-nodes with exact distances; ``side`` is -1 where the nearest boundary
    lies at smaller s, +1 where it lies at larger s."""

    s: np.ndarray
    d: np.ndarray
    side: np.ndarray

    def spacing(self) -> np.ndarray:
        same = self.side[1:] == self.side[:-1]
        dd = (self.d[1:] - self.d[:-1]) * np.where(self.side[:-1] < 0, 1.0, -1.0)
        return np.where(same, dd, self.s[1:] - self.s[:-1])

    def __len__(self) -> int:
        return len(self.s)


def _component_side(domain, component: str) -> int:
    if isinstance(domain, Annulus):
        return -1 if component == "inner" else 1
    return 1 if isinstance(domain, Disk) else -1


# -- problem description -------------------------------------------------------------------
def _growth_key(spec: NonlinearitySpec) -> tuple:
    if spec.kind == "exp":
        return (2, spec.a)
    if spec.kind == "exppoly":
        return (2, 2.0 + spec.lam)
    return (1, spec.beta) if spec.kind == "pow" else (0, 0.0)


def _layer_surrogate(spec: NonlinearitySpec) -> NonlinearitySpec:
    if spec.kind == "sum" and spec.parts:
        return _layer_surrogate(max(spec.parts, key=_growth_key))
    if spec.kind == "exppoly" and spec.beta != 0:
        return Exp(2.0 + spec.lam, spec.coef)
    return spec


@dataclass(frozen=True)
class Equation:
    spec: NonlinearitySpec
    q: float
    beta: float = 1.0
    f: SourceSpec = SourceSpec()

    def ode(self) -> OdeSpec:
        return OdeSpec(alpha=1.0, beta=self.beta, q=self.q, h=self.spec)

    def asymptote(self):
        """Leading-order 1D layer, used for grading and first iterates only.

        e^{(2+λ)s} s^β is graded like the pure exponential of the same rate,
        and a sum like its fastest-growing part.
        """
        ode = replace(self.ode(), h=_layer_surrogate(self.spec))
        try:
            return blowup_asymptote(ode)
        except UnsupportedBalance:
            return None

    def gradient(self, g2):
        """(G, dG/d(g2)) for G = β |∇u|^q written through g2 = |∇u|²."""
        q, b = self.q, self.beta
        if b == 0 or q == 0:
            val = np.full_like(g2, b if q == 0 else 0.0)
            return val, np.zeros_like(g2)
        if q == 2.0:
            return b * g2, np.full_like(g2, b)
        if q >= 1.0:
            pos = g2 > 0
            safe = np.where(pos, g2, 1.0)
            return b * np.where(pos, safe ** (0.5 * q), 0.0), b * np.where(pos, 0.5 * q * safe ** (0.5 * q - 1.0), 0.0)
        r2 = g2 + EPS_REG**2
        return b * (r2 ** (0.5 * q) - EPS_REG**q), b * 0.5 * q * r2 ** (0.5 * q - 1.0)


@dataclass
class Field2D:
    domain: Domain2D
    nodes: Nodes
    t: np.ndarray          # θ or ξ'
    values: np.ndarray     # shape (len(s), len(t))
    M: float
    meta: dict = field(default_factory=dict)

    @property
    def s(self) -> np.ndarray:
        """r (polar) or ξ₁ (half-strip), ascending."""
        return self.nodes.s

    @property
    def polar(self) -> bool:
        return not isinstance(self.domain, HalfStrip)

    def distance(self) -> np.ndarray:
        """Distance of each s-row to the nearest blow-up boundary."""
        return self.nodes.d.copy()

    def side_rows(self, component: str) -> np.ndarray:
        """Row indices nearest to ``component``, ordered by increasing distance."""
        rows = np.flatnonzero(self.nodes.side == _component_side(self.domain, component))
        return rows[np.argsort(self.nodes.d[rows], kind="stable")]

    def first_cell(self, component: str = "outer") -> float:
        d = self.nodes.d[self.side_rows(component)]
        return float(d[1] - d[0])

    def at_distance(self, distances, component: str, column: Optional[int] = None) -> np.ndarray:
        """Cubic interpolation in the distance to ``component`` (all t columns, or one)."""
        rows = self.side_rows(component)
        vals = self.values[rows] if column is None else self.values[rows, column]
        return CubicSpline(self.nodes.d[rows], vals, axis=0)(np.asarray(distances, dtype=float))

    def cartesian(self):
        """(x, y, u) arrays on the full grid."""
        S, T = np.meshgrid(self.s, self.t, indexing="ij")
        if self.polar:
            return S * np.cos(T), S * np.sin(T), self.values
        return S, T, self.values


# -- assembly --------------------------------------------------------------------------------
class _Grid:
    """Node layout and boundary treatment for one solve."""

    def __init__(self, domain: Domain2D, nodes: Nodes, K: int):
        self.domain = domain
        self.nodes = nodes
        self.s = nodes.s
        self.h = nodes.spacing()
        self.n = len(nodes)
        self.K = K
        self.polar = not isinstance(domain, HalfStrip)
        self.center = isinstance(domain, Disk)
        if isinstance(domain, HalfStrip) and domain.lateral_bc == LateralBC.NEUMANN:
            self.periodic = False
            self.t = np.linspace(0.0, domain.W, K)
            self.ht = domain.W / (K - 1)
        else:
            self.periodic = True
            period = domain.W if isinstance(domain, HalfStrip) else 2.0 * math.pi
            self.t = np.arange(K) * (period / K)
            self.ht = period / K

    def neighbors_t(self):
        k = np.arange(self.K)
        if self.periodic:
            return (k - 1) % self.K, (k + 1) % self.K
        km, kp = k - 1, k + 1
        km[0], kp[-1] = 1, self.K - 2  # mirror ghost nodes
        return km, kp


def _source(grid: _Grid, f: SourceSpec) -> np.ndarray:
    S, T = np.meshgrid(grid.s, grid.t, indexing="ij")
    dom = grid.domain
    if isinstance(dom, HalfStrip):
        return f.cartesian(S, T, dom.W)
    R = dom.R if isinstance(dom, Disk) else dom.R_out
    return f.polar(S, T, R)


def _assemble(grid: _Grid, eq: Equation, U: np.ndarray, fgrid: np.ndarray, lo, hi, jac: bool):
    """Residual, row scales and Jacobian.

    ``lo`` / ``hi`` give the treatment of the first / last s-row: an array of
    Dirichlet values, 'center' (disk origin) or 'neumann' (mirror ghost row).
    """
    n, K = grid.n, grid.K
    s = grid.s
    U = U.reshape(n, K)
    F = np.zeros((n, K))
    scale = np.ones((n, K))
    rows, cols, vals = [], [], []
    idx = np.arange(n * K).reshape(n, K)
    km, kp = grid.neighbors_t()
    ht = grid.ht

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    # interior rows 1..n-2, plus the last row when it is a Neumann row
    last = n - 1 if isinstance(hi, str) and hi == "neumann" else n - 2
    js = np.arange(1, last + 1)
    _, _, w1, w2 = weights_from_spacing(grid.h[:-1], grid.h[1:])
    w1m, w10, w1p = (np.append(w, 0.0)[:len(js)] for w in w1)
    w2m, w20, w2p = (np.append(w, 0.0)[:len(js)] for w in w2)
    if last == n - 1:  # mirror ghost: u[n] = u[n-2]
        h = grid.h[-1]
        w1m[-1], w10[-1], w1p[-1] = 0.0, 0.0, 0.0
        w2m[-1], w20[-1], w2p[-1] = 2.0 / h**2, -2.0 / h**2, 0.0
    w1m, w10, w1p, w2m, w20, w2p = (w[:, None] for w in (w1m, w10, w1p, w2m, w20, w2p))
    um = U[js - 1]
    u0 = U[js]
    up = U[np.minimum(js + 1, n - 1)]
    D1s = w1m * um + w10 * u0 + w1p * up
    D2s = w2m * um + w20 * u0 + w2p * up
    D1t = (u0[:, kp] - u0[:, km]) / (2.0 * ht)
    D2t = (u0[:, km] - 2.0 * u0 + u0[:, kp]) / ht**2
    if not grid.periodic:
        D1t[:, 0] = D1t[:, -1] = 0.0
    if grid.polar:
        r = s[js][:, None]
        a, m2 = 1.0 / r, 1.0 / r**2
    else:
        a, m2 = np.zeros((len(js), 1)), np.ones((len(js), 1))
    hval = eq.spec(u0)
    g2 = D1s**2 + m2 * D1t**2
    G, dG = eq.gradient(g2)
    fi = fgrid[js]
    F[js] = -(D2s + a * D1s + m2 * D2t) + hval + G - fi
    # rounding error of the stencils: residuals at this level cannot be resolved
    noise = EPS * ((np.abs(w2m) + np.abs(a * w1m)) * np.abs(um) + (np.abs(w20) + np.abs(a * w10)) * np.abs(u0)
                   + (np.abs(w2p) + np.abs(a * w1p)) * np.abs(up) + 4.0 * m2 * np.abs(u0) / ht**2)
    scale[js] = (np.abs(D2s) + np.abs(a * D1s) + np.abs(m2 * D2t) + np.abs(hval) + np.abs(G) + np.abs(fi)
                 + NOISE_WEIGHT * noise)
    if jac:
        I = idx[js]
        cs = 2.0 * dG * D1s   # ∂G/∂(D1s)
        ct = 2.0 * dG * m2 * D1t
        if not grid.periodic:
            ct = ct.copy()
            ct[:, 0] = ct[:, -1] = 0.0
        diag = -(w20 + a * w10) + 2.0 * m2 / ht**2 + eq.spec.deriv(u0) + cs * w10
        add(I, I, diag)
        add(I, idx[js - 1], -(w2m + a * w1m) + cs * w1m)
        upper = -(w2p + a * w1p) + cs * w1p
        keep = (js + 1 <= n - 1)
        add(I[keep], idx[js[keep] + 1], upper[keep])
        add(I, I[:, km], -m2 / ht**2 - ct / (2.0 * ht))
        add(I, I[:, kp], -m2 / ht**2 + ct / (2.0 * ht))

    # first row
    if isinstance(lo, str) and lo == "center":
        r1 = s[1]
        uc = U[0, 0]
        ring = U[1]
        cos, sin = np.cos(grid.t), np.sin(grid.t)
        lap = 4.0 / r1**2 * (ring.mean() - uc)
        gx = 2.0 / (K * r1) * np.dot(ring, cos)
        gy = 2.0 / (K * r1) * np.dot(ring, sin)
        Gc, dGc = eq.gradient(np.array([gx * gx + gy * gy]))
        hc = float(eq.spec(np.array([uc]))[0])
        F[0, 0] = -lap + hc + Gc[0] - fgrid[0, 0]
        scale[0, 0] = abs(lap) + abs(hc) + abs(Gc[0]) + abs(fgrid[0, 0])
        F[0, 1:] = U[0, 1:] - uc
        scale[0, 1:] = 1.0 + abs(uc)
        if jac:
            add(np.array([idx[0, 0]]), np.array([idx[0, 0]]), 4.0 / r1**2 + float(eq.spec.deriv(np.array([uc]))[0]))
            dring = -4.0 / (r1**2 * K) + 2.0 * dGc[0] * (gx * cos + gy * sin) * 2.0 / (K * r1)
            add(np.full(K, idx[0, 0]), idx[1], dring)
            add(idx[0, 1:], idx[0, 1:], np.ones(K - 1))
            add(idx[0, 1:], np.zeros(K - 1, dtype=int), -np.ones(K - 1))
    else:
        F[0] = U[0] - lo
        scale[0] = 1.0 + np.abs(lo)
        if jac:
            add(idx[0], idx[0], np.ones(K))
    # last row (Dirichlet unless handled above as Neumann)
    if not (isinstance(hi, str) and hi == "neumann"):
        F[-1] = U[-1] - hi
        scale[-1] = 1.0 + np.abs(hi)
        if jac:
            add(idx[-1], idx[-1], np.ones(K))
    scale = scale + 1e-12 * np.max(scale) + 1e-300
    if not jac:
        return F.ravel(), scale.ravel(), None
    J = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n * K, n * K))
    return F.ravel(), scale.ravel(), J


# -- node construction ----------------------------------------------------------------------
def _layer_offset(eq: Equation, M: float, cfg: GridConfig, length: float) -> float:
    if cfg.offset is not None:
        return cfg.offset
    asym = eq.asymptote()
    if asym is None:
        return 1e-3 * length
    d = asym.offset_for(M)
    return d if np.isfinite(d) and d > 0 else 1e-3 * length


def build_nodes(domain: Domain2D, eq: Equation, M: float, cfg: GridConfig) -> Nodes:
    """s-nodes graded toward every blow-up component."""
    if isinstance(domain, Disk):
        d = layer_distances(domain.R, cfg, _layer_offset(eq, M, cfg, domain.R))[::-1]
        return Nodes(domain.R - d, d, np.ones(len(d), dtype=int))
    if isinstance(domain, Annulus):
        half = 0.5 * (domain.R_out - domain.R_in)
        half_cfg = replace(cfg, Nr=max(cfg.Nr // 2, 8))
        d = layer_distances(half, half_cfg, _layer_offset(eq, M, cfg, half))
        dist = np.concatenate([d[:-1], d[::-1]])
        side = np.concatenate([-np.ones(len(d) - 1, dtype=int), np.ones(len(d), dtype=int)])
        s = np.concatenate([domain.R_in + d[:-1], (domain.R_out - d)[::-1]])
        return Nodes(s, dist, side)
    d = layer_distances(domain.L, cfg, _layer_offset(eq, M, cfg, domain.L))
    return Nodes(d, d.copy(), -np.ones(len(d), dtype=int))


def _check_layer(nodes: Nodes, eq: Equation, M: float):
    asym = eq.asymptote()
    if asym is None:
        return
    dM = asym.offset_for(M)
    dist = nodes.d
    count = int(np.count_nonzero((dist > 0) & (dist <= dM)))
    if np.any(nodes.side < 0) and np.any(nodes.side > 0):
        count //= 2
    if count < 3:
        raise MeshTooCoarse(f"boundary layer of width {dM:.3g} at M={M:g} spans {count} cells (< 3)")


def _boundary_rows(domain: Domain2D, grid: _Grid, M, far):
    K = grid.K
    Mrow = np.broadcast_to(np.asarray(M, dtype=float), (K,)).copy()
    if isinstance(domain, Disk):
        return "center", Mrow
    if isinstance(domain, Annulus):
        return Mrow, Mrow
    if far is None or (isinstance(far, str) and far == "neumann"):
        return Mrow, "neumann"
    return Mrow, np.broadcast_to(np.asarray(far, dtype=float), (K,)).copy()


def _initial_guess(grid: _Grid, domain: Domain2D, eq: Equation, M, far, start: str) -> np.ndarray:
    n, K = grid.n, grid.K
    Mmax = float(np.max(M))
    if start == "constant":
        U = np.full((n, K), Mmax)
    else:
        dist = grid.nodes.d
        asym = eq.asymptote()
        if asym is None:
            prof = Mmax * np.ones(n)
        else:
            prof = np.minimum(asym.value(dist + asym.offset_for(Mmax)), Mmax)
        U = np.repeat(prof[:, None], K, axis=1)
    if isinstance(domain, HalfStrip) and far is not None and not isinstance(far, str):
        # blend toward the far datum
        w = grid.s / domain.L
        U = U * (1.0 - w[:, None]) + w[:, None] * np.asarray(far, dtype=float)
    return U


def _newton(grid: _Grid, eq: Equation, U0: np.ndarray, fgrid, lo, hi, newton: NewtonConfig):
    system = lambda x, jac: _assemble(grid, eq, x, fgrid, lo, hi, jac)
    x, info = newton_solve(system, U0.ravel(), newton)
    return x.reshape(grid.n, grid.K), info


def solve_truncated(domain: Domain2D, spec: NonlinearitySpec, q: float, f: SourceSpec = SourceSpec(), M=10.0,
                    grid: GridConfig = GridConfig(), *, beta: float = 1.0, far=None, start: str = "profile",
                    initial: Optional[np.ndarray] = None, nodes: Optional[Nodes] = None,
                    newton: NewtonConfig = NewtonConfig()) -> Field2D:
    """Solve with Dirichlet datum M on the blow-up boundary (M may vary along it).

    ``far`` sets the half-strip condition at ξ₁ = L: a value, or None for a
    homogeneous Neumann row.  ``nodes`` overrides the s-grid (shared-grid
    comparisons); ``initial`` overrides the first iterate.
    """
    eq = Equation(spec, q, beta, f)
    Mmax = float(np.max(M))
    s = build_nodes(domain, eq, Mmax, grid) if nodes is None else nodes
    _check_layer(s, eq, Mmax)
    g = _Grid(domain, s, grid.Ntheta)
    lo, hi = _boundary_rows(domain, g, M, far)
    fgrid = _source(g, f)
    U0 = _initial_guess(g, domain, eq, M, far, start) if initial is None else initial
    U, info = _newton(g, eq, U0, fgrid, lo, hi, newton)
    meta = {"q": q, "h": spec.describe(), "h_spec": spec, "f": f, "beta": beta, "newton_iterations": info.iterations,
            "residual": info.residual, "far": far}
    return Field2D(domain, s, g.t, U, Mmax, meta)


# -- M → ∞ ------------------------------------------------------------------------------------
def probe_points(domain: Domain2D, n: int = 5) -> list:
    """(component, distances) of the Cauchy probe set: distance ≥ 0.1 diam from the blow-up boundary."""
    dp = 0.1 * domain.diam
    if isinstance(domain, Disk):
        return [("outer", np.linspace(dp, domain.R, n))]
    if isinstance(domain, Annulus):
        half = 0.5 * (domain.R_out - domain.R_in)
        dist = np.array([half]) if dp >= half else np.linspace(dp, half, n)
        return [("inner", dist), ("outer", dist)]
    return [("bottom", np.linspace(dp, 0.9 * domain.L, n))]


def probe_values(field: Field2D) -> np.ndarray:
    return np.concatenate([field.at_distance(d, c).ravel() for c, d in probe_points(field.domain)])


def _transfer(field: Field2D, new: Nodes, eq: Equation, M_new: float) -> np.ndarray:
    """Predictor on new nodes: shift the asymptotic part from d_M to d_M', interpolate the rest."""
    asym = eq.asymptote()
    old = field.nodes
    W = field.values.copy()
    if asym is not None:
        W -= asym.value(old.d + asym.offset_for(field.M))[:, None]
    out = np.empty((len(new), W.shape[1]))
    for side in np.unique(new.side):
        ro = np.flatnonzero(old.side == side)
        ro = ro[np.argsort(old.d[ro])]
        rn = np.flatnonzero(new.side == side)
        fill = (W[ro[0]], W[ro[-1]])
        out[rn] = interp1d(old.d[ro], W[ro], axis=0, bounds_error=False, fill_value=fill)(new.d[rn])
    if asym is not None:
        out += asym.value(new.d + asym.offset_for(M_new))[:, None]
    return out


def large_solution_limit(domain: Domain2D, spec: NonlinearitySpec, q: float, f: SourceSpec = SourceSpec(),
                         continuation: MSchedule = MSchedule(), grid: GridConfig = GridConfig(), *,
                         beta: float = 1.0, start: str = "profile", far=None,
                         newton: NewtonConfig = NewtonConfig(), keep_levels: bool = False) -> Field2D:
    """Follow M → ∞ with warm starts until the probe values are Cauchy.

    The returned field carries ``meta['certificate']``: the last max probe
    change, below ``continuation.tol`` (relative to max(1, |u|)).
    """
    eq = Equation(spec, q, beta, f)
    asym = eq.asymptote()
    M = continuation.M0
    if M is None:
        M = max(float(asym.value(0.2 * domain.scale)), 1.0) if asym is not None else 1.0

    def solve_level(M_new, prev: Optional[Field2D]):
        s_new = build_nodes(domain, eq, M_new, grid)
        init = None if prev is None else _transfer(prev, s_new, eq, M_new)
        return solve_truncated(domain, spec, q, f, M_new, grid, beta=beta, far=far, start=start,
                               initial=init, nodes=s_new, newton=newton)

    def advance(prev: Field2D, M_new: float, depth: int = 0) -> Field2D:
        try:
            return solve_level(M_new, prev)
        except NewtonDivergence:
            if depth >= continuation.max_substeps:
                raise
            mid = 0.5 * (prev.M + M_new)
            return advance(advance(prev, mid, depth + 1), M_new, depth + 1)

    try:
        cur = solve_level(M, None)
    except NewtonDivergence as exc:
        raise ContinuationStall(f"Newton failed at M0={M:g}: {exc}", []) from None
    history = [(M, 0.0)]
    levels = [cur] if keep_levels else []
    probe = probe_values(cur)
    for _ in range(continuation.max_doublings):
        M_new = continuation.next_M(cur.M, asym)
        try:
            nxt = advance(cur, M_new)
        except NewtonDivergence as exc:
            raise ContinuationStall(f"Newton failed between M={cur.M:g} and M={M_new:g}: {exc}", history) from None
        probe_new = probe_values(nxt)
        change = float(np.max(np.abs(probe_new - probe) / np.maximum(1.0, np.abs(probe_new))))
        history.append((M_new, change))
        cur, probe = nxt, probe_new
        if keep_levels:
            levels.append(cur)
        if change < continuation.tol:
            cur.meta.update(certificate=change, history=history, M_final=cur.M, start=start)
            if keep_levels:
                cur.meta["levels"] = levels
            return cur
    raise ContinuationStall(f"probe values not Cauchy after {continuation.max_doublings} levels", history)
