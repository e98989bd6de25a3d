"""Structural checks on 2D fields: half-strip one-dimensionality and radial comparison bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..grids import GradedGrid
from ..nonlinearity import NonlinearitySpec, Pow, Zero
from ..ode_blowup import (Blowup, LimitAtInfinity, MSchedule, OdeSpec, Profile1D, Value, explicit_profile,
                          solve_1d_bvp, solve_annulus, solve_radial_large)
from .domain import Disk, HalfStrip, SourceSpec
from .solver import Field2D, GridConfig, build_nodes, Equation, large_solution_limit, solve_truncated

PERTURBATION = 0.2
MID_BAND = (0.3, 0.7)


@dataclass
class SymmetryReport:
    alpha: float
    p: float
    q: float
    M: float
    W: float
    L: float
    oracle: str
    deviation: float                       # sup over the mid-band of |z - z_1D| / max(|z_1D|, floor)
    refinement: list = field(default_factory=list)   # (label, deviation) for the refinement ladder
    field: Optional[Field2D] = None

    @property
    def decreasing(self) -> bool:
        devs = [d for _, d in self.refinement]
        return all(b < a for a, b in zip(devs, devs[1:]))


def _halfstrip_h(alpha: float, p: float) -> NonlinearitySpec:
    return Pow(p, coef=alpha) if alpha > 0 else Zero()


def _oracle(alpha: float, p: float, q: float, M: float, L: float, far_l: Optional[float]):
    """1D profile z(ξ₁) on [0, ∞) as a callable, plus its name."""
    if alpha == 0 and q == 2.0:
        return (lambda x: np.full_like(np.asarray(x, dtype=float), M)), "constant"
    if alpha == 0:
        prof = explicit_profile("GradientOnly", q=q, M=M, l=far_l if far_l is not None else 0.0)
        return prof.value, "GradientOnly"
    ode = OdeSpec(alpha=alpha, p=p, beta=1.0, q=q)
    left = Blowup() if math.isinf(M) else Value(M)
    sol = solve_1d_bvp(ode, (left, LimitAtInfinity(0.0)), GradedGrid(40.0 * L, n=8001), eps_check=False)
    return sol.at_distance, "1D solve"


def _mid_band_deviation(fld: Field2D, z1d, L: float) -> float:
    d = fld.nodes.d
    band = (d >= MID_BAND[0] * L) & (d <= MID_BAND[1] * L)
    ref = np.asarray(z1d(d[band]))[:, None]
    floor = 1e-12 + 1e-6 * np.max(np.abs(ref))
    return float(np.max(np.abs(fld.values[band] - ref) / np.maximum(np.abs(ref), floor)))


def _solve_strip(alpha, p, q, M, W, L, grid, perturbation, z1d, far, newton_kw):
    dom = HalfStrip(W, L)
    h = _halfstrip_h(alpha, p)
    eq = Equation(h, q)
    if math.isinf(M):
        return large_solution_limit(dom, h, q, grid=grid, far=far, **newton_kw)
    nodes = build_nodes(dom, eq, M * (1.0 + perturbation), grid)
    t = np.arange(grid.Ntheta) * (W / grid.Ntheta)
    mode = np.sin(2.0 * math.pi * t / W)
    datum = M * (1.0 + perturbation * mode)
    # first iterate: the 1D profile plus the lateral mode, decayed over depth 0.1 L
    base = np.asarray(z1d(nodes.d), dtype=float)[:, None]
    init = base + perturbation * M * np.exp(-nodes.d / (0.1 * L))[:, None] * mode[None, :]
    return solve_truncated(dom, h, q, M=datum, grid=grid, far=far, initial=init, nodes=nodes, **newton_kw)


def halfstrip_symmetry_test(alpha: float, p: float, q: float, M: float, W: float = 4.0, L: float = 10.0, *,
                            grid: GridConfig = GridConfig(Nr=256, Ntheta=32), perturbation: Optional[float] = None,
                            far_l: Optional[float] = None, refine: bool = True, **newton_kw) -> SymmetryReport:
    """Solve on {0<ξ₁<L} × (ξ' periodic in W) and compare the mid-band with the 1D profile.

    For α > 0 the datum at ξ₁ = 0 carries a lateral mode of relative size
    ``perturbation`` (default 0.2); with α = 0 the datum is exactly M.  The
    far side ξ₁ = L takes the 1D profile's value there (``far_l`` is the
    limit l of the gradient-only profile).  ``refine`` adds a run with L and
    the grid density doubled.
    """
    if perturbation is None:
        perturbation = PERTURBATION if alpha > 0 else 0.0
    z1d, name = _oracle(alpha, p, q, M, L, far_l)

    def run(L_, grid_):
        far = float(np.asarray(z1d(np.array([L_])))[0]) if not (alpha == 0 and q == 2.0) else None
        fld = _solve_strip(alpha, p, q, M, W, L_, grid_, perturbation, z1d, far, newton_kw)
        return fld, _mid_band_deviation(fld, z1d, L_)

    fld, dev = run(L, grid)
    ladder = [(f"L={L:g},Nr={grid.Nr}", dev)]
    if refine:
        _, dev2 = run(2.0 * L, grid.refined(2))
        ladder.append((f"L={2 * L:g},Nr={2 * grid.Nr}", dev2))
    return SymmetryReport(alpha, p, q, M, W, L, name, dev, ladder, fld)


# -- comparison sandwich -------------------------------------------------------------------------
@dataclass
class SandwichReport:
    depths: np.ndarray
    lower: np.ndarray
    field_min: np.ndarray   # min over boundary angles of u(x - δν)
    field_max: np.ndarray
    upper: np.ndarray

    @property
    def holds(self) -> bool:
        return bool(np.all(self.lower <= self.field_min) and np.all(self.field_max <= self.upper))

    @property
    def margin(self) -> float:
        """Smallest gap to either bound (negative when violated)."""
        return float(min(np.min(self.field_min - self.lower), np.min(self.upper - self.field_max)))


def radial_bounds(spec: NonlinearitySpec, q: float, R: float, sup_f: float, depths, *, beta: float = 1.0,
                  S: float = 2.0, outer_value: Optional[float] = None, schedule: MSchedule = MSchedule()):
    """(lower, upper) radial bounds at distance δ from a boundary point of a disk of radius R.

    Upper: the large solution of the disk itself with right-hand side +sup|f|.
    Lower: the annulus solution outside the exterior tangent disk of radius R,
    blowing up on its inner circle, with right-hand side -sup|f| and a low
    outer datum; the disk lies inside that annulus when S ≥ 2R.
    """
    depths = np.asarray(depths, dtype=float)
    upper = solve_radial_large(spec, q, R, 2, beta=beta, f=sup_f, schedule=schedule)
    if outer_value is None:
        outer_value = -3.0 * math.log(S) - 1.0
    lower = solve_annulus(spec, q, R, S, Blowup(), outer_value, 2, beta=beta, f=-sup_f, schedule=schedule)
    return np.asarray(lower.at_distance(depths)), np.asarray(upper.at_distance(depths))


def sandwich_check(fld: Field2D, depths=None, *, S: Optional[float] = None) -> SandwichReport:
    """Check lower(δ) ≤ u(x - δν) ≤ upper(δ) for every boundary angle of a disk field."""
    dom = fld.domain
    if not isinstance(dom, Disk):
        raise ValueError("the radial sandwich is set up for the disk")
    if depths is None:
        depths = np.geomspace(1e-3, 0.5, 12) * dom.R
    depths = np.asarray(depths, dtype=float)
    f: SourceSpec = fld.meta["f"]
    lo, hi = radial_bounds(fld.meta["h_spec"], fld.meta["q"], dom.R, f.sup, depths, beta=fld.meta["beta"],
                           S=S if S is not None else 2.0 * dom.R)
    u = fld.at_distance(depths, "outer")
    return SandwichReport(depths, lo, u.min(axis=1), u.max(axis=1), hi)
