"""Verification cases with their run recipes and CSV reporting."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import constants as C
from .errors import BlowupError, HypothesisViolation, PoorFit
from .ko_transform import build_profile
from .nonlinearity import (Exp, ExpPoly, NonlinearitySpec, Pow, Sum, Zero, classify_regime, translation_scaling,
                           uniqueness_condition_probe)
from .ode_blowup import MSchedule
from .pde2d import Annulus, Disk, Domain2D, GridConfig, SourceSpec, large_solution_limit
from .pde2d.checks import halfstrip_symmetry_test
from .pde2d.trace import KOProfileRatio, PurePower, boundary_gradient_trace, fit_blowup_constant

CASE_IDS = ("A1", "A2", "B3", "B4", "T22_h1", "T22_h2", "T22_h3", "T24", "T26i", "T26ii",
            "T41i", "T41iia", "T41iib", "UNIQ")
CSV_COLUMNS = ("case_id", "params", "gamma_pred", "gamma_fit", "b_pred", "b_fit", "rel_err", "tangential_ratio", "pass")


# -- configuration ----------------------------------------------------------------------------
@dataclass(frozen=True)
class RunBudget:
    grid: GridConfig = GridConfig()
    continuation: MSchedule = MSchedule()
    source: SourceSpec = SourceSpec(0.0, 1.0, 3)
    tol_coeff: float = 0.05
    tol_tangential: float = 0.05
    refinement: bool = False      # also fit on the 2N grid and gate b̂ drift at 1%
    refine_gate: float = 0.01
    jobs: int = 1
    strip_grid: GridConfig = GridConfig(Nr=256, Ntheta=32)
    retain: bool = True           # write per-case trace CSVs


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {n}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def _bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def budget_from_config(cfg: dict, base: RunBudget = RunBudget()) -> RunBudget:
    from .pde2d.domain import parse_source
    grid, cont, strip = base.grid, base.continuation, base.strip_grid
    kw = {}
    for key, val in cfg.items():
        if key in ("Nr", "Ntheta", "per_decade", "max_nr"):
            grid = replace(grid, **{key: int(val)})
        elif key == "grading":
            grid = replace(grid, grading=val)
        elif key in ("gamma_g", "core_rel"):
            grid = replace(grid, **{key: float(val)})
        elif key == "tol_M":
            cont = replace(cont, tol=float(val))
        elif key == "max_doublings":
            cont = replace(cont, max_doublings=int(val))
        elif key in ("strip_Nr", "strip_Ntheta"):
            strip = replace(strip, **{key[6:]: int(val)})
        elif key == "f":
            kw["source"] = parse_source(val)
        elif key in ("tol_coeff", "tol_tangential", "refine_gate"):
            kw[key] = float(val)
        elif key in ("refinement", "retain"):
            kw[key] = _bool(val)
        elif key == "jobs":
            kw["jobs"] = int(val)
        else:
            raise ValueError(f"unknown config key {key!r}")
    return replace(base, grid=grid, continuation=cont, strip_grid=strip, **kw)


# -- cases -------------------------------------------------------------------------------------
@dataclass
class VerificationCase:
    case_id: str
    kind: str                              # coefficient | symmetry | uniqueness
    params: str
    domain: Optional[Domain2D] = None
    h: Optional[NonlinearitySpec] = None
    q: float = 0.0
    model: object = None
    gamma_pred: Optional[float] = None
    b_pred: Optional[float] = None
    tol: float = 0.05
    extra: dict = field(default_factory=dict)


@dataclass
class VerdictRow:
    case_id: str
    params: str
    gamma_pred: Optional[float]
    gamma_fit: Optional[float]
    b_pred: Optional[float]
    b_fit: Optional[float]
    rel_err: float
    tangential_ratio: Optional[float]
    passed: bool
    notes: str = ""
    artifacts: dict = field(default_factory=dict)

    def csv_row(self) -> list:
        return [self.case_id, self.params, *(_fmt(v) for v in (self.gamma_pred, self.gamma_fit, self.b_pred,
                                                                  self.b_fit, self.rel_err, self.tangential_ratio)),
                "true" if self.passed else "false"]


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "nan" if math.isnan(v) else f"{v:.8g}"


def _exp_coefficient(h: NonlinearitySpec, q: float) -> float:
    """Normal coefficient of d ∂u/∂ν for exponential-type h."""
    if q == 2.0:
        reg = classify_regime(h)
        return 1.0 if reg.regime in ("H1", "H2") else 2.0 / (reg.lam + 2.0)
    return 2.0 / math.log(translation_scaling(h, 1.0))


def _power_prediction(beta: float, q: float) -> tuple:
    """(γ, b) for h = s^β, split by where β sits relative to the gradient balance."""
    qc = C.critical_q(beta)
    if q > qc:
        return 1.0 / (q - 1.0), C.gradient_dominated_b(q)
    if q == qc:
        return 1.0 / (q - 1.0), C.boundary_b(beta)
    return (beta + 1.0) / (beta - 1.0), C.power_case_constant(beta)


def _params(**kw) -> str:
    return ";".join(f"{k}={v}" for k, v in kw.items())


def build_case(case_id: str, budget: RunBudget = RunBudget()) -> VerificationCase:
    """Case table; every prediction is computed from the formula modules here."""
    f = budget.source
    fdesc = f"sin:A={f.amplitude:g},k={f.mode}" if f.amplitude else f"const={f.const:g}"
    disk = Disk(1.0)
    tol = budget.tol_coeff

    def coeff(h, q, dom, model, g, b, tol_=tol, **extra):
        dname = "disk:R=1" if isinstance(dom, Disk) else f"annulus:Rin={dom.R_in:g},Rout={dom.R_out:g}"
        return VerificationCase(case_id, "coefficient", _params(h=h.describe(), q=f"{q:g}", domain=dname, f=fdesc),
                                dom, h, q, model, g, b, tol_, extra)

    if case_id == "A1":
        a, q = 2.0, 2.0
        _require(q == 2.0 and a <= 2.0, "A1 needs q = 2 and a <= 2")
        # logarithmic corrections at a = 2: gate widened to 10%
        return coeff(Exp(a), q, disk, PurePower(log_terms=1), 1.0, _exp_coefficient(Exp(a), q), 2.0 * tol)
    if case_id == "A2":
        a, q = 4.0, 1.0
        _require(q < 2.0 or a > 2.0, "A2 needs q < 2, or q = 2 with a > 2")
        return coeff(Exp(a), q, disk, PurePower(), 1.0, C.exponential_gradient_b(a, q))
    if case_id in ("B3", "B4", "T26ii"):
        beta, q = {"B3": (1.0, 1.5), "B4": (3.0, 1.0), "T26ii": (3.0, 1.5)}[case_id]
        qc = C.critical_q(beta)
        if case_id == "B4":
            _require(q < qc, f"B4 needs q < 2β/(1+β) = {qc:g}")
        elif case_id == "T26ii":
            _require(q == qc, f"T26ii needs q = 2β/(1+β) = {qc:g}")
        else:
            _require(q >= qc, f"B3 needs q >= 2β/(1+β) = {qc:g}")
        g, b = _power_prediction(beta, q)
        return coeff(Pow(beta), q, disk, PurePower(), g, b)
    if case_id == "T22_h1":
        h = Exp(1.0)
        return coeff(h, 2.0, disk, PurePower(), 1.0, _exp_coefficient(h, 2.0))
    if case_id == "T22_h2":
        h = ExpPoly(0.0, 1.0)
        return coeff(h, 2.0, disk, PurePower(log_terms=1), 1.0, _exp_coefficient(h, 2.0), 2.0 * tol)
    if case_id == "T22_h3":
        h = Exp(4.0)
        return coeff(h, 2.0, Annulus(0.5, 1.5), PurePower(), 1.0, _exp_coefficient(h, 2.0))
    if case_id == "T24":
        h, q = Exp(3.0), 0.5
        _require(q < 2.0, "T24 needs q < 2")
        return coeff(h, q, disk, PurePower(), 1.0, _exp_coefficient(h, q))
    if case_id == "T26i":
        beta, q = 3.0, 0.0
        h = Pow(beta)
        prof = build_profile(h, "Ftilde", (1e-2, 1e8))
        return coeff(h, q, disk, KOProfileRatio(prof), (beta + 1.0) / (beta - 1.0), 1.0)
    if case_id == "T41i":
        return VerificationCase(case_id, "symmetry", _params(alpha=1, p=2, q=1.5, M=5, W=4, L=10), tol=1e-2,
                                extra=dict(args=(1.0, 2.0, 1.5, 5.0), W=4.0, L=10.0, need_decrease=True))
    if case_id == "T41iia":
        return VerificationCase(case_id, "symmetry", _params(alpha=0, q=2, M=3, W=4, L=10), tol=1e-8,
                                extra=dict(args=(0.0, 1.0, 2.0, 3.0), W=4.0, L=10.0))
    if case_id == "T41iib":
        return VerificationCase(case_id, "symmetry", _params(alpha=0, q=1.5, M=2, l=1, W=4, L=10), tol=1e-3,
                                extra=dict(args=(0.0, 1.0, 1.5, 2.0), W=4.0, L=10.0, far_l=1.0))
    if case_id == "UNIQ":
        return VerificationCase(case_id, "uniqueness", _params(q=1.5, domain="disk:R=1", f=fdesc), disk, q=1.5,
                                tol=10.0 * budget.continuation.tol)
    raise ValueError(f"unknown case {case_id!r}; choose from {', '.join(CASE_IDS)} or all")


def _require(ok: bool, msg: str):
    if not ok:
        raise HypothesisViolation(msg)


# -- running -----------------------------------------------------------------------------------
def _write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "d", "du_dn", "du_dtau"])
        for row in trace.rows():
            w.writerow([f"{v:.12g}" for v in row])


def _fit_field(case: VerificationCase, fld, component: str):
    trace = boundary_gradient_trace(fld, component=component, case_id=case.case_id)
    try:
        rep = fit_blowup_constant(trace, case.model, gamma_pred=case.gamma_pred, b_pred=case.b_pred)
        ok_fit = True
    except PoorFit as exc:
        if exc.report is None:
            raise
        rep, ok_fit = exc.report, False
    return trace, rep, ok_fit


def _run_coefficient(case: VerificationCase, budget: RunBudget, out: Optional[Path]) -> VerdictRow:
    fld = large_solution_limit(case.domain, case.h, case.q, budget.source, budget.continuation, budget.grid)
    reports, notes, ok = [], [], True
    for comp in case.domain.components:
        trace, rep, ok_fit = _fit_field(case, fld, comp)
        reports.append(rep)
        ok &= ok_fit and rep.rel_err <= case.tol and rep.tangential_ratio < budget.tol_tangential
        if not ok_fit:
            notes.append(f"{comp}: R2={rep.r2:.4f}")
        if out is not None and budget.retain:
            _write_trace(out / f"{case.case_id}_{comp}_trace.csv", trace)
    if budget.refinement:
        fine = large_solution_limit(case.domain, case.h, case.q, budget.source, budget.continuation,
                                    budget.grid.refined(2))
        for comp, rep in zip(case.domain.components, reports):
            _, rep2, _ = _fit_field(case, fine, comp)
            drift = abs(rep2.b_fit - rep.b_fit) / abs(rep.b_fit)
            notes.append(f"{comp}: refinement drift {drift:.2e}")
            ok &= drift < budget.refine_gate
    worst = max(reports, key=lambda r: r.rel_err)
    return VerdictRow(case.case_id, case.params, case.gamma_pred, worst.gamma_fit, case.b_pred, worst.b_fit,
                      worst.rel_err, max(r.tangential_ratio for r in reports), bool(ok), "; ".join(notes),
                      {"reports": reports, "certificate": fld.meta["certificate"]})


def _run_symmetry(case: VerificationCase, budget: RunBudget) -> VerdictRow:
    ex = case.extra
    rep = halfstrip_symmetry_test(*ex["args"], W=ex["W"], L=ex["L"], grid=budget.strip_grid, far_l=ex.get("far_l"),
                                  refine=ex.get("need_decrease", False))
    ok = rep.deviation < case.tol and (rep.decreasing or not ex.get("need_decrease", False))
    notes = "; ".join(f"{lab}: {dev:.3e}" for lab, dev in rep.refinement)
    return VerdictRow(case.case_id, case.params, None, None, None, None, rep.deviation, None, bool(ok),
                      f"oracle={rep.oracle}; {notes}", {"report": rep})


def run_uniqueness_experiment(convex: NonlinearitySpec, concave: NonlinearitySpec, domain: Domain2D, q: float,
                              budget: RunBudget = RunBudget(), case_id: str = "UNIQ") -> VerdictRow:
    """Two large-solution runs from a constant-M and a profile-informed start; sup gap on d ≥ 0.05 diam."""
    _require(q > 1.0, "uniqueness experiments need q > 1")
    probe = uniqueness_condition_probe(convex, concave)
    parts = [p for p in (convex, concave) if p.coef != 0]
    h = parts[0] if len(parts) == 1 else Sum(*parts)
    runs = [large_solution_limit(domain, h, q, budget.source, budget.continuation, budget.grid, start=s)
            for s in ("constant", "profile")]
    band = runs[0].distance() >= 0.05 * domain.diam
    gap = float(np.max(np.abs(runs[0].values[band] - runs[1].values[band])))
    tol = 10.0 * budget.continuation.tol
    ok = probe.passed and gap < tol
    return VerdictRow(case_id, _params(h=h.describe(), q=f"{q:g}", c0=f"{probe.c0:.6g}"), None, None, None, None,
                      gap, None, bool(ok), f"probe {'passed' if probe.passed else 'failed'}", {"probe": probe})


UNIQUENESS_SPLITS: tuple = (
    (Zero(), Pow(0.5, domain_floor=0.0)),
    (Pow(3.0), Zero()),
    (Pow(3.0), Pow(0.5, domain_floor=0.0)),
)


def run_case(case: VerificationCase, budget: RunBudget = RunBudget(), out: Optional[Path] = None) -> list:
    """Run one case; returns its verdict rows (several for UNIQ)."""
    if case.kind == "coefficient":
        return [_run_coefficient(case, budget, out)]
    if case.kind == "symmetry":
        return [_run_symmetry(case, budget)]
    return [run_uniqueness_experiment(cv, cc, case.domain, case.q, budget, case.case_id)
            for cv, cc in UNIQUENESS_SPLITS]


def _safe_run(args) -> list:
    case_id, budget, out = args
    try:
        return run_case(build_case(case_id, budget), budget, out)
    except BlowupError as exc:
        return [VerdictRow(case_id, "", None, None, None, None, math.nan, None, False, f"{type(exc).__name__}: {exc}")]


def run_cases(case_ids, budget: RunBudget = RunBudget(), out: Optional[Path] = None,
              progress: Optional[Callable] = None) -> list:
    """Run cases (in parallel when ``budget.jobs`` > 1); rows come back ordered by case table position."""
    ids = list(CASE_IDS) if case_ids in ("all", ["all"], ("all",)) else list(case_ids)
    for cid in ids:
        if cid not in CASE_IDS:
            raise ValueError(f"unknown case {cid!r}")
    args = [(cid, budget, out) for cid in ids]
    if budget.jobs > 1:
        with ProcessPoolExecutor(max_workers=budget.jobs) as ex:
            results = list(ex.map(_safe_run, args))
    else:
        results = []
        for a in args:
            results.append(_safe_run(a))
            if progress:
                for row in results[-1]:
                    progress(row)
    order = {cid: i for i, cid in enumerate(CASE_IDS)}
    rows = [r for res in results for r in res]
    return sorted(rows, key=lambda r: (order[r.case_id], r.params))


# -- reporting ---------------------------------------------------------------------------------
def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(row.csv_row())
    return buf.getvalue()


def emit_report(rows, out_dir) -> int:
    """Write ``verdicts.csv`` into ``out_dir``; returns the exit code (0 iff every row passed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verdicts.csv").write_text(report_csv(rows))
    return 0 if all(r.passed for r in rows) else 1


def verdict_line(row: VerdictRow) -> str:
    status = "PASS" if row.passed else "FAIL"
    extra = f"  ({row.notes})" if row.notes else ""
    return f"{status} {row.case_id:<7} rel_err={_fmt(row.rel_err) or '-'} {row.params}{extra}"
