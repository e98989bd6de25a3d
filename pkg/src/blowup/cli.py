"""``blowup`` command line: verify, classify, constants, profile, ode, solve2d.

Exit codes: 0 = success / all verdicts pass, 1 = some verdict failed, 2 = execution error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional


from . import harness
from .constants import constant_set
from .errors import BlowupError
from .grids import GradedGrid
from .ko_transform import build_profile
from .nonlinearity import classify_regime, parse_hspec
from .ode_blowup import (Blowup, LimitAtInfinity, OdeSpec, explicit_profile, solve_1d_bvp, solve_annulus,
                         solve_radial_large)
from .pde2d import GridConfig, parse_domain, parse_source, large_solution_limit, solve_truncated
from .pde2d.domain import HalfStrip
from .pde2d.trace import PurePower, boundary_gradient_trace, fit_blowup_constant


def _writer(path):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _g(v: float) -> str:
    return f"{v:.12g}"


# -- subcommands -------------------------------------------------------------------------------
def cmd_verify(args) -> int:
    cfg = harness.parse_config(Path(args.config).read_text()) if args.config else {}
    budget = harness.budget_from_config(cfg)
    if args.jobs is not None:
        budget = replace(budget, jobs=args.jobs)
    out = Path(args.out)
    (out / "cases").mkdir(parents=True, exist_ok=True)
    ids = "all" if args.case == "all" else [c.strip() for c in args.case.split(",")]
    rows = harness.run_cases(ids, budget, out / "cases",
                             progress=lambda r: print(harness.verdict_line(r), flush=True))
    if budget.jobs > 1:
        for r in rows:
            print(harness.verdict_line(r))
    code = harness.emit_report(rows, out)
    print(f"{sum(r.passed for r in rows)}/{len(rows)} passed; report in {out / 'verdicts.csv'}")
    return code


def cmd_classify(args) -> int:
    rep = classify_regime(parse_hspec(args.h))
    print(f"regime={rep.regime}")
    print(f"lambda={_g(rep.lam)}")
    print(f"converged={str(rep.converged).lower()}")
    return 0


def cmd_constants(args) -> int:
    cs = constant_set(args.q, args.l, args.beta, args.lam)
    items = cs.items()
    for k, v in items:
        print(f"{k}={_g(v)}")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow([k for k, _ in items])
    w.writerow([_g(v) for _, v in items])
    return 0


def cmd_profile(args) -> int:
    prof = build_profile(parse_hspec(args.h), args.transform, (args.s_min, args.s_max))
    fh, w = _writer(args.out)
    w.writerow(["s", "F_inv", "F", "F_prime"])
    for s, finv, g in zip(prof.s, prof.finv, prof.g):
        w.writerow([_g(s), _g(finv), _g(prof.forward(finv)), _g(-1.0 / g)])
    if fh is not sys.stdout:
        fh.close()
    return 0


def _ode_profile(args):
    h = parse_hspec(args.h) if args.h else None
    if args.kind == "radial":
        return solve_radial_large(h, args.q, args.R, args.N, beta=args.beta_coef)
    if args.kind == "annulus":
        return solve_annulus(h, args.q, args.R, args.S, Blowup(), args.M if args.M is not None else 0.0, args.N,
                             beta=args.beta_coef)
    if args.kind == "halfline":
        ode = OdeSpec(alpha=args.alpha, p=args.p, beta=args.beta_coef, q=args.q, h=h)
        return solve_1d_bvp(ode, (Blowup(), LimitAtInfinity(args.l)), GradedGrid(args.R))
    if args.kind.startswith("explicit:"):
        name = args.kind.split(":", 1)[1]
        kw = {"q": args.q, "M": args.M, "l": args.l, "alpha": args.alpha, "lam": args.lam}
        prof = explicit_profile(name, **{k: v for k, v in kw.items() if v is not None})
        return prof.sample(prof.log_grid(1e-3 * args.R, args.R))
    raise ValueError(f"unknown ode kind {args.kind!r}")


def cmd_ode(args) -> int:
    prof = _ode_profile(args)
    fh, w = _writer(args.out)
    w.writerow(["x", "u", "du"])
    for x, u, du in zip(prof.grid, prof.values, prof.derivative):
        w.writerow([_g(x), _g(u), _g(du)])
    if fh is not sys.stdout:
        fh.close()
    return 0


def _parse_grid(text: Optional[str]) -> GridConfig:
    cfg = GridConfig()
    if not text:
        return cfg
    kw = {}
    for item in filter(None, text.split(",")):
        k, _, v = item.partition("=")
        k = k.strip()
        kw[k] = v.strip() if k == "grading" else (float(v) if k in ("gamma_g", "core_rel", "offset") else int(v))
    return replace(cfg, **kw)


def _prediction(h, q):
    """(γ, b, model) when (h, q) falls in one of the tabulated cases, else (None, None, PurePower())."""
    try:
        if h.kind in ("exp", "exppoly"):
            b = harness._exp_coefficient(h, q)
            logs = 1 if q == 2.0 and classify_regime(h).regime == "H2" else 0
            return 1.0, b, PurePower(log_terms=logs)
        if h.kind == "pow" and h.coef > 0:
            g, b = harness._power_prediction(h.beta, q)
            return g, b, PurePower()
    except (BlowupError, ValueError, ZeroDivisionError):
        pass
    return None, None, PurePower()


def cmd_solve2d(args) -> int:
    dom = parse_domain(args.domain)
    h = parse_hspec(args.h)
    f = parse_source(args.f)
    grid = _parse_grid(args.grid)
    if args.large:
        fld = large_solution_limit(dom, h, args.q, f, grid=grid)
    else:
        fld = solve_truncated(dom, h, args.q, f, args.M, grid)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    polar = not isinstance(dom, HalfStrip)
    with open(f"{prefix}_field.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "theta", "u"] if polar else ["xi1", "xi2", "u"])
        for i, s in enumerate(fld.s):
            for k, t in enumerate(fld.t):
                w.writerow([_g(s), _g(t), _g(fld.values[i, k])])
    gamma, b, model = _prediction(h, args.q)
    rows = []
    for comp in dom.components:
        trace = boundary_gradient_trace(fld, component=comp)
        suffix = "" if len(dom.components) == 1 else f"_{comp}"
        harness._write_trace(Path(f"{prefix}_trace{suffix}.csv"), trace)
        rep = fit_blowup_constant(trace, model, gamma_pred=gamma, b_pred=b, min_r2=0.0)
        rows.append((comp, rep))
    with open(f"{prefix}_report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "gamma_fit", "b_fit", "predicted", "rel_err", "R2"])
        for comp, rep in rows:
            pred = "" if b is None else f"gamma={_g(gamma)};b={_g(b)}"
            rel = "" if math.isnan(rep.rel_err) else _g(rep.rel_err)
            w.writerow([f"{args.domain}|{comp}", _g(rep.gamma_fit), _g(rep.b_fit), pred, rel, _g(rep.r2)])
    for comp, rep in rows:
        print(f"{comp}: gamma={rep.gamma_fit:.6g} b={rep.b_fit:.6g} R2={rep.r2:.6f} tangential={rep.tangential_ratio:.3g}")
    return 0


# -- parser ------------------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blowup", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification cases and write verdicts.csv")
    v.add_argument("--case", default="all", help="case id, comma list, or 'all'")
    v.add_argument("--config", help="flat key=value config file")
    v.add_argument("--jobs", type=int)
    v.add_argument("--out", required=True, help="output directory")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("classify", help="growth class of h relative to e^{2s}")
    c.add_argument("--h", required=True)
    c.set_defaults(func=cmd_classify)

    k = sub.add_parser("constants", help="closed-form constants for given q (and l, β, λ)")
    k.add_argument("--q", type=float, required=True)
    k.add_argument("--l", type=float, default=0.0)
    k.add_argument("--beta", type=float)
    k.add_argument("--lambda", dest="lam", type=float)
    k.set_defaults(func=cmd_constants)

    pr = sub.add_parser("profile", help="tabulate the profile transform")
    pr.add_argument("--h", required=True)
    pr.add_argument("--transform", choices=["q2", "tilde"], default="q2")
    pr.add_argument("--s-min", dest="s_min", type=float, required=True)
    pr.add_argument("--s-max", dest="s_max", type=float, required=True)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_profile)

    o = sub.add_parser("ode", help="one-dimensional blow-up profiles")
    o.add_argument("--kind", required=True, help="radial | annulus | halfline | explicit:<name>")
    o.add_argument("--h")
    o.add_argument("--q", type=float, default=2.0)
    o.add_argument("--R", type=float, default=1.0)
    o.add_argument("--S", type=float, default=1.0)
    o.add_argument("--N", type=int, default=2)
    o.add_argument("--M", type=float)
    o.add_argument("--l", type=float, default=0.0)
    o.add_argument("--alpha", type=float, default=1.0)
    o.add_argument("--p", type=float, default=1.0)
    o.add_argument("--lam", type=float)
    o.add_argument("--beta-coef", dest="beta_coef", type=float, default=1.0)
    o.add_argument("--out")
    o.set_defaults(func=cmd_ode)

    s = sub.add_parser("solve2d", help="2D solve, boundary trace and coefficient fit")
    s.add_argument("--domain", required=True)
    s.add_argument("--h", required=True)
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--f", default="0")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--M", type=float)
    mode.add_argument("--large", action="store_true")
    s.add_argument("--grid", help="Nr=..,Ntheta=..[,grading=..]")
    s.add_argument("--out", required=True, help="output prefix")
    s.set_defaults(func=cmd_solve2d)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "profile":
        args.transform = {"q2": "Fq2", "tilde": "Ftilde"}[args.transform]
    try:
        return args.func(args)
    except (BlowupError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
