"""Run the verification cases and write verdicts.csv plus per-case traces.

    python3 scripts/run_verification.py --cases A2 B3 --out runs/quick --jobs 2
"""
import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from blowup.harness import CASE_IDS, RunBudget, emit_report, run_cases, verdict_line


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", nargs="+", default=["all"], help=f"subset of {', '.join(CASE_IDS)}")
    ap.add_argument("--out", type=Path, default=Path("runs/verify"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    budget = replace(RunBudget(), jobs=args.jobs)
    t0 = time.perf_counter()
    rows = run_cases(args.cases, budget, out=args.out, progress=lambda r: print(verdict_line(r), flush=True))
    if args.jobs > 1:
        for r in rows:
            print(verdict_line(r))
    code = emit_report(rows, args.out)
    print(f"{sum(r.passed for r in rows)}/{len(rows)} rows passed in {time.perf_counter() - t0:.1f}s; "
          f"report at {args.out / 'verdicts.csv'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
