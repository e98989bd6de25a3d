"""Damped Newton iteration for sparse nonlinear systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from .errors import NewtonDivergence


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10        # scaled residual (max norm)
    step_tol: float = 1e-11   # relative step size
    stall_step: float = 1e-8  # a failed line search after steps this small means round-off stagnation
    floor_residual: float = 1e-7  # ... as does one that starts below this scaled residual
    max_iter: int = 60
    armijo: float = 1e-4
    min_lambda: float = 2.0**-30


@dataclass
class NewtonInfo:
    iterations: int = 0
    residual: float = np.inf
    trace: list = field(default_factory=list)  # (iteration, merit, lambda)


def newton_solve(system: Callable, x0: np.ndarray, cfg: NewtonConfig = NewtonConfig()):
    """Solve F(x) = 0 where ``system(x, jac)`` returns (F, scale, J or None).

    ``scale`` holds positive row magnitudes; the merit function is
    ||F/scale||_2 with the scale frozen during each line search, so the search
    direction is the plain Newton step.
    """
    x = np.array(x0, dtype=float)
    info = NewtonInfo()
    last_step = np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        F, scale, J = system(x, True)
    for it in range(1, cfg.max_iter + 1):
        r = F / scale
        rmax = float(np.max(np.abs(r))) if r.size else 0.0
        info.residual = rmax
        if not np.isfinite(rmax):
            raise NewtonDivergence("non-finite residual", info.trace)
        if rmax <= cfg.tol:
            info.iterations = it - 1
            return x, info
        try:
            dx = spla.spsolve(J.tocsc(), -F)
        except RuntimeError as exc:  # singular factorization
            raise NewtonDivergence(f"linear solve failed: {exc}", info.trace) from None
        if not np.all(np.isfinite(dx)):
            raise NewtonDivergence("non-finite Newton step", info.trace)
        if np.max(np.abs(dx)) <= cfg.step_tol * (1.0 + np.max(np.abs(x))):
            # at the rounding floor of the residual: the iterate is converged
            info.iterations = it - 1
            return x, info
        merit0 = float(np.linalg.norm(r))
        lam = 1.0
        while True:
            xt = x + lam * dx
            with np.errstate(over="ignore", invalid="ignore"):
                Ft, scale_t, _ = system(xt, False)
            merit = float(np.linalg.norm(Ft / scale))
            if np.isfinite(merit) and merit <= (1.0 - cfg.armijo * lam) * merit0:
                break
            lam *= 0.5
            if lam < cfg.min_lambda:
                info.trace.append((it, merit0, 0.0))
                if rmax <= cfg.floor_residual or last_step <= cfg.stall_step * (1.0 + np.max(np.abs(x))):
                    info.iterations = it - 1
                    return x, info
                raise NewtonDivergence("line search failed", info.trace)
        info.trace.append((it, merit, lam))
        last_step = lam * float(np.max(np.abs(dx)))
        x = xt
        small_step = lam == 1.0 and np.max(np.abs(dx)) <= cfg.step_tol * (1.0 + np.max(np.abs(x)))
        with np.errstate(over="ignore", invalid="ignore"):
            F, scale, J = system(x, True)
        if small_step:
            info.iterations = it
            info.residual = float(np.max(np.abs(F / scale)))
            return x, info
    raise NewtonDivergence(f"no convergence in {cfg.max_iter} iterations", info.trace)
