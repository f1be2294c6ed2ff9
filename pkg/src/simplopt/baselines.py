"""Baseline optimizers for comparison: projected L2 gradient descent and the
classical Optimality Criteria update, both reporting the projection-based
stationarity measure S so runs are comparable across methods."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import AdmissibleParams, DensityField, LatentField, weighted_inner
from .projection import l2_project, stationarity
from .simpl import LineSearchError, OptTrace, gbb_stepsize, seed_stepsize

__all__ = ["BaselineConfig", "l2_project", "stationarity", "pgd_solve", "oc_solve"]


@dataclass
class BaselineConfig:
    method: str = "pgd"  # pgd | oc
    c1: float = 1e-4  # Armijo constant (pgd)
    move: float = 0.2  # move limit m (oc)
    exponent: float = 0.5  # damping exponent eta (oc)
    tol: float = 1e-5  # tolerance on the stationarity measure S
    max_iters: int = 300
    bisection_tol: float = 1e-12
    max_backtracks: int = 30

    def __post_init__(self):
        if not 0.0 < self.move <= 1.0:
            raise ValueError("move limit must lie in (0, 1]")
        if self.exponent <= 0.0:
            raise ValueError("exponent must be positive")


def _start(obj, adm: AdmissibleParams, rho0: DensityField | None) -> DensityField:
    cv = np.asarray(obj.cell_volumes, dtype=float)
    passive = getattr(obj, "passive_mask", None)
    if passive is not None and np.asarray(passive).any():
        raise ValueError("baseline optimizers do not support passive cells")
    if rho0 is None:
        return DensityField(np.full(cv.size, adm.theta), cv)
    return DensityField(np.asarray(rho0.values, dtype=float), cv)


def pgd_solve(
    obj,
    adm: AdmissibleParams,
    cfg: BaselineConfig | None = None,
    rho0: DensityField | None = None,
) -> OptTrace:
    """Projected gradient descent rho <- P(rho - alpha g) in the M-norm.

    The step seed reuses the Barzilai-Borwein/geometric-mean machinery (the
    latent difference degenerates to the primal one) and trials are accepted
    by the Armijo test on the projected point.  Stops on S <= tol.
    """
    cfg = cfg or BaselineConfig()
    cv = np.asarray(obj.cell_volumes, dtype=float)
    rho = _start(obj, adm, rho0)

    trace = OptTrace()
    f_val, cache = obj.evaluate(rho)
    g = obj.gradient(rho, cache)
    s_val = stationarity(rho, g, adm, cv)
    trace.add_row(f_val, np.nan, np.nan, np.nan, s_val, 0, obj.evaluation_count, rho)
    trace.final_density = rho
    if s_val <= cfg.tol:
        trace.converged = True
        trace.stop_reason = "stationarity_tol"
        return trace

    alpha_prev = None
    prev = None
    for k in range(cfg.max_iters):
        if k == 0:
            alpha = seed_stepsize(0, None, None, g)
        else:
            try:
                # with the primal iterate in the latent slot this is the
                # standard long BB step in the M inner product
                a_bb = gbb_stepsize(
                    LatentField(rho.values),
                    LatentField(prev[0].values),
                    rho,
                    prev[0],
                    g,
                    prev[1],
                )
                alpha = seed_stepsize(k, a_bb, alpha_prev, g)
            except ZeroDivisionError:
                alpha = alpha_prev

        accepted = False
        for bt in range(cfg.max_backtracks + 1):
            projected, shift = l2_project(
                rho.values - alpha * g, adm, cv, cfg.bisection_tol
            )
            f_new, cache_new = obj.evaluate(projected)
            slope = weighted_inner(g, projected.values - rho.values, cv)
            if f_new <= f_val + cfg.c1 * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            raise LineSearchError(
                f"PGD found no acceptable step at iteration {k} "
                f"(alpha reached {alpha:.3e})"
            )

        prev = (rho, g)
        rho, f_val, cache = projected, f_new, cache_new
        g = obj.gradient(rho, cache)
        s_val = stationarity(rho, g, adm, cv)
        trace.add_row(
            f_val, alpha, shift / alpha, np.nan, s_val, bt, obj.evaluation_count, rho
        )
        trace.iterations = k + 1
        alpha_prev = alpha
        if s_val <= cfg.tol:
            trace.converged = True
            trace.stop_reason = "stationarity_tol"
            break
    if not trace.converged:
        trace.stop_reason = "max_iters"
    trace.final_density = rho
    return trace


def oc_solve(
    obj,
    adm: AdmissibleParams,
    cfg: BaselineConfig | None = None,
    rho0: DensityField | None = None,
) -> OptTrace:
    """Optimality Criteria fixed-point update with move limit and damping.

    rho_new = clip(rho (-g / lambda)^eta) within [rho - m, rho + m] and [0, 1],
    with lambda bisected so every iterate matches the volume budget exactly.
    Requires a nonpositive gradient (compliance-type objectives); aborts
    otherwise.
    """
    cfg = cfg or BaselineConfig(method="oc")
    cv = np.asarray(obj.cell_volumes, dtype=float)
    rho = _start(obj, adm, rho0)
    budget = adm.volume_budget
    slack = cfg.bisection_tol * adm.domain_volume

    trace = OptTrace()
    f_val, cache = obj.evaluate(rho)
    g = obj.gradient(rho, cache)
    s_val = stationarity(rho, g, adm, cv)
    trace.add_row(f_val, np.nan, np.nan, np.nan, s_val, 0, obj.evaluation_count, rho)
    trace.final_density = rho
    if s_val <= cfg.tol:
        trace.converged = True
        trace.stop_reason = "stationarity_tol"
        return trace

    for k in range(cfg.max_iters):
        gmax = float(np.max(g))
        gscale = float(np.max(np.abs(g)))
        if gmax > 1e-12 * max(gscale, 1e-300):
            raise ValueError(
                "OC is inapplicable: objective gradient has positive components"
            )
        neg_g = np.maximum(-g, 0.0)
        lo_v = rho.values
        lower = np.maximum(lo_v - cfg.move, 0.0)
        upper = np.minimum(lo_v + cfg.move, 1.0)

        def candidate(lam):
            return np.clip(lo_v * (neg_g / lam) ** cfg.exponent, lower, upper)

        def vol(lam):
            return float(np.sum(cv * candidate(lam)))

        hi = max(float(np.max(neg_g)), 1e-300)
        lo = hi * 1e-30
        while vol(lo) < budget - slack and lo > 1e-200:
            lo *= 1e-6
        for _ in range(200):
            mid = np.sqrt(lo * hi)  # bisect in log space: lambda spans decades
            if vol(mid) > budget:
                lo = mid
            else:
                hi = mid
            if abs(vol(hi) - budget) <= slack:
                break
        new_values = candidate(hi)
        rho = DensityField(new_values, cv)
        f_val, cache = obj.evaluate(rho)
        g = obj.gradient(rho, cache)
        s_val = stationarity(rho, g, adm, cv)
        trace.add_row(f_val, np.nan, hi, np.nan, s_val, 0, obj.evaluation_count, rho)
        trace.iterations = k + 1
        if s_val <= cfg.tol:
            trace.converged = True
            trace.stop_reason = "stationarity_tol"
            break
    if not trace.converged:
        trace.stop_reason = "max_iters"
    trace.final_density = rho
    return trace
