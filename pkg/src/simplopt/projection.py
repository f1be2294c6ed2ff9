"""L2 projection onto the admissible set and the projection-based stationarity
measure S = ||rho - P(rho - g)||_M used to compare optimizers."""
from __future__ import annotations

import numpy as np

from .fields import AdmissibleParams, DensityField, weighted_inner

__all__ = ["l2_project", "stationarity"]


def l2_project(
    rho_values: np.ndarray,
    adm: AdmissibleParams,
    cell_volumes: np.ndarray,
    bisection_tol: float = 1e-12,
) -> tuple[DensityField, float]:
    """Project onto {0 <= q <= 1, 1'Mq <= theta |Omega|} in the M-weighted norm.

    The minimizer is the uniform shift q = clip(rho - mu, 0, 1) with mu >= 0
    chosen by bisection so the volume constraint holds with complementarity
    (mu = 0 when clip(rho, 0, 1) is already feasible).  Returns (q, mu).
    """
    v = np.asarray(rho_values, dtype=float)
    budget = adm.volume_budget
    slack = bisection_tol * adm.domain_volume

    def vol(mu):
        return float(np.sum(cell_volumes * np.clip(v - mu, 0.0, 1.0)))

    if vol(0.0) <= budget + slack:
        return DensityField(np.clip(v, 0.0, 1.0), cell_volumes), 0.0
    lo, hi = 0.0, float(np.max(v))
    # vol(hi) = 0 < budget, vol(lo) > budget: bisect
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if vol(mid) > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi) and abs(vol(hi) - budget) <= slack:
            break
    mu = hi if abs(vol(hi) - budget) <= abs(vol(lo) - budget) else lo
    return DensityField(np.clip(v - mu, 0.0, 1.0), cell_volumes), float(mu)


def stationarity(
    rho: DensityField, g: np.ndarray, adm: AdmissibleParams, cell_volumes: np.ndarray
) -> float:
    """M-norm of s = rho - P(rho - g); zero iff rho is a projected-gradient
    fixed point with unit step."""
    projected, _ = l2_project(rho.values - g, adm, cell_volumes)
    s = rho.values - projected.values
    return float(np.sqrt(max(weighted_inner(s, s, cell_volumes), 0.0)))
