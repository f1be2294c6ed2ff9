"""The SiMPL optimizer: sigmoidal mirror descent with a projected latent variable.

One iteration takes an unconstrained gradient step in the latent (logit) space,
then translates the latent variable uniformly until the volume constraint
holds, with the translation amount mu found by bisection.  The step size is
seeded from a generalized Barzilai-Borwein estimate and backtracked under
either the Armijo rule or the parameter-free Bregman rule.  Convergence is
declared from a first-order (KKT) violation estimate built out of the latent
increment, or from the projection-based stationarity measure when comparing
against other methods.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (
    AdmissibleParams,
    DEFAULT_CLAMP_BOUND,
    DensityField,
    LatentField,
    bregman_divergence,
    fermi_dirac_entropy,
    logit,
    sigmoid,
    weighted_inner,
)
from .projection import stationarity

__all__ = [
    "SimplConfig",
    "OptTrace",
    "KktMultiplierEstimate",
    "LineSearchError",
    "VolumeBracketError",
    "latent_step",
    "volume_correct",
    "armijo_accept",
    "bregman_accept",
    "gbb_stepsize",
    "seed_stepsize",
    "kkt_estimate",
    "simpl_solve",
]


class LineSearchError(RuntimeError):
    """Backtracking exhausted; points at a wrong gradient or loose solver tol."""


class VolumeBracketError(RuntimeError):
    """No root in the volume-correction bracket; the previous iterate was
    infeasible or a sign convention is wrong."""


@dataclass
class SimplConfig:
    line_search: str = "armijo"  # armijo | bregman
    c1: float = 1e-4
    tol: float = 1e-5
    tol_mode: str = "absolute"  # absolute | relative (KKT vs first-iteration KKT)
    stop_on: str = "kkt"  # kkt | stationarity
    max_iters: int = 500
    kkt_variant: str = "A"  # A | B
    clamp_bound: float = DEFAULT_CLAMP_BOUND
    entropy_penalty_weight: float = 0.0
    bisection_tol: float = 1e-12
    max_backtracks: int = 30

    def __post_init__(self):
        if self.line_search not in ("armijo", "bregman"):
            raise ValueError("line_search must be 'armijo' or 'bregman'")
        if not 0.0 < self.c1 < 1.0:
            raise ValueError("c1 must lie in (0, 1)")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.tol_mode not in ("absolute", "relative"):
            raise ValueError("tol_mode must be 'absolute' or 'relative'")
        if self.stop_on not in ("kkt", "stationarity"):
            raise ValueError("stop_on must be 'kkt' or 'stationarity'")
        if self.kkt_variant not in ("A", "B"):
            raise ValueError("kkt_variant must be 'A' or 'B'")


@dataclass
class KktMultiplierEstimate:
    lambda_k: np.ndarray
    mu_k: float


@dataclass
class OptTrace:
    """Per-iteration record; row 0 describes the initial design, row k the
    state after the k-th accepted step."""

    F: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    kkt: list = field(default_factory=list)
    stationarity: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    evals: list = field(default_factory=list)
    volume: list = field(default_factory=list)
    rho_min: list = field(default_factory=list)
    rho_max: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    stop_reason: str = ""
    final_density: DensityField | None = None
    final_latent: LatentField | None = None
    max_identity_violation: float = 0.0

    def add_row(self, F, alpha, mu, kkt, stat, backtracks, evals, rho: DensityField):
        self.F.append(float(F))
        self.alpha.append(float(alpha))
        self.mu.append(float(mu))
        self.kkt.append(float(kkt))
        self.stationarity.append(float(stat))
        self.backtracks.append(int(backtracks))
        self.evals.append(int(evals))
        self.volume.append(rho.volume())
        self.rho_min.append(float(np.min(rho.values)))
        self.rho_max.append(float(np.max(rho.values)))

    def set_stationarity(self, row: int, value: float):
        self.stationarity[row] = float(value)


def latent_step(
    psi: LatentField, g: np.ndarray, alpha: float, entropy_penalty_weight: float = 0.0
) -> LatentField:
    """Unconstrained latent gradient step (1 - alpha*w) psi - alpha g."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    values = (1.0 - alpha * entropy_penalty_weight) * psi.values - alpha * np.asarray(g)
    return LatentField(values, psi.clamp_bound)


def volume_correct(
    psi_half: LatentField,
    alpha: float,
    adm: AdmissibleParams,
    cell_volumes: np.ndarray,
    g: np.ndarray,
    passive: np.ndarray | None = None,
    bisection_tol: float = 1e-12,
) -> tuple[LatentField, float]:
    """Uniform latent translation enforcing the volume constraint.

    Finds mu >= 0 with sum(M sigma(psi_half - alpha mu)) = theta |Omega| by
    bisection on [0, max(-g)] (widened if needed), or mu = 0 when the half
    step is already feasible.  Passive cells are held at +clamp_bound during
    the root find so the returned iterate is feasible after pinning.  The
    result is clamped to +-clamp_bound.
    """
    bound = psi_half.clamp_bound
    budget = adm.volume_budget
    slack = bisection_tol * adm.domain_volume
    vals = psi_half.values
    if passive is not None and passive.any():
        free = ~passive
        base = float(np.sum(cell_volumes[passive])) * sigmoid(bound)
        pvals = vals[free]
        pvols = cell_volumes[free]
    else:
        passive = None
        base = 0.0
        pvals = vals
        pvols = cell_volumes

    def vol(mu):
        return base + float(np.sum(pvols * sigmoid(pvals - alpha * mu)))

    def finish(mu):
        out = vals - alpha * mu
        if passive is not None:
            out = out.copy()
            out[passive] = bound
        out = np.clip(out, -bound, bound)
        return LatentField(out, bound), float(mu)

    if vol(0.0) <= budget:
        return finish(0.0)

    hi0 = max(float(np.max(-np.asarray(g))), 0.0)
    hi = hi0 if hi0 > 0.0 else 1.0
    retries = 0
    while vol(hi) > budget:
        hi *= 2.0
        retries += 1
        if retries > 80:
            raise VolumeBracketError(
                "volume correction could not bracket the multiplier; "
                "previous iterate infeasible or wrong gradient sign"
            )
    lo = 0.0
    width_tol = 1e-12 * max(1.0, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if vol(mid) > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= width_tol and abs(vol(hi) - budget) <= slack:
            break
    return finish(hi)


def armijo_accept(
    f_new: float,
    f_old: float,
    g: np.ndarray,
    rho_new: DensityField,
    rho_old: DensityField,
    c1: float,
) -> bool:
    """Armijo sufficient decrease F_new <= F_old + c1 <g, rho_new - rho_old>_M."""
    slope = weighted_inner(g, rho_new.values - rho_old.values, rho_old.cell_volumes)
    return f_new <= f_old + c1 * slope


def bregman_accept(
    f_new: float,
    f_old: float,
    g: np.ndarray,
    rho_new: DensityField,
    rho_old: DensityField,
    alpha: float,
) -> bool:
    """Parameter-free sufficient decrease with the Bregman divergence term."""
    slope = weighted_inner(g, rho_new.values - rho_old.values, rho_old.cell_volumes)
    div = bregman_divergence(rho_new, rho_old)
    return f_new <= f_old + slope + div / alpha


def gbb_stepsize(
    psi_k: LatentField,
    psi_prev: LatentField,
    rho_k: DensityField,
    rho_prev: DensityField,
    g_k: np.ndarray,
    g_prev: np.ndarray,
) -> float:
    """Generalized Barzilai-Borwein step from latent and primal differences.

    alpha = <dpsi, drho>_M / |<dg, drho>_M|.  Raises ZeroDivisionError on a
    degenerate denominator (or a zero numerator); the caller falls back to the
    previous step size.
    """
    cv = rho_k.cell_volumes
    drho = rho_k.values - rho_prev.values
    dpsi = psi_k.values - psi_prev.values
    dg = np.asarray(g_k) - np.asarray(g_prev)
    den = abs(weighted_inner(dg, drho, cv))
    num = weighted_inner(dpsi, drho, cv)
    if den == 0.0 or num <= 0.0:
        raise ZeroDivisionError("degenerate BB denominator")
    return num / den


def seed_stepsize(k: int, alpha_gbb: float | None, alpha_prev: float | None, g0: np.ndarray) -> float:
    """Line-search seed: 1/max|g| at the first iteration, then the geometric
    mean of the GBB estimate and the previous accepted step."""
    if k == 0:
        m = float(np.max(np.abs(g0)))
        if m == 0.0:
            raise ValueError("zero gradient: stationary start")
        return 1.0 / m
    return float(np.sqrt(alpha_gbb * alpha_prev))


def _complementarity(lam: np.ndarray, rho_values: np.ndarray, variant: str) -> np.ndarray:
    if variant == "A":
        return np.maximum(-rho_values * lam, (1.0 - rho_values) * lam)
    if variant == "B":
        return (
            lam
            - np.minimum(0.0, rho_values + lam)
            - np.maximum(0.0, rho_values - 1.0 + lam)
        )
    raise ValueError("variant must be 'A' or 'B'")


def _kkt_from_lambda(
    lam: np.ndarray, rho: DensityField, variant: str, mu: float
) -> tuple[float, KktMultiplierEstimate]:
    eta = _complementarity(lam, rho.values, variant)
    kkt = float(np.sum(rho.cell_volumes * eta))
    return kkt, KktMultiplierEstimate(lam, mu)


def kkt_estimate(
    psi_next: LatentField,
    psi_k: LatentField,
    alpha: float,
    rho: DensityField,
    variant: str = "A",
    mu: float = 0.0,
) -> tuple[float, KktMultiplierEstimate]:
    """First-order violation estimate from the latent increment.

    lambda_k = (psi_next - psi_k) / alpha approximates the bound-constraint
    multiplier; the complementarity vector eta (variant A: max of the two
    signed products, variant B: the shifted min/max form) is integrated to
    the scalar KKT = 1' M eta.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    lam = (psi_next.values - psi_k.values) / alpha
    return _kkt_from_lambda(lam, rho, variant, mu)


def _default_initial(
    adm: AdmissibleParams,
    cell_volumes: np.ndarray,
    passive: np.ndarray | None,
    clamp_bound: float,
) -> np.ndarray:
    n = cell_volumes.size
    if passive is None or not passive.any():
        return np.full(n, adm.theta)
    # choose the free-cell background so the pinned start stays feasible
    pinned = sigmoid(clamp_bound)
    v_passive = float(np.sum(cell_volumes[passive]))
    v_free = adm.domain_volume - v_passive
    background = (adm.volume_budget - pinned * v_passive) / v_free
    if not 0.0 < background < 1.0:
        raise ValueError("passive cells exceed the volume budget")
    values = np.full(n, background)
    values[passive] = pinned
    return values


def simpl_solve(
    obj,
    adm: AdmissibleParams,
    cfg: SimplConfig | None = None,
    rho0: DensityField | None = None,
) -> OptTrace:
    """Run the SiMPL method on a reduced objective.

    ``obj`` needs ``evaluate(rho) -> (F, cache)``, ``gradient(rho, cache)``,
    an ``evaluation_count`` attribute, ``cell_volumes``, and optionally a
    ``passive_mask``.  The default start is the uniform feasible density
    rho = theta (background-adjusted when passive cells are pinned).
    """
    cfg = cfg or SimplConfig()
    cv = np.asarray(obj.cell_volumes, dtype=float)
    passive = getattr(obj, "passive_mask", None)
    if passive is not None:
        passive = np.asarray(passive, dtype=bool)
        if not passive.any():
            passive = None
    w = cfg.entropy_penalty_weight

    if rho0 is None:
        values = _default_initial(adm, cv, passive, cfg.clamp_bound)
    else:
        values = np.asarray(rho0.values, dtype=float)
        if np.any(values <= 0.0) or np.any(values >= 1.0):
            raise ValueError("initial density must be strictly interior")
    psi_vals = np.clip(logit(values), -cfg.clamp_bound, cfg.clamp_bound)
    if passive is not None:
        psi_vals = psi_vals.copy()
        psi_vals[passive] = cfg.clamp_bound
    psi = LatentField(psi_vals, cfg.clamp_bound)
    rho = DensityField(sigmoid(psi.values), cv)
    if rho.volume() > adm.volume_budget + cfg.bisection_tol * adm.domain_volume:
        raise ValueError("initial density violates the volume constraint")

    def merit_of(f_val, rho_field):
        return f_val + w * fermi_dirac_entropy(rho_field) if w > 0.0 else f_val

    def effective_gradient(g_raw, psi_field):
        return g_raw + w * psi_field.values if w > 0.0 else g_raw

    def search_gradient(g_eff):
        if passive is None:
            return g_eff
        out = g_eff.copy()
        out[passive] = 0.0
        return out

    trace = OptTrace()
    f_val, cache = obj.evaluate(rho)
    g = obj.gradient(rho, cache)
    g_eff = effective_gradient(g, psi)
    g_ls = search_gradient(g_eff)
    merit = merit_of(f_val, rho)
    s_val = stationarity(rho, g, adm, cv)
    trace.add_row(f_val, np.nan, np.nan, np.nan, s_val, 0, obj.evaluation_count, rho)

    if float(np.max(np.abs(g_ls))) == 0.0:
        trace.converged = True
        trace.stop_reason = "stationary_start"
        trace.final_density = rho
        trace.final_latent = psi
        return trace

    alpha_prev = None
    kkt_first = None
    prev = None  # (psi, rho, g_ls) of the previous iterate, for GBB

    for k in range(cfg.max_iters):
        if k == 0:
            alpha = seed_stepsize(0, None, None, g_ls)
        else:
            try:
                a_gbb = gbb_stepsize(psi, prev[0], rho, prev[1], g_ls, prev[2])
                alpha = seed_stepsize(k, a_gbb, alpha_prev, g_ls)
            except ZeroDivisionError:
                alpha = alpha_prev

        accepted = False
        for bt in range(cfg.max_backtracks + 1):
            # (1 - alpha w) psi - alpha g == psi - alpha g_eff, so the
            # Remark-3 bracket max(-g_eff) applies verbatim
            psi_half = latent_step(psi, g, alpha, w)
            psi_next, mu = volume_correct(
                psi_half, alpha, adm, cv, g_eff, passive, cfg.bisection_tol
            )
            rho_next = DensityField(sigmoid(psi_next.values), cv)
            f_new, cache_new = obj.evaluate(rho_next)
            merit_new = merit_of(f_new, rho_next)
            if cfg.line_search == "armijo":
                ok = armijo_accept(merit_new, merit, g_eff, rho_next, rho, cfg.c1)
            else:
                ok = bregman_accept(merit_new, merit, g_eff, rho_next, rho, alpha)
            if ok:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # the objective can no longer be resolved at the proposed steps:
            # either the gradient is wrong or the linear solver tolerance is
            # too loose for the requested stopping tolerance
            trace.stop_reason = (
                f"line_search_failure: no acceptable step after "
                f"{cfg.max_backtracks} halvings at iteration {k} "
                f"(alpha reached {alpha:.3e})"
            )
            trace.final_density = rho
            trace.final_latent = psi
            return trace

        # multiplier estimate: lambda = (psi_next - psi)/alpha, formed from the
        # update identity so clamped cells keep their pre-clamp contribution
        lam = -g_eff - mu
        if passive is not None:
            lam = lam.copy()
            lam[passive] = 0.0
        kkt_val, _ = _kkt_from_lambda(lam, rho, cfg.kkt_variant, mu)

        inside = np.abs(psi_next.values) < cfg.clamp_bound
        if passive is not None:
            inside &= ~passive
        if inside.any():
            viol = np.abs(
                g_eff[inside]
                + (psi_next.values[inside] - psi.values[inside]) / alpha
                + mu
            )
            trace.max_identity_violation = max(
                trace.max_identity_violation, float(np.max(viol))
            )

        prev = (psi, rho, g_ls)
        psi, rho, f_val, cache, merit = psi_next, rho_next, f_new, cache_new, merit_new
        g = obj.gradient(rho, cache)
        g_eff = effective_gradient(g, psi)
        g_ls = search_gradient(g_eff)
        s_val = stationarity(rho, g, adm, cv)
        trace.add_row(f_val, alpha, mu, kkt_val, s_val, bt, obj.evaluation_count, rho)
        trace.iterations = k + 1
        alpha_prev = alpha
        if kkt_first is None:
            kkt_first = kkt_val

        if cfg.stop_on == "kkt":
            threshold = cfg.tol if cfg.tol_mode == "absolute" else cfg.tol * kkt_first
            if kkt_val <= threshold:
                trace.converged = True
                trace.stop_reason = "kkt_tol"
                break
        else:
            if s_val <= cfg.tol:
                trace.converged = True
                trace.stop_reason = "stationarity_tol"
                break
    if not trace.converged:
        trace.stop_reason = "max_iters"
    trace.final_density = rho
    trace.final_latent = psi
    return trace
