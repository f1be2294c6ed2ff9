"""Design/latent field containers and the entropy machinery shared by all optimizers.

The design density rho lives in [0, 1] cell-wise; the latent variable psi is its
logit-space image, rho = sigmoid(psi).  The (negative) Fermi-Dirac entropy
``phi(rho) = sum_i M_ii [rho_i ln rho_i + (1 - rho_i) ln(1 - rho_i)]`` generates
the Bregman divergence used by the mirror-descent update and the Bregman line
search, where M is the diagonal cell-volume (mass) matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

__all__ = [
    "DensityField",
    "LatentField",
    "AdmissibleParams",
    "DEFAULT_CLAMP_BOUND",
    "sigmoid",
    "logit",
    "fermi_dirac_entropy",
    "bregman_divergence",
    "weighted_inner",
]

# Largest round bound keeping sigmoid(+-bound) strictly inside (0, 1) in
# float64: expit(x) rounds to exactly 1.0 for x >= 36.75, which would break
# strict feasibility and the Bregman-divergence domain on saturated cells.
DEFAULT_CLAMP_BOUND = 36.0


@dataclass
class DensityField:
    """Piecewise-constant design density: one value per cell plus cell volumes."""

    values: np.ndarray
    cell_volumes: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.cell_volumes = np.asarray(self.cell_volumes, dtype=float)
        if self.values.shape != self.cell_volumes.shape:
            raise ValueError("values and cell_volumes must have matching shape")
        if np.any(self.cell_volumes <= 0.0):
            raise ValueError("cell volumes must be positive")

    @property
    def domain_volume(self) -> float:
        return float(np.sum(self.cell_volumes))

    def volume(self) -> float:
        """Material volume 1^T M rho."""
        return float(np.sum(self.cell_volumes * self.values))

    def with_values(self, values: np.ndarray) -> "DensityField":
        return DensityField(values, self.cell_volumes)


@dataclass
class LatentField:
    """Unbounded logit-space representation of a density field."""

    values: np.ndarray
    clamp_bound: float = DEFAULT_CLAMP_BOUND

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.clamp_bound <= 0.0:
            raise ValueError("clamp_bound must be positive")

    def clamped(self) -> "LatentField":
        return LatentField(
            np.clip(self.values, -self.clamp_bound, self.clamp_bound),
            self.clamp_bound,
        )

    def density(self, cell_volumes: np.ndarray) -> DensityField:
        return DensityField(sigmoid(self.values), cell_volumes)


@dataclass(frozen=True)
class AdmissibleParams:
    """Volume-fraction bound theta on a domain of measure domain_volume."""

    theta: float
    domain_volume: float

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie strictly between 0 and 1")
        if self.domain_volume <= 0.0:
            raise ValueError("domain_volume must be positive")

    @property
    def volume_budget(self) -> float:
        return self.theta * self.domain_volume


def sigmoid(x):
    """Logistic sigmoid 1 / (1 + exp(-x)), overflow-safe for large |x|.

    Evaluated through exp of a nonpositive argument on either branch.  (Not
    scipy's expit: its vectorized path loses precision for some inputs.)
    """
    x = np.asarray(x, dtype=float)
    t = np.exp(-np.abs(x))
    out = np.where(x >= 0.0, 1.0 / (1.0 + t), t / (1.0 + t))
    return out if out.ndim else float(out)


def logit(rho):
    """Inverse sigmoid ln(rho / (1 - rho)); requires 0 < rho < 1 strictly.

    Evaluated as log(rho) - log1p(-rho): for rho in [1/2, 1) the subtraction
    1 - rho is exact in binary floating point, so the result is accurate to
    the resolution the input value itself carries.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0) or np.any(rho >= 1.0):
        raise ValueError("logit requires densities strictly inside (0, 1)")
    out = np.log(rho) - np.log1p(-rho)
    return out if out.ndim else float(out)


def fermi_dirac_entropy(rho: DensityField) -> float:
    """Negative Fermi-Dirac entropy, weighted by cell volumes.

    Uses the convention 0 * ln 0 = 0 so binary densities give exactly 0;
    the value is <= 0 everywhere else.
    """
    v = rho.values
    # xlogy-style evaluation via rel_entr with the uniform reference 1.
    terms = rel_entr(v, np.ones_like(v)) + rel_entr(1.0 - v, np.ones_like(v))
    return float(np.sum(rho.cell_volumes * terms))


def bregman_divergence(rho: DensityField, q: DensityField) -> float:
    """Bregman divergence generated by the Fermi-Dirac entropy.

    Reduces to a volume-weighted sum of binary Kullback-Leibler terms,
    sum_i M_ii [rho ln(rho/q) + (1-rho) ln((1-rho)/(1-q))].  Nonnegative,
    zero iff rho == q.  The second argument must stay strictly inside (0, 1).
    """
    qv = q.values
    if np.any(qv <= 0.0) or np.any(qv >= 1.0):
        raise ValueError("bregman_divergence: reference point must be interior")
    v = rho.values
    terms = rel_entr(v, qv) + rel_entr(1.0 - v, 1.0 - qv)
    return float(np.sum(rho.cell_volumes * terms))


def weighted_inner(a, b, cell_volumes) -> float:
    """Discrete L2 pairing a^T M b with diagonal M given by cell volumes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("weighted_inner: length mismatch")
    return float(np.sum(cell_volumes * a * b))
