"""Reduced objective F(rho) and its adjoint gradient for the three problem types.

Objectives
----------
compliance      F = f' u
self_weight     F = (f + g(rt))' u      with g(rt) the density-proportional weight
mechanism       F = -(k_out / L) r_out' u   (spring-and-load output displacement)

Every evaluation runs the chain: filter solve -> SIMP stiffness -> state solve
-> objective.  The gradient reverses it discretely: an adjoint displacement
solve (skipped when the objective is self-adjoint), a dual filter solve, and
the Galerkin projection onto the cell space, g = M^-1 N' y.  All derivatives
are exact for the discretized problem, so central finite differences on F
reproduce g to solver precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import DensityField
from .grid import CartesianMesh, ElasticModel, FilterOperators, assemble_self_weight_operator
from .linsolve import FILTER_TOL, STATE_TOL, cg_solve

__all__ = [
    "MechanismParams",
    "EvalCache",
    "ReducedObjective",
    "apply_filter",
    "simp_stiffness",
]


def apply_filter(
    filters: FilterOperators,
    rho_values: np.ndarray,
    tol: float = FILTER_TOL,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Nodal filtered density: solve (eps^2 A + Mt) rt = N rho."""
    rhs = filters.N @ np.asarray(rho_values, dtype=float)
    rt, _ = cg_solve(filters.system_matrix, rhs, tol=tol, x0=x0)
    return rt


def simp_stiffness(
    rho_tilde_cells: np.ndarray, e_min: float, e_max: float, penal: float
) -> np.ndarray:
    """Power-law material interpolation E = E_min + rt^p (E_max - E_min).

    Cell values are clamped to [0, 1] first; the PDE filter can overshoot the
    bounds by a tiny margin on coarse meshes.
    """
    rt = np.clip(rho_tilde_cells, 0.0, 1.0)
    return e_min + rt**penal * (e_max - e_min)


@dataclass
class MechanismParams:
    """Spring-and-load model data: port vectors and spring coefficients.

    d_in and r_out are assembled displacement-space vectors (surface integrals
    over the input/output ports in the port force directions).  The state
    equation is driven by (k_in / L) d_in and the objective reads
    -(k_out / L) r_out' u.
    """

    k_in: float
    k_out: float
    length: float
    d_in: np.ndarray
    r_out: np.ndarray


@dataclass
class EvalCache:
    """State produced by one objective evaluation, keyed to its density."""

    fingerprint: np.ndarray
    rho_tilde: np.ndarray
    rho_tilde_cells: np.ndarray
    e_cells: np.ndarray
    u: np.ndarray
    stiffness: object
    value: float

    def matches(self, rho: DensityField) -> bool:
        return self.fingerprint.shape == rho.values.shape and np.array_equal(
            self.fingerprint, rho.values
        )


class ReducedObjective:
    """Reduced-space objective with cached solves and an evaluation counter."""

    KINDS = ("compliance", "self_weight", "mechanism")

    def __init__(
        self,
        kind: str,
        model: ElasticModel,
        filters: FilterOperators,
        gravity: float = 0.0,
        mechanism: MechanismParams | None = None,
        state_tol: float = STATE_TOL,
        filter_tol: float = FILTER_TOL,
        warm_start: bool = True,
    ):
        if kind not in self.KINDS:
            raise ValueError(f"unknown objective kind {kind!r}")
        if kind == "mechanism" and mechanism is None:
            raise ValueError("mechanism objective needs MechanismParams")
        self.kind = kind
        self.model = model
        self.filters = filters
        self.gravity = gravity
        self.mechanism = mechanism
        self.state_tol = state_tol
        self.filter_tol = filter_tol
        self.warm_start = warm_start
        self.evaluation_count = 0
        self._weight_op = (
            assemble_self_weight_operator(model.mesh, gravity)
            if kind == "self_weight"
            else None
        )
        self._u_seed = None
        self._rt_seed = None
        self._y_seed = None
        self._adj_seed = None

    @property
    def mesh(self) -> CartesianMesh:
        return self.model.mesh

    @property
    def cell_volumes(self) -> np.ndarray:
        return self.filters.M

    @property
    def passive_mask(self) -> np.ndarray | None:
        return self.model.passive_cells

    def _seed(self, attr):
        return getattr(self, attr) if self.warm_start else None

    def apply_filter(self, rho_values: np.ndarray) -> np.ndarray:
        rt = apply_filter(self.filters, rho_values, tol=self.filter_tol, x0=self._seed("_rt_seed"))
        self._rt_seed = rt
        return rt

    def _rhs(self, rho_tilde: np.ndarray) -> np.ndarray:
        f = self.model.f
        if self.kind == "self_weight":
            f = f + self._weight_op @ rho_tilde
        elif self.kind == "mechanism":
            m = self.mechanism
            f = (m.k_in / m.length) * m.d_in
        return self.model.constrain_rhs(f)

    def evaluate(self, rho: DensityField) -> tuple[float, EvalCache]:
        """Objective value at rho; increments the evaluation counter."""
        mesh = self.mesh
        rt = self.apply_filter(rho.values)
        rt_cells = mesh.cell_average(rt)
        e_cells = simp_stiffness(rt_cells, self.model.e_min, self.model.e_max, self.model.penal)
        k = self.model.assemble_stiffness(e_cells)
        rhs = self._rhs(rt)
        u, _ = cg_solve(k, rhs, tol=self.state_tol, x0=self._seed("_u_seed"))
        self._u_seed = u
        if self.kind == "compliance":
            value = float(self.model.f @ u)
        elif self.kind == "self_weight":
            value = float((self.model.f + self._weight_op @ rt) @ u)
        else:
            m = self.mechanism
            value = float(-(m.k_out / m.length) * (m.r_out @ u))
        self.evaluation_count += 1
        cache = EvalCache(rho.values.copy(), rt, rt_cells, e_cells, u, k, value)
        return value, cache

    def gradient(self, rho: DensityField, cache: EvalCache) -> np.ndarray:
        """Discrete L2 gradient of the reduced objective at rho.

        Chain: adjoint solve (identity for the self-adjoint objectives), cell
        energy densities, centroid chain rule to the nodes, dual filter solve,
        then g = M^-1 N' y.
        """
        if not cache.matches(rho):
            raise ValueError("gradient: cache is stale for this density")
        mesh = self.mesh
        model = self.model
        u = cache.u
        if self.kind == "mechanism":
            m = self.mechanism
            adj_rhs = model.constrain_rhs(-(m.k_out / m.length) * m.r_out)
            lam, _ = cg_solve(cache.stiffness, adj_rhs, tol=self.state_tol, x0=self._seed("_adj_seed"))
            self._adj_seed = lam
        else:
            # K u = d(F)/du for compliance and self-weight, so lambda = u.
            lam = u
        # d(E_cell)/d(rt_cell) of the clamped power law: zero outside [0, 1]
        # where the clip saturates, or the line search sees phantom slopes on
        # overshooting cells
        rt_c = cache.rho_tilde_cells
        inside = (rt_c > 0.0) & (rt_c < 1.0)
        dsimp = np.where(
            inside,
            model.penal
            * np.clip(rt_c, 0.0, 1.0) ** (model.penal - 1.0)
            * (model.e_max - model.e_min),
            0.0,
        )
        ue = u[mesh.cell_dofs]
        le = lam[mesh.cell_dofs]
        energy = np.einsum("ij,jk,ik->i", le, model.k0, ue)
        cell_term = -dsimp * energy
        # scatter to nodes: each cell's centroid value depends on its 4 nodes
        # with weight 1/4, realized through N (entries cell_area / 4).
        btilde = self.filters.N @ (cell_term / mesh.cell_area)
        if self.kind == "self_weight":
            # rhs depends on rt and the objective reads the rhs: both terms
            # equal W' u because lambda = u.
            btilde = btilde + 2.0 * (self._weight_op.T @ u)
        y, _ = cg_solve(
            self.filters.system_matrix, btilde, tol=self.filter_tol, x0=self._seed("_y_seed")
        )
        self._y_seed = y
        df = self.filters.N.T @ y
        return df / self.filters.M
