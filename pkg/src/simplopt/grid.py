"""Structured 2D grid, Q0/Q1 finite element spaces, and matrix/load assembly.

Conventions
-----------
* The domain is [0, lx] x [0, ly] split into nx * ny congruent cells.
* Cell (ix, iy) has index iy*nx + ix; node (ix, iy) has index iy*(nx+1) + ix.
* Each cell lists its nodes counterclockwise: bottom-left, bottom-right,
  top-right, top-left.
* Node n carries displacement DOFs 2n (x) and 2n+1 (y).

The density space is Q0 (one DOF per cell), the filtered density and each
displacement component are Q1 (one DOF per node).  All element integrals are
evaluated with 2x2 Gauss quadrature, which is exact for these integrands on
axis-aligned rectangles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CartesianMesh",
    "FemSpaces",
    "FilterOperators",
    "ElasticModel",
    "assemble_unit_stiffness",
    "assemble_filter_operators",
    "assemble_self_weight_operator",
    "assemble_self_weight",
    "assemble_cell_body_force",
    "assemble_disc_load",
    "boundary_segment_load",
]

_GAUSS = 1.0 / np.sqrt(3.0)
_GPTS = [(-_GAUSS, -_GAUSS), (_GAUSS, -_GAUSS), (_GAUSS, _GAUSS), (-_GAUSS, _GAUSS)]


def _q1_shape(xi, eta):
    """Bilinear shape functions on [-1,1]^2, ordered BL, BR, TR, TL."""
    return 0.25 * np.array(
        [
            (1 - xi) * (1 - eta),
            (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta),
            (1 - xi) * (1 + eta),
        ]
    )


def _q1_shape_grads(xi, eta):
    """Reference-coordinate gradients dN/d(xi,eta), shape (2, 4)."""
    dxi = 0.25 * np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)])
    deta = 0.25 * np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)])
    return np.vstack([dxi, deta])


@dataclass
class CartesianMesh:
    """Uniform Cartesian grid of nx x ny cells on [0, lx] x [0, ly]."""

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("mesh needs at least one cell per axis")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("domain extents must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    @property
    def domain_volume(self) -> float:
        return self.lx * self.ly

    @cached_property
    def cell_nodes(self) -> np.ndarray:
        """(n_cells, 4) node indices per cell, counterclockwise from BL."""
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        ix = ix.ravel()
        iy = iy.ravel()
        bl = iy * (self.nx + 1) + ix
        return np.column_stack([bl, bl + 1, bl + self.nx + 2, bl + self.nx + 1]).astype(np.int32)

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        """(n_cells, 8) displacement DOFs per cell: (ux, uy) per node."""
        nodes = self.cell_nodes
        dofs = np.empty((self.n_cells, 8), dtype=np.int32)
        dofs[:, 0::2] = 2 * nodes
        dofs[:, 1::2] = 2 * nodes + 1
        return dofs

    @cached_property
    def node_coords(self) -> np.ndarray:
        """(n_nodes, 2) node coordinates, x fastest."""
        x = np.linspace(0.0, self.lx, self.nx + 1)
        y = np.linspace(0.0, self.ly, self.ny + 1)
        xx, yy = np.meshgrid(x, y)
        return np.column_stack([xx.ravel(), yy.ravel()])

    @cached_property
    def cell_centers(self) -> np.ndarray:
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        cx = (ix.ravel() + 0.5) * self.hx
        cy = (iy.ravel() + 0.5) * self.hy
        return np.column_stack([cx, cy])

    def cell_volumes(self) -> np.ndarray:
        return np.full(self.n_cells, self.cell_area)

    def cell_average(self, nodal: np.ndarray) -> np.ndarray:
        """Centroid value of a Q1 field on each cell (mean of its 4 nodes)."""
        return nodal[self.cell_nodes].mean(axis=1)


@dataclass(frozen=True)
class FemSpaces:
    """DOF counts of the density (Q0), filtered (Q1), and displacement spaces."""

    n_density: int
    n_filtered: int
    n_displacement: int
    dirichlet_mask: np.ndarray

    @staticmethod
    def for_mesh(mesh: CartesianMesh, dirichlet_mask: np.ndarray) -> "FemSpaces":
        mask = np.asarray(dirichlet_mask, dtype=bool)
        if mask.shape != (mesh.n_dofs,):
            raise ValueError("dirichlet mask must have one entry per displacement DOF")
        return FemSpaces(mesh.n_cells, mesh.n_nodes, mesh.n_dofs, mask)


def assemble_unit_stiffness(nu: float, hx: float, hy: float) -> np.ndarray:
    """Element stiffness of a bilinear plane-stress rectangle at unit Young modulus.

    2x2 Gauss integration (exact here).  DOF order (ux0, uy0, ..., ux3, uy3)
    with nodes counterclockwise from the bottom-left corner.
    """
    if not 0.0 <= nu < 0.5:
        raise ValueError("Poisson ratio must satisfy 0 <= nu < 0.5")
    if hx <= 0 or hy <= 0:
        raise ValueError("cell sizes must be positive")
    d = np.array(
        [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]]
    ) / (1.0 - nu**2)
    k0 = np.zeros((8, 8))
    detj = hx * hy / 4.0
    for xi, eta in _GPTS:
        g = _q1_shape_grads(xi, eta)
        dndx = 2.0 / hx * g[0]
        dndy = 2.0 / hy * g[1]
        b = np.zeros((3, 8))
        b[0, 0::2] = dndx
        b[1, 1::2] = dndy
        b[2, 0::2] = dndy
        b[2, 1::2] = dndx
        k0 += b.T @ d @ b * detj
    return 0.5 * (k0 + k0.T)


def _element_diffusion(hx: float, hy: float) -> np.ndarray:
    """4x4 scalar diffusion element matrix, int grad(Ni) . grad(Nj)."""
    a0 = np.zeros((4, 4))
    detj = hx * hy / 4.0
    for xi, eta in _GPTS:
        g = _q1_shape_grads(xi, eta)
        dndx = 2.0 / hx * g[0]
        dndy = 2.0 / hy * g[1]
        a0 += (np.outer(dndx, dndx) + np.outer(dndy, dndy)) * detj
    return a0


def _element_mass(hx: float, hy: float) -> np.ndarray:
    """4x4 scalar mass element matrix, int Ni Nj."""
    m0 = np.zeros((4, 4))
    detj = hx * hy / 4.0
    for xi, eta in _GPTS:
        n = _q1_shape(xi, eta)
        m0 += np.outer(n, n) * detj
    return m0


def _scatter_scalar(mesh: CartesianMesh, elem: np.ndarray) -> sp.csr_matrix:
    nodes = mesh.cell_nodes
    rows = np.repeat(nodes, 4, axis=1).ravel()
    cols = np.tile(nodes, (1, 4)).ravel()
    vals = np.tile(elem.ravel(), mesh.n_cells)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return mat.tocsr()


@dataclass
class FilterOperators:
    """Discrete operators of the PDE density filter (eps^2 A + Mt) rt = N rho.

    A is the nodal diffusion stiffness, Mt the row-sum lumped nodal mass
    matrix, N the rectangular node-by-cell mass matrix, and M the diagonal
    cell mass stored as the vector of cell volumes.  ``epsilon = r_min /
    (2 sqrt(3))``.  With the lumped mass the system matrix is an M-matrix on
    square cells, so filtered values provably stay inside the hull of the
    design values and the power law never sees out-of-range inputs.
    """

    A: sp.csr_matrix
    Mtilde: sp.csr_matrix
    N: sp.csr_matrix
    M: np.ndarray
    epsilon: float
    _system: sp.csr_matrix = field(default=None, repr=False)

    @property
    def system_matrix(self) -> sp.csr_matrix:
        """eps^2 A + Mt, cached."""
        if self._system is None:
            self._system = (self.epsilon**2 * self.A + self.Mtilde).tocsr()
        return self._system


def assemble_filter_operators(mesh: CartesianMesh, r_min: float) -> FilterOperators:
    """Assemble the PDE-filter operators for a minimum length scale r_min."""
    if r_min <= 0:
        raise ValueError("r_min must be positive")
    epsilon = r_min / (2.0 * np.sqrt(3.0))
    a = _scatter_scalar(mesh, _element_diffusion(mesh.hx, mesh.hy))
    mt_consistent = _scatter_scalar(mesh, _element_mass(mesh.hx, mesh.hy))
    lumped = np.asarray(mt_consistent.sum(axis=1)).ravel()
    mt = sp.diags(lumped, format="csr")
    # N[i, j] = integral of (node-i Q1 basis) over cell j = cell_area / 4
    # for each of the 4 nodes of cell j.
    nodes = mesh.cell_nodes
    rows = nodes.ravel()
    cols = np.repeat(np.arange(mesh.n_cells, dtype=np.int32), 4)
    vals = np.full(4 * mesh.n_cells, mesh.cell_area / 4.0)
    n = sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_nodes, mesh.n_cells)).tocsr()
    return FilterOperators(a, mt, n, mesh.cell_volumes(), epsilon)


class ElasticModel:
    """SIMP-interpolated plane-stress elasticity on a Cartesian mesh.

    Precomputes the element scatter structure once so that re-assembling the
    global stiffness for new per-cell moduli costs one fused reduction instead
    of a fresh sparse build.  Dirichlet DOFs are eliminated symmetrically
    (rows/columns zeroed, unit diagonal); optional point springs are added on
    the diagonal before elimination.
    """

    def __init__(
        self,
        mesh: CartesianMesh,
        dirichlet_mask: np.ndarray,
        nu: float = 0.3,
        e_min: float = 1e-6,
        e_max: float = 1.0,
        penal: float = 3.0,
        f: np.ndarray | None = None,
        springs: dict[int, float] | None = None,
        passive_cells: np.ndarray | None = None,
    ):
        self.mesh = mesh
        self.nu = nu
        self.e_min = e_min
        self.e_max = e_max
        self.penal = penal
        self.k0 = assemble_unit_stiffness(nu, mesh.hx, mesh.hy)
        self.spaces = FemSpaces.for_mesh(mesh, dirichlet_mask)
        self.dirichlet_mask = self.spaces.dirichlet_mask
        self.f = np.zeros(mesh.n_dofs) if f is None else np.asarray(f, dtype=float)
        self.springs = dict(springs) if springs else {}
        self.passive_cells = (
            None if passive_cells is None else np.asarray(passive_cells, dtype=bool)
        )
        self._build_scatter()

    def _build_scatter(self):
        mesh = self.mesh
        dofs = mesh.cell_dofs.astype(np.int64)
        rows = np.repeat(dofs, 8, axis=1).ravel()
        cols = np.tile(dofs, (1, 8)).ravel()
        keys = rows * mesh.n_dofs + cols
        order = np.argsort(keys, kind="stable")
        keys_sorted = keys[order]
        boundaries = np.flatnonzero(np.diff(keys_sorted)) + 1
        self._scatter_order = order
        self._reduce_starts = np.concatenate([[0], boundaries])
        unique_keys = keys_sorted[self._reduce_starts]
        u_rows = (unique_keys // mesh.n_dofs).astype(np.int32)
        u_cols = (unique_keys % mesh.n_dofs).astype(np.int32)
        nnz = unique_keys.size
        indptr = np.zeros(mesh.n_dofs + 1, dtype=np.int32)
        np.add.at(indptr, u_rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        self._indptr = indptr
        self._indices = u_cols
        # data positions to zero for symmetric Dirichlet elimination
        fixed = self.dirichlet_mask
        self._bc_zero = fixed[u_rows] | fixed[u_cols]
        diag_pos = np.flatnonzero(u_rows == u_cols)
        self._diag_pos = np.full(mesh.n_dofs, -1, dtype=np.int64)
        self._diag_pos[u_rows[diag_pos]] = diag_pos
        self._fixed_diag = self._diag_pos[fixed]
        if self.springs:
            sd = np.fromiter(self.springs.keys(), dtype=np.int64)
            sv = np.fromiter(self.springs.values(), dtype=float)
            keep = ~fixed[sd]
            self._spring_pos = self._diag_pos[sd[keep]]
            self._spring_val = sv[keep]
        else:
            self._spring_pos = np.empty(0, dtype=np.int64)
            self._spring_val = np.empty(0)

    def assemble_stiffness(self, e_cells: np.ndarray) -> sp.csr_matrix:
        """Global stiffness for per-cell moduli e_cells, BCs and springs applied."""
        e_cells = np.asarray(e_cells, dtype=float)
        if np.any(e_cells <= 0.0):
            raise ValueError("cell stiffness must be positive (>= E_min)")
        vals = np.multiply.outer(e_cells, self.k0.ravel()).ravel()
        data = np.add.reduceat(vals[self._scatter_order], self._reduce_starts)
        data[self._spring_pos] += self._spring_val
        data[self._bc_zero] = 0.0
        data[self._fixed_diag] = 1.0
        n = self.mesh.n_dofs
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(n, n))

    def constrain_rhs(self, b: np.ndarray) -> np.ndarray:
        """Zero a load vector on Dirichlet DOFs (prescribed displacement is 0)."""
        out = np.array(b, dtype=float, copy=True)
        out[self.dirichlet_mask] = 0.0
        return out


def assemble_self_weight_operator(mesh: CartesianMesh, magnitude: float) -> sp.csr_matrix:
    """Linear map W from nodal filtered density to the self-weight load vector.

    Each cell carries a downward force magnitude * rt_cell * cell_area with
    rt_cell the centroid (mean-of-nodes) value, split equally among the
    vertical DOFs of its 4 nodes.  g(rt) = W @ rt and dg/drt = W.
    """
    nodes = mesh.cell_nodes
    w = -magnitude * mesh.cell_area / 16.0
    rows = 2 * np.repeat(nodes, 4, axis=1).ravel() + 1
    cols = np.tile(nodes, (1, 4)).ravel()
    vals = np.full(rows.size, w)
    return sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_dofs, mesh.n_nodes)).tocsr()


def assemble_self_weight(mesh: CartesianMesh, rho_tilde: np.ndarray, magnitude: float) -> np.ndarray:
    """Self-weight load for a nodal filtered density (see the operator form)."""
    return assemble_self_weight_operator(mesh, magnitude) @ np.asarray(rho_tilde, dtype=float)


def assemble_cell_body_force(mesh: CartesianMesh, cell_mask: np.ndarray, force) -> np.ndarray:
    """Consistent load of a constant body-force density over a set of whole cells.

    For Q1 shape functions the integral over a full cell is cell_area/4 per
    node, so the cell load splits equally among its 4 nodes.
    """
    cell_mask = np.asarray(cell_mask, dtype=bool)
    if not cell_mask.any():
        raise ValueError("load region does not intersect the mesh")
    fx, fy = force
    f = np.zeros(mesh.n_dofs)
    nodes = mesh.cell_nodes[cell_mask].ravel()
    w = mesh.cell_area / 4.0
    np.add.at(f, 2 * nodes, fx * w)
    np.add.at(f, 2 * nodes + 1, fy * w)
    return f


def assemble_disc_load(
    mesh: CartesianMesh, center, radius: float, force, subdiv: int = 32
) -> np.ndarray:
    """Consistent load of a constant force density supported on a disc.

    Integrates force * indicator(|x - center| <= radius) against the Q1 basis
    with a tensor midpoint rule of ``subdiv`` points per direction in every
    cell overlapping the disc's bounding box.  The total load converges to
    force * (disc area inside the domain).
    """
    cx, cy = center
    fx, fy = force
    centers = mesh.cell_centers
    half = 0.5 * np.hypot(mesh.hx, mesh.hy)
    near = np.hypot(centers[:, 0] - cx, centers[:, 1] - cy) <= radius + half
    cells = np.flatnonzero(near)
    if cells.size == 0:
        raise ValueError("load region does not intersect the mesh")
    # midpoint abscissae on the reference square
    t = (np.arange(subdiv) + 0.5) / subdiv * 2.0 - 1.0
    xi, eta = np.meshgrid(t, t)
    xi = xi.ravel()
    eta = eta.ravel()
    shape = np.stack([_q1_shape(x, e) for x, e in zip(xi, eta)])  # (npts, 4)
    wq = mesh.cell_area / xi.size
    f = np.zeros(mesh.n_dofs)
    for c in cells:
        ccx, ccy = centers[c]
        px = ccx + 0.5 * mesh.hx * xi
        py = ccy + 0.5 * mesh.hy * eta
        inside = (px - cx) ** 2 + (py - cy) ** 2 <= radius**2
        if not inside.any():
            continue
        nw = shape[inside].sum(axis=0) * wq  # integral of each basis over disc
        nodes = mesh.cell_nodes[c]
        f[2 * nodes] += fx * nw
        f[2 * nodes + 1] += fy * nw
    return f


def boundary_segment_load(
    mesh: CartesianMesh, edge: str, center: float, length: float, direction
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Consistent trace load of a unit line density on a boundary segment.

    ``edge`` is one of left/right/bottom/top; ``center`` and ``length`` are
    measured along the edge.  Returns (f, dofs, weights) where weights are the
    1D integrals of the edge basis functions over the segment (so they sum to
    the segment length actually covered) and dofs are the loaded DOFs in the
    given direction component order (x then y per node, zero components
    dropped).
    """
    if edge in ("left", "right"):
        coord = mesh.node_coords[:, 1]
        on_edge = np.isclose(mesh.node_coords[:, 0], 0.0 if edge == "left" else mesh.lx)
        h = mesh.hy
        limit = mesh.ly
    elif edge in ("bottom", "top"):
        coord = mesh.node_coords[:, 0]
        on_edge = np.isclose(mesh.node_coords[:, 1], 0.0 if edge == "bottom" else mesh.ly)
        h = mesh.hx
        limit = mesh.lx
    else:
        raise ValueError(f"unknown edge {edge!r}")
    lo = max(0.0, center - 0.5 * length)
    hi = min(limit, center + 0.5 * length)
    if hi <= lo:
        raise ValueError("load region does not intersect the mesh")
    nodes = np.flatnonzero(on_edge)
    s = coord[nodes]
    # hat-function integral over [lo, hi]: piecewise-linear overlap per node
    weights = np.zeros(nodes.size)
    for k, sk in enumerate(s):
        a = max(lo, sk - h)
        b = min(hi, sk + h)
        if b <= a:
            continue
        # integrate the hat centered at sk over [a, b]
        pts = np.unique(np.clip([a, sk, b], a, b))
        acc = 0.0
        for p, q2 in zip(pts[:-1], pts[1:]):
            mid = 0.5 * (p + q2)
            acc += (1.0 - abs(mid - sk) / h) * (q2 - p)
        weights[k] = acc
    keep = weights > 0
    nodes = nodes[keep]
    weights = weights[keep]
    fx, fy = direction
    f = np.zeros(mesh.n_dofs)
    dofs = []
    vals = []
    if fx != 0.0:
        f[2 * nodes] += fx * weights
        dofs.append(2 * nodes)
        vals.append(weights)
    if fy != 0.0:
        f[2 * nodes + 1] += fy * weights
        dofs.append(2 * nodes + 1)
        vals.append(weights)
    dofs = np.concatenate(dofs) if dofs else np.empty(0, dtype=int)
    vals = np.concatenate(vals) if vals else np.empty(0)
    return f, dofs, vals
