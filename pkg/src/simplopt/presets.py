"""Benchmark problem presets: MBB beam, self-weighted bridge, force inverter.

Each builder returns a fully assembled Problem (mesh, reduced objective,
admissible set, optimizer defaults, optional non-uniform start).  The inverter
is meshed on the lower half of its square domain with symmetry rollers on the
midline; fields are mirrored back to the full domain only when writing output.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fields import AdmissibleParams, DensityField
from .grid import (
    CartesianMesh,
    ElasticModel,
    assemble_cell_body_force,
    assemble_disc_load,
    assemble_filter_operators,
    boundary_segment_load,
)
from .physics import MechanismParams, ReducedObjective
from .simpl import SimplConfig

__all__ = ["Problem", "PRESET_NAMES", "build_problem", "mirror_cell_field", "mirror_point_field"]

PRESET_NAMES = ("mbb", "bridge", "inverter", "custom")

_DEFAULT_RESOLUTION = {
    "mbb": (768, 256),
    "bridge": (1024, 512),
    "inverter": (512, 256),
    "custom": (768, 256),
}


@dataclass
class Problem:
    name: str
    mesh: CartesianMesh
    objective: ReducedObjective
    adm: AdmissibleParams
    simpl_defaults: SimplConfig
    rho0: DensityField | None = None
    mirror_y: bool = False


def _edge_nodes(mesh: CartesianMesh, edge: str) -> np.ndarray:
    c = mesh.node_coords
    if edge == "left":
        return np.flatnonzero(np.isclose(c[:, 0], 0.0))
    if edge == "right":
        return np.flatnonzero(np.isclose(c[:, 0], mesh.lx))
    if edge == "bottom":
        return np.flatnonzero(np.isclose(c[:, 1], 0.0))
    if edge == "top":
        return np.flatnonzero(np.isclose(c[:, 1], mesh.ly))
    raise ValueError(f"unknown edge {edge!r}")


def make_mbb(
    nx: int = 768,
    ny: int = 256,
    theta: float = 0.3,
    r_min: float = 0.02,
    nu: float = 0.3,
    e_min: float = 1e-6,
    e_max: float = 1.0,
    penal: float = 3.0,
    load_radius: float = 0.05,
    state_tol: float = 1e-8,
    filter_tol: float = 1e-10,
) -> Problem:
    """Half MBB beam on [0,3]x[0,1]: symmetry rollers on the left edge, a
    horizontal roller at the bottom-right corner, and a downward unit force
    density on the disc of radius load_radius around the top-left corner."""
    mesh = CartesianMesh(nx, ny, 3.0, 1.0)
    mask = np.zeros(mesh.n_dofs, dtype=bool)
    mask[2 * _edge_nodes(mesh, "left")] = True  # u_x = 0 (symmetry)
    mask[2 * nx + 1] = True  # u_y = 0 at node (lx, 0)
    f = assemble_disc_load(mesh, (0.0, 1.0), load_radius, (0.0, -1.0))
    model = ElasticModel(mesh, mask, nu=nu, e_min=e_min, e_max=e_max, penal=penal, f=f)
    filters = assemble_filter_operators(mesh, r_min)
    obj = ReducedObjective(
        "compliance", model, filters, state_tol=state_tol, filter_tol=filter_tol
    )
    adm = AdmissibleParams(theta, mesh.domain_volume)
    defaults = SimplConfig(line_search="armijo", stop_on="stationarity", tol=1e-5)
    return Problem("mbb", mesh, obj, adm, defaults)


def make_bridge(
    nx: int = 1024,
    ny: int = 512,
    theta: float = 0.7,
    r_min: float = 0.02,
    nu: float = 0.3,
    gravity: float = 9.81,
    deck_force: float = 40.0,
    state_tol: float = 1e-8,
    filter_tol: float = 1e-10,
) -> Problem:
    """Self-weighted bridge on [0,2]x[0,1]: symmetry rollers on the left edge,
    a pin at the bottom-right corner, a passive solid band y >= 1 - 2^-5
    carrying a downward force density of magnitude deck_force, plus the
    density-proportional self-weight."""
    mesh = CartesianMesh(nx, ny, 2.0, 1.0)
    mask = np.zeros(mesh.n_dofs, dtype=bool)
    mask[2 * _edge_nodes(mesh, "left")] = True  # u_x = 0 (symmetry)
    mask[2 * nx] = True  # pin at node (lx, 0)
    mask[2 * nx + 1] = True
    band = mesh.cell_centers[:, 1] >= 1.0 - 2.0**-5
    f = assemble_cell_body_force(mesh, band, (0.0, -deck_force))
    model = ElasticModel(mesh, mask, nu=nu, f=f, passive_cells=band)
    filters = assemble_filter_operators(mesh, r_min)
    obj = ReducedObjective(
        "self_weight",
        model,
        filters,
        gravity=gravity,
        state_tol=state_tol,
        filter_tol=filter_tol,
    )
    adm = AdmissibleParams(theta, mesh.domain_volume)
    defaults = SimplConfig(
        line_search="bregman", stop_on="kkt", tol_mode="relative", tol=1e-5
    )
    return Problem("bridge", mesh, obj, adm, defaults)


def make_inverter(
    nx: int = 512,
    ny: int = 256,
    theta: float = 0.3,
    r_min: float = 0.02,
    nu: float = 0.3,
    k_in: float = 1.0,
    k_out: float = 0.0005,
    port_length: float = 1.0 / 64.0,
    initial: str = "uniform",
    state_tol: float = 1e-8,
    filter_tol: float = 1e-10,
) -> Problem:
    """Force inverter, lower half of the unit square with symmetry rollers on
    the midline.  The input port (left edge, on the midline) takes an inward
    x-force through a spring k_in; the output port (right edge) works against
    a spring k_out, displacement measured opposite to the input force.  Ports
    are segments of length port_length centered on the midline; the half model
    carries their lower halves."""
    if initial not in ("uniform", "strip-center", "strip-bottom"):
        raise ValueError(f"unknown initial design {initial!r}")
    mesh = CartesianMesh(nx, ny, 1.0, 0.5)
    mask = np.zeros(mesh.n_dofs, dtype=bool)
    mask[2 * _edge_nodes(mesh, "top") + 1] = True  # u_y = 0 (symmetry midline)
    mask[0] = True  # pin at (0, 0): the domain's left corner
    mask[1] = True
    d_in, in_dofs, in_w = boundary_segment_load(mesh, "left", mesh.ly, port_length, (1.0, 0.0))
    r_out, out_dofs, out_w = boundary_segment_load(mesh, "right", mesh.ly, port_length, (-1.0, 0.0))
    springs: dict[int, float] = {}
    for d, wgt in zip(in_dofs, in_w):
        springs[int(d)] = springs.get(int(d), 0.0) + k_in / port_length * wgt
    for d, wgt in zip(out_dofs, out_w):
        springs[int(d)] = springs.get(int(d), 0.0) + k_out / port_length * wgt
    model = ElasticModel(mesh, mask, nu=nu, springs=springs)
    filters = assemble_filter_operators(mesh, r_min)
    mech = MechanismParams(k_in, k_out, port_length, d_in, r_out)
    obj = ReducedObjective(
        "mechanism",
        model,
        filters,
        mechanism=mech,
        state_tol=state_tol,
        filter_tol=filter_tol,
    )
    adm = AdmissibleParams(theta, mesh.domain_volume)
    defaults = SimplConfig(
        line_search="bregman", stop_on="kkt", tol=5e-5, kkt_variant="B", max_iters=1000
    )
    rho0 = None
    if initial != "uniform":
        mid = (0.5, mesh.ly) if initial == "strip-center" else (0.5, 0.0)
        rho0 = _strip_initial(mesh, adm, [(0.0, mesh.ly), mid, (1.0, mesh.ly)])
    return Problem("inverter", mesh, obj, adm, defaults, rho0=rho0, mirror_y=True)


def _strip_initial(
    mesh: CartesianMesh,
    adm: AdmissibleParams,
    polyline: list[tuple[float, float]],
    strip_density: float = 0.9,
    half_width_cells: float = 1.0,
) -> DensityField:
    """Seed design: density strips along a polyline over a background value
    solving the volume budget, clipped to [0.01, 0.99]."""
    centers = mesh.cell_centers
    half_width = half_width_cells * max(mesh.hx, mesh.hy)
    on_strip = np.zeros(mesh.n_cells, dtype=bool)
    for (x0, y0), (x1, y1) in zip(polyline[:-1], polyline[1:]):
        a = np.array([x0, y0])
        b = np.array([x1, y1])
        ab = b - a
        denom = float(ab @ ab)
        t = np.clip(((centers - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else 0.0
        closest = a + np.outer(t, ab) if denom > 0 else np.broadcast_to(a, centers.shape)
        dist = np.linalg.norm(centers - closest, axis=1)
        on_strip |= dist <= half_width
    cv = mesh.cell_volumes()
    v_strip = float(np.sum(cv[on_strip]))
    background = (adm.volume_budget - strip_density * v_strip) / (adm.domain_volume - v_strip)
    values = np.full(mesh.n_cells, background)
    values[on_strip] = strip_density
    return DensityField(np.clip(values, 0.01, 0.99), cv)


def make_custom(
    nx: int = 768,
    ny: int = 256,
    theta: float = 0.3,
    r_min: float = 0.02,
    lx: float = 3.0,
    ly: float = 1.0,
    load_radius: float = 0.05,
    **kwargs,
) -> Problem:
    """MBB-style compliance problem with configurable domain extents."""
    mesh = CartesianMesh(nx, ny, lx, ly)
    mask = np.zeros(mesh.n_dofs, dtype=bool)
    mask[2 * _edge_nodes(mesh, "left")] = True
    mask[2 * nx + 1] = True
    f = assemble_disc_load(mesh, (0.0, ly), load_radius, (0.0, -1.0))
    model = ElasticModel(mesh, mask, nu=kwargs.get("nu", 0.3), f=f)
    filters = assemble_filter_operators(mesh, r_min)
    obj = ReducedObjective(
        "compliance",
        model,
        filters,
        state_tol=kwargs.get("state_tol", 1e-8),
        filter_tol=kwargs.get("filter_tol", 1e-10),
    )
    adm = AdmissibleParams(theta, mesh.domain_volume)
    defaults = SimplConfig(line_search="armijo", stop_on="stationarity", tol=1e-5)
    return Problem("custom", mesh, obj, adm, defaults)


def build_problem(name: str, nx: int | None = None, ny: int | None = None, **kwargs) -> Problem:
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown problem preset {name!r}; choose from {PRESET_NAMES}")
    dnx, dny = _DEFAULT_RESOLUTION[name]
    nx = dnx if nx is None else nx
    ny = dny if ny is None else ny
    builder = {
        "mbb": make_mbb,
        "bridge": make_bridge,
        "inverter": make_inverter,
        "custom": make_custom,
    }[name]
    return builder(nx=nx, ny=ny, **kwargs)


def mirror_cell_field(values_2d: np.ndarray) -> np.ndarray:
    """Reflect a (ny, nx) cell field about its top edge to the full domain."""
    return np.vstack([values_2d, values_2d[::-1]])


def mirror_point_field(values_2d: np.ndarray, odd: bool = False) -> np.ndarray:
    """Reflect a (ny+1, nx+1) nodal field about its top row; the shared row is
    not duplicated.  ``odd`` negates the mirrored half (for y-displacements)."""
    top = values_2d[-2::-1]
    return np.vstack([values_2d, -top if odd else top])
