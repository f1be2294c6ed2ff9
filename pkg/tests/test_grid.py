import numpy as np
import pytest

from simplopt.grid import (
    CartesianMesh,
    ElasticModel,
    assemble_cell_body_force,
    assemble_disc_load,
    assemble_filter_operators,
    assemble_self_weight,
    assemble_self_weight_operator,
    assemble_unit_stiffness,
    boundary_segment_load,
)


def sympy_unit_stiffness(nu_val, hx_val, hy_val):
    """Independent symbolic integration of the plane-stress Q1 element."""
    import sympy as sp

    xi, eta = sp.symbols("xi eta")
    nu = sp.Rational(nu_val)
    shapes = [
        (1 - xi) * (1 - eta) / 4,
        (1 + xi) * (1 - eta) / 4,
        (1 + xi) * (1 + eta) / 4,
        (1 - xi) * (1 + eta) / 4,
    ]
    hx = sp.Rational(hx_val)
    hy = sp.Rational(hy_val)
    d = sp.Matrix([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]]) / (1 - nu**2)
    b = sp.zeros(3, 8)
    for i, n in enumerate(shapes):
        dnx = sp.diff(n, xi) * 2 / hx
        dny = sp.diff(n, eta) * 2 / hy
        b[0, 2 * i] = dnx
        b[1, 2 * i + 1] = dny
        b[2, 2 * i] = dny
        b[2, 2 * i + 1] = dnx
    integrand = b.T * d * b * hx * hy / 4
    k = sp.integrate(sp.integrate(integrand, (xi, -1, 1)), (eta, -1, 1))
    return np.array(k, dtype=float)


class TestUnitStiffness:
    def test_rigid_body_modes(self):
        k0 = assemble_unit_stiffness(0.3, 0.5, 0.5)
        tx = np.tile([1.0, 0.0], 4)
        ty = np.tile([0.0, 1.0], 4)
        # infinitesimal rotation (-y, x) at the 4 corners of a hx x hy cell
        corners = np.array([[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]])
        rot = np.column_stack([-corners[:, 1], corners[:, 0]]).ravel()
        for mode in (tx, ty, rot):
            np.testing.assert_allclose(k0 @ mode, 0.0, atol=1e-12)

    def test_corner_entry_closed_form(self):
        nu = 0.3
        k0 = assemble_unit_stiffness(nu, 1.0, 1.0)
        assert k0[0, 0] == pytest.approx((0.5 - nu / 6.0) / (1.0 - nu**2), abs=1e-14)

    def test_symmetry(self):
        k0 = assemble_unit_stiffness(0.25, 0.7, 0.3)
        np.testing.assert_array_equal(k0, k0.T)

    @pytest.mark.parametrize("nu,hx,hy", [(0.3, 1.0, 1.0), (0.2, 2.0, 1.0), (0.0, 0.5, 1.5)])
    def test_against_symbolic_oracle(self, nu, hx, hy):
        k0 = assemble_unit_stiffness(nu, hx, hy)
        np.testing.assert_allclose(k0, sympy_unit_stiffness(nu, hx, hy), atol=1e-13)

    def test_invalid_poisson_ratio(self):
        with pytest.raises(ValueError):
            assemble_unit_stiffness(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            assemble_unit_stiffness(-0.1, 1.0, 1.0)


class TestMesh:
    def test_counts(self):
        mesh = CartesianMesh(4, 3, 2.0, 1.0)
        assert mesh.n_cells == 12
        assert mesh.n_nodes == 20
        assert mesh.n_dofs == 40
        assert mesh.hx == pytest.approx(0.5)
        assert mesh.hy == pytest.approx(1.0 / 3.0)

    def test_cell_nodes_ccw(self):
        mesh = CartesianMesh(2, 2, 2.0, 2.0)
        # cell (ix=1, iy=0): nodes BL=1, BR=2, TR=5, TL=4
        np.testing.assert_array_equal(mesh.cell_nodes[1], [1, 2, 5, 4])
        coords = mesh.node_coords[mesh.cell_nodes[1]]
        # counterclockwise: positive shoelace area
        x, y = coords[:, 0], coords[:, 1]
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        assert area == pytest.approx(mesh.cell_area)

    def test_cell_average_of_linear_field(self):
        mesh = CartesianMesh(5, 4, 1.0, 1.0)
        nodal = 2.0 * mesh.node_coords[:, 0] - 3.0 * mesh.node_coords[:, 1]
        expected = 2.0 * mesh.cell_centers[:, 0] - 3.0 * mesh.cell_centers[:, 1]
        np.testing.assert_allclose(mesh.cell_average(nodal), expected, atol=1e-14)

    def test_volume_refinement(self):
        for nx, ny in [(6, 2), (12, 4)]:
            mesh = CartesianMesh(nx, ny, 3.0, 1.0)
            assert np.sum(mesh.cell_volumes()) == pytest.approx(3.0, abs=1e-12)


class TestFilterOperators:
    def test_epsilon_value(self):
        mesh = CartesianMesh(8, 8, 1.0, 1.0)
        ops = assemble_filter_operators(mesh, 0.02)
        assert ops.epsilon == pytest.approx(5.7735e-3, rel=1e-4)

    def test_diffusion_annihilates_constants(self):
        mesh = CartesianMesh(7, 5, 2.0, 1.0)
        ops = assemble_filter_operators(mesh, 0.1)
        np.testing.assert_allclose(ops.A @ np.ones(mesh.n_nodes), 0.0, atol=1e-12)

    def test_mass_traces_domain(self):
        mesh = CartesianMesh(9, 4, 3.0, 1.0)
        ops = assemble_filter_operators(mesh, 0.05)
        assert np.sum(ops.M) == pytest.approx(3.0, abs=1e-12)
        # N row sums match the lumped nodal measure (Mtilde row sums)
        np.testing.assert_allclose(
            np.asarray(ops.N.sum(axis=1)).ravel(),
            np.asarray(ops.Mtilde.sum(axis=1)).ravel(),
            atol=1e-13,
        )

    def test_mtilde_spd(self):
        mesh = CartesianMesh(4, 3, 1.0, 1.0)
        ops = assemble_filter_operators(mesh, 0.05)
        dense = ops.Mtilde.toarray()
        np.testing.assert_allclose(dense, dense.T, atol=1e-15)
        assert np.min(np.linalg.eigvalsh(dense)) > 0.0

    def test_invalid_radius(self):
        with pytest.raises(ValueError):
            assemble_filter_operators(CartesianMesh(2, 2, 1.0, 1.0), 0.0)


def _clamped_left_model(nx=1, ny=1, **kwargs):
    mesh = CartesianMesh(nx, ny, 1.0 * nx, 1.0 * ny)
    mask = np.zeros(mesh.n_dofs, dtype=bool)
    left = np.isclose(mesh.node_coords[:, 0], 0.0)
    mask[0::2] = left
    mask[1::2] = left
    return ElasticModel(mesh, mask, **kwargs)


class TestElasticModel:
    def test_single_cell_clamped_spd(self):
        model = _clamped_left_model(1, 1)
        k = model.assemble_stiffness(np.ones(1)).toarray()
        free = ~model.dirichlet_mask
        eigs = np.linalg.eigvalsh(k[np.ix_(free, free)])
        assert free.sum() == 4
        assert np.min(eigs) > 0.0

    def test_linearity_in_stiffness(self):
        model = _clamped_left_model(3, 2)
        k1 = model.assemble_stiffness(np.ones(6)).toarray()
        k2 = model.assemble_stiffness(2.0 * np.ones(6)).toarray()
        free = ~model.dirichlet_mask
        np.testing.assert_allclose(
            k2[np.ix_(free, free)], 2.0 * k1[np.ix_(free, free)], atol=1e-13
        )
        # eliminated rows keep the unit diagonal
        fixed = np.flatnonzero(model.dirichlet_mask)
        np.testing.assert_allclose(k2[fixed, fixed], 1.0)

    def test_spring_on_diagonal(self):
        mesh = CartesianMesh(2, 2, 1.0, 1.0)
        mask = np.zeros(mesh.n_dofs, dtype=bool)
        mask[:2] = True
        base = ElasticModel(mesh, mask).assemble_stiffness(np.ones(4)).toarray()
        springy = ElasticModel(mesh, mask, springs={7: 0.25}).assemble_stiffness(
            np.ones(4)
        ).toarray()
        diff = springy - base
        assert diff[7, 7] == pytest.approx(0.25)
        diff[7, 7] = 0.0
        np.testing.assert_allclose(diff, 0.0, atol=1e-15)

    def test_global_symmetry(self):
        model = _clamped_left_model(4, 3)
        rng = np.random.default_rng(2)
        k = model.assemble_stiffness(rng.uniform(0.5, 2.0, 12))
        asym = (k - k.T)
        assert abs(asym).max() == 0.0

    def test_global_null_space_without_bcs(self):
        mesh = CartesianMesh(3, 2, 1.5, 1.0)
        model = ElasticModel(mesh, np.zeros(mesh.n_dofs, dtype=bool))
        k = model.assemble_stiffness(np.ones(mesh.n_cells))
        coords = mesh.node_coords
        tx = np.zeros(mesh.n_dofs)
        tx[0::2] = 1.0
        ty = np.zeros(mesh.n_dofs)
        ty[1::2] = 1.0
        rot = np.zeros(mesh.n_dofs)
        rot[0::2] = -coords[:, 1]
        rot[1::2] = coords[:, 0]
        scale = abs(k).max()
        for mode in (tx, ty, rot):
            assert np.max(np.abs(k @ mode)) <= 1e-10 * scale


class TestSelfWeight:
    def test_zero_density(self):
        mesh = CartesianMesh(3, 3, 1.0, 1.0)
        g = assemble_self_weight(mesh, np.zeros(mesh.n_nodes), 9.81)
        np.testing.assert_array_equal(g, 0.0)

    def test_total_weight(self):
        mesh = CartesianMesh(4, 4, 1.0, 1.0)
        g = assemble_self_weight(mesh, np.ones(mesh.n_nodes), 9.81)
        assert np.sum(g[1::2]) == pytest.approx(-9.81, abs=1e-12)
        np.testing.assert_array_equal(g[0::2], 0.0)

    def test_interior_node_hand_assembly(self):
        mesh = CartesianMesh(2, 2, 1.0, 1.0)
        c = 0.37
        g = assemble_self_weight(mesh, np.full(mesh.n_nodes, c), 9.81)
        # center node (1,1) is shared by 4 cells of area 1/4
        center = 1 * 3 + 1
        assert g[2 * center + 1] == pytest.approx(-9.81 * c * 0.25, abs=1e-13)

    def test_operator_linearity(self):
        mesh = CartesianMesh(3, 2, 1.0, 1.0)
        w = assemble_self_weight_operator(mesh, 5.0)
        rng = np.random.default_rng(4)
        rt = rng.uniform(0, 1, mesh.n_nodes)
        np.testing.assert_allclose(w @ (2 * rt), 2 * (w @ rt), atol=1e-14)


class TestLoads:
    def test_band_pressure_total(self):
        mesh = CartesianMesh(8, 8, 2.0, 1.0)
        band = mesh.cell_centers[:, 1] >= 0.875
        f = assemble_cell_body_force(mesh, band, (0.0, -40.0))
        area = band.sum() * mesh.cell_area
        assert np.sum(f[1::2]) == pytest.approx(-40.0 * area, abs=1e-12)

    def test_empty_region_raises(self):
        mesh = CartesianMesh(4, 4, 1.0, 1.0)
        with pytest.raises(ValueError):
            assemble_cell_body_force(mesh, np.zeros(16, dtype=bool), (0.0, -1.0))

    def test_disc_load_total_matches_disc_area(self):
        # quarter disc of radius 0.05 at the top-left corner
        mesh = CartesianMesh(192, 64, 3.0, 1.0)
        f = assemble_disc_load(mesh, (0.0, 1.0), 0.05, (0.0, -1.0))
        quarter_area = np.pi * 0.05**2 / 4.0
        assert np.sum(f[1::2]) == pytest.approx(-quarter_area, rel=2e-3)
        np.testing.assert_array_equal(f[0::2], 0.0)
        # support stays near the corner
        loaded = np.flatnonzero(f[1::2])
        coords = mesh.node_coords[loaded]
        assert np.all(np.hypot(coords[:, 0], coords[:, 1] - 1.0) <= 0.05 + 2 * mesh.hx)

    def test_disc_load_outside_raises(self):
        mesh = CartesianMesh(4, 4, 1.0, 1.0)
        with pytest.raises(ValueError):
            assemble_disc_load(mesh, (10.0, 10.0), 0.01, (0.0, -1.0))

    def test_boundary_segment_consistent_weights(self):
        mesh = CartesianMesh(8, 8, 1.0, 0.5)
        f, dofs, w = boundary_segment_load(mesh, "left", 0.25, 0.125, (1.0, 0.0))
        assert np.sum(w) == pytest.approx(0.125, abs=1e-12)
        assert np.sum(f[0::2]) == pytest.approx(0.125, abs=1e-12)
        np.testing.assert_array_equal(f[1::2], 0.0)
        # centered on the top corner: only the lower half of the segment lies
        # inside the domain
        f2, _, w2 = boundary_segment_load(mesh, "left", 0.5, 0.25, (1.0, 0.0))
        assert np.sum(w2) == pytest.approx(0.125, abs=1e-12)
