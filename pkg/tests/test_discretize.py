import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from particle_approx.bounds import BoundInputs, constant_C12, constant_K12
from particle_approx.corpus import indicator_corpus, smooth_corpus
from particle_approx.discretize import (
    DiscretizationError,
    PiecewiseConstantField,
    build_density_approx,
    build_quantity_approx,
    cell_averages,
    cell_deviation,
    cell_deviation_bound,
    decomposition_residual,
    make_grid,
    node_anchor_bound,
    node_anchor_deviation,
    quantity_decomposition_residual,
    weak_error_density,
    weak_error_quantity,
    weak_integral,
)
from particle_approx.fields import BoxDomain, ScalarField
from particle_approx.library import box_indicator, constant, cos2_bump, cos_product, linear

UNIT = BoxDomain(0.0, 1.0, 0.0, 1.0)
SQUARE = BoxDomain.square(1.0)


def x_field(box=UNIT):
    return linear(0.0, 1.0, 0.0, box)


class TestGrid:
    def test_single_cell(self):
        np.testing.assert_array_equal(make_grid(UNIT, 1).x_nodes, [0.0, 1.0])

    def test_rectangle(self):
        g = make_grid(BoxDomain(0.0, 1.0, 0.0, 2.0), 2)
        np.testing.assert_array_equal(g.x_nodes, [0.0, 0.5, 1.0])
        np.testing.assert_array_equal(g.y_nodes, [0.0, 1.0, 2.0])

    def test_symmetric(self):
        np.testing.assert_array_equal(make_grid(SQUARE, 4).x_nodes, [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_zero_cells_rejected(self):
        with pytest.raises(ValueError):
            make_grid(UNIT, 0)

    def test_endpoints_exact(self):
        g = make_grid(BoxDomain(-0.3, 0.7, 0.1, 0.2), 7)
        assert g.x_nodes[-1] == 0.7 and g.y_nodes[-1] == 0.2

    def test_cell_lookup_half_open_last_closed(self):
        g = make_grid(UNIT, 2)
        i, j = g.cell_of(np.array([0.0, 0.5, 1.0, 1.5]), np.array([0.0, 0.49, 1.0, 0.5]))
        np.testing.assert_array_equal(i, [0, 1, 1, -1])
        np.testing.assert_array_equal(j[:3], [0, 0, 1])


class TestCellAverages:
    @pytest.mark.parametrize("n", [1, 3, 8])
    def test_constant(self, n):
        a = cell_averages(constant(0.37, UNIT), make_grid(UNIT, n))
        assert np.all(a == 0.37)

    def test_linear(self):
        a = cell_averages(x_field(), make_grid(UNIT, 2))
        np.testing.assert_allclose(a, [[0.25, 0.25], [0.75, 0.75]], atol=1e-15)

    def test_indicator_area_fractions(self):
        a = cell_averages(box_indicator((0.0, 0.5, 0.0, 0.5)), make_grid(UNIT, 2))
        np.testing.assert_allclose(a, [[1.0, 0.0], [0.0, 0.0]], atol=1e-12)

    @pytest.mark.parametrize("case", smooth_corpus(), ids=lambda c: c.name)
    def test_refinement_consistency(self, case):
        coarse = cell_averages(case.rho, make_grid(case.box, 4), case.spec)
        fine = cell_averages(case.rho, make_grid(case.box, 8), case.spec)
        children = fine.reshape(4, 2, 4, 2).mean(axis=(1, 3))
        np.testing.assert_allclose(coarse, children, atol=1e-12, rtol=0)


class TestDensityApprox:
    def test_constant_reproduced(self):
        pc = build_density_approx(constant(1.0, UNIT), make_grid(UNIT, 3))
        assert np.all(pc.values == 1.0)
        assert pc(0.3, 0.9) == 1.0 and pc(1.2, 0.5) == 0.0

    def test_point_evaluation(self):
        pc = build_density_approx(x_field(), make_grid(UNIT, 2))
        assert pc(0.25, 0.9) == pytest.approx(0.25, abs=1e-15)

    def test_zero_outside(self):
        pc = build_density_approx(x_field(), make_grid(UNIT, 2))
        np.testing.assert_array_equal(pc([-0.1, 1.1, 0.5], [0.5, 0.5, -1e-9]), 0.0)

    def test_negative_density_rejected(self):
        with pytest.raises(DiscretizationError, match="negative cell average"):
            build_density_approx(linear(-1.0, 0.0, 0.0, UNIT), make_grid(UNIT, 2))

    def test_values_read_only(self):
        pc = build_density_approx(x_field(), make_grid(UNIT, 2))
        with pytest.raises(ValueError):
            pc.values[0, 0] = 3.0

    @pytest.mark.parametrize("case", smooth_corpus() + indicator_corpus(), ids=lambda c: c.name)
    @pytest.mark.parametrize("n", [1, 4, 16])
    def test_conservation_positivity_contraction(self, case, n):
        grid = make_grid(case.box, n)
        pc = build_density_approx(case.rho, grid, case.spec)
        mass = pc.mass()
        ref = float(np.sum(cell_averages(case.rho, grid, case.spec)) * grid.cell_area)
        assert abs(mass - ref) <= 1e-10 * (1 + abs(mass))
        assert pc.values.min() >= -1e-12
        assert pc.values.max() <= case.rho.norm_data.sup + 1e-12


class TestQuantityApprox:
    def test_identity_weight(self):
        a = np.arange(4.0).reshape(2, 2)
        np.testing.assert_array_equal(build_quantity_approx(a, np.ones((2, 2)), make_grid(UNIT, 2)).values, a)

    def test_single_cell(self):
        assert build_quantity_approx([[2.0]], [[3.0]], make_grid(UNIT, 1)).values[0, 0] == 6.0

    def test_linear_products(self):
        g = make_grid(UNIT, 2)
        a = cell_averages(x_field(), g)
        pcq = build_quantity_approx(a, a, g)
        np.testing.assert_allclose(pcq.values, [[0.0625, 0.0625], [0.5625, 0.5625]], atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DiscretizationError, match="dimension mismatch"):
            build_quantity_approx(np.ones((2, 2)), np.ones((3, 3)), make_grid(UNIT, 2))

    def test_weight_contraction(self):
        case = smooth_corpus()[1]
        W = cell_averages(case.omega, make_grid(case.box, 8))
        assert np.abs(W).max() <= case.omega.norm_data.sup + 1e-12


class TestWeakIntegral:
    def test_zero(self):
        pc = PiecewiseConstantField(make_grid(UNIT, 2), np.zeros((2, 2)))
        assert weak_integral(pc, cos_product()) == 0.0

    def test_area(self):
        pc = PiecewiseConstantField(make_grid(UNIT, 1), [[1.0]])
        assert weak_integral(pc, constant(1.0, UNIT)) == 1.0

    def test_mass(self):
        pc = build_density_approx(x_field(), make_grid(UNIT, 2))
        assert weak_integral(pc, constant(1.0, UNIT)) == pytest.approx(0.5, abs=1e-12)


def bump_inputs(n):
    b = cos2_bump()
    return BoundInputs(2.0, 2.0, n, b.norm_data, b.norm_data, b.norm_data)


class TestWeakError:
    def test_constant_test_function_conserves(self):
        rho = cos2_bump(center=(0.1, -0.2), half_width=0.5)
        pc = build_density_approx(rho, make_grid(SQUARE, 5))
        assert weak_error_density(rho, pc, constant(1.0, BoxDomain.square(3.0))) <= 1e-12

    def test_constant_density_exact(self):
        rho = constant(2.0, UNIT)
        pc = build_density_approx(rho, make_grid(UNIT, 4))
        assert weak_error_density(rho, pc, cos_product(3.0, 1.0)) <= 1e-12

    def test_bump_within_bound_and_positive(self):
        b = cos2_bump()
        pc = build_density_approx(b, make_grid(SQUARE, 8))
        err = weak_error_density(b, pc, b)
        assert 0 < err <= constant_C12(bump_inputs(8)) / 64

    def test_quantity_zero_weight(self):
        b = cos2_bump()
        g = make_grid(SQUARE, 4)
        zero = constant(0.0, BoxDomain.square(2.0))
        pc = build_density_approx(b, g)
        pcq = build_quantity_approx(pc.values, cell_averages(zero, g), g)
        assert weak_error_quantity(b, zero, pcq, b) == 0.0

    def test_quantity_unit_weight_matches_density(self):
        b = cos2_bump()
        g = make_grid(SQUARE, 8)
        one = constant(1.0, BoxDomain.square(2.0))
        pc = build_density_approx(b, g)
        pcq = build_quantity_approx(pc.values, cell_averages(one, g), g)
        pcq.quad_panels = pc.quad_panels
        assert weak_error_quantity(b, one, pcq, b) == pytest.approx(weak_error_density(b, pc, b), abs=1e-12)

    def test_quantity_bump_within_bound(self):
        b = cos2_bump()
        g = make_grid(SQUARE, 8)
        pc = build_density_approx(b, g)
        pcq = build_quantity_approx(pc.values, cell_averages(b, g), g)
        inputs = bump_inputs(8)
        bound = constant_K12(inputs) / 8 + constant_C12(inputs) * 1.0 / 64
        assert weak_error_quantity(b, b, pcq, b) <= bound

    def test_unbounded_rho_needs_outer_box(self):
        rho = ScalarField(lambda x, y: np.exp(-x * x - y * y))
        pc = build_density_approx(rho, make_grid(SQUARE, 2))
        with pytest.raises(DiscretizationError, match="outer_box"):
            weak_error_density(rho, pc, cos_product())


class TestDecomposition:
    @pytest.mark.parametrize("case", smooth_corpus(), ids=lambda c: c.name)
    def test_smooth(self, case):
        g = make_grid(case.box, 4)
        assert decomposition_residual(case.rho, g, case.phi, case.spec) <= 1e-9
        assert quantity_decomposition_residual(case.rho, case.omega, g, case.phi, case.spec) <= 1e-9

    @pytest.mark.parametrize("case", indicator_corpus(), ids=lambda c: c.name)
    def test_indicator(self, case):
        g = make_grid(case.box, 4)
        assert decomposition_residual(case.rho, g, case.phi, case.spec) <= 1e-7
        assert quantity_decomposition_residual(case.rho, case.omega, g, case.phi, case.spec) <= 1e-7

    def test_zero_density(self):
        zero = constant(0.0, UNIT)
        assert decomposition_residual(zero, make_grid(UNIT, 3), cos_product()) == 0.0

    def test_grid_smaller_than_support(self):
        # Mass outside the grid box enters through the tail term.
        rho = cos2_bump()
        g = make_grid(BoxDomain.square(0.5), 4)
        assert decomposition_residual(rho, g, cos_product(), outer_box=SQUARE) <= 1e-9

    @given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.integers(1, 6))
    @settings(max_examples=15, deadline=None)
    def test_random_test_functions(self, kx, ky, n):
        rho = cos2_bump()
        g = make_grid(SQUARE, n)
        phi = cos_product(kx, ky)
        assert decomposition_residual(rho, g, phi) <= 1e-9
        assert quantity_decomposition_residual(rho, cos2_bump(half_width=2.0), g, phi) <= 1e-9


class TestCellBounds:
    @pytest.mark.parametrize("case", smooth_corpus(), ids=lambda c: c.name)
    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_node_anchor(self, case, n):
        g = make_grid(case.box, n)
        assert node_anchor_deviation(case.phi, g) <= node_anchor_bound(case.phi.norm_data, g) + 1e-9

    @pytest.mark.parametrize("case", smooth_corpus(), ids=lambda c: c.name)
    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_cell_deviation(self, case, n):
        g = make_grid(case.box, n)
        a = cell_averages(case.rho, g, case.spec)
        assert cell_deviation(case.rho, g, a) <= cell_deviation_bound(case.rho.norm_data, g) + 1e-9

    def test_deviation_of_constant_is_zero(self):
        g = make_grid(UNIT, 4)
        assert cell_deviation(constant(2.0, UNIT), g, cell_averages(constant(2.0, UNIT), g)) == 0.0
        assert node_anchor_deviation(constant(2.0, UNIT), g) == 0.0
