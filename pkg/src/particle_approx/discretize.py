"""Cell-average discretization of initial data on a uniform N x N grid.

The density is replaced by its mean over every cell of the box ``C_L`` and
set to zero outside.  The particle attached to cell ``(i, j)`` sits at the
lower-left node ``(x_i, y_j)``; test functions are anchored there too in the
error decompositions.  Matrices are indexed ``[i, j]`` with ``i`` the x-cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import BoxDomain, ScalarField
from .quadrature import QuadratureSpec, integrate_cells, integrate_region

DENSITY = "density"
QUANTITY_PRODUCT = "quantity_product"


class DiscretizationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    box: BoxDomain
    n: int
    x_nodes: np.ndarray
    y_nodes: np.ndarray

    @property
    def cell_area(self) -> float:
        return self.box.delta1() * self.box.delta2() / self.n**2

    @property
    def hmax(self) -> float:
        """``max(delta1, delta2) / N``."""
        return max(self.box.delta1(), self.box.delta2()) / self.n

    def cell_of(self, x, y):
        """Cell indices of points, ``-1`` where the point is outside the box.

        Cells are half-open on the right except the last column and row,
        which are closed so the whole box is covered.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        i = np.searchsorted(self.x_nodes, x, side="right") - 1
        j = np.searchsorted(self.y_nodes, y, side="right") - 1
        i = np.where(x == self.x_nodes[-1], self.n - 1, i)
        j = np.where(y == self.y_nodes[-1], self.n - 1, j)
        inside = self.box.contains(x, y)
        return np.where(inside, i, -1), np.where(inside, j, -1)


def make_grid(box: BoxDomain, n: int) -> Grid:
    """Uniform grid with nodes ``l_lo + k * delta / n``; endpoints assigned exactly."""
    if int(n) != n or n < 1:
        raise DiscretizationError(f"N must be a positive integer, got {n!r}")
    n = int(n)
    k = np.arange(n + 1)
    xs = box.l1_lo + k * (box.delta1() / n)
    ys = box.l2_lo + k * (box.delta2() / n)
    xs[0], xs[-1] = box.l1_lo, box.l1_hi
    ys[0], ys[-1] = box.l2_lo, box.l2_hi
    xs.setflags(write=False)
    ys.setflags(write=False)
    return Grid(box, n, xs, ys)


class PiecewiseConstantField:
    """Field equal to ``values[i, j]`` on cell ``(i, j)`` and zero off the grid box.

    ``quad_panels`` records the quadrature level the values were computed
    with, so later integrals against the same cells can start there.
    """

    def __init__(self, grid: Grid, values, kind: str = DENSITY, quad_panels: int | None = None):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n, grid.n):
            raise DiscretizationError(
                f"values must have shape ({grid.n}, {grid.n}), got {values.shape}"
            )
        if kind not in (DENSITY, QUANTITY_PRODUCT):
            raise DiscretizationError(f"unknown kind {kind!r}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.kind = kind
        self.quad_panels = quad_panels

    def __call__(self, x, y):
        i, j = self.grid.cell_of(x, y)
        inside = i >= 0
        out = np.zeros(np.broadcast(i, j).shape)
        out[inside] = self.values[i[inside], j[inside]]
        return out

    def mass(self) -> float:
        """``sum(values) * cell_area``, summed with ``math.fsum``."""
        return math.fsum(self.values.ravel()) * self.grid.cell_area

    def as_field(self) -> ScalarField:
        return ScalarField(self, support_hint=self.grid.box, name=f"pc_{self.kind}")


def _cell_averages(f, grid: Grid, spec: QuadratureSpec | None, start_panels=None):
    return integrate_cells(
        f, grid.x_nodes, grid.y_nodes, spec, start_panels=start_panels, means=True
    )


def cell_averages(f, grid: Grid, spec: QuadratureSpec | None = None) -> np.ndarray:
    """Mean of ``f`` over every grid cell (``a_ij`` for a density, ``W_ij`` for a quantity)."""
    return _cell_averages(f, grid, spec)[0]


def build_density_approx(rho: ScalarField, grid: Grid, spec: QuadratureSpec | None = None) -> PiecewiseConstantField:
    """Piecewise-constant density from the cell averages of ``rho``.

    Raises if a cell average is negative beyond rounding, which means the
    input violates ``rho >= 0``.
    """
    spec = spec or QuadratureSpec()
    values, panels = _cell_averages(rho, grid, spec)
    floor = -max(1e-12, spec.rel_tol) * max(1.0, float(np.max(np.abs(values))))
    if values.min() < floor:
        i, j = np.unravel_index(np.argmin(values), values.shape)
        raise DiscretizationError(
            f"negative cell average {values[i, j]!r} in cell ({i}, {j}): density must be >= 0"
        )
    return PiecewiseConstantField(grid, values, DENSITY, quad_panels=panels)


def build_quantity_approx(rho_avgs, omega_avgs, grid: Grid) -> PiecewiseConstantField:
    """Cellwise product ``a_ij * W_ij``."""
    rho_avgs = np.asarray(rho_avgs, dtype=float)
    omega_avgs = np.asarray(omega_avgs, dtype=float)
    if rho_avgs.shape != omega_avgs.shape:
        raise DiscretizationError(
            f"dimension mismatch: {rho_avgs.shape} vs {omega_avgs.shape}"
        )
    return PiecewiseConstantField(grid, rho_avgs * omega_avgs, QUANTITY_PRODUCT)


def weak_integral(pc: PiecewiseConstantField, phi, spec: QuadratureSpec | None = None) -> float:
    """Integral of ``pc * phi`` as a sum of value times cell integral of ``phi``."""
    cell_int, _ = integrate_cells(
        phi, pc.grid.x_nodes, pc.grid.y_nodes, spec, start_panels=pc.quad_panels
    )
    return math.fsum((pc.values * cell_int).ravel())


def covering_box(grid: Grid, rho: ScalarField, phi: ScalarField | None = None, outer_box: BoxDomain | None = None) -> BoxDomain:
    """Box over which reference integrals of ``rho * phi`` are taken.

    It contains the grid box and everything carrying mass of ``rho * phi``:
    an explicit ``outer_box`` wins; otherwise ``rho``'s support (or
    negligible-mass extent), clipped to ``phi``'s support when both are known.
    """
    if outer_box is not None:
        return grid.box.union(outer_box)
    rho_box = rho.integration_box()
    phi_box = getattr(phi, "support_hint", None)
    if rho_box is not None and phi_box is not None:
        region = rho_box.intersection(phi_box)
    elif rho_box is not None or phi_box is not None:
        region = rho_box or phi_box
    else:
        raise DiscretizationError(
            f"cannot bound the support of {rho.name!r}; declare support_hint or extent, "
            "or pass outer_box"
        )
    return grid.box if region is None else grid.box.union(region)


def reference_integral(integrand, grid: Grid, outer: BoxDomain, spec: QuadratureSpec | None = None, start_panels=None) -> float:
    """Integral of ``integrand`` over ``outer``, cell-aligned inside the grid box.

    Aligning panels with grid cells keeps discontinuities of the
    piecewise-constant approximation on panel edges.
    """
    inside, _ = integrate_cells(
        integrand, grid.x_nodes, grid.y_nodes, spec, start_panels=start_panels
    )
    total = math.fsum(inside.ravel())
    if outer != grid.box:
        total += integrate_region(integrand, outer, grid.box, spec)
    return total


def _product(*fs):
    def integrand(x, y):
        out = fs[0](x, y)
        for g in fs[1:]:
            out = out * g(x, y)
        return out

    return integrand


def weak_error_density(rho, pc, phi, spec=None, outer_box=None) -> float:
    """``|int pc*phi - int rho*phi|`` with the reference over the covering box."""
    outer = covering_box(pc.grid, rho, phi, outer_box)
    approx = weak_integral(pc, phi, spec)
    ref = reference_integral(_product(rho, phi), pc.grid, outer, spec, pc.quad_panels)
    return abs(approx - ref)


def weak_error_quantity(rho, omega, pcq, phi, spec=None, outer_box=None) -> float:
    """``|int pcq*phi - int rho*omega*phi|`` with the reference over the covering box."""
    outer = covering_box(pcq.grid, rho, phi, outer_box)
    approx = weak_integral(pcq, phi, spec)
    ref = reference_integral(_product(rho, omega, phi), pcq.grid, outer, spec, pcq.quad_panels)
    return abs(approx - ref)


def _node_values(phi, grid: Grid) -> np.ndarray:
    X, Y = np.meshgrid(grid.x_nodes[:-1], grid.y_nodes[:-1], indexing="ij")
    return np.asarray(phi(X, Y), dtype=float)


def decomposition_residual(rho, grid: Grid, phi, spec=None, outer_box=None) -> float:
    """Residual of the exact error decomposition for the density.

    The weak error equals minus the integral of ``rho * phi`` outside the
    grid box plus the sum over cells of the integral of
    ``(a_ij - rho) * (phi - phi(x_i, y_j))``.  Both sides are computed by
    separate quadratures and the absolute difference is returned.
    """
    pc = build_density_approx(rho, grid, spec)
    outer = covering_box(grid, rho, phi, outer_box)
    lhs = weak_integral(pc, phi, spec) - reference_integral(
        _product(rho, phi), grid, outer, spec, pc.quad_panels
    )
    a = pc.values
    phin = _node_values(phi, grid)

    def cell_term(x, y, i, j):
        return (a[i, j] - rho(x, y)) * (phi(x, y) - phin[i, j])

    cells, _ = integrate_cells(
        cell_term, grid.x_nodes, grid.y_nodes, spec, start_panels=pc.quad_panels, cellwise=True
    )
    tail = integrate_region(_product(rho, phi), outer, grid.box, spec) if outer != grid.box else 0.0
    rhs = -tail + math.fsum(cells.ravel())
    return abs(lhs - rhs)


def quantity_decomposition_residual(rho, omega, grid: Grid, phi, spec=None, outer_box=None) -> float:
    """Residual of the exact error decomposition for the quantity ``rho * omega``.

    The quantity weak error equals::

        - int_{outside} rho*omega*phi
        + sum_ij int_cell rho * (W_ij - omega) * phi
        + sum_ij W_ij int_cell (a_ij - rho) * (phi - phi(x_i, y_j))

    The middle term keeps the full ``phi``; anchoring it at the node alone
    drops ``sum_ij int_cell rho * (W_ij - omega) * (phi - phi(x_i, y_j))``,
    which is O(1/N^2) but not zero.
    """
    pc = build_density_approx(rho, grid, spec)
    a = pc.values
    W, _ = _cell_averages(omega, grid, spec, pc.quad_panels)
    pcq = build_quantity_approx(a, W, grid)
    pcq.quad_panels = pc.quad_panels
    outer = covering_box(grid, rho, phi, outer_box)
    rwp = _product(rho, omega, phi)
    lhs = weak_integral(pcq, phi, spec) - reference_integral(rwp, grid, outer, spec, pc.quad_panels)
    phin = _node_values(phi, grid)

    def cell_term(x, y, i, j):
        r = rho(x, y)
        p = phi(x, y)
        return r * (W[i, j] - omega(x, y)) * p + W[i, j] * (a[i, j] - r) * (p - phin[i, j])

    cells, _ = integrate_cells(
        cell_term, grid.x_nodes, grid.y_nodes, spec, start_panels=pc.quad_panels, cellwise=True
    )
    tail = integrate_region(rwp, outer, grid.box, spec) if outer != grid.box else 0.0
    rhs = -tail + math.fsum(cells.ravel())
    return abs(lhs - rhs)


# |phi - phi(node)| has a kink inside each cell, so Gauss rules converge
# only algebraically; 1e-6 is ample for checking an inequality.
ANCHOR_SPEC = QuadratureSpec(points=4, rel_tol=1e-6, max_panels=512)


def node_anchor_deviation(phi, grid: Grid, spec=None) -> float:
    """``sum_ij int_cell |phi - phi(x_i, y_j)|`` by quadrature."""
    spec = spec or ANCHOR_SPEC
    phin = _node_values(phi, grid)

    def integrand(x, y, i, j):
        return np.abs(phi(x, y) - phin[i, j])

    cells, _ = integrate_cells(integrand, grid.x_nodes, grid.y_nodes, spec, cellwise=True)
    return math.fsum(cells.ravel())


def node_anchor_bound(phi_norms, grid: Grid) -> float:
    """``(|dx phi| + |dy phi|) * delta1 * delta2 * max(delta1, delta2) / N``."""
    d1, d2 = grid.box.delta1(), grid.box.delta2()
    return (phi_norms.dx_sup + phi_norms.dy_sup) * d1 * d2 * max(d1, d2) / grid.n


def cell_deviation(rho, grid: Grid, averages, samples_per_cell: int = 9) -> float:
    """Max over cells and sample points of ``|a_ij - rho(x, y)|``.

    Samples form a ``samples_per_cell``-point lattice per cell axis,
    cell edges included.
    """
    t = np.linspace(0.0, 1.0, samples_per_cell)
    hx = np.diff(grid.x_nodes)
    hy = np.diff(grid.y_nodes)
    xs = grid.x_nodes[:-1, None] + hx[:, None] * t[None, :]
    ys = grid.y_nodes[:-1, None] + hy[:, None] * t[None, :]
    X = xs[:, :, None, None]
    Y = ys[None, None, :, :]
    X, Y = np.broadcast_arrays(X, Y)
    values = rho(X, Y)
    dev = np.abs(np.asarray(averages)[:, None, :, None] - values)
    return float(dev.max())


def cell_deviation_bound(rho_norms, grid: Grid) -> float:
    """``max(delta1, delta2) / N * (|dx rho| + |dy rho|)``."""
    return grid.hmax * (rho_norms.dx_sup + rho_norms.dy_sup)
