"""Composite tensor Gauss-Legendre quadrature on rectangles and cell grids.

All integrals in the package go through :func:`integrate_cells`, which applies
one composite rule per cell of a tensor grid of cell edges.  A whole box is
the one-cell special case.  Refinement doubles the number of panels per cell
axis until two successive estimates agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import BoxDomain

# Rows of integrand values evaluated at once; bounds peak memory.
_CHUNK_ELEMENTS = 1 << 21


class QuadratureError(RuntimeError):
    """Refinement hit the panel cap before reaching the requested tolerance."""

    def __init__(self, message, best_estimate, achieved, panels):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved = achieved
        self.panels = panels


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings.

    ``points`` is the Gauss order per panel and axis, ``panels`` the starting
    number of panels per axis (per cell for grid integrals).  Refinement stops
    once successive estimates differ by at most ``rel_tol`` relative, or by
    ``rel_tol * area * sup`` absolute, the fallback that lets integrands with
    jumps terminate.  Setting ``max_panels == panels`` selects a fixed rule
    with no refinement.
    """

    points: int = 8
    panels: int = 1
    rel_tol: float = 1e-12
    max_panels: int = 256

    def __post_init__(self):
        if not 1 <= int(self.points) <= 16:
            raise ValueError(f"points must be in 1..16, got {self.points}")
        if int(self.panels) < 1:
            raise ValueError("panels must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if int(self.max_panels) < int(self.panels):
            raise ValueError("max_panels must be >= panels")

    @property
    def fixed(self) -> bool:
        return self.max_panels == self.panels


@lru_cache(maxsize=None)
def _reference_rule(points: int):
    nodes, weights = np.polynomial.legendre.leggauss(points)
    return (nodes + 1.0) / 2.0, weights / 2.0


def composite_rule(edges, panels: int, points: int):
    """Nodes and weights of a composite rule on each interval of ``edges``.

    Returns arrays of shape ``(len(edges) - 1, panels * points)``.
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    width = (hi - lo) / panels
    t, w = _reference_rule(points)
    starts = lo[:, None] + width[:, None] * np.arange(panels)[None, :]
    nodes = starts[:, :, None] + width[:, None, None] * t[None, None, :]
    weights = np.broadcast_to(width[:, None, None] * w[None, None, :], nodes.shape)
    n = len(lo)
    return nodes.reshape(n, -1), np.ascontiguousarray(weights).reshape(n, -1)


def _evaluate_level(integrand, x_edges, y_edges, panels, points, cellwise):
    """Weighted cell means of ``integrand`` at one refinement level.

    Each mean is taken relative to the integrand's value at the first node of
    its cell, so an integrand that is constant on a cell returns that
    constant exactly.
    """
    xn, _ = composite_rule(x_edges, panels, points)
    yn, _ = composite_rule(y_edges, panels, points)
    _, w = _reference_rule(points)
    frac = np.tile(w, panels) / panels
    n1, q = xn.shape
    n2, qy = yn.shape
    y_flat = yn.ravel()
    cells_per_chunk = max(1, _CHUNK_ELEMENTS // max(1, q * y_flat.size))
    out = np.empty((n1, n2))
    sup = 0.0
    for i0 in range(0, n1, cells_per_chunk):
        i1 = min(n1, i0 + cells_per_chunk)
        X = xn[i0:i1].reshape(-1)[:, None]
        Y = y_flat[None, :]
        if cellwise:
            I = np.repeat(np.arange(i0, i1), q)[:, None]
            J = np.repeat(np.arange(n2), qy)[None, :]
            X, Y, I, J = np.broadcast_arrays(X, Y, I, J)
            F = np.asarray(integrand(X, Y, I, J), dtype=float)
        else:
            X, Y = np.broadcast_arrays(X, Y)
            F = np.asarray(integrand(X, Y), dtype=float)
        F = np.broadcast_to(F, X.shape)
        if not np.all(np.isfinite(F)):
            k = np.flatnonzero(~np.isfinite(F).ravel())[0]
            raise ValueError(
                f"non-finite integrand at ({X.ravel()[k]!r}, {Y.ravel()[k]!r})"
            )
        sup = max(sup, float(np.max(np.abs(F))) if F.size else 0.0)
        F = F.reshape(i1 - i0, q, n2, qy)
        ref = F[:, 0, :, 0]
        out[i0:i1] = ref + np.einsum("a,b,iajb->ij", frac, frac, F - ref[:, None, :, None])
    return out, sup


def integrate_cells(
    integrand,
    x_edges,
    y_edges,
    spec: QuadratureSpec | None = None,
    *,
    start_panels: int | None = None,
    cellwise: bool = False,
    means: bool = False,
):
    """Integrate ``integrand`` over every cell of a tensor grid.

    Parameters
    ----------
    integrand : callable
        ``integrand(x, y)``; with ``cellwise=True`` it is called as
        ``integrand(x, y, i, j)`` where ``i, j`` are the cell indices of each
        node, so per-cell constants can enter the integrand.
    x_edges, y_edges : array_like
        Cell edges along each axis (``n1 + 1`` and ``n2 + 1`` values).
    spec : QuadratureSpec
    start_panels : int, optional
        First refinement level, overriding ``spec.panels`` (never below it).
    means : bool
        Return cell means instead of cell integrals.  Means of an integrand
        that is constant on a cell are exact.

    Returns
    -------
    values : ndarray, shape (n1, n2)
        Cell integrals (or means), indexed ``[i, j]`` with ``i`` along x.
    panels : int
        Panels per cell axis of the returned estimate.
    """
    spec = spec or QuadratureSpec()
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    panels = max(spec.panels, start_panels or spec.panels)
    panels = min(panels, spec.max_panels)
    areas = np.outer(np.diff(x_edges), np.diff(y_edges))

    def result(m):
        return m if means else m * areas

    prev, sup = _evaluate_level(integrand, x_edges, y_edges, panels, spec.points, cellwise)
    if panels >= spec.max_panels:
        return result(prev), panels
    area = (x_edges[-1] - x_edges[0]) * (y_edges[-1] - y_edges[0])
    achieved = math.inf
    while 2 * panels <= spec.max_panels:
        panels *= 2
        cur, sup_cur = _evaluate_level(integrand, x_edges, y_edges, panels, spec.points, cellwise)
        sup = max(sup, sup_cur)
        diff = float(np.sum(np.abs(cur - prev) * areas))
        scale = float(np.sum(np.abs(cur) * areas))
        tol = max(spec.rel_tol * scale, spec.rel_tol * abs(area) * sup)
        achieved = diff / scale if scale > 0 else diff
        if diff <= tol:
            return result(cur), panels
        prev = cur
    raise QuadratureError(
        f"quadrature did not reach rel_tol={spec.rel_tol!r} within {spec.max_panels} "
        f"panels per axis (achieved {achieved:.3g})",
        best_estimate=result(prev),
        achieved=achieved,
        panels=panels,
    )


def integrate_box(f, box: BoxDomain, spec: QuadratureSpec | None = None) -> float:
    """Converged composite Gauss-Legendre estimate of the integral of ``f`` over ``box``."""
    try:
        values, _ = integrate_cells(
            f, [box.l1_lo, box.l1_hi], [box.l2_lo, box.l2_hi], spec
        )
    except QuadratureError as exc:
        exc.best_estimate = float(np.sum(exc.best_estimate))
        raise
    return float(values[0, 0])


def integrate_product_box(f, g, box: BoxDomain, spec: QuadratureSpec | None = None, h=None) -> float:
    """Integral of ``f * g`` (or ``f * g * h``) over ``box``."""
    if h is None:
        return integrate_box(lambda x, y: f(x, y) * g(x, y), box, spec)
    return integrate_box(lambda x, y: f(x, y) * g(x, y) * h(x, y), box, spec)


def integrate_region(f, outer: BoxDomain, inner: BoxDomain, spec: QuadratureSpec | None = None) -> float:
    """Integral of ``f`` over ``outer`` minus ``inner``, summed over frame rectangles."""
    return math.fsum(integrate_box(f, piece, spec) for piece in outer.frame(inner))


def tail_mass(rho, L: float, outer_box: BoxDomain, spec: QuadratureSpec | None = None) -> float:
    """Mass of ``rho`` inside ``outer_box`` but outside ``[-L, L]^2``.

    Computed as the difference of the two box integrals.  Small negative
    differences from rounding are clamped to zero; larger ones mean the two
    quadratures are inconsistent and raise.
    """
    spec = spec or QuadratureSpec()
    inner = BoxDomain.square(L)
    if not outer_box.contains_box(inner):
        raise ValueError(f"[-{L}, {L}]^2 is not contained in the outer box {outer_box}")
    total = integrate_box(rho, outer_box, spec)
    core = integrate_box(rho, inner, spec)
    tail = total - core
    if tail < 0:
        if tail > -10 * spec.rel_tol * abs(total):
            return 0.0
        raise ValueError(
            f"negative tail mass {tail!r} (total {total!r}, core {core!r}): inconsistent quadrature"
        )
    return tail
