"""Builtin analytic fields with exact norms.

Every constructor returns a :class:`ScalarField` whose ``norm_data`` is
derived by hand; the derivation sits in each docstring.  Derivative norms of
fields restricted to a box are taken on the open box, which is what the cell
estimates use when the grid box equals the support box.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import BoxDomain, NormData, ScalarField

# exp(-R^2) < 1e-21 beyond R = 7 widths
_GAUSSIAN_EXTENT = 7.0


def _box(box) -> BoxDomain:
    return box if isinstance(box, BoxDomain) else BoxDomain(*box)


def constant(value: float = 1.0, box=(0.0, 1.0, 0.0, 1.0)) -> ScalarField:
    """``value`` on ``box``, 0 elsewhere.  sup = |c|, l1 = |c| * area, derivatives 0."""
    box = _box(box)
    c = float(value)
    return ScalarField(
        lambda x, y: np.full(np.shape(x), c),
        support_hint=box,
        norm_data=NormData(l1=abs(c) * box.area(), sup=abs(c), dx_sup=0.0, dy_sup=0.0),
        name="constant",
    )


def linear(c0: float = 0.0, cx: float = 1.0, cy: float = 0.0, box=(0.0, 1.0, 0.0, 1.0)) -> ScalarField:
    """``c0 + cx*x + cy*y`` on ``box``.

    The sup is attained at a corner.  When the function keeps one sign on
    the box, l1 = |value at the box centre| * area (the mean of an affine
    function is its centre value); otherwise l1 is left for estimation.
    """
    box = _box(box)
    c0, cx, cy = float(c0), float(cx), float(cy)
    corners = [c0 + cx * x + cy * y for x in (box.l1_lo, box.l1_hi) for y in (box.l2_lo, box.l2_hi)]
    one_sign = min(corners) >= 0 or max(corners) <= 0
    xc = (box.l1_lo + box.l1_hi) / 2
    yc = (box.l2_lo + box.l2_hi) / 2
    l1 = abs(c0 + cx * xc + cy * yc) * box.area() if one_sign else None
    return ScalarField(
        lambda x, y: c0 + cx * x + cy * y,
        support_hint=box,
        norm_data=NormData(l1=l1, sup=max(abs(v) for v in corners), dx_sup=abs(cx), dy_sup=abs(cy)),
        name="linear",
    )


def cos2_bump(amplitude: float = 1.0, center=(0.0, 0.0), half_width: float = 1.0) -> ScalarField:
    """``A cos^2(pi u / 2h) cos^2(pi v / 2h)`` for ``|u|, |v| <= h``, 0 elsewhere.

    With ``u = x - cx``, ``v = y - cy``:

    * sup = A at the centre;
    * d/dx = -(A pi / 2h) sin(pi u / h) cos^2(pi v / 2h), so |d/dx| max = A pi / 2h,
      the same for y; the bump is C^1 across the edge of its support;
    * each 1D factor integrates to h over ``[-h, h]``, so l1 = A h^2.
    """
    A, h = float(amplitude), float(half_width)
    cx, cy = map(float, center)
    k = math.pi / (2 * h)

    def f(x, y):
        return A * np.cos(k * (x - cx)) ** 2 * np.cos(k * (y - cy)) ** 2

    return ScalarField(
        f,
        support_hint=BoxDomain.square(h, (cx, cy)),
        norm_data=NormData(l1=abs(A) * h * h, sup=abs(A), dx_sup=abs(A) * k, dy_sup=abs(A) * k),
        name="cos2_bump",
    )


def cos2_periodic(amplitude: float = 1.0, center=(0.0, 0.0), half_width: float = 1.0) -> ScalarField:
    """The bump formula extended to the whole plane (periodic, not integrable).

    sup = A and derivative sups A pi / 2h as for :func:`cos2_bump`; l1 is
    infinite and left unset.
    """
    A, h = float(amplitude), float(half_width)
    cx, cy = map(float, center)
    k = math.pi / (2 * h)
    return ScalarField(
        lambda x, y: A * np.cos(k * (x - cx)) ** 2 * np.cos(k * (y - cy)) ** 2,
        norm_data=NormData(sup=abs(A), dx_sup=abs(A) * k, dy_sup=abs(A) * k),
        name="cos2_periodic",
    )


def cos_product(kx: float = 1.0, ky: float = 1.0, amplitude: float = 1.0) -> ScalarField:
    """``A cos(kx x) cos(ky y)``: sup = A, |d/dx| max = A |kx|, |d/dy| max = A |ky|."""
    A, kx, ky = float(amplitude), float(kx), float(ky)
    return ScalarField(
        lambda x, y: A * np.cos(kx * x) * np.cos(ky * y),
        norm_data=NormData(sup=abs(A), dx_sup=abs(A * kx), dy_sup=abs(A * ky)),
        name="cos_product",
    )


def gaussian(amplitude: float = 1.0, center=(0.0, 0.0), width: float = 1.0) -> ScalarField:
    """``A exp(-((x-cx)^2 + (y-cy)^2) / s^2)``.

    * sup = A, l1 = A pi s^2;
    * |d/dx| = A (2|u|/s^2) exp(-u^2/s^2) exp(-v^2/s^2) peaks at v = 0,
      u = s/sqrt(2), giving A sqrt(2) exp(-1/2) / s.
    """
    A, s = float(amplitude), float(width)
    cx, cy = map(float, center)
    d = abs(A) * math.sqrt(2.0) * math.exp(-0.5) / s
    return ScalarField(
        lambda x, y: A * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (s * s)),
        norm_data=NormData(l1=abs(A) * math.pi * s * s, sup=abs(A), dx_sup=d, dy_sup=d),
        extent=BoxDomain.square(_GAUSSIAN_EXTENT * s, (cx, cy)),
        name="gaussian",
    )


def cauchy(amplitude: float = 1.0, center=(0.0, 0.0), scale: float = 1.0) -> ScalarField:
    """``A / (1 + r^2/s^2)^2``, a density with algebraic tails.

    * sup = A; in polar coordinates l1 = A pi s^2;
    * |d/dx| peaks on y = 0 at u = x/s = 1/sqrt(5), value
      4 A u / (s (1+u^2)^3) = 125 A / (54 sqrt(5) s).
    """
    A, s = float(amplitude), float(scale)
    cx, cy = map(float, center)
    d = abs(A) * 125.0 / (54.0 * math.sqrt(5.0) * s)
    return ScalarField(
        lambda x, y: A / (1.0 + ((x - cx) ** 2 + (y - cy) ** 2) / (s * s)) ** 2,
        norm_data=NormData(l1=abs(A) * math.pi * s * s, sup=abs(A), dx_sup=d, dy_sup=d),
        name="cauchy",
    )


def disk_indicator(radius: float = 0.7, center=(0.0, 0.0), amplitude: float = 1.0) -> ScalarField:
    """``A`` on the closed disk, 0 elsewhere: sup = A, l1 = A pi r^2.

    Not weakly differentiable with bounded derivatives, so derivative norms
    are left unset.
    """
    r, A = float(radius), float(amplitude)
    cx, cy = map(float, center)
    return ScalarField(
        lambda x, y: np.where((x - cx) ** 2 + (y - cy) ** 2 <= r * r, A, 0.0),
        support_hint=BoxDomain.square(r, (cx, cy)),
        norm_data=NormData(l1=abs(A) * math.pi * r * r, sup=abs(A)),
        name="disk_indicator",
    )


def box_indicator(box=(-0.5, 0.5, -0.5, 0.5), amplitude: float = 1.0) -> ScalarField:
    """``A`` on ``box``, 0 elsewhere: sup = A, l1 = A * area."""
    box = _box(box)
    A = float(amplitude)
    return ScalarField(
        lambda x, y: np.full(np.shape(x), A),
        support_hint=box,
        norm_data=NormData(l1=abs(A) * box.area(), sup=abs(A)),
        name="box_indicator",
    )


BUILTINS = {
    "constant": constant,
    "linear": linear,
    "cos2_bump": cos2_bump,
    "cos2_periodic": cos2_periodic,
    "cos_product": cos_product,
    "gaussian": gaussian,
    "cauchy": cauchy,
    "disk_indicator": disk_indicator,
    "box_indicator": box_indicator,
}


def make_builtin(name: str, **params) -> ScalarField:
    """Construct a builtin field by name; unknown names or parameters raise ValueError."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown field {name!r}; builtins are {', '.join(sorted(BUILTINS))}"
        ) from None
    try:
        field = factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for field {name!r}: {exc}") from None
    return field
