"""Two-dimensional scalar fields, rectangular domains and norm metadata.

A :class:`ScalarField` wraps a vectorised evaluator ``f(x, y)`` that accepts
numpy arrays of matching shape.  Fields may declare a compact support box, in
which case evaluation outside the box returns exactly zero, and may carry the
analytic norms that the error bounds are built from.  When norms are missing
they can be estimated on a sampling lattice; estimated values are flagged so
reports can tell them apart from analytic ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable

import numpy as np

NORM_NAMES = ("l1", "sup", "dx_sup", "dy_sup")


class FieldEvaluationError(ValueError):
    """Raised when a field returns a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class BoxDomain:
    """Closed rectangle ``[l1_lo, l1_hi] x [l2_lo, l2_hi]``."""

    l1_lo: float
    l1_hi: float
    l2_lo: float
    l2_hi: float

    def __post_init__(self):
        for name in ("l1_lo", "l1_hi", "l2_lo", "l2_hi"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"box bound {name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not self.l1_lo < self.l1_hi:
            raise ValueError(f"need l1_lo < l1_hi, got {self.l1_lo} >= {self.l1_hi}")
        if not self.l2_lo < self.l2_hi:
            raise ValueError(f"need l2_lo < l2_hi, got {self.l2_lo} >= {self.l2_hi}")

    @classmethod
    def square(cls, half_width: float, center=(0.0, 0.0)) -> "BoxDomain":
        cx, cy = center
        return cls(cx - half_width, cx + half_width, cy - half_width, cy + half_width)

    def delta1(self) -> float:
        return self.l1_hi - self.l1_lo

    def delta2(self) -> float:
        return self.l2_hi - self.l2_lo

    def area(self) -> float:
        return self.delta1() * self.delta2()

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.l1_lo, self.l1_hi, self.l2_lo, self.l2_hi)

    def contains(self, x, y):
        """Boolean mask of points inside the closed box."""
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.l1_lo) & (x <= self.l1_hi) & (y >= self.l2_lo) & (y <= self.l2_hi)

    def contains_box(self, other: "BoxDomain") -> bool:
        return (
            self.l1_lo <= other.l1_lo
            and other.l1_hi <= self.l1_hi
            and self.l2_lo <= other.l2_lo
            and other.l2_hi <= self.l2_hi
        )

    def union(self, other: "BoxDomain") -> "BoxDomain":
        """Smallest box containing both boxes."""
        return BoxDomain(
            min(self.l1_lo, other.l1_lo),
            max(self.l1_hi, other.l1_hi),
            min(self.l2_lo, other.l2_lo),
            max(self.l2_hi, other.l2_hi),
        )

    def intersection(self, other: "BoxDomain") -> "BoxDomain | None":
        lo1, hi1 = max(self.l1_lo, other.l1_lo), min(self.l1_hi, other.l1_hi)
        lo2, hi2 = max(self.l2_lo, other.l2_lo), min(self.l2_hi, other.l2_hi)
        if lo1 < hi1 and lo2 < hi2:
            return BoxDomain(lo1, hi1, lo2, hi2)
        return None

    def frame(self, inner: "BoxDomain") -> list["BoxDomain"]:
        """Split ``self`` minus ``inner`` into at most four disjoint rectangles.

        Left and right strips span the full height of ``self``; bottom and top
        strips span the width of ``inner``.  ``inner`` must lie inside ``self``.
        """
        if not self.contains_box(inner):
            raise ValueError("inner box is not contained in the outer box")
        pieces = []
        if inner.l1_lo > self.l1_lo:
            pieces.append(BoxDomain(self.l1_lo, inner.l1_lo, self.l2_lo, self.l2_hi))
        if inner.l1_hi < self.l1_hi:
            pieces.append(BoxDomain(inner.l1_hi, self.l1_hi, self.l2_lo, self.l2_hi))
        if inner.l2_lo > self.l2_lo:
            pieces.append(BoxDomain(inner.l1_lo, inner.l1_hi, self.l2_lo, inner.l2_lo))
        if inner.l2_hi < self.l2_hi:
            pieces.append(BoxDomain(inner.l1_lo, inner.l1_hi, inner.l2_hi, self.l2_hi))
        return pieces


@dataclass(frozen=True)
class NormData:
    """Norms of a field over the whole plane.

    ``estimated`` names the entries that came from sampling rather than from
    an analytic formula.
    """

    l1: float | None = None
    sup: float | None = None
    dx_sup: float | None = None
    dy_sup: float | None = None
    estimated: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for name in NORM_NAMES:
            value = getattr(self, name)
            if value is None:
                continue
            value = float(value)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"norm {name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "estimated", frozenset(self.estimated))

    def missing(self, names: Iterable[str] = NORM_NAMES) -> list[str]:
        return [n for n in names if getattr(self, n) is None]

    def is_complete(self) -> bool:
        return not self.missing()

    def with_overrides(self, **overrides) -> "NormData":
        """Replace entries; overridden entries lose their ``estimated`` flag."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(overrides) - set(NORM_NAMES)
        if unknown:
            raise ValueError(f"unknown norm names: {sorted(unknown)}")
        return replace(self, estimated=self.estimated - set(overrides), **overrides)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name in NORM_NAMES}


class ScalarField:
    """A real function on the plane.

    Parameters
    ----------
    evaluator : callable
        ``evaluator(x, y)`` taking numpy arrays (broadcastable) and returning
        an array of the broadcast shape.
    support_hint : BoxDomain, optional
        Declared compact support.  Evaluation outside it returns 0.
    norm_data : NormData, optional
        Known norms of the field.
    extent : BoxDomain, optional
        Box outside which the field is negligible for integration purposes.
        Unlike ``support_hint`` this is not a claim of compact support.
    name : str
        Label used in reports.
    """

    def __init__(
        self,
        evaluator: Callable,
        support_hint: BoxDomain | None = None,
        norm_data: NormData | None = None,
        extent: BoxDomain | None = None,
        name: str = "field",
    ):
        self.evaluator = evaluator
        self.support_hint = support_hint
        self.norm_data = norm_data if norm_data is not None else NormData()
        self.extent = extent
        self.name = name

    @classmethod
    def from_pointwise(cls, func: Callable[[float, float], float], **kwargs) -> "ScalarField":
        """Wrap a scalar ``func(x, y) -> float`` that does not accept arrays."""
        vec = np.vectorize(func, otypes=[float])
        return cls(lambda x, y: vec(x, y), **kwargs)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        values = np.asarray(self.evaluator(x, y), dtype=float)
        if values.shape != x.shape:
            values = np.broadcast_to(values, x.shape).astype(float)
        if self.support_hint is not None:
            values = np.where(self.support_hint.contains(x, y), values, 0.0)
        return values

    def integration_box(self) -> BoxDomain | None:
        """Box carrying all of the field's mass, if one is known."""
        return self.support_hint if self.support_hint is not None else self.extent

    def with_norms(self, norm_data: NormData) -> "ScalarField":
        return ScalarField(
            self.evaluator,
            support_hint=self.support_hint,
            norm_data=norm_data,
            extent=self.extent,
            name=self.name,
        )

    def __repr__(self):
        return f"ScalarField(name={self.name!r}, support_hint={self.support_hint!r})"


def _check_finite(values, x, y):
    bad = ~np.isfinite(values)
    if bad.any():
        k = np.flatnonzero(bad.ravel())[0]
        px, py = float(np.ravel(x)[k]), float(np.ravel(y)[k])
        raise FieldEvaluationError(
            f"non-finite value {np.ravel(values)[k]!r} at ({px!r}, {py!r})", point=(px, py)
        )


def sample_lattice(box: BoxDomain, samples_per_axis: int):
    """Tensor lattice including the box corners, as ``(X, Y)`` in ij order."""
    if samples_per_axis < 2:
        raise ValueError("samples_per_axis must be >= 2")
    xs = np.linspace(box.l1_lo, box.l1_hi, samples_per_axis)
    ys = np.linspace(box.l2_lo, box.l2_hi, samples_per_axis)
    return np.meshgrid(xs, ys, indexing="ij")


def estimate_sup_norm(f: ScalarField, box: BoxDomain, samples_per_axis: int = 257) -> float:
    """Max of ``|f|`` over a uniform lattice of the box (corners included).

    This is a lower estimate of the true sup norm.
    """
    X, Y = sample_lattice(box, samples_per_axis)
    values = f(X, Y)
    _check_finite(values, X, Y)
    return float(np.max(np.abs(values)))


def estimate_derivative_sup_norms(
    f: ScalarField, box: BoxDomain, samples_per_axis: int = 257, h: float | None = None
) -> tuple[float, float]:
    """Lattice max of ``|df/dx|`` and ``|df/dy|`` from finite differences.

    Central differences are used where the stencil stays inside the box and
    second-order one-sided differences at the edges, so the stencil never
    samples across the box boundary.  Both are exact for quadratics.
    """
    if h is None:
        h = max(box.delta1(), box.delta2()) * 1e-5
    if not h > 0:
        raise ValueError("finite-difference step h must be > 0")
    X, Y = sample_lattice(box, samples_per_axis)
    dx = _directional_difference(f, X, Y, h, box.l1_lo, box.l1_hi, axis=0)
    dy = _directional_difference(f, X, Y, h, box.l2_lo, box.l2_hi, axis=1)
    return float(np.max(np.abs(dx))), float(np.max(np.abs(dy)))


def _directional_difference(f, X, Y, h, lo, hi, axis):
    coord = X if axis == 0 else Y

    def shifted(s):
        if axis == 0:
            return f(X + s, Y)
        return f(X, Y + s)

    f0 = shifted(0.0)
    fp, fm = shifted(h), shifted(-h)
    fp2, fm2 = shifted(2 * h), shifted(-2 * h)
    for v in (f0, fp, fm, fp2, fm2):
        _check_finite(v, X, Y)
    central = (fp - fm) / (2 * h)
    forward = (-3 * f0 + 4 * fp - fp2) / (2 * h)
    backward = (3 * f0 - 4 * fm + fm2) / (2 * h)
    out = np.where(coord - h < lo, forward, central)
    return np.where(coord + h > hi, backward, out)


@dataclass(frozen=True)
class SamplingDefaults:
    """Resolution used when norms have to be estimated."""

    samples_per_axis: int = 257
    h: float | None = None
    quad: object = None  # QuadratureSpec; None picks the module default


def resolve_norms(
    f: ScalarField,
    box: BoxDomain,
    defaults: SamplingDefaults | None = None,
    need: Iterable[str] = NORM_NAMES,
) -> NormData:
    """Fill missing norm entries of ``f`` by estimation over ``box``.

    Supplied values pass through untouched.  Only the names in ``need`` are
    filled; estimated entries are recorded in ``NormData.estimated``.
    """
    from .quadrature import QuadratureSpec, integrate_box

    defaults = defaults or SamplingDefaults()
    norms = f.norm_data
    missing = norms.missing(need)
    if not missing:
        return norms
    filled = {}
    if "sup" in missing:
        filled["sup"] = estimate_sup_norm(f, box, defaults.samples_per_axis)
    if "dx_sup" in missing or "dy_sup" in missing:
        dx, dy = estimate_derivative_sup_norms(f, box, defaults.samples_per_axis, defaults.h)
        if "dx_sup" in missing:
            filled["dx_sup"] = dx
        if "dy_sup" in missing:
            filled["dy_sup"] = dy
    if "l1" in missing:
        quad = defaults.quad if defaults.quad is not None else QuadratureSpec()
        filled["l1"] = abs(integrate_box(lambda x, y: np.abs(f(x, y)), box, quad))
    return replace(norms, estimated=norms.estimated | set(filled), **filled)
