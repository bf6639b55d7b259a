"""Choice of the square ``[-L, L]^2`` that leaves at most ``eps`` of the mass outside."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fields import BoxDomain, ScalarField
from .quadrature import QuadratureSpec, integrate_box

MAX_DOUBLINGS = 20


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TruncationResult:
    L: float
    achieved_tail: float
    eps: float
    bracket: tuple[float, float]

    def box(self) -> BoxDomain:
        return BoxDomain.square(self.L)

    def as_lines(self) -> list[str]:
        return [
            f"L={self.L!r}",
            f"achieved_tail={self.achieved_tail!r}",
            f"eps={self.eps!r}",
            f"bracket_lo={self.bracket[0]!r}",
            f"bracket_hi={self.bracket[1]!r}",
        ]


class _SquareMass:
    """Mass inside ``[-L, L]^2``, accumulated over dyadic square annuli.

    Integrating each annulus separately keeps the panels resolving the field
    near the origin no matter how large ``L`` gets.
    """

    def __init__(self, rho, spec):
        self.rho = rho
        self.spec = spec
        self._rings: dict[float, float] = {}

    def _piece(self, inner: float, outer: float) -> float:
        outer_box = BoxDomain.square(outer)
        if inner <= 0:
            return integrate_box(self.rho, outer_box, self.spec)
        return math.fsum(
            integrate_box(self.rho, piece, self.spec)
            for piece in outer_box.frame(BoxDomain.square(inner))
        )

    def __call__(self, L: float) -> float:
        parts = []
        lo = 0.0
        hi = min(1.0, L)
        while True:
            key = (lo, hi)
            if hi == 2 * lo or (lo == 0.0 and hi == 1.0):
                if key not in self._rings:
                    self._rings[key] = self._piece(lo, hi)
                parts.append(self._rings[key])
            else:
                parts.append(self._piece(lo, hi))
            if hi >= L:
                break
            lo, hi = hi, min(2 * hi, L)
        return math.fsum(parts)


def find_truncation_L(
    rho: ScalarField,
    eps: float,
    total_mass: float | None = None,
    resolution: float = 1e-3,
    spec: QuadratureSpec | None = None,
) -> TruncationResult:
    """Near-smallest ``L`` with mass of ``rho`` outside ``[-L, L]^2`` at most ``eps``.

    Doubles ``L`` from 1 until the tail drops to ``eps`` or below, then bisects
    the last bracket down to ``resolution``.  The tail is ``total_mass`` minus
    the mass inside the square; ``total_mass`` defaults to the field's
    analytic l1 norm, or to its integral over the declared support or extent.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps!r}")
    if not resolution > 0:
        raise ValueError(f"resolution must be > 0, got {resolution!r}")
    spec = spec or QuadratureSpec()
    if total_mass is None:
        total_mass = rho.norm_data.l1
    if total_mass is None:
        region = rho.integration_box()
        if region is None:
            raise TruncationError(
                f"total mass of {rho.name!r} unknown: supply total_mass or declare support/extent"
            )
        total_mass = integrate_box(rho, region, spec)
    mass_in = _SquareMass(rho, spec)
    clamp = 10 * spec.rel_tol * max(total_mass, 1e-300)

    def tail(L):
        t = total_mass - mass_in(L)
        if t < 0:
            if t < -clamp:
                raise TruncationError(
                    f"mass inside [-{L}, {L}]^2 exceeds total mass by {-t!r}: "
                    "total_mass is inconsistent with the field"
                )
            return 0.0
        return t

    lo, hi = 0.0, 1.0
    t_hi = tail(hi)
    doublings = 0
    while t_hi > eps:
        if doublings >= MAX_DOUBLINGS:
            raise TruncationError(
                f"tail mass still {t_hi!r} > eps={eps!r} at L={hi!r} (cap 2^{MAX_DOUBLINGS})"
            )
        lo, hi = hi, 2 * hi
        t_hi = tail(hi)
        doublings += 1
    if hi == 1.0:
        return TruncationResult(1.0, t_hi, eps, (0.0, 1.0))
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        t_mid = tail(mid)
        if t_mid <= eps:
            hi, t_hi = mid, t_mid
        else:
            lo = mid
    return TruncationResult(hi, t_hi, eps, (lo, hi))
