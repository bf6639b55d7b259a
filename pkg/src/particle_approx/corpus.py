"""Reference problems shared by the self-test and the test suite.

Each case pairs a density with a test function and a weight on a grid box.
Smooth cases have analytic norms throughout; indicator cases have jumps, so
they come with a fixed quadrature rule under which both sides of an exact
identity see the same nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import BoxDomain, NormData, ScalarField
from .library import box_indicator, cos2_bump, cos2_periodic, cos_product, disk_indicator, gaussian, linear
from .quadrature import QuadratureSpec

SMOOTH_SPEC = QuadratureSpec()
INDICATOR_SPEC = QuadratureSpec(points=4, panels=8, max_panels=8)


@dataclass(frozen=True)
class CorpusCase:
    name: str
    rho: ScalarField
    phi: ScalarField
    omega: ScalarField
    box: BoxDomain
    spec: QuadratureSpec


def sin_product(box=(0.0, 1.0, 0.0, 1.0)) -> ScalarField:
    """``sin(pi x) sin(pi y)`` on the unit square: sup 1, derivative sups pi, l1 = 4/pi^2."""
    return ScalarField(
        lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
        support_hint=BoxDomain(*box),
        norm_data=NormData(l1=4 / math.pi**2, sup=1.0, dx_sup=math.pi, dy_sup=math.pi),
        name="sin_product",
    )


def smooth_corpus() -> list[CorpusCase]:
    phi = cos_product(1.0, 2.0)
    omega = cos2_periodic(half_width=1.5)
    unit = BoxDomain(0.0, 1.0, 0.0, 1.0)
    return [
        CorpusCase("bump", cos2_bump(), cos2_bump(), cos2_bump(), BoxDomain.square(1.0), SMOOTH_SPEC),
        CorpusCase("gaussian", gaussian(), phi, omega, BoxDomain.square(3.0), SMOOTH_SPEC),
        CorpusCase("affine", linear(1.0, 1.0, 1.0, unit), gaussian(center=(0.3, 0.4), width=0.5), omega, unit, SMOOTH_SPEC),
        CorpusCase("sin_product", sin_product(), phi, omega, unit, SMOOTH_SPEC),
        CorpusCase(
            "shifted_bump",
            cos2_bump(center=(0.5, 0.5), half_width=0.5),
            phi,
            omega,
            BoxDomain(-1.0, 3.0, 0.0, 1.0),
            SMOOTH_SPEC,
        ),
    ]


def indicator_corpus() -> list[CorpusCase]:
    phi = cos_product(1.0, 2.0)
    omega = cos2_periodic(half_width=1.5)
    square = BoxDomain.square(1.0)
    return [
        CorpusCase("disk", disk_indicator(0.7), phi, omega, square, INDICATOR_SPEC),
        CorpusCase("box", box_indicator((-0.3, 0.5, -0.2, 0.4)), phi, omega, square, INDICATOR_SPEC),
    ]
