"""Convergence studies: sweep N, measure weak errors, compare with the bounds."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import CONSTANT_NAMES, REQUIRED_NORMS, THEOREMS, TRUNCATED, BoundInputs, BoundReport, theorem_bound
from .discretize import (
    build_density_approx,
    build_quantity_approx,
    cell_averages,
    make_grid,
    weak_error_density,
    weak_error_quantity,
)
from .fields import BoxDomain, NormData, SamplingDefaults, ScalarField, resolve_norms
from .quadrature import QuadratureSpec
from .truncation import TruncationResult, find_truncation_L

log = logging.getLogger(__name__)

DEFAULT_N_VALUES = (4, 8, 16, 32, 64)
BOUND_FLOOR = 1e-9


class StudyError(RuntimeError):
    pass


@dataclass
class StudyCase:
    name: str
    theorem_id: str
    rho: ScalarField
    phi: ScalarField
    omega: ScalarField | None = None
    eps: float | None = None
    n_values: tuple = DEFAULT_N_VALUES
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    resolution: float = 1e-3
    outer_box: BoxDomain | None = None
    box: BoxDomain | None = None
    constant_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem_id not in THEOREMS:
            raise ValueError(f"unknown theorem {self.theorem_id!r}")
        self.n_values = tuple(int(n) for n in self.n_values)
        if not self.n_values:
            raise ValueError("n_values must not be empty")
        if any(n < 1 for n in self.n_values):
            raise ValueError("n_values must be positive integers")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError(f"n_values must be strictly ascending, got {list(self.n_values)}")
        if self.theorem_id in TRUNCATED:
            if self.eps is None or not self.eps > 0:
                raise ValueError(f"{self.theorem_id} requires eps > 0")
            if self.box is not None:
                raise ValueError(f"{self.theorem_id} derives its box from eps; box must be None")
        else:
            if self.rho.support_hint is None:
                raise ValueError(f"{self.theorem_id} requires compact support (rho.support_hint)")
            if self.eps is not None:
                raise ValueError(f"{self.theorem_id} takes no eps")
            if self.box is not None and not self.box.contains_box(self.rho.support_hint):
                raise ValueError(f"grid box {self.box} does not contain the support of rho")

    @property
    def variants(self) -> tuple[str, ...]:
        return ("density", "quantity") if self.omega is not None else ("density",)


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    variant: str
    measured_error: float
    bound: float
    report: BoundReport
    L: float | None = None
    eps: float | None = None
    norms_estimated: bool = False

    @property
    def ratio(self) -> float:
        return self.measured_error / self.bound if self.bound > 0 else math.inf


@dataclass(frozen=True)
class OrderEstimate:
    slope: float
    intercept: float
    r_squared: float
    n_used: int


@dataclass
class StudyResult:
    case: StudyCase
    box: BoxDomain
    records: list
    truncation: TruncationResult | None = None

    def by_variant(self, variant: str) -> list:
        return [r for r in self.records if r.variant == variant]


def _resolve_case_norms(case: StudyCase, box: BoxDomain) -> dict[str, NormData]:
    need: dict[str, set] = {}
    for variant in case.variants:
        for role, names in REQUIRED_NORMS[(case.theorem_id, variant)].items():
            need.setdefault(role, set()).update(names)
    defaults = SamplingDefaults(quad=case.quad)
    norms = {}
    for role, f in (("rho", case.rho), ("phi", case.phi), ("omega", case.omega)):
        if f is None:
            norms[role] = NormData()
            continue
        region = f.integration_box() or box
        norms[role] = resolve_norms(f, region, defaults, need=sorted(need.get(role, ())))
        if norms[role].estimated:
            log.warning("%s: estimated %s norms %s", case.name, role, sorted(norms[role].estimated))
    return norms


def study_box(case: StudyCase) -> tuple[BoxDomain, TruncationResult | None]:
    """Grid box of a case: the support box, or ``[-L, L]^2`` from truncation."""
    if case.theorem_id in TRUNCATED:
        trunc = find_truncation_L(case.rho, case.eps, resolution=case.resolution, spec=case.quad)
        return trunc.box(), trunc
    return (case.box or case.rho.support_hint), None


def _measure(case: StudyCase, box: BoxDomain, n: int, norms, L, estimated) -> list:
    grid = make_grid(box, n)
    pc = build_density_approx(case.rho, grid, case.quad)
    inputs = BoundInputs(
        delta1=box.delta1(),
        delta2=box.delta2(),
        n=n,
        rho_norms=norms["rho"],
        phi_norms=norms["phi"],
        omega_norms=norms["omega"],
        L=L,
        eps=case.eps,
    )
    out = []
    err = weak_error_density(case.rho, pc, case.phi, case.quad, case.outer_box)
    report = theorem_bound(case.theorem_id, "density", inputs, _overrides(case, "density"))
    out.append(ConvergenceRecord(n, "density", err, report.bound_value, report, L, case.eps, estimated))
    if case.omega is not None:
        W = cell_averages(case.omega, grid, case.quad)
        pcq = build_quantity_approx(pc.values, W, grid)
        pcq.quad_panels = pc.quad_panels
        err_q = weak_error_quantity(case.rho, case.omega, pcq, case.phi, case.quad, case.outer_box)
        report_q = theorem_bound(case.theorem_id, "quantity", inputs, _overrides(case, "quantity"))
        out.append(
            ConvergenceRecord(n, "quantity", err_q, report_q.bound_value, report_q, L, case.eps, estimated)
        )
    return out


def _overrides(case: StudyCase, variant: str) -> dict:
    names = CONSTANT_NAMES[(case.theorem_id, variant)]
    return {k: v for k, v in case.constant_overrides.items() if k in names}


def run_study(case: StudyCase, workers: int = 1) -> StudyResult:
    """Measure errors and bounds for every N of the case, in ascending N.

    For truncated cases ``L`` is found once, before the N sweep.
    """
    try:
        box, trunc = study_box(case)
    except Exception as exc:
        raise StudyError(f"{case.name}: truncation failed: {exc}") from exc
    L = trunc.L if trunc is not None else None
    norms = _resolve_case_norms(case, box)
    estimated = any(nd.estimated for nd in norms.values())

    def one(n):
        try:
            return _measure(case, box, n, norms, L, estimated)
        except Exception as exc:
            raise StudyError(f"{case.name}, N={n}: {exc}") from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, case.n_values))
    else:
        chunks = [one(n) for n in case.n_values]
    records = [r for chunk in chunks for r in chunk]
    return StudyResult(case, box, records, trunc)


def estimate_order(records, min_error: float = 1e-10) -> OrderEstimate:
    """Least-squares fit of ``log(error)`` against ``log(N)``.

    Records with error at or below ``min_error`` are dropped as quadrature
    noise.  A slope near ``-p`` means the error decays like ``N^-p``.
    """
    usable = [r for r in records if r.measured_error > min_error]
    if len(usable) < 3:
        raise ValueError(
            f"only {len(usable)} records with error above {min_error:g}; need 3. "
            "Widen the N range, or the field may be represented exactly."
        )
    x = np.log([r.n for r in usable])
    y = np.log([r.measured_error for r in usable])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return OrderEstimate(float(slope), float(intercept), r2, len(usable))


@dataclass(frozen=True)
class BoundCheck:
    record: ConvergenceRecord
    passed: bool
    allowed: float


@dataclass
class BoundCheckReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def summary_lines(self, name: str = "") -> list[str]:
        prefix = f"{name}: " if name else ""
        lines = []
        for c in self.checks:
            r = c.record
            status = "PASS" if c.passed else "FAIL"
            line = (
                f"{prefix}{status} {r.report.theorem_id}/{r.variant} N={r.n} "
                f"error={r.measured_error:.6g} bound={r.bound:.6g} ratio={r.ratio:.4g}"
            )
            if not c.passed:
                consts = ", ".join(f"{k}={v!r}" for k, v in r.report.constant_values.items())
                line += f" [{consts}]"
            lines.append(line)
        return lines


def verify_bounds(records, slack: float = 0.0, floor: float = BOUND_FLOOR) -> BoundCheckReport:
    """A record passes iff ``error <= (1 + slack) * bound + floor``."""
    if slack < 0:
        raise ValueError("slack must be >= 0")
    checks = []
    for r in records:
        allowed = (1.0 + slack) * r.bound + floor
        checks.append(BoundCheck(r, r.measured_error <= allowed, allowed))
    return BoundCheckReport(checks)
