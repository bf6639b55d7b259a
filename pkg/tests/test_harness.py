import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from particle_approx.fields import BoxDomain, NormData, ScalarField
from particle_approx.harness import (
    ConvergenceRecord,
    StudyCase,
    StudyError,
    estimate_order,
    run_study,
    verify_bounds,
)
from particle_approx.bounds import BoundReport
from particle_approx.library import constant, cos2_bump, cos_product, disk_indicator, gaussian
from particle_approx.quadrature import QuadratureSpec

UNIT = BoxDomain(0.0, 1.0, 0.0, 1.0)


def record(n, err, bound=1.0, variant="density"):
    return ConvergenceRecord(n, variant, err, bound, BoundReport("th1", variant, n, {"C12": 1.0}, bound))


class TestStudyCase:
    def test_th1_needs_compact_support(self):
        with pytest.raises(ValueError, match="requires compact support"):
            StudyCase("g", "th1", gaussian(), cos_product())

    def test_th2_needs_eps(self):
        with pytest.raises(ValueError, match="requires eps"):
            StudyCase("g", "th2", gaussian(), cos_product())

    def test_compact_takes_no_eps(self):
        with pytest.raises(ValueError, match="no eps"):
            StudyCase("b", "th1", cos2_bump(), cos2_bump(), eps=0.1)

    @pytest.mark.parametrize("ns", [(), (4, 8, 8), (8, 4), (0, 4)])
    def test_n_values(self, ns):
        with pytest.raises(ValueError):
            StudyCase("b", "th1", cos2_bump(), cos2_bump(), n_values=ns)

    def test_box_must_contain_support(self):
        with pytest.raises(ValueError, match="does not contain"):
            StudyCase("b", "th1", cos2_bump(), cos2_bump(), box=BoxDomain.square(0.5))

    def test_truncated_rejects_box(self):
        with pytest.raises(ValueError, match="derives its box"):
            StudyCase("g", "th2", gaussian(), cos_product(), eps=0.1, box=BoxDomain.square(3.0))


class TestRunStudy:
    def test_constant_density_exact(self):
        case = StudyCase("c", "th3", constant(1.0, UNIT), cos_product(2.0, 3.0), n_values=(2, 4))
        res = run_study(case)
        assert [r.n for r in res.records] == [2, 4]
        assert all(r.measured_error <= 1e-13 for r in res.records)

    def test_bump_ratios_below_one(self):
        b = cos2_bump()
        res = run_study(StudyCase("b", "th1", b, b, n_values=(4, 8, 16, 32)))
        assert all(r.ratio <= 1 for r in res.records)
        # restatement: error * N^2 <= C12
        assert all(r.measured_error * r.n**2 <= r.report.constant_values["C12"] for r in res.records)

    def test_unit_weight_quantity_equals_density(self):
        b = cos2_bump()
        one = constant(1.0, BoxDomain.square(5.0))
        res = run_study(StudyCase("b", "th1", b, b, omega=one, n_values=(4, 8)))
        for d, q in zip(res.by_variant("density"), res.by_variant("quantity")):
            assert q.measured_error == pytest.approx(d.measured_error, abs=1e-12)

    def test_gaussian_th2(self):
        phi = cos_product(1.0, 1.0)
        res = run_study(StudyCase("g", "th2", gaussian(), phi, eps=1e-3, n_values=(4, 16)))
        assert res.truncation is not None and 2.6 <= res.truncation.L <= 2.9
        for r in res.records:
            assert r.L == res.truncation.L
            assert r.measured_error <= 1e-3 * 1.0 + r.report.constant_values["C_eps"] / r.n**2

    def test_disk_th3_rate(self):
        spec = QuadratureSpec(points=4, rel_tol=1e-3, max_panels=512)
        res = run_study(StudyCase("d", "th3", disk_indicator(0.7), cos2_bump(), n_values=(4, 8, 16), quad=spec))
        assert all(r.measured_error * r.n <= r.report.constant_values["D12"] for r in res.records)

    def test_threads_give_same_records(self):
        b = cos2_bump()
        case = StudyCase("b", "th1", b, b, omega=b, n_values=(4, 8, 16))
        serial = [(r.n, r.variant, r.measured_error, r.bound) for r in run_study(case).records]
        threaded = [(r.n, r.variant, r.measured_error, r.bound) for r in run_study(case, workers=3).records]
        assert serial == threaded

    def test_estimated_norms_flagged(self):
        b = cos2_bump()
        bare = b.with_norms(NormData())
        res = run_study(StudyCase("b", "th1", bare, b, n_values=(4,)))
        assert res.records[0].norms_estimated

    def test_overrides_apply(self):
        b = cos2_bump()
        res = run_study(StudyCase("b", "th1", b, b, n_values=(4,), constant_overrides={"C12": 1e-3}))
        assert res.records[0].bound == pytest.approx(1e-3 / 16)
        assert not verify_bounds(res.records).passed

    def test_failures_wrapped(self):
        # no norms and no box: total mass unknown
        ridge = ScalarField(lambda x, y: np.exp(-x * x - y * y), name="ridge")
        with pytest.raises(StudyError, match="truncation failed"):
            run_study(StudyCase("bad", "th2", ridge, cos_product(), eps=1e-3, n_values=(4,)))


class TestEstimateOrder:
    def test_exact_square(self):
        est = estimate_order([record(n, 3.0 / n**2) for n in (4, 8, 16)])
        assert est.slope == pytest.approx(-2.0, abs=1e-12)
        assert est.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_exact_first_order(self):
        assert estimate_order([record(n, 0.5 / n) for n in (4, 8, 16, 32)]).slope == pytest.approx(-1.0, abs=1e-12)

    def test_too_few_records(self):
        with pytest.raises(ValueError, match="need 3"):
            estimate_order([record(4, 1e-3), record(8, 1e-14), record(16, 0.0)])


class TestVerifyBounds:
    def test_pass_and_fail(self):
        assert verify_bounds([record(4, 0.03, 0.04)]).passed
        rep = verify_bounds([record(4, 0.05, 0.04)])
        assert not rep.passed and len(rep.failures) == 1
        assert "FAIL" in rep.summary_lines("x")[0] and "C12=" in rep.summary_lines("x")[0]

    def test_floor(self):
        assert verify_bounds([record(4, 5e-10, 0.0)]).passed

    def test_negative_slack_rejected(self):
        with pytest.raises(ValueError):
            verify_bounds([], slack=-0.1)

    @given(st.floats(0, 2), st.floats(1e-6, 1.0), st.floats(0, 5))
    @settings(max_examples=100)
    def test_more_slack_never_hurts(self, err, bound, slack):
        recs = [record(4, err, bound)]
        if verify_bounds(recs, slack).passed:
            assert verify_bounds(recs, 2 * slack + 1e-12).passed
