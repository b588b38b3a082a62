import math

import numpy as np
import pytest

from renewalab import (
    BoundInputError,
    CertificateError,
    ChainSpec,
    VisitBoundInputs,
    build_chain,
    check_domination,
    estimate_stay_above,
    exceedance_floor,
    renewal_measure,
    stay_above_exact_nn,
    truncated_drift_floor,
    verify_bound,
    visit_bound,
)
from renewalab.bounds import report_to_json
from renewalab.laws import LatticeLaw, TailBound


class TestDomination:
    def test_constant_one_majorizes_three_branch(self, three_branch_half):
        cert = check_domination(three_branch_half, 1.0, "majorant", range(-20, 21))
        assert cert.valid
        assert cert.worst_violation <= 0.0
        assert cert.mean == 1.0

    def test_no_constant_majorizes_counterexample(self, counterexample):
        states = list(range(0, 40))
        for c in (1.0, 4.0, 16.0):
            cert = check_domination(counterexample, c, "majorant", states)
            assert not cert.valid, f"constant {c} should fail"
            assert cert.worst_violation > 0.0

    def test_identity_majorant_for_random_walk(self, walk34):
        cert = check_domination(walk34, walk34.declared_majorant, "majorant", range(-10, 11))
        assert cert.valid
        assert cert.worst_violation <= 0.0

    def test_limit_law_is_part_of_the_checked_family(self, counterexample):
        # constant 1 dominates the Bernoulli limit law but not the block states
        only_limit = check_domination(counterexample, 1.0, "majorant", [], include_limit_law=True)
        assert only_limit.valid
        with_blocks = check_domination(counterexample, 1.0, "majorant", [0], include_limit_law=True)
        assert not with_blocks.valid

    def test_infinite_mean_candidate_rejected(self, walk34):
        with pytest.raises(CertificateError):
            check_domination(
                walk34,
                TailBound(tail=lambda t: 1.0 / (1.0 + max(t, 0.0)), mean_value=math.inf),
                "majorant",
                [0],
            )

    def test_minorant_for_perturbed_walk(self, perturbed):
        cert = check_domination(perturbed, perturbed.declared_minorant, "minorant",
                                [0.0, 0.5, 1.0, 5.0, 50.0])
        assert cert.valid
        assert cert.mean == pytest.approx(0.25)

    def test_minorant_violation_detected(self, walk34):
        too_big = LatticeLaw.from_mapping({1: 1.0})  # claims jumps are always +1
        cert = check_domination(walk34, too_big, "minorant", [0, 5])
        assert not cert.valid

    def test_majorant_for_perturbed_walk(self, perturbed):
        cert = check_domination(perturbed, perturbed.declared_majorant, "majorant",
                                [0.0, 0.1, 1.0, 10.0])
        assert cert.valid


class TestFloors:
    def test_walk34_drift_floor(self, walk34):
        eps, _ = truncated_drift_floor(walk34, 1.0, range(-10, 11))
        assert eps == pytest.approx(0.5, abs=1e-15)

    def test_three_branch_floor_attained_below_zero(self, three_branch_half):
        eps, arg = truncated_drift_floor(three_branch_half, 1.0, range(-10, 11))
        assert eps == pytest.approx(-0.5, abs=1e-15)
        assert arg <= -1

    def test_counterexample_floor_is_half(self, counterexample):
        # every state moves up by at least 1 with probability exactly 1/2
        eps, _ = truncated_drift_floor(counterexample, 1.0, range(0, 200))
        assert eps == pytest.approx(0.5, abs=1e-15)

    def test_perturbed_floor_analytic(self, perturbed):
        eps, _ = truncated_drift_floor(perturbed, 1.0, [0.0, 1.0, 10.0, 100.0])
        assert eps == pytest.approx(0.2, abs=1e-9)

    def test_exceedance_floor(self, counterexample):
        gamma, _ = exceedance_floor(counterexample, 0.5, range(0, 100))
        assert gamma == pytest.approx(0.5, abs=1e-15)


class TestVisitBound:
    def test_three_mechanisms_reproduce_eight(self):
        inputs = VisitBoundInputs(cap=1.0, drift_floor=0.5, stay_floor=0.5, exceed_floor=0.5)
        assert visit_bound(inputs, 1.0, "drift_escape").bound == pytest.approx(8.0)
        assert visit_bound(inputs, 1.0, "minorant").bound == pytest.approx(8.0)
        assert visit_bound(inputs, 1.0, "nonnegative").bound == pytest.approx(8.0)

    def test_monotone_in_floors_and_width(self):
        base = VisitBoundInputs(cap=1.0, drift_floor=0.5, stay_floor=0.5)
        b0 = visit_bound(base, 1.0).bound
        assert visit_bound(VisitBoundInputs(1.0, 0.6, 0.5), 1.0).bound < b0
        assert visit_bound(VisitBoundInputs(1.0, 0.5, 0.6), 1.0).bound < b0
        assert visit_bound(base, 2.0).bound > b0
        assert visit_bound(VisitBoundInputs(2.0, 0.5, 0.5), 1.0).bound > b0

    def test_rejects_nonpositive_floors(self):
        with pytest.raises(BoundInputError):
            visit_bound(VisitBoundInputs(1.0, -0.5, 0.5), 1.0, "drift_escape")
        with pytest.raises(BoundInputError):
            visit_bound(VisitBoundInputs(1.0, 0.5), 1.0, "nonnegative")
        with pytest.raises(BoundInputError):
            VisitBoundInputs(0.0, 0.5)
        with pytest.raises(BoundInputError):
            VisitBoundInputs(1.0, 0.5, stay_floor=1.5)

    def test_verify_bound_passes_on_walk(self, walk34):
        inputs = VisitBoundInputs(cap=1.0, drift_floor=0.5, stay_floor=0.5)
        report = visit_bound(inputs, 1.0)
        measure = renewal_measure(walk34, 0, (-60, 170), certified=(5, 110), stop_tol=1e-11)
        table = verify_bound(report, measure, [(k, 1.0) for k in range(10, 101)])
        assert table.all_passed

    def test_verify_bound_deterministic_walk(self, det_walk):
        # unit masses against the plug-in bound (cap 1, floors 1): bound 2
        report = visit_bound(VisitBoundInputs(cap=1.0, drift_floor=1.0, stay_floor=1.0), 1.0)
        assert report.bound == pytest.approx(2.0)
        measure = renewal_measure(det_walk, 0, (-5, 60), stop_tol=1e-12, visit_cap=2.0)
        table = verify_bound(report, measure, [(k, 1.0) for k in range(5, 40)])
        assert table.all_passed

    def test_verify_bound_fails_on_undersized_bound(self, counterexample):
        # the block-top landing states carry mass just below 2
        measure = renewal_measure(counterexample, 0, (0, 300), stop_tol=1e-11)
        small = visit_bound(VisitBoundInputs(cap=1.0, drift_floor=1.01, stay_floor=1.0), 1.0)
        assert small.bound < 2.0
        windows = [(m - 1, 1.0) for m in (128, 256)]
        table = verify_bound(small, measure, windows)
        assert not table.all_passed
        assert all(not r.passed for r in table.rows)

    def test_report_json_round_trips(self, walk34):
        import json

        cert = check_domination(walk34, 1.0, "majorant", [0, 1])
        inputs = VisitBoundInputs(cap=1.0, drift_floor=0.5, stay_floor=0.5)
        doc = json.loads(report_to_json([cert], inputs, [visit_bound(inputs, 1.0)]))
        assert doc["bounds"][0]["bound"] == 8.0
        assert doc["certificates"][0]["valid"] is True


class TestStayAboveOracle:
    def test_homogeneous_walk(self, walk34):
        for x in (0, 7, -3):
            assert stay_above_exact_nn(walk34, x) == pytest.approx(0.5, abs=1e-12)

    def test_three_branch_at_origin(self, three_branch_half):
        assert stay_above_exact_nn(three_branch_half, 0) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_rejects_inhomogeneous_region(self, three_branch_half):
        with pytest.raises(CertificateError):
            stay_above_exact_nn(three_branch_half, -5)

    def test_rejects_wide_laws(self, counterexample):
        with pytest.raises(CertificateError):
            stay_above_exact_nn(counterexample, 3)


class TestMinorantConsistency:
    def test_stay_above_beats_minorant_route(self, walk34):
        # when a positive-mean minorant exists, the measured stay-above
        # probability cannot sit below drift_floor/cap (minus noise)
        eps, _ = truncated_drift_floor(walk34, 1.0, range(-5, 6))
        est = estimate_stay_above(walk34, 0, horizon=300, n_traj=8000, master_seed=31)
        assert est.value >= eps / 1.0 - 3.0 * est.stderr

    def test_perturbed_walk_consistency(self, perturbed):
        eps, _ = truncated_drift_floor(perturbed, 1.0, [0.0, 1.0, 25.0])
        est = estimate_stay_above(perturbed, 0.0, horizon=300, n_traj=8000, master_seed=37)
        assert est.value >= eps / 1.0 - 3.0 * est.stderr
