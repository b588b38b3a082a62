import pytest

from renewalab import (
    ChainSpec,
    HorizonError,
    HorizonWarning,
    build_chain,
    estimate_positive_prob,
    estimate_renewal,
    estimate_stay_above,
    renewal_measure,
    stay_above_exact_nn,
    write_mc_csv,
)


class TestDeterminism:
    def test_bit_identical_reruns(self, walk34):
        a = estimate_renewal(walk34, 0, [(50.0, 1.0)], horizon=250, n_traj=3000, master_seed=77)
        b = estimate_renewal(walk34, 0, [(50.0, 1.0)], horizon=250, n_traj=3000, master_seed=77)
        assert a[0] == b[0]

    def test_block_size_does_not_change_results(self, walk34):
        a = estimate_renewal(walk34, 0, [(40.0, 1.0)], horizon=220, n_traj=2500,
                             master_seed=5, block_size=128)
        b = estimate_renewal(walk34, 0, [(40.0, 1.0)], horizon=220, n_traj=2500,
                             master_seed=5, block_size=1024)
        assert a[0].value == b[0].value and a[0].stderr == b[0].stderr

    def test_different_seeds_differ(self, walk34):
        a = estimate_renewal(walk34, 0, [(50.0, 1.0)], horizon=250, n_traj=2000, master_seed=1)
        b = estimate_renewal(walk34, 0, [(50.0, 1.0)], horizon=250, n_traj=2000, master_seed=2)
        assert a[0].value != b[0].value


class TestOccupationEstimates:
    def test_deterministic_walk_exact_single_visit(self, det_walk):
        est = estimate_renewal(det_walk, 0, [(10.0, 1.0)], horizon=25, n_traj=200, master_seed=9)[0]
        assert est.value == 1.0
        assert est.stderr == 0.0

    def test_walk34_matches_renewal_limit(self, walk34):
        est = estimate_renewal(walk34, 0, [(100.0, 1.0)], horizon=500, n_traj=20000, master_seed=42)[0]
        assert abs(est.value - 2.0) <= 3.0 * est.stderr

    def test_counts_are_integer_means(self, walk34):
        ests = estimate_renewal(walk34, 0, [(20.0, 1.0), (30.0, 1.0)], horizon=200,
                                n_traj=500, master_seed=3)
        for est in ests:
            assert (est.value * est.n_trajectories) == pytest.approx(
                round(est.value * est.n_trajectories), abs=1e-9
            )

    def test_horizon_warning_when_not_settled(self, walk34):
        with pytest.warns(HorizonWarning):
            estimate_renewal(walk34, 0, [(100.0, 1.0)], horizon=150, n_traj=400, master_seed=8)

    def test_horizon_error_in_strict_mode(self, walk34):
        with pytest.raises(HorizonError):
            estimate_renewal(walk34, 0, [(100.0, 1.0)], horizon=150, n_traj=400,
                             master_seed=8, strict=True)


@pytest.mark.filterwarnings("ignore::renewalab.montecarlo.HorizonWarning")
class TestAgreementWithExactEngine:
    CASES = [
        ("random_walk", {"q": 0.75}, 0, (-80, 160), 30, 300),
        ("reflected_walk", {"q": 0.75}, 0, (0, 160), 30, 300),
        ("three_branch", {"p": 0.5}, 0, (-160, 160), 20, 400),
        ("counterexample", {}, 0, (0, 260), 40, 260),
    ]

    @pytest.mark.parametrize("name,params,start,window,target,horizon", CASES)
    def test_mc_matches_exact(self, name, params, start, window, target, horizon):
        kernel = build_chain(ChainSpec(name, params))
        exact = renewal_measure(kernel, start, window, stop_tol=1e-11)
        est = estimate_renewal(kernel, float(start), [(float(target), 1.0)],
                               horizon=horizon, n_traj=6000, master_seed=2718)[0]
        tol = 3.0 * est.stderr + exact.bracket_width
        assert abs(est.value - exact.interval_mass(target, 1.0)) <= tol


class TestPositiveProbability:
    def test_three_branch_half(self, three_branch_half):
        est = estimate_positive_prob(three_branch_half, 0, 0.0, probe_time=2000,
                                     n_traj=4000, master_seed=11)
        assert abs(est.value - 0.5) <= 3.0 * est.ci95_halfwidth
        assert est.stable

    def test_counterexample_always_positive(self, counterexample):
        est = estimate_positive_prob(counterexample, 1.0, 0.0, probe_time=400,
                                     n_traj=500, master_seed=4)
        assert est.value == 1.0

    def test_positive_drift_walk_escapes(self, walk34):
        est = estimate_positive_prob(walk34, 0, 0.0, probe_time=1000, n_traj=2000, master_seed=6)
        assert est.value >= 1.0 - 3.0 * est.ci95_halfwidth


class TestStayAbove:
    def test_walk34_matches_oracle(self, walk34):
        oracle = stay_above_exact_nn(walk34, 0)
        assert oracle == pytest.approx(0.5, abs=1e-12)
        est = estimate_stay_above(walk34, 0, horizon=400, n_traj=20000, master_seed=7)
        assert abs(est.value - oracle) <= 3.0 * est.stderr

    def test_deterministic_walk_never_returns(self, det_walk):
        est = estimate_stay_above(det_walk, 0, horizon=50, n_traj=200, master_seed=1)
        assert est.value == 1.0

    def test_three_branch_origin_matches_oracle(self, three_branch_half):
        oracle = stay_above_exact_nn(three_branch_half, 0)
        assert oracle == pytest.approx(0.5 * 2.0 / 3.0, abs=1e-12)
        est = estimate_stay_above(three_branch_half, 0, horizon=400, n_traj=20000, master_seed=13)
        assert abs(est.value - oracle) <= 3.0 * est.stderr


def test_csv_output_is_deterministic(tmp_path, walk34):
    ests = estimate_renewal(walk34, 0, [(30.0, 1.0)], horizon=200, n_traj=1500, master_seed=21)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_mc_csv(ests, p1)
    write_mc_csv(ests, p2)
    assert p1.read_bytes() == p2.read_bytes()
    header = p1.read_text().splitlines()[0]
    assert header == "x,h,estimate,stderr,n_traj,horizon,seed"
