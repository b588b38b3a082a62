import numpy as np
import pytest

from renewalab.laws import (
    LatticeLaw,
    LawError,
    TailBound,
    ascent_factor,
    descent_factor,
    point_mass,
    uniform_law,
)


def test_lattice_law_validates_normalization():
    with pytest.raises(LawError):
        LatticeLaw(np.array([0, 1]), np.array([0.5, 0.5 + 1e-9]))
    with pytest.raises(LawError):
        LatticeLaw(np.array([0, 1]), np.array([1.5, -0.5]))
    with pytest.raises(LawError):
        LatticeLaw(np.array([0, 0]), np.array([0.5, 0.5]))
    # within tolerance is accepted
    LatticeLaw(np.array([0, 1]), np.array([0.5, 0.5 + 1e-13]))


def test_lattice_law_moments():
    law = LatticeLaw.from_mapping({1: 0.75, -1: 0.25})
    assert law.mean() == pytest.approx(0.5, abs=1e-15)
    assert law.truncated_mean(1.0) == pytest.approx(0.5, abs=1e-15)
    assert law.truncated_mean(0.5) == pytest.approx(0.75 * 0.5 - 0.25, abs=1e-15)
    assert law.abs_mean() == 1.0
    assert law.tail(0.0) == 0.75
    assert law.abs_tail(1.0) == 0.0
    assert law.abs_tail(0.5) == 1.0


def test_span_conventions():
    assert LatticeLaw.from_mapping({1: 0.5, -1: 0.5}).span() == 1
    assert LatticeLaw.from_mapping({0: 0.5, 1: 0.5}).span() == 1
    assert LatticeLaw.from_mapping({0: 0.5, 2: 0.5}).span() == 2
    assert point_mass(0).span() == 0


def test_descent_factor_exact_for_skip_free():
    law = LatticeLaw.from_mapping({1: 0.75, -1: 0.25})
    assert descent_factor(law) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert descent_factor(point_mass(1)) == 0.0
    nonneg = LatticeLaw.from_mapping({0: 0.5, 1: 0.5})
    assert descent_factor(nonneg) == 0.0


def test_ascent_factor_mirrors_descent():
    down_law = LatticeLaw.from_mapping({1: 0.25, -1: 0.75})
    assert ascent_factor(down_law) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_uniform_law_analytics():
    u = uniform_law(-1.0, 1.5)
    assert u.mean() == pytest.approx(0.25)
    assert u.cdf(-1.0) == 0.0 and u.cdf(1.5) == 1.0
    assert u.cdf(0.25) == pytest.approx(0.5)
    assert u.ppf(0.5) == pytest.approx(0.25)
    # E min(X, cap): full mean above the support, cap below it
    assert u.truncated_mean(2.0) == pytest.approx(0.25)
    assert u.truncated_mean(-1.5) == pytest.approx(-1.5)
    assert u.truncated_mean(1.0) == pytest.approx(0.2, abs=1e-12)


def test_uniform_law_rejects_bad_support():
    with pytest.raises(LawError):
        uniform_law(1.0, 1.0)


def test_tail_bound_constant():
    tb = TailBound.constant(1.0)
    assert tb.tail(0.999) == 1.0
    assert tb.tail(1.0) == 0.0
    assert tb.mean_value == 1.0


def test_tail_bound_from_abs_law_with_shift():
    base = uniform_law(-1.0, 1.5)
    tb = TailBound.from_abs_law(base, shift=0.5)
    # E|U(-1, 1.5)| = 0.65, so the shifted mean is 1.15
    assert tb.mean_value == pytest.approx(1.15, abs=1e-4)
    assert tb.tail(0.4) == 1.0
    assert tb.tail(2.0) == 0.0


def test_sampling_follows_pmf():
    law = LatticeLaw.from_mapping({2: 0.3, -1: 0.7})
    rng = np.random.default_rng(0)
    draws = [law.sample(rng) for _ in range(4000)]
    assert set(draws) <= {2, -1}
    assert np.mean([d == 2 for d in draws]) == pytest.approx(0.3, abs=0.03)
