import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import chisq_pvalue, three_kinds
from pnrhbt.source_models import (
    InfeasibleSourceError,
    ParameterError,
    SourceSpec,
    TruncationWarning,
    brute_force_moment,
    default_n_trunc,
    factorial_moment,
    mix_from_mu_g2,
    pmf,
    sample_pulse_intensity,
)


def test_poisson_vacuum():
    assert pmf(SourceSpec.poisson(2.6)).probs[0] == pytest.approx(math.exp(-2.6), rel=1e-14)
    assert pmf(SourceSpec.poisson(2.6)).probs[0] == pytest.approx(0.0743, abs=5e-5)


def test_thermal_vacuum():
    assert pmf(SourceSpec.thermal(1.0)).probs[0] == 0.5


def test_mix_degenerates_to_thermal():
    a = pmf(SourceSpec.mix(0.0, 1.5), 80).probs
    b = pmf(SourceSpec.thermal(1.5), 80).probs
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_mix_degenerates_to_poisson():
    a = pmf(SourceSpec.mix(2.8, 0.0), 60).probs
    b = pmf(SourceSpec.poisson(2.8), 60).probs
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_negative_mean_rejected():
    with pytest.raises(ParameterError):
        SourceSpec.poisson(-1.0)
    with pytest.raises(ParameterError):
        SourceSpec.mix(1.0, float("nan"))


def test_small_truncation_warns_and_reports_tail():
    with pytest.warns(TruncationWarning):
        p = pmf(SourceSpec.thermal(2.0), 5)
    true_tail = (2 / 3) ** 6
    assert p.tail_mass >= true_tail
    assert p.probs.sum() + true_tail == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("mu", [0.1, 1.0, 2.8, 5.0])
def test_normalization_default_truncation(mu):
    for s in three_kinds(mu):
        p = pmf(s)
        assert p.tail_mass < 1e-9
        assert abs(p.probs.sum() + p.tail_mass - 1.0) <= 1e-9
        assert np.all((p.probs >= 0) & (p.probs <= 1))


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(0.01, 6.0), g2=st.floats(1.0, 2.0))
def test_normalization_property(mu, g2):
    s = SourceSpec.from_mu_g2(mu, g2)
    p = pmf(s)
    assert abs(p.probs.sum() + p.tail_mass - 1.0) <= 1e-9
    assert p.mean() == pytest.approx(mu, rel=1e-7)


def test_mixture_matches_semiclassical_sampling():
    # oracle: Poisson(W) with W = |sqrt(mu_s) + z|^2, 10^7 draws
    s = SourceSpec.from_mu_g2(2.8, 1.2)
    rng = np.random.default_rng(12345)
    counts = np.zeros(64, dtype=np.int64)
    for _ in range(10):
        n = rng.poisson(sample_pulse_intensity(s, rng, 1_000_000))
        counts += np.bincount(n, minlength=64)[:64]
    p = pmf(s, 63).probs
    assert chisq_pvalue(counts, p / p.sum()) > 1e-3


# -- factorial moments


def test_thermal_third_moment_brute_force():
    # sum_n n(n-1)(n-2) 2^-(n+1)
    oracle = sum(n * (n - 1) * (n - 2) * 0.5 ** (n + 1) for n in range(400))
    assert oracle == pytest.approx(6.0, rel=1e-12)
    assert factorial_moment(SourceSpec.thermal(1.0), 3) == pytest.approx(oracle, rel=1e-12)


def test_poisson_second_moment():
    assert factorial_moment(SourceSpec.poisson(2.6), 2) == pytest.approx(6.76, rel=1e-14)


def test_mixture_second_moment_from_g2_relation():
    s = SourceSpec.from_mu_g2(2.8, 1.2)
    assert factorial_moment(s, 2) == pytest.approx(0.2 * 2.8**2 + 2.8**2, rel=1e-12)
    assert factorial_moment(s, 2) == pytest.approx(9.408, rel=1e-12)


def test_zeroth_moment_is_one():
    assert factorial_moment(SourceSpec.thermal(3.0), 0) == 1.0


@pytest.mark.parametrize("mu", [0.1, 1.0, 2.8, 5.0])
@pytest.mark.parametrize("k", range(1, 7))
def test_moment_closed_forms_match_truncated_sums(mu, k):
    for s in three_kinds(mu):
        bf = brute_force_moment(s, k, 256)
        assert factorial_moment(s, k) == pytest.approx(bf, rel=1e-8)


# -- (mu, g2) parameterization


def test_mix_from_mu_g2_fml():
    mu_s, mu_n = mix_from_mu_g2(2.8, 1.2)
    assert mu_s == pytest.approx(2.5044, abs=5e-5)
    assert mu_n == pytest.approx(0.2956, abs=5e-5)
    assert mu_s + mu_n == pytest.approx(2.8, rel=1e-12)
    assert mu_n * (mu_n + 2 * mu_s) / 2.8**2 + 1 == pytest.approx(1.2, rel=1e-12)


def test_mix_from_mu_g2_limits():
    assert mix_from_mu_g2(2.8, 1.0) == (2.8, 0.0)
    mu_s, mu_n = mix_from_mu_g2(1.0, 2.0)
    assert mu_s == pytest.approx(0.0, abs=1e-15) and mu_n == pytest.approx(1.0)


@pytest.mark.parametrize("g2", [0.5, 0.999, 2.01])
def test_mix_from_mu_g2_infeasible(g2):
    with pytest.raises(InfeasibleSourceError):
        mix_from_mu_g2(2.8, g2)


def test_mix_from_mu_g2_bad_mu():
    with pytest.raises(ParameterError):
        mix_from_mu_g2(0.0, 1.2)


@settings(max_examples=100, deadline=None)
@given(mu=st.floats(0.01, 10.0), g2=st.floats(1.0, 2.0))
def test_g2_round_trip_property(mu, g2):
    s = SourceSpec.from_mu_g2(mu, g2)
    assert s.mu == pytest.approx(mu, rel=1e-12)
    assert factorial_moment(s, 2) / mu**2 == pytest.approx(g2, rel=1e-10)


def test_default_truncation_is_capped():
    assert default_n_trunc(SourceSpec.thermal(5.0)) <= 256
    assert default_n_trunc(SourceSpec.poisson(0.1)) >= 1


# -- intensity sampling


def test_poisson_intensity_is_deterministic():
    rng = np.random.default_rng(0)
    s = SourceSpec.poisson(2.6)
    assert sample_pulse_intensity(s, rng) == 2.6
    assert np.all(sample_pulse_intensity(s, rng, 100) == 2.6)


def test_thermal_intensity_mean():
    rng = np.random.default_rng(1)
    w = sample_pulse_intensity(SourceSpec.thermal(1.0), rng, 10_000_000)
    assert abs(w.mean() - 1.0) <= 3 / math.sqrt(1e7)


def test_mixture_intensity_g2():
    rng = np.random.default_rng(2)
    w = sample_pulse_intensity(SourceSpec.from_mu_g2(2.8, 1.2), rng, 10_000_000)
    m1, m2 = w.mean(), (w * w).mean()
    r = m2 / m1**2
    # delta-method standard error of m2 / m1^2
    grad = np.stack([w * w / m1**2, -2 * m2 * w / m1**3])
    se = math.sqrt(np.cov(grad).sum() / w.size)
    assert abs(r - 1.2) <= 3 * se
