import numpy as np
import pytest

from flowgame.adversary import AttackPlan, sample_delays
from flowgame.detector import (DetectorModel, MixtureBelief, attack_marginal_numerators,
                               baseline_compensate_score, believed_attack_delay,
                               calibrate_threshold, detector_attack_belief,
                               empirical_threshold, lambda1, likelihood_ratios,
                               match_and_score, term_integral)
from flowgame.errors import InvalidInputError
from flowgame.matching import expected_attack_delay
from flowgame.traffic import ipd

A = 0.25


def mc_numerator(delta, mu1, mu2, sigma, f_dd, rng, m=400_000):
    a1 = sample_delays(np.full(m, mu1), sigma, A, rng)
    a2 = sample_delays(np.full(m, mu2), sigma, A, rng)
    return f_dd.pdf(delta - (a2 - a1)).mean()


def test_zero_cap_reduces_to_jitter_density(jitter_dd):
    d = np.linspace(-0.03, 0.03, 7)
    num = attack_marginal_numerators(d, 0.0, 0.0, 0.0, 0.0, jitter_dd)
    assert np.allclose(num, jitter_dd.pdf(d))


def test_small_sigma_limit(jitter_dd):
    d = np.linspace(-0.03, 0.03, 7)
    num = attack_marginal_numerators(d, 0.1, 0.13, 1e-7, A, jitter_dd)
    assert np.allclose(num, jitter_dd.pdf(d - 0.03), rtol=1e-4)


def test_quadrature_against_monte_carlo(rng, jitter_dd):
    for _ in range(5):
        mu1, mu2 = rng.uniform(0, A, 2)
        sigma = 10 ** rng.uniform(-3, -0.5)
        delta = mu2 - mu1 + rng.normal(0, 0.01)
        q = attack_marginal_numerators(delta, mu1, mu2, sigma, A, jitter_dd)[0]
        mc = mc_numerator(delta, mu1, mu2, sigma, jitter_dd, rng)
        assert q == pytest.approx(mc, rel=0.03)


def test_node_count_converged(rng, jitter_dd):
    mu = rng.uniform(0, A, (20, 2))
    d = mu[:, 1] - mu[:, 0] + rng.normal(0, 0.01, 20)
    for sigma in (1e-3, 0.03, 1.0):
        a = attack_marginal_numerators(d, mu[:, 0], mu[:, 1], sigma, A, jitter_dd, 16)
        b = attack_marginal_numerators(d, mu[:, 0], mu[:, 1], sigma, A, jitter_dd, 32)
        assert np.allclose(a, b, rtol=5e-3)


def test_term_integral_matches_vector(jitter_dd, bimodal_dy):
    t = term_integral(0.12, 0.1, 0.05, 0.07, 0.01, A, jitter_dd, bimodal_dy)
    num = attack_marginal_numerators(0.02, 0.05, 0.07, 0.01, A, jitter_dd)[0]
    assert t == pytest.approx(num / bimodal_dy.pdf(0.12))


def fixed_model(x, f_dd, f_dy, **kw):
    return DetectorModel(f_dd, f_dy, AttackPlan(np.full(x.size, 0.1), 0.0025, A), **kw)


def test_statistic_shift_invariant(rng, jitter_dd, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 10))
    t = x + 0.1 + rng.normal(0, 0.005, 10)
    m = fixed_model(x, jitter_dd, bimodal_dy)
    assert lambda1(t, x, m).value == pytest.approx(lambda1(t + 7.0, x + 7.0, m).value)
    s = match_and_score(np.sort(t), x, m, 0.0)
    assert s == pytest.approx(match_and_score(np.sort(t) + 3.0, x, m, 3.0))


def test_aggregates(rng, jitter_dd, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 10))
    t = x + 0.1
    r = likelihood_ratios(t, x, fixed_model(x, jitter_dd, bimodal_dy))
    s = lambda1(t, x, fixed_model(x, jitter_dd, bimodal_dy))
    ls = lambda1(t, x, fixed_model(x, jitter_dd, bimodal_dy, aggregate="log-sum"))
    assert s.value == pytest.approx(r.sum()) and ls.value == pytest.approx(np.log(r).sum())


def test_fingerprint_denominator(rng, jitter_dd, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 6))
    m = fixed_model(x, jitter_dd, bimodal_dy, denominator="fingerprint")
    w = rng.uniform(0, 0.01, 6)
    r = likelihood_ratios(x + 0.1, x, m, w)
    r_obs = likelihood_ratios(x + 0.1, x, fixed_model(x, jitter_dd, bimodal_dy))
    assert np.allclose(r * bimodal_dy.pdf(np.diff(w)), r_obs * bimodal_dy.pdf(ipd(x)))
    with pytest.raises(InvalidInputError):
        likelihood_ratios(x + 0.1, x, m)


def test_related_flow_outscores_unrelated(jitter_dd, bimodal_dy):
    # x sits in the sparse region of f_dy, y in its dense cadence
    x = np.cumsum(np.r_[0, np.full(9, 0.3)])
    y = np.cumsum(np.r_[0, np.full(9, 0.1)])
    m = DetectorModel(jitter_dd, bimodal_dy, AttackPlan(np.zeros(10), 0.0, 0.0))
    assert match_and_score(x, x, m, 0.0) > match_and_score(y, x, m, 0.0)


def test_mixture_of_one_equals_plan(rng, jitter_dd, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 8))
    plan = AttackPlan(rng.uniform(0, A, 8), 0.01, A)
    t = x + plan.mu + 0.05
    a = lambda1(t, x, DetectorModel(jitter_dd, bimodal_dy, plan)).value
    b = lambda1(t, x, DetectorModel(jitter_dd, bimodal_dy, MixtureBelief((plan,)))).value
    assert a == pytest.approx(b)


def test_mixture_averages_numerators(rng, jitter_dd, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 8))
    plans = [AttackPlan(rng.uniform(0, A, 8), 0.01, A) for _ in range(3)]
    t = x + plans[0].mu
    mix = likelihood_ratios(t, x, DetectorModel(jitter_dd, bimodal_dy, MixtureBelief(plans)))
    each = [likelihood_ratios(t, x, DetectorModel(jitter_dd, bimodal_dy, p)) for p in plans]
    assert np.allclose(mix, np.mean(each, axis=0))
    belief = MixtureBelief(plans)
    assert np.allclose(believed_attack_delay(belief),
                       np.mean([expected_attack_delay(p) for p in plans], axis=0))
    with pytest.raises(InvalidInputError):
        MixtureBelief((plans[0], AttackPlan(np.zeros(8), 0.02, A)))
    with pytest.raises(InvalidInputError):
        MixtureBelief(())


def test_baseline_plugs_in_means(rng, jitter_dd, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 8))
    plan = AttackPlan(rng.uniform(0, A, 8), 0.01, A)
    t = x + plan.mu
    lr = jitter_dd.logpdf(np.zeros(7)) - bimodal_dy.logpdf(np.diff(t))
    m = DetectorModel(jitter_dd, bimodal_dy, plan)
    assert baseline_compensate_score(t, x, m) == pytest.approx(np.exp(lr).sum())
    m = DetectorModel(jitter_dd, bimodal_dy, plan, aggregate="log-sum")
    assert baseline_compensate_score(t, x, m) == pytest.approx(lr.sum())


def test_belief_modes(rng, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 10))
    assert np.array_equal(detector_attack_belief(x, 0.0, 0.0, bimodal_dy).mu, np.zeros(10))
    uni = detector_attack_belief(x, A, 0.0025, bimodal_dy, strategy="uniform-delay")
    assert np.allclose(uni.mu, A / 2) and uni.sigma > 100 * A
    from flowgame.traffic import synth_delay_trace
    trace = synth_delay_trace(0.05, 0.01, 0.0, 2000, rng)
    mix = detector_attack_belief(x, A, 0.0025, bimodal_dy, 16, mode="mixture",
                                 d1_trace=trace, samples=4, rng=rng)
    assert isinstance(mix, MixtureBelief) and len(mix.components) == 4
    mc = detector_attack_belief(x, A, 0.0025, bimodal_dy, 16, mode="mc",
                                d1_trace=trace, samples=4, rng=np.random.default_rng(0))
    assert np.all((mc.mu >= 0) & (mc.mu <= A))
    with pytest.raises(InvalidInputError):
        detector_attack_belief(x, A, 0.0025, bimodal_dy, mode="mc")
    with pytest.raises(InvalidInputError):
        detector_attack_belief(x, A, 0.0025, bimodal_dy, mode="bogus")


def test_empirical_threshold(rng):
    s = rng.normal(size=10_001)
    for eta in (0.01, 0.05, 0.3):
        thr = empirical_threshold(s, eta)
        assert np.mean(s > thr) <= eta
        assert np.mean(s >= thr) > eta


def test_calibrate_threshold_validation(rng, jitter_dd, bimodal_dy):
    x = np.cumsum(rng.uniform(0.05, 0.3, 6))
    m = DetectorModel(jitter_dd, bimodal_dy, AttackPlan(np.zeros(6), 0.0, 0.0))

    def null(length, r):
        return np.cumsum(r.uniform(0.05, 0.3, length))

    with pytest.raises(InvalidInputError):
        calibrate_threshold(x, m, null, 0.05, 10, rng)
    with pytest.raises(InvalidInputError):
        calibrate_threshold(x, m, null, 1.5, 1000, rng)
    thr, scores = calibrate_threshold(x, m, null, 0.1, 200, rng, return_scores=True)
    assert np.mean(scores > thr) <= 0.1


def test_two_packets_is_one_term(jitter_dd, bimodal_dy):
    x = np.array([1.0, 1.2])
    t = np.array([1.11, 1.33])
    plan = AttackPlan(np.array([0.05, 0.06]), 0.01, A)
    m = DetectorModel(jitter_dd, bimodal_dy, plan)
    one = term_integral(0.22, 0.2, 0.05, 0.06, 0.01, A, jitter_dd, bimodal_dy)
    assert lambda1(t, x, m).value == pytest.approx(one)
    assert lambda1(t, x, m).value == lambda1(t, x, m).value
