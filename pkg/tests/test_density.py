import numpy as np
import pytest
from scipy import integrate, stats

from flowgame.density import (DEFAULT_FLOOR, Kde1D, TruncGauss, kde_fit, kde_logpdf,
                              silverman_bandwidth, tg_mean, tg_mean_array, tg_pdf,
                              tg_ppf, tg_sample)
from flowgame.errors import InvalidInputError


def test_kde_standard_normal(rng):
    kde = kde_fit(rng.standard_normal(10_000))
    assert kde.logpdf(0.0) == pytest.approx(-0.9189, abs=0.05)
    assert kde.bandwidth == pytest.approx(silverman_bandwidth(kde.centers))


def test_kde_symmetry():
    kde = kde_fit([0.0, 2.0], 1.0)
    x = np.linspace(0, 3, 31)
    assert np.allclose(kde.pdf(1 + x), kde.pdf(1 - x))


def test_kde_integrates_to_one(rng):
    s = rng.exponential(0.1, 500)
    kde = kde_fit(s)
    h = kde.bandwidth
    val, _ = integrate.quad(kde.mixture, s.min() - 5 * h, s.max() + 5 * h, limit=500)
    assert abs(val - 1) < 1e-3


def test_kde_errors():
    with pytest.raises(InvalidInputError):
        kde_fit([1.0])
    with pytest.raises(InvalidInputError):
        kde_fit([1.0, 1.0, 1.0])
    with pytest.raises(InvalidInputError):
        Kde1D(np.array([0.0, 1.0]), -1.0)


def test_kde_floor_and_direct_sum(rng):
    s = rng.standard_normal(200)
    kde = kde_fit(s, 0.3)
    assert kde_logpdf(kde, 1e6) == pytest.approx(np.log(DEFAULT_FLOOR))
    x = np.linspace(-3, 3, 101)
    direct = stats.norm.pdf((x[:, None] - s[None, :]) / 0.3).sum(1) / (200 * 0.3)
    assert np.allclose(np.exp(kde_logpdf(kde, x)), direct, rtol=1e-12)
    assert np.all(np.isfinite(kde.logpdf(np.array([-1e300, 0.0, 1e300]))))


def test_kde_maximum_at_densest_cluster(rng):
    s = np.concatenate([rng.normal(0, 1, 200), rng.normal(5, 0.05, 200)])
    kde = kde_fit(s, 0.1)
    grid = np.linspace(-4, 8, 2001)
    assert abs(grid[np.argmax(kde.pdf(grid))] - 5) < 0.1


def test_tabulated_matches_exact(rng):
    kde = kde_fit(rng.exponential(0.1, 2000))
    tab = kde.tabulate()
    x = rng.uniform(0, 0.5, 500)
    assert np.allclose(tab.pdf(x), kde.pdf(x), rtol=2e-3)


def test_kde_text_round_trip(rng):
    kde = kde_fit(rng.standard_normal(50), 0.2)
    back = Kde1D.from_text(kde.to_text())
    assert back.bandwidth == kde.bandwidth
    assert np.array_equal(back.centers, kde.centers)


def test_truncgauss_basics():
    A = 0.25
    assert tg_mean(TruncGauss(A / 2, 0.05, 0, A)) == pytest.approx(A / 2)
    d = TruncGauss(0.1, 1e-9 * A, 0, A)
    assert tg_mean(d) == pytest.approx(0.1, abs=1e-12)
    assert np.all(np.abs(tg_sample(d, np.random.default_rng(0), 100) - 0.1) < 1e-6 * A)
    with pytest.raises(InvalidInputError):
        TruncGauss(0.1, 0.0, 0, A)


def test_truncgauss_normalized_and_uniform_limit():
    for mu, sigma in [(0.0, 0.01), (0.1, 0.05), (0.3, 0.02), (0.125, 250.0)]:
        d = TruncGauss(mu, sigma, 0, 0.25)
        val, _ = integrate.quad(lambda v: tg_pdf(d, v), 0, 0.25, points=[mu] if 0 < mu < .25 else None)
        assert val == pytest.approx(1, abs=1e-6)
        assert tg_pdf(d, -0.01) == 0 and tg_pdf(d, 0.26) == 0
    u = TruncGauss(0.125, 1e3 * 0.25, 0, 0.25)
    assert tg_pdf(u, 0.125) == pytest.approx(4.0, rel=0.01)


def test_truncgauss_closed_form_mean_vs_monte_carlo(rng):
    for mu, sigma in [(0.0, 0.05), (0.2, 0.1), (0.02, 0.01)]:
        d = TruncGauss(mu, sigma, 0, 0.25)
        s = tg_sample(d, rng, 100_000)
        assert s.min() >= 0 and s.max() <= 0.25
        se = s.std() / np.sqrt(s.size)
        assert abs(s.mean() - tg_mean(d)) < 3 * se
        ref = stats.truncnorm((0 - mu) / sigma, (0.25 - mu) / sigma, mu, sigma).mean()
        assert tg_mean(d) == pytest.approx(ref, rel=1e-9)


def test_ppf_monotone_in_u():
    u = np.linspace(0, 1, 1001)
    for sigma in (1e-6, 0.01, 1.0, 1e3):
        x = tg_ppf(u, 0.2, sigma, 0, 0.25)
        assert np.all(np.diff(x) >= 0)


def test_mean_array_matches_scalar():
    mu = np.linspace(0, 0.25, 11)
    assert np.allclose(tg_mean_array(mu, 0.03, 0, 0.25),
                       [tg_mean(TruncGauss(m, 0.03, 0, 0.25)) for m in mu])


def test_far_tail_stays_finite():
    # mean far outside the interval: the tail-flip keeps probabilities accurate
    d = TruncGauss(5.0, 0.01, 0, 0.25)
    assert np.isfinite(d.norm) or d.norm == 0
    assert 0 <= tg_ppf(0.5, 5.0, 0.01, 0, 0.25) <= 0.25
