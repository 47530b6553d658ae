import numpy as np
import pytest

from flowgame.errors import InvalidInputError
from flowgame.harness import (GameParams, calibrate, compare_strategies,
                              default_sigma_grid, fit_densities, run_experiment, run_trial,
                              scenario_density, synthetic_corpus, synthetic_traces)


@pytest.fixture(scope="module")
def world():
    corpus = synthetic_corpus("a", 0, ipd_length=20_000, delay_length=20_000)
    return corpus, fit_densities(corpus, 10, flows=100, max_centers=1000,
                                 **scenario_density("a"))


def small(**kw):
    base = dict(n=10, trials_h1=20, trials_null=20, grid_size=16)
    return GameParams(**{**base, **kw})


def test_params_validation():
    for bad in (dict(n=1), dict(W_C=-1), dict(eta=0), dict(fingerprint="x"),
                dict(ad_strategy="x"), dict(detector_variant="x"), dict(rho_mode="x")):
        with pytest.raises(InvalidInputError):
            GameParams(**bad)
    assert GameParams().ad_sigma == pytest.approx(0.0025)
    assert GameParams(W_C=0.01).fancy_amplitude == 0.01


def test_scenarios():
    with pytest.raises(InvalidInputError):
        synthetic_traces("zzz")
    with pytest.raises(InvalidInputError):
        scenario_density("zzz")
    a = synthetic_traces("b", 3, ipd_length=100, delay_length=100)
    b = synthetic_traces("b", 3, ipd_length=100, delay_length=100)
    assert all(np.array_equal(p.samples if hasattr(p, "samples") else p.ipds,
                              q.samples if hasattr(q, "samples") else q.ipds)
               for p, q in zip(a, b))


def test_trials_deterministic(world):
    corpus, dens = world
    p = small()
    assert run_trial(p, dens, corpus, 3) == run_trial(p, dens, corpus, 3)
    assert run_trial(p, dens, corpus, 3) != run_trial(p, dens, corpus, 4)
    assert run_trial(p, dens, corpus, 3) != run_trial(p.replace(master_seed=2), dens, corpus, 3)


def test_workers_match_serial(world):
    corpus, dens = world
    a = run_experiment(small(), dens, corpus)
    b = run_experiment(small(workers=2), dens, corpus)
    assert np.array_equal(a.h1, b.h1) and np.array_equal(a.h0, b.h0)


def test_common_random_numbers_share_null_flows(world):
    # the H0 flow never depends on the adversary, so scores differ only via
    # the detector's belief about the attack
    corpus, dens = world
    res = compare_strategies(small(), dens, corpus, "adversary",
                             ["optimal", "optimal-random-chaff"])
    assert np.array_equal(res["optimal"].h0, res["optimal-random-chaff"].h0)
    with pytest.raises(InvalidInputError):
        compare_strategies(small(), dens, corpus, "colour")


def test_decoy_h1_is_chance(world):
    corpus, dens = world
    res = run_experiment(small(trials_h1=200, trials_null=200, decoy_h1=True), dens, corpus)
    assert abs(res.auc - 0.5) < 0.1


def test_trivial_game_separates(world):
    corpus, dens = world
    zero = corpus.__class__(corpus.ipd_train, corpus.ipd_test,
                            *[t.__class__(np.full(t.samples.size, 0.05), t.sample_period)
                              for t in (corpus.path1_train, corpus.path1_test,
                                        corpus.path2_train, corpus.path2_test)])
    d = fit_densities(zero, 10, flows=50, max_centers=1000, **scenario_density("a"))
    res = run_experiment(small(A_C=0.0, P_A=0.0, fingerprint="none"), d, zero)
    assert res.auc == 1.0 and res.h1.min() > res.h0.max()


@pytest.mark.parametrize("fp", ["none", "uniform", "optimal", "fancy"])
def test_every_fingerprint_runs(world, fp):
    corpus, dens = world
    res = run_experiment(small(fingerprint=fp, W_C=0.01, trials_h1=5, trials_null=5),
                         dens, corpus)
    assert np.all(np.isfinite(res.h1)) and np.all(np.isfinite(res.h0))


def test_belief_modes_and_baseline_run(world):
    corpus, dens = world
    for kw in (dict(belief_mode="mixture", belief_samples=3, chaff_placement="tail"),
               dict(belief_mode="mc", belief_samples=3),
               dict(detector_variant="baseline"),
               dict(rho_mode="grid-search"),
               dict(ad_strategy="uniform-delay")):
        res = run_experiment(small(trials_h1=5, trials_null=5, **kw), dens, corpus)
        assert 0 <= res.auc <= 1


def test_calibrate(world):
    corpus, dens = world
    p = small(eta=0.1)
    thr, cal, val = calibrate(p, dens, corpus, trials=100, validate=50)
    assert cal.size == 100 and val.size == 50
    assert np.mean(cal > thr) <= 0.1
    with pytest.raises(InvalidInputError):
        calibrate(p, dens, corpus, trials=20)


def test_sigma_grid():
    g = default_sigma_grid(0.25)
    assert g.size == 10 and g[0] == pytest.approx(0.25e-6) and g[-1] == pytest.approx(250)


def test_inactive_fingerprint_leaves_nulls_unchanged(world):
    corpus, dens = world
    a = run_experiment(small(fingerprint="none"), dens, corpus)
    b = run_experiment(small(fingerprint="optimal", W_C=0.0), dens, corpus)
    assert np.array_equal(a.h0, b.h0) and np.array_equal(a.h1, b.h1)
