"""Game trials, experiments and strategy comparisons.

Every random draw of trial ``i`` comes from ``default_rng([seed, i, stream])``
with a fixed stream label per pipeline stage (see ``STREAMS``), so changing
one player's strategy leaves every other draw of the trial untouched.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adversary import STRATEGIES, chaff_budget, plan_attack
from .density import DEFAULT_FLOOR, kde_fit
from .detector import (DetectorModel, believed_attack_delay, detector_attack_belief,
                       empirical_threshold, match_and_score)
from .errors import InvalidInputError
from .fingerprint import (embed, fancy_fingerprint, optimal_fingerprint,
                          uniform_fingerprint)
from .matching import estimate_rho
from .roc import RocCurve, bootstrap_auc, roc_auc, roc_curve
from .traffic import (DelayTrace, IpdTrace, delay_at, sample_flow,
                      synth_delay_trace, synth_ipd_trace)

STREAMS = {
    "u": 0, "fingerprint": 1, "path1": 2, "attack": 3, "path2": 4,
    "y": 5, "y_path1": 6, "y_path2": 7, "decoy": 8, "belief": 9,
}
FINGERPRINTS = ("none", "uniform", "optimal", "fancy")
DETECTORS = ("proposed", "baseline")
AXES = {
    "detector": DETECTORS,
    "adversary": STRATEGIES,
    "fingerprint": FINGERPRINTS,
}


@dataclass(frozen=True)
class GameParams:
    n: int = 20
    W_C: float = 0.0
    A_C: float = 0.25
    P_A: float = 1.0
    eta: float = 0.05
    sigma: float | None = None  # None means 1e-2 * A_C
    trials_h1: int = 1000
    trials_null: int = 1000
    master_seed: int = 1
    fingerprint: str = "optimal"
    ad_strategy: str = "optimal"
    detector_variant: str = "proposed"
    grid_size: int = 64
    quad_nodes: int = 16
    rho_mode: str = "oracle-mean"
    chaff_offset: float = 1e-3
    chaff_placement: str = "adjacent"
    W_fancy: float | None = None  # None means W_C
    follow_paper_equations: bool = False
    denominator: str = "observation"
    aggregate: str = "sum"
    belief_mode: str = "approx"
    belief_samples: int = 16
    decoy_h1: bool = False  # replace the H1 flow by an unrelated one
    workers: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError("n must be >= 2")
        if min(self.W_C, self.A_C, self.P_A) < 0:
            raise InvalidInputError("caps must be non-negative")
        if not 0 < self.eta < 1:
            raise InvalidInputError("eta must lie in (0, 1)")
        if self.trials_h1 < 1 or self.trials_null < 1:
            raise InvalidInputError("trial counts must be >= 1")
        if self.fingerprint not in FINGERPRINTS:
            raise InvalidInputError(f"unknown fingerprint {self.fingerprint!r}")
        if self.ad_strategy not in STRATEGIES:
            raise InvalidInputError(f"unknown adversary {self.ad_strategy!r}")
        if self.detector_variant not in DETECTORS:
            raise InvalidInputError(f"unknown detector {self.detector_variant!r}")
        if self.rho_mode not in ("oracle-mean", "grid-search"):
            raise InvalidInputError(f"unknown rho mode {self.rho_mode!r}")

    @property
    def ad_sigma(self):
        return 1e-2 * self.A_C if self.sigma is None else self.sigma

    @property
    def fancy_amplitude(self):
        return self.W_C if self.W_fancy is None else self.W_fancy

    def replace(self, **changes) -> "GameParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Corpus:
    """Traffic and delay measurements, already split into train/test halves."""

    ipd_train: IpdTrace
    ipd_test: IpdTrace
    path1_train: DelayTrace
    path1_test: DelayTrace
    path2_train: DelayTrace
    path2_test: DelayTrace

    @classmethod
    def from_traces(cls, ipds: IpdTrace, path1: DelayTrace, path2: DelayTrace,
                    train_fraction=0.5):
        a, b = ipds.split(train_fraction)
        c, d = path1.split(train_fraction)
        e, f = path2.split(train_fraction)
        return cls(a, b, c, d, e, f)


@dataclass(frozen=True)
class Densities:
    f_dy: object
    f_dd: object


# Synthetic stand-ins for measured corpora. Scenario "a" mimics interactive
# sessions: keystrokes at a steady cadence plus think times, over paths with
# independent jitter. "b" mimics web transfers over smoother paths. The
# "density" entry holds fitting defaults suited to the scenario; the narrow
# IPD bandwidth keeps the cadence peak resolved where Silverman's rule would
# smear it across the heavy idle tail.
SCENARIOS = {
    "a": {
        "ipd_model": "mixture",
        "ipd_params": {"burst_median": 0.1, "burst_shape": 0.1,
                       "idle_median": 0.5, "idle_shape": 1.0, "idle_weight": 0.3},
        "ipd_length": 200_000,
        "path1": {"base": 0.05, "jitter_std": 0.02, "correlation": 0.0},
        "path2": {"base": 0.05, "jitter_std": 0.02, "correlation": 0.0},
        "delay_length": 200_000,
        "density": {"dy_bandwidth": 0.003, "dy_floor": 0.01},
    },
    "b": {
        "ipd_model": "mixture",
        "ipd_params": {"burst_median": 0.004, "burst_shape": 1.0,
                       "idle_median": 0.3, "idle_shape": 1.0, "idle_weight": 0.2},
        "ipd_length": 200_000,
        "path1": {"base": 0.060, "jitter_std": 0.004, "correlation": 0.8},
        "path2": {"base": 0.040, "jitter_std": 0.003, "correlation": 0.8},
        "delay_length": 200_000,
        "density": {},
    },
}


def scenario_density(scenario):
    """Density-fitting keyword defaults for a named scenario."""
    if scenario not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {scenario!r}")
    return dict(SCENARIOS[scenario]["density"])


def synthetic_traces(scenario="a", seed=0, **overrides):
    """(ipd_trace, path1, path2) for a named synthetic scenario."""
    if scenario not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {scenario!r}")
    cfg = {**SCENARIOS[scenario], **overrides}
    rng = np.random.default_rng([seed, 1000])
    ipds = synth_ipd_trace(cfg["ipd_model"], cfg["ipd_params"],
                           cfg["ipd_length"], rng)
    p1 = synth_delay_trace(length=cfg["delay_length"], rng=rng, **cfg["path1"])
    p2 = synth_delay_trace(length=cfg["delay_length"], rng=rng, **cfg["path2"])
    return ipds, p1, p2


def synthetic_corpus(scenario="a", seed=0, **overrides) -> Corpus:
    return Corpus.from_traces(*synthetic_traces(scenario, seed, **overrides))


def _subsample(values, limit, rng):
    if values.size <= limit:
        return values
    return np.sort(rng.choice(values, size=limit, replace=False))


def path_delays(path1, path2, o1, o2, x, a=None):
    """End-to-end delay of each real packet: first hop at its departure, the
    second hop at the adversary's output time."""
    d1 = delay_at(path1, o1 + x)
    at_ad = x + d1 + (0.0 if a is None else a)
    d2 = delay_at(path2, o2 + at_ad)
    return d1, d2


def _origin(trace, rng):
    return float(rng.uniform(0.0, trace.span)) if trace.span > 0 else 0.0


def fit_densities(corpus: Corpus, n=20, seed=0, flows=400, max_centers=4000,
                  dy_bandwidth="auto", dd_bandwidth="auto",
                  zero_jitter_bandwidth=1e-4, tabulate=True, dy_floor=DEFAULT_FLOOR,
                  dd_floor=DEFAULT_FLOOR) -> Densities:
    """Fit f_dy on training IPDs and f_dd on end-to-end delay variation
    simulated over the training halves of both delay traces."""
    rng = np.random.default_rng([seed, 2000])
    dy = _subsample(corpus.ipd_train.ipds, max_centers, rng)
    f_dy = kde_fit(dy, dy_bandwidth, dy_floor)
    jitter = []
    for _ in range(flows):
        u = sample_flow(corpus.ipd_train, n, rng)
        o1 = _origin(corpus.path1_train, rng)
        o2 = _origin(corpus.path2_train, rng)
        d1, d2 = path_delays(corpus.path1_train, corpus.path2_train, o1, o2, u)
        jitter.append(np.diff(d1 + d2))
    dd = _subsample(np.concatenate(jitter), max_centers, rng)
    if dd_bandwidth == "auto" and np.ptp(dd) == 0:
        dd_bandwidth = zero_jitter_bandwidth
    f_dd = kde_fit(dd, dd_bandwidth, dd_floor)
    if tabulate:
        return Densities(f_dy.tabulate(), f_dd.tabulate())
    return Densities(f_dy, f_dd)


def _rng(params, trial, stream):
    return np.random.default_rng([params.master_seed, trial, STREAMS[stream]])


def _unrelated_flow(corpus, length, params, trial, tag):
    rng = _rng(params, trial, tag)
    y = sample_flow(corpus.ipd_test, length, rng)
    o1 = _origin(corpus.path1_test, _rng(params, trial, "y_path1"))
    o2 = _origin(corpus.path2_test, _rng(params, trial, "y_path2"))
    d1, d2 = path_delays(corpus.path1_test, corpus.path2_test, o1, o2, y)
    return np.sort(y + d1 + d2)


def make_fingerprint(u, params: GameParams, f_dy, rng):
    """Returns (x, w)."""
    if params.fingerprint == "none" or (params.W_C == 0 and params.fingerprint != "fancy"):
        w = np.zeros(u.size)
    elif params.fingerprint == "uniform":
        w = uniform_fingerprint(u.size, params.W_C, rng)
    elif params.fingerprint == "optimal":
        w = optimal_fingerprint(u, params.W_C, f_dy, params.grid_size,
                                params.follow_paper_equations)
    else:
        x = fancy_fingerprint(u, params.fancy_amplitude, rng)
        return x, x - u
    return embed(u, w), w


def detector_model(x, params: GameParams, densities: Densities, rng=None,
                   path1=None) -> DetectorModel:
    belief = detector_attack_belief(
        x, params.A_C, params.ad_sigma, densities.f_dy, params.grid_size,
        params.P_A, params.ad_strategy, params.follow_paper_equations,
        params.belief_mode, path1, params.belief_samples, rng)
    return DetectorModel(densities.f_dd, densities.f_dy, belief,
                         params.quad_nodes, params.denominator, params.aggregate)


def run_trial(params: GameParams, densities: Densities, corpus: Corpus, trial: int):
    """One H1 and one H0 detector score for trial number ``trial``."""
    n = params.n
    n2 = n + chaff_budget(n, params.P_A)
    u = sample_flow(corpus.ipd_test, n, _rng(params, trial, "u"))
    x, w = make_fingerprint(u, params, densities.f_dy, _rng(params, trial, "fingerprint"))

    o1 = _origin(corpus.path1_test, _rng(params, trial, "path1"))
    o2 = _origin(corpus.path2_test, _rng(params, trial, "path2"))
    d1 = delay_at(corpus.path1_test, o1 + x)
    r = x + d1
    order = np.argsort(r, kind="stable")
    plan, a_sorted, z = plan_attack(
        r[order], params.ad_strategy, params.A_C, params.P_A, params.ad_sigma,
        densities.f_dy, _rng(params, trial, "attack"), params.grid_size,
        params.chaff_offset, params.follow_paper_equations, params.chaff_placement)
    a = np.empty(n)
    a[order] = a_sorted
    t1 = np.sort(z + delay_at(corpus.path2_test, o2 + z))
    d2 = delay_at(corpus.path2_test, o2 + r + a)

    model = detector_model(x, params, densities, _rng(params, trial, "belief"),
                           corpus.path1_train)
    ea = believed_attack_delay(model.attack)

    if params.decoy_h1:
        t1 = _unrelated_flow(corpus, n2, params, trial, "decoy")
    y = _unrelated_flow(corpus, n2, params, trial, "y")

    def rho_for(t):
        return estimate_rho(x, t, ea, params.rho_mode, true_delays=d1 + d2,
                            A_C=params.A_C)

    s1 = match_and_score(t1, x, model, rho_for(t1), params.detector_variant, w)
    s0 = match_and_score(y, x, model, rho_for(y), params.detector_variant, w)
    return s1, s0


@dataclass(frozen=True)
class ExperimentResult:
    params: GameParams
    h1: np.ndarray
    h0: np.ndarray
    roc: RocCurve

    @property
    def auc(self):
        return self.roc.auc

    def auc_interval(self, resamples=200):
        return bootstrap_auc(self.h1, self.h0, resamples, seed=self.params.master_seed)


def _trial_block(args):
    params, densities, corpus, trials = args
    return [run_trial(params, densities, corpus, i) for i in trials]


def run_scores(params: GameParams, densities: Densities, corpus: Corpus):
    total = max(params.trials_h1, params.trials_null)
    if params.workers <= 1:
        out = _trial_block((params, densities, corpus, range(total)))
    else:
        chunks = np.array_split(np.arange(total), params.workers * 4)
        jobs = [(params, densities, corpus, [int(i) for i in c]) for c in chunks]
        with ProcessPoolExecutor(params.workers) as pool:
            out = [s for block in pool.map(_trial_block, jobs) for s in block]
    scores = np.array(out, dtype=float).reshape(total, 2)
    return scores[:params.trials_h1, 0], scores[:params.trials_null, 1]


def run_experiment(params: GameParams, densities: Densities, corpus: Corpus):
    h1, h0 = run_scores(params, densities, corpus)
    return ExperimentResult(params, h1, h0, roc_curve(h1, h0))


def default_sigma_grid(A_C, lo=-6, hi=3):
    return A_C * 10.0 ** np.arange(lo, hi + 1)


def sweep_sigma(params: GameParams, densities, corpus, sigma_grid=None):
    """AUC for each adversary sigma, with shared trial seeds."""
    if sigma_grid is None:
        sigma_grid = default_sigma_grid(params.A_C)
    return [(float(s), run_experiment(params.replace(sigma=float(s)), densities, corpus))
            for s in sigma_grid]


def compare_strategies(params: GameParams, densities, corpus, axis, presets=None):
    """Run every preset along ``axis`` under common random numbers."""
    if axis not in AXES:
        raise InvalidInputError(f"unknown axis {axis!r}")
    presets = AXES[axis] if presets is None else presets
    field = {"detector": "detector_variant", "adversary": "ad_strategy",
             "fingerprint": "fingerprint"}[axis]
    return {p: run_experiment(params.replace(**{field: p}), densities, corpus)
            for p in presets}


def calibrate(params: GameParams, densities, corpus, trials=None, validate=0,
              reference_trial=0):
    """Threshold for ``params.eta`` on the reference flow of one trial.

    Returns ``(threshold, calibration_scores, validation_scores)``; the
    validation set uses fresh null flows when ``validate > 0``.
    """
    trials = params.trials_null if trials is None else trials
    if trials < np.ceil(10.0 / params.eta):
        raise InvalidInputError(
            f"need at least {int(np.ceil(10 / params.eta))} null trials")
    u = sample_flow(corpus.ipd_test, params.n, _rng(params, reference_trial, "u"))
    x, w = make_fingerprint(u, params, densities.f_dy,
                            _rng(params, reference_trial, "fingerprint"))
    model = detector_model(x, params, densities,
                           _rng(params, reference_trial, "belief"), corpus.path1_train)
    ea = believed_attack_delay(model.attack)
    n2 = params.n + chaff_budget(params.n, params.P_A)
    rho = float(np.mean(corpus.path1_test.samples) + np.mean(corpus.path2_test.samples))

    def scores(first, count):
        out = np.empty(count)
        for k in range(count):
            y = _unrelated_flow(corpus, n2, params, first + k, "y")
            r = rho if params.rho_mode == "oracle-mean" else estimate_rho(
                x, y, ea, "grid-search", A_C=params.A_C)
            out[k] = match_and_score(y, x, model, r, params.detector_variant, w)
        return out

    cal = scores(1, trials)
    thr = empirical_threshold(cal, params.eta)
    val = scores(1 + trials, validate) if validate else np.zeros(0)
    return thr, cal, val
