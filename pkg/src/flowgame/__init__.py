"""Flow fingerprinting game: traffic model, fingerprinter, adversary,
matcher, detector and a Monte Carlo harness tying them together."""
from .adversary import (STRATEGIES, AttackPlan, apply_attack, chaff_budget, chaff_evasive,
                        chaff_uniform, optimal_means, plan_attack, sample_delays)
from .config import RunConfig, load_config, parse_config
from .density import GridDensity, Kde1D, TruncGauss, kde_fit, silverman_bandwidth
from .detector import (DetectorModel, MixtureBelief, Score, attack_marginal_numerators,
                       baseline_compensate_score, calibrate_threshold,
                       detector_attack_belief, empirical_threshold, lambda1,
                       match_and_score, term_integral)
from .errors import InvalidInputError, NumericalError
from .fingerprint import embed, fancy_fingerprint, optimal_fingerprint, uniform_fingerprint
from .harness import (SCENARIOS, Corpus, Densities, ExperimentResult, GameParams,
                      calibrate, compare_strategies, fit_densities, run_experiment,
                      run_trial, scenario_density, sweep_sigma, synthetic_corpus,
                      synthetic_traces)
from .matching import MatchResult, estimate_rho, match_flows
from .roc import RocCurve, bootstrap_auc, paired_auc_gap, roc_auc, roc_curve
from .traffic import (DelayTrace, IpdTrace, apply_delay, delay_at, flow_from_ipds, ipd,
                      sample_flow)

__version__ = "0.1.0"
