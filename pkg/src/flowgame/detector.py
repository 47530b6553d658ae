"""First-order likelihood-ratio detector over matched IPDs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .adversary import UNIFORM_SIGMA, AttackPlan, chaff_budget, optimal_means
from .density import tg_logpdf_array
from .errors import InvalidInputError, NumericalError
from .matching import expected_attack_delay, extract_matched, match_flows
from .traffic import apply_delay, as_flow

# half-width, in standard deviations, of every Gaussian integration window
_REACH = 6.0
# widest outer panel, in jitter-density bandwidths, one Gauss-Legendre rule
# integrates accurately
_PANEL_BANDWIDTHS = 12.0
_MAX_SUBPANELS = 16


@dataclass(frozen=True)
class DetectorModel:
    """Everything the detector assumes: densities and the believed attack.

    ``denominator`` is ``"observation"`` (f_dy at the observed IPD) or
    ``"fingerprint"`` (f_dy at the fingerprint's IPD, needs ``w``).
    ``aggregate`` is ``"sum"`` of per-IPD ratios or ``"log-sum"``.
    """

    f_dd: object
    f_dy: object
    attack: AttackPlan
    quad_nodes: int = 16
    denominator: str = "observation"
    aggregate: str = "sum"

    def __post_init__(self):
        if self.quad_nodes < 2:
            raise InvalidInputError("quad_nodes must be >= 2")
        if self.denominator not in ("observation", "fingerprint"):
            raise InvalidInputError(f"unknown denominator {self.denominator!r}")
        if self.aggregate not in ("sum", "log-sum"):
            raise InvalidInputError(f"unknown aggregate {self.aggregate!r}")


@dataclass(frozen=True)
class MixtureBelief:
    """Equal-weight mixture of attack plans the detector cannot tell apart."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidInputError("mixture needs at least one plan")
        first = comps[0]
        if any(c.mu.shape != first.mu.shape or c.sigma != first.sigma
               or c.A_C != first.A_C for c in comps):
            raise InvalidInputError("mixture plans must share shape, sigma and A_C")
        object.__setattr__(self, "components", comps)

    @property
    def mu(self):
        return np.mean([c.mu for c in self.components], axis=0)

    @property
    def sigma(self):
        return self.components[0].sigma

    @property
    def A_C(self):
        return self.components[0].A_C

    @property
    def P_A(self):
        return self.components[0].P_A


def belief_components(attack):
    return attack.components if isinstance(attack, MixtureBelief) else (attack,)


def believed_attack_delay(attack):
    """Expected attack delay of each packet under the detector's belief."""
    return np.mean([expected_attack_delay(c) for c in belief_components(attack)], axis=0)


@dataclass(frozen=True)
class Score:
    value: float
    per_term: np.ndarray


def _gl(nodes):
    xi, wi = roots_legendre(nodes)
    return xi, wi


def attack_marginal_numerators(delta, mu1, mu2, sigma, A_C, f_dd, quad_nodes=16):
    """Vectorized ``E[f_dd(delta - (a2 - a1))]`` with ``a1, a2`` independent
    truncated Gaussians on [0, A_C].

    Integrates in ``s = a2 - a1`` (outer) and ``v = a1`` (inner) with a
    ``quad_nodes`` Gauss-Legendre rule on each axis (per panel). The outer
    axis is split at the kinks of the inner integral and, for wide windows,
    into panels a few kernel bandwidths of ``f_dd`` long. Each axis is
    clipped to where the integrand has mass, so narrow kernels stay resolved.
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    mu1 = np.broadcast_to(np.asarray(mu1, dtype=float), delta.shape)
    mu2 = np.broadcast_to(np.asarray(mu2, dtype=float), delta.shape)
    floor = f_dd.floor
    if A_C == 0:
        return f_dd.pdf(delta)
    xi, wi = _gl(quad_nodes)
    reach = _REACH * sigma
    L1, H1 = np.maximum(0.0, mu1 - reach), np.minimum(A_C, mu1 + reach)
    L2, H2 = np.maximum(0.0, mu2 - reach), np.minimum(A_C, mu2 + reach)
    d_lo, d_hi = f_dd.bulk
    # a2 - a1 is at most Gaussian with std sqrt(2) sigma around mu2 - mu1
    s_lo = np.maximum.reduce([L2 - H1, delta - d_hi, mu2 - mu1 - np.sqrt(2) * reach])
    s_hi = np.minimum.reduce([H2 - L1, delta - d_lo, mu2 - mu1 + np.sqrt(2) * reach])
    ok = s_hi > s_lo
    # the inner range switches its active bound at s = L2 - L1 and
    # s = H2 - H1, a kink in the outer integrand, so split the outer axis there
    cuts = np.sort(np.stack([L2 - L1, H2 - H1], axis=-1), axis=-1)
    edges = np.concatenate([s_lo[:, None], np.clip(cuts, s_lo[:, None], s_hi[:, None]),
                            s_hi[:, None]], axis=1)
    edges = np.where(ok[:, None], edges, s_lo[:, None])
    # a KDE has structure at its bandwidth, so long panels are subdivided
    sub = 1
    bw = getattr(f_dd, "bandwidth", None)
    if bw:
        widest = float(np.max(np.diff(edges, axis=1), initial=0.0))
        sub = int(min(_MAX_SUBPANELS, max(1, np.ceil(widest / (_PANEL_BANDWIDTHS * bw)))))
    frac = np.arange(sub + 1) / sub
    edges = (edges[:, :-1, None] + np.diff(edges, axis=1)[..., None] * frac)
    panel_half = 0.5 * (edges[..., 1:] - edges[..., :-1]).reshape(delta.size, -1)
    panel_mid = 0.5 * (edges[..., 1:] + edges[..., :-1]).reshape(delta.size, -1)
    s = (panel_mid[..., None] + panel_half[..., None] * xi).reshape(delta.size, -1)
    s_w = (panel_half[..., None] * wi).reshape(delta.size, -1)
    # for fixed s the product of both densities peaks at (mu1 + mu2 - s) / 2
    # with std sigma / sqrt(2)
    centre = 0.5 * (mu1 + mu2)[:, None] - 0.5 * s
    v_lo = np.maximum.reduce([np.broadcast_to(L1[:, None], s.shape), L2[:, None] - s,
                              centre - reach / np.sqrt(2)])
    v_hi = np.minimum.reduce([np.broadcast_to(H1[:, None], s.shape), H2[:, None] - s,
                              centre + reach / np.sqrt(2)])
    v_ok = v_hi > v_lo
    v_half = np.where(v_ok, 0.5 * (v_hi - v_lo), 0.0)
    v = 0.5 * (v_hi + v_lo)[..., None] + v_half[..., None] * xi
    lp = (tg_logpdf_array(v, mu1[:, None, None], sigma, 0.0, A_C)
          + tg_logpdf_array(np.clip(v + s[..., None], 0.0, A_C),
                            mu2[:, None, None], sigma, 0.0, A_C))
    q = v_half * np.sum(wi * np.exp(lp), axis=-1)
    fd = f_dd.pdf(delta[:, None] - s)
    num = np.sum(s_w * fd * q, axis=-1)
    return np.where(ok, np.maximum(num, floor), floor)


def term_integral(dt_i, dx_i, mu_i, mu_ip1, sigma, A_C, f_dd, f_dy,
                  quad_nodes=16, denominator_at=None) -> float:
    """One summand of the detector statistic.

    ``denominator_at`` overrides where ``f_dy`` is evaluated (defaults to the
    observed IPD ``dt_i``).
    """
    num = attack_marginal_numerators(dt_i - dx_i, mu_i, mu_ip1, sigma, A_C,
                                     f_dd, quad_nodes)[0]
    den = float(f_dy.pdf(dt_i if denominator_at is None else denominator_at))
    out = num / den
    if not np.isfinite(out):
        raise NumericalError("non-finite likelihood ratio term")
    return float(out)


def likelihood_ratios(t_matched, x, model: DetectorModel, w=None):
    t_matched = np.asarray(t_matched, dtype=float)
    x = as_flow(x)
    if t_matched.shape != x.shape:
        raise InvalidInputError("matched flow and reference differ in length")
    if x.size < 2:
        raise InvalidInputError("need at least two packets")
    dt = np.diff(t_matched)
    dx = np.diff(x)
    comps = belief_components(model.attack)
    num = np.mean([attack_marginal_numerators(dt - dx, c.mu[:-1], c.mu[1:],
                                              c.sigma, c.A_C, model.f_dd,
                                              model.quad_nodes)
                   for c in comps], axis=0)
    if model.denominator == "observation":
        den = model.f_dy.pdf(dt)
    else:
        if w is None:
            raise InvalidInputError("fingerprint denominator needs w")
        den = model.f_dy.pdf(np.diff(np.asarray(w, dtype=float)))
    ratio = num / den
    if not np.all(np.isfinite(ratio)):
        raise NumericalError("non-finite likelihood ratio term")
    return ratio


def lambda1(t_matched, x, model: DetectorModel, w=None) -> Score:
    """Detector statistic: sum over IPDs of the attack-marginalized ratio."""
    ratio = likelihood_ratios(t_matched, x, model, w)
    terms = ratio if model.aggregate == "sum" else np.log(ratio)
    return Score(float(np.sum(terms)), terms)


def baseline_compensate_score(t_matched, x, model: DetectorModel) -> float:
    """Estimate-and-compensate score: plug the believed means in as if they
    were the actual delays instead of marginalizing over them.

    Terms are aggregated like the proposed statistic, as log ratios under
    ``log-sum`` and as plain ratios under ``sum``.
    """
    t_matched = np.asarray(t_matched, dtype=float)
    x = as_flow(x)
    if t_matched.shape != x.shape:
        raise InvalidInputError("matched flow and reference differ in length")
    dt = np.diff(t_matched)
    comp = dt - np.diff(x) - np.diff(model.attack.mu)
    log_ratio = model.f_dd.logpdf(comp) - model.f_dy.logpdf(dt)
    if model.aggregate == "log-sum":
        return float(np.sum(log_ratio))
    return float(np.sum(np.exp(log_ratio)))


def detector_attack_belief(x, A_C, sigma, f_dy, grid_size=64, P_A=0.0,
                           strategy="optimal", follow_paper_equations=False,
                           mode="approx", d1_trace=None, samples=16, rng=None):
    """The attack plan the detector assumes for reference flow ``x``.

    Optimal-family adversaries are predicted by running their optimizer on
    ``x`` itself. ``mode="mc"`` instead averages the optimizer over
    ``samples`` simulated first-hop delay realizations. Uniform-family
    adversaries are believed to delay uniformly on [0, A_C].
    """
    x = as_flow(x)
    n = x.size
    if A_C == 0:
        return AttackPlan(np.zeros(n), 0.0, 0.0, P_A)
    if strategy in ("uniform-mu", "uniform-delay"):
        return AttackPlan(np.full(n, 0.5 * A_C), UNIFORM_SIGMA * A_C, A_C, P_A)
    if mode == "approx":
        mu = optimal_means(x, A_C, f_dy, grid_size, follow_paper_equations)
    elif mode in ("mc", "mixture"):
        if d1_trace is None or rng is None:
            raise InvalidInputError(f"{mode} belief needs a delay trace and rng")
        mus = [optimal_means(apply_delay(x, d1_trace, rng), A_C, f_dy,
                             grid_size, follow_paper_equations)
               for _ in range(samples)]
        if mode == "mixture":
            return MixtureBelief(tuple(AttackPlan(m, sigma, A_C, P_A) for m in mus))
        mu = np.mean(mus, axis=0)
    else:
        raise InvalidInputError(f"unknown belief mode {mode!r}")
    return AttackPlan(mu, sigma, A_C, P_A)


def match_and_score(t, x, model: DetectorModel, rho, variant="proposed", w=None):
    """Match ``t`` against ``x`` and score the matched flow."""
    ea = believed_attack_delay(model.attack)
    res = match_flows(x, t, rho, ea)
    tm = extract_matched(t, res)
    if variant == "proposed":
        return lambda1(tm, x, model, w).value
    if variant == "baseline":
        return baseline_compensate_score(tm, x, model)
    raise InvalidInputError(f"unknown detector variant {variant!r}")


def empirical_threshold(null_scores, eta):
    """Smallest score s with at most a fraction ``eta`` of nulls above s."""
    s = np.sort(np.asarray(null_scores, dtype=float))
    k = int(np.ceil((1.0 - eta) * s.size)) - 1
    return float(s[max(k, 0)])


def calibrate_threshold(x, model: DetectorModel, null_source, eta, trials, rng,
                        rho=0.0, variant="proposed", return_scores=False):
    """Threshold giving false-positive rate at most ``eta`` on simulated
    unrelated flows.

    ``null_source(length, rng)`` must return an unrelated flow; flows have
    ``n + floor(P_A n)`` packets as the adversary may add chaff.
    """
    if not 0 < eta < 1:
        raise InvalidInputError("eta must lie in (0, 1)")
    if trials < np.ceil(10.0 / eta):
        raise InvalidInputError(
            f"need at least {int(np.ceil(10 / eta))} null trials for eta={eta}")
    x = as_flow(x)
    n2 = x.size + chaff_budget(x.size, model.attack.P_A)
    scores = np.array([match_and_score(null_source(n2, rng), x, model, rho, variant)
                       for _ in range(trials)])
    thr = empirical_threshold(scores, eta)
    return (thr, scores) if return_scores else thr
