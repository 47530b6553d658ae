"""Adversary: truncated-Gaussian delay channel plus chaff insertion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density import tg_ppf
from .errors import InvalidInputError
from .traffic import as_flow
from .typicality import optimize_offsets

STRATEGIES = ("optimal", "uniform-mu", "uniform-delay", "optimal-random-chaff")
# sigma used to represent "uniform on [0, A_C]" inside the truncated family
UNIFORM_SIGMA = 1e3
DEFAULT_CHAFF_OFFSET = 1e-3


@dataclass(frozen=True)
class AttackPlan:
    mu: np.ndarray
    sigma: float
    A_C: float
    P_A: float = 0.0
    chaff: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "chaff", np.asarray(self.chaff, dtype=float))
        if self.A_C < 0 or self.P_A < 0:
            raise InvalidInputError("A_C and P_A must be non-negative")
        if np.any(self.mu < 0) or np.any(self.mu > self.A_C):
            raise InvalidInputError("means must lie in [0, A_C]")
        if self.A_C > 0 and not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        if self.chaff.size > np.floor(self.P_A * self.mu.size + 1e-9):
            raise InvalidInputError("chaff exceeds the P_A budget")

    def satisfies(self, r) -> bool:
        """Check the chaff support constraint against the received flow."""
        r = as_flow(r)
        return bool(np.all(self.chaff >= 0) and np.all(self.chaff <= r[-1] + self.A_C))


def chaff_budget(n, P_A) -> int:
    return int(np.floor(P_A * n + 1e-9))


def optimal_means(r, A_C, f_dy, grid_size=64, follow_paper_equations=False):
    """Grid means that make ``r + mu`` as typical as possible under ``f_dy``."""
    r = as_flow(r)
    if r.size == 0:
        raise InvalidInputError("empty flow")
    if A_C < 0:
        raise InvalidInputError("A_C must be non-negative")
    return optimize_offsets(np.diff(r), A_C, f_dy, grid_size,
                            maximize=not follow_paper_equations)


def sample_delays(mu, sigma, A_C, rng=None, u=None):
    """Independent truncated-Gaussian delays on [0, A_C].

    Pass ``u`` (uniforms) instead of ``rng`` to couple draws across calls.
    """
    mu = np.asarray(mu, dtype=float)
    if A_C == 0:
        return np.zeros(mu.size)
    if u is None:
        u = rng.random(mu.size)
    return tg_ppf(u, mu, sigma, 0.0, A_C)


def chaff_uniform(r, n_A, A_C=None, rng=None, u=None):
    """i.i.d. dummy timings uniform between the first and last packet."""
    r = as_flow(r)
    if n_A == 0:
        return np.zeros(0)
    if u is None:
        u = rng.random(n_A)
    return r[0] + (r[-1] - r[0]) * np.asarray(u[:n_A])


def chaff_evasive(r, a, n_A, A_C, offset=DEFAULT_CHAFF_OFFSET, placement="adjacent"):
    """Dummies meant to be discarded by the matcher.

    ``adjacent``: ``offset`` after delayed real packets, round-robin, the
    k-th pass over the flow using ``(k+1) * offset``. ``tail``: spaced by
    ``offset`` after the last delayed real packet. Timings are clamped to
    ``[0, r[-1] + A_C]``.
    """
    r = as_flow(r)
    a = np.asarray(a, dtype=float)
    if n_A == 0:
        return np.zeros(0)
    j = np.arange(n_A)
    if placement == "adjacent":
        idx = j % r.size
        rounds = j // r.size + 1
        c = r[idx] + a[idx] + rounds * offset
    elif placement == "tail":
        c = np.max(r + a) + (j + 1) * offset
    else:
        raise InvalidInputError(f"unknown chaff placement {placement!r}")
    return np.clip(c, 0.0, r[-1] + A_C)


def apply_attack(r, a, chaff):
    """``sort((r + a) || chaff)``."""
    r = as_flow(r)
    return np.sort(np.concatenate([r + np.asarray(a, dtype=float),
                                   np.asarray(chaff, dtype=float)]))


def plan_attack(r, strategy, A_C, P_A, sigma, f_dy, rng, grid_size=64,
                chaff_offset=DEFAULT_CHAFF_OFFSET, follow_paper_equations=False,
                chaff_placement="adjacent"):
    """Run one of the named adversary presets on received flow ``r``.

    Uniforms are drawn in a fixed order and count, so every preset consumes
    ``rng`` identically (common random numbers across presets and sigmas).

    Returns ``(plan, a, z)``.
    """
    if strategy not in STRATEGIES:
        raise InvalidInputError(f"unknown adversary strategy {strategy!r}")
    r = as_flow(r)
    n = r.size
    n_A = chaff_budget(n, P_A)
    u_delay = rng.random(n)
    u_mu = rng.random(n)
    u_chaff = rng.random(n_A)
    if A_C == 0:
        mu = np.zeros(n)
        a = np.zeros(n)
    elif strategy == "uniform-mu":
        mu = A_C * u_mu
        a = sample_delays(mu, sigma, A_C, u=u_delay)
    elif strategy == "uniform-delay":
        mu = np.full(n, 0.5 * A_C)
        sigma = UNIFORM_SIGMA * A_C
        a = sample_delays(mu, sigma, A_C, u=u_delay)
    else:
        mu = optimal_means(r, A_C, f_dy, grid_size, follow_paper_equations)
        a = sample_delays(mu, sigma, A_C, u=u_delay)
    if strategy == "optimal-random-chaff":
        chaff = chaff_uniform(r, n_A, A_C, u=u_chaff)
    else:
        chaff = chaff_evasive(r, a, n_A, A_C, chaff_offset, chaff_placement)
    plan = AttackPlan(mu, sigma if A_C > 0 else 0.0, A_C, P_A, chaff)
    return plan, a, apply_attack(r, a, chaff)
