"""Packet matching between a fingerprinted flow and an observed flow.

Each packet ``x[i]`` is expected at ``b[i] = x[i] + rho + E(a[i])``. The
matcher picks an injective pairing into ``t`` minimizing the squared error to
those expected positions. For a convex cost in one dimension the optimal
injective pairing never crosses once the expected positions are sorted, so
an edit-distance style DP over ``sorted(b)`` x ``t`` is exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import tg_mean_array
from .errors import InvalidInputError
from .traffic import as_flow


@dataclass(frozen=True)
class MatchResult:
    pairing: np.ndarray  # pairing[i] = index into t matched to x[i]
    rho: float
    cost: float


def expected_attack_delay(plan) -> np.ndarray:
    """Mean of each packet's truncated-Gaussian attack delay."""
    if plan.A_C == 0:
        return np.zeros(plan.mu.size)
    return tg_mean_array(plan.mu, plan.sigma, 0.0, plan.A_C)


def _dp_rows(bs, t):
    """Monotone DP; yields the candidate array of every row for backtracking."""
    n, m = bs.size, t.size
    prev = np.zeros(m + 1)
    rows = []
    for i in range(n):
        cand = np.full(m, np.inf)
        cand[i:] = prev[i:m] + (t[i:] - bs[i]) ** 2
        rows.append(cand)
        cur = np.full(m + 1, np.inf)
        cur[1:] = np.minimum.accumulate(cand)
        prev = cur
    return rows, prev[m]


def match_flows(x, t, rho, ea=None) -> MatchResult:
    """Minimum squared-error injective pairing of ``x`` into ``t``."""
    x = as_flow(x)
    t = as_flow(t)
    if t.size < x.size:
        raise InvalidInputError("observed flow is shorter than the reference")
    ea = np.zeros(x.size) if ea is None else np.asarray(ea, dtype=float)
    b = x + rho + ea
    order = np.argsort(b, kind="stable")
    rows, cost = _dp_rows(b[order], t)
    sorted_pair = np.empty(x.size, dtype=np.intp)
    limit = t.size
    for i in range(x.size - 1, -1, -1):
        j = int(np.argmin(rows[i][:limit]))
        sorted_pair[i] = j
        limit = j
    pairing = np.empty(x.size, dtype=np.intp)
    pairing[order] = sorted_pair
    return MatchResult(pairing, float(rho), float(cost))


def matching_cost(x, t, rhos, ea=None) -> np.ndarray:
    """Optimal matching cost for a batch of candidate shifts."""
    x = as_flow(x)
    t = as_flow(t)
    rhos = np.atleast_1d(np.asarray(rhos, dtype=float))
    ea = np.zeros(x.size) if ea is None else np.asarray(ea, dtype=float)
    n, m = x.size, t.size
    b = x + ea
    order = np.argsort(b, kind="stable")
    bs = b[order][None, :] + rhos[:, None]
    prev = np.zeros((rhos.size, m + 1))
    for i in range(n):
        cand = np.full((rhos.size, m), np.inf)
        cand[:, i:] = prev[:, i:m] + (t[None, i:] - bs[:, i:i + 1]) ** 2
        cur = np.full((rhos.size, m + 1), np.inf)
        cur[:, 1:] = np.minimum.accumulate(cand, axis=1)
        prev = cur
    return prev[:, m]


def default_rho_grid(x, t, A_C, resolution=1e-3):
    lo = t[0] - x[0] - A_C
    hi = t[-1] - x[-1]
    if hi < lo:
        lo, hi = hi, lo
    return np.arange(lo, hi + 0.5 * resolution, resolution)


def estimate_rho(x, t, ea=None, mode="grid-search", grid=None,
                 true_delays=None, A_C=0.0, resolution=1e-3) -> float:
    """Synchronization constant.

    ``oracle-mean`` averages the true network delays (simulation only);
    ``grid-search`` returns the grid shift with the lowest matching cost.
    """
    if mode == "oracle-mean":
        if true_delays is None:
            raise InvalidInputError("oracle-mean needs the true delays")
        return float(np.mean(true_delays))
    if mode != "grid-search":
        raise InvalidInputError(f"unknown rho mode {mode!r}")
    x = as_flow(x)
    t = as_flow(t)
    if grid is None:
        grid = default_rho_grid(x, t, A_C, resolution)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidInputError("empty rho grid")
    costs = matching_cost(x, t, grid, ea)
    return float(grid[int(np.argmin(costs))])


def extract_matched(t, result: MatchResult) -> np.ndarray:
    """Packets of ``t`` paired with ``x[0..n-1]``, in the order of ``x``."""
    return np.asarray(t, dtype=float)[result.pairing]
