"""Grid dynamic program shared by the fingerprinter and the adversary.

Both players choose a per-packet offset ``v[i]`` from the grid
``{0, cap/(G-1), ..., cap}`` and score the resulting IPD sequence
``ipds[i] + v[i+1] - v[i]`` with ``sum(log f(.))``. The adversary pushes this
typicality up, the fingerprinter pushes it down. Coupling is only between
neighbours, so the exact grid optimum is a Viterbi pass in O(n G^2).
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def typicality(ipds, offsets, density) -> float:
    """``sum_i log f(ipds[i] + offsets[i+1] - offsets[i])``."""
    ipds = np.asarray(ipds, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    if ipds.size == 0:
        return 0.0
    return float(np.sum(density.logpdf(ipds + np.diff(offsets))))


def grid_levels(cap, grid_size):
    if grid_size < 2:
        raise InvalidInputError("grid_size must be >= 2")
    if cap < 0:
        raise InvalidInputError("cap must be non-negative")
    return np.linspace(0.0, cap, grid_size)


def optimize_offsets(ipds, cap, density, grid_size, maximize, keep_order=True):
    """Exact grid optimum of the typicality objective.

    Parameters
    ----------
    ipds : sequence of n-1 base IPDs.
    cap : largest allowed offset.
    density : object with ``logpdf``.
    maximize : True for the adversary's direction, False for the analyst's.
    keep_order : forbid offsets that would make a resulting IPD negative.

    Returns
    -------
    offsets : array of n grid values.
    """
    ipds = np.asarray(ipds, dtype=float)
    n = ipds.size + 1
    levels = grid_levels(cap, grid_size)
    if cap == 0 or n == 1:
        return np.zeros(n)
    G = grid_size
    step = levels[1] - levels[0]
    shifts = (np.arange(2 * G - 1) - (G - 1)) * step
    cand = ipds[:, None] + shifts[None, :]
    score = density.logpdf(cand)
    if not np.all(np.isfinite(score)):
        raise InvalidInputError("density returned non-finite log values")
    if not maximize:
        score = -score
    if keep_order:
        score = np.where(cand < -1e-12, -np.inf, score)
    # transition j -> k uses shift index k - j + G - 1
    idx = np.arange(G)[None, :] - np.arange(G)[:, None] + (G - 1)
    value = np.zeros(G)
    back = np.empty((n - 1, G), dtype=np.intp)
    for i in range(n - 1):
        total = value[:, None] + score[i][idx]
        back[i] = np.argmax(total, axis=0)
        value = total[back[i], np.arange(G)]
    k = int(np.argmax(value))
    path = np.empty(n, dtype=np.intp)
    path[-1] = k
    for i in range(n - 2, -1, -1):
        path[i] = back[i, path[i + 1]]
    return levels[path]


def brute_force_offsets(ipds, cap, density, grid_size, maximize, keep_order=True):
    """Exhaustive search over all ``G**n`` grid assignments (tiny n only)."""
    ipds = np.asarray(ipds, dtype=float)
    n = ipds.size + 1
    levels = grid_levels(cap, grid_size)
    grids = np.stack(np.meshgrid(*([levels] * n), indexing="ij"), -1).reshape(-1, n)
    cand = ipds[None, :] + np.diff(grids, axis=1)
    obj = density.logpdf(cand).sum(axis=1)
    if keep_order:
        bad = np.any(cand < -1e-12, axis=1)
        obj = np.where(bad, -np.inf if maximize else np.inf, obj)
    best = np.argmax(obj) if maximize else np.argmin(obj)
    return grids[best], float(obj[best])
