"""Empirical ROC curves, AUC and bootstrap intervals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError


@dataclass(frozen=True)
class RocCurve:
    epsilon: np.ndarray  # threshold of each point; -inf gives (1, 1)
    pf: np.ndarray
    pd: np.ndarray
    auc: float

    def rows(self):
        return zip(self.epsilon, self.pf, self.pd)


def roc_auc(scores_h1, scores_h0) -> float:
    """Mann-Whitney AUC: P(h1 > h0) + 0.5 P(h1 == h0)."""
    h1 = np.asarray(scores_h1, dtype=float)
    h0 = np.asarray(scores_h0, dtype=float)
    if h1.size == 0 or h0.size == 0:
        raise InvalidInputError("need scores under both hypotheses")
    ranks = rankdata(np.concatenate([h1, h0]))
    u = ranks[:h1.size].sum() - h1.size * (h1.size + 1) / 2.0
    return float(u / (h1.size * h0.size))


def roc_curve(scores_h1, scores_h0) -> RocCurve:
    """Exact empirical ROC using every distinct pooled score as threshold.

    A score is declared positive when it is strictly above the threshold.
    """
    h1 = np.sort(np.asarray(scores_h1, dtype=float))
    h0 = np.sort(np.asarray(scores_h0, dtype=float))
    if h1.size == 0 or h0.size == 0:
        raise InvalidInputError("need scores under both hypotheses")
    eps = np.unique(np.concatenate([h1, h0]))[::-1]
    pd = 1.0 - np.searchsorted(h1, eps, side="right") / h1.size
    pf = 1.0 - np.searchsorted(h0, eps, side="right") / h0.size
    eps = np.concatenate([eps, [-np.inf]])
    pd = np.concatenate([pd, [1.0]])
    pf = np.concatenate([pf, [1.0]])
    eps = np.concatenate([[np.inf], eps])
    pd = np.concatenate([[0.0], pd])
    pf = np.concatenate([[0.0], pf])
    auc = float(np.sum(np.diff(pf) * 0.5 * (pd[1:] + pd[:-1])))
    return RocCurve(eps, pf, pd, auc)


def bootstrap_auc(h1, h0, resamples=200, seed=0, level=0.95):
    """Percentile interval for the AUC, resampling trials as (h1, h0) pairs
    when both arrays have equal length, independently otherwise."""
    h1 = np.asarray(h1, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    rng = np.random.default_rng(seed)
    paired = h1.size == h0.size
    stats = np.empty(resamples)
    for b in range(resamples):
        i1 = rng.integers(h1.size, size=h1.size)
        i0 = i1 if paired else rng.integers(h0.size, size=h0.size)
        stats[b] = roc_auc(h1[i1], h0[i0])
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(stats, [tail, 100 - tail])
    return float(lo), float(hi)


def paired_auc_gap(a_h1, a_h0, b_h1, b_h0, resamples=1000, seed=0, level=0.95):
    """AUC(a) - AUC(b) with a paired bootstrap interval.

    Both score sets must come from the same trials (common random numbers),
    so trial ``i`` is resampled jointly across the two presets.
    """
    arrays = [np.asarray(v, dtype=float) for v in (a_h1, a_h0, b_h1, b_h0)]
    m = arrays[0].size
    if any(v.size != m for v in arrays):
        raise InvalidInputError("paired bootstrap needs equally many trials")
    gap = roc_auc(arrays[0], arrays[1]) - roc_auc(arrays[2], arrays[3])
    rng = np.random.default_rng(seed)
    stats = np.empty(resamples)
    for b in range(resamples):
        i = rng.integers(m, size=m)
        stats[b] = (roc_auc(arrays[0][i], arrays[1][i])
                    - roc_auc(arrays[2][i], arrays[3][i]))
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(stats, [tail, 100 - tail])
    return float(gap), float(lo), float(hi)
