"""Traffic-analyst fingerprint embedding strategies."""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .traffic import as_flow, flow_from_ipds
from .typicality import optimize_offsets

DEFAULT_GRID = 64


def optimal_fingerprint(u, W_C, f_dy, grid_size=DEFAULT_GRID,
                        follow_paper_equations=False) -> np.ndarray:
    """Per-packet delays in [0, W_C] that make ``u + w`` as atypical as
    possible under ``f_dy``.

    With ``follow_paper_equations`` the typicality is maximized instead.
    """
    u = as_flow(u)
    if u.size == 0:
        raise InvalidInputError("empty flow")
    if W_C < 0:
        raise InvalidInputError("W_C must be non-negative")
    return optimize_offsets(np.diff(u), W_C, f_dy, grid_size,
                            maximize=follow_paper_equations)


def uniform_fingerprint(n, W_C, rng) -> np.ndarray:
    if W_C < 0:
        raise InvalidInputError("W_C must be non-negative")
    return rng.uniform(0.0, W_C, n) if W_C > 0 else np.zeros(n)


def fancy_fingerprint(u, W_fancy, rng=None, bits=None) -> np.ndarray:
    """±1 IPD modulation: ``Δx = Δu + W_fancy * bits``.

    Negative IPDs are clamped to zero; the first timestamp is unchanged.
    """
    u = as_flow(u)
    if u.size < 2:
        raise InvalidInputError("need at least two packets")
    if bits is None:
        if rng is None:
            raise InvalidInputError("need rng or bits")
        bits = rng.choice([-1.0, 1.0], size=u.size - 1)
    bits = np.asarray(bits, dtype=float)
    if bits.shape != (u.size - 1,):
        raise InvalidInputError(f"expected {u.size - 1} bits, got {bits.shape}")
    if not np.all(np.abs(bits) == 1):
        raise InvalidInputError("bits must be +1 or -1")
    dx = np.maximum(np.diff(u) + W_fancy * bits, 0.0)
    return flow_from_ipds(u[0], dx)


def embed(u, w) -> np.ndarray:
    """Additive embedding ``x = u + w`` (re-sorted if order would invert)."""
    u = as_flow(u)
    w = np.asarray(w, dtype=float)
    if w.shape != u.shape:
        raise InvalidInputError("fingerprint length must match the flow")
    return np.sort(u + w)
