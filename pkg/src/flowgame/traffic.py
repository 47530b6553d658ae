"""Flows, inter-packet delays and network delay traces.

A flow is a 1-D float array of non-decreasing packet timestamps in seconds.
All generators take an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


def as_flow(timestamps) -> np.ndarray:
    flow = np.asarray(timestamps, dtype=float)
    if flow.ndim != 1:
        raise InvalidInputError("a flow must be one-dimensional")
    if not np.all(np.isfinite(flow)):
        raise InvalidInputError("flow timestamps must be finite")
    if flow.size > 1 and np.any(np.diff(flow) < 0):
        raise InvalidInputError("flow timestamps must be non-decreasing")
    return flow


@dataclass(frozen=True)
class IpdTrace:
    """Ordered corpus of measured inter-packet delays (seconds)."""

    ipds: np.ndarray

    def __post_init__(self):
        ipds = np.asarray(self.ipds, dtype=float)
        if ipds.ndim != 1 or ipds.size == 0:
            raise InvalidInputError("an IPD trace needs at least one entry")
        if np.any(ipds < 0) or not np.all(np.isfinite(ipds)):
            raise InvalidInputError("IPDs must be finite and non-negative")
        object.__setattr__(self, "ipds", ipds)

    def __len__(self):
        return self.ipds.size

    def split(self, fraction=0.5):
        """Return (train, test) as two contiguous halves of the trace."""
        cut = int(round(fraction * len(self)))
        if cut < 1 or cut >= len(self):
            raise InvalidInputError("trace too short to split")
        return IpdTrace(self.ipds[:cut]), IpdTrace(self.ipds[cut:])


@dataclass(frozen=True)
class DelayTrace:
    """One-way network delay sampled on a regular time grid."""

    samples: np.ndarray
    sample_period: float = 0.05

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidInputError("a delay trace needs at least one sample")
        if np.any(samples <= 0) or not np.all(np.isfinite(samples)):
            raise InvalidInputError("delay samples must be finite and positive")
        if not self.sample_period > 0:
            raise InvalidInputError("sample_period must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_period", float(self.sample_period))

    def __len__(self):
        return self.samples.size

    @property
    def span(self):
        return (len(self) - 1) * self.sample_period

    def split(self, fraction=0.5):
        cut = int(round(fraction * len(self)))
        if cut < 1 or cut >= len(self):
            raise InvalidInputError("trace too short to split")
        return (DelayTrace(self.samples[:cut], self.sample_period),
                DelayTrace(self.samples[cut:], self.sample_period))


def ipd(flow) -> np.ndarray:
    """Inter-packet delays ``flow[i+1] - flow[i]``."""
    flow = as_flow(flow)
    if flow.size < 2:
        raise InvalidInputError("need at least two packets to form an IPD")
    return np.diff(flow)


def flow_from_ipds(start, ipds) -> np.ndarray:
    ipds = np.asarray(ipds, dtype=float)
    if np.any(ipds < 0):
        raise InvalidInputError("IPDs must be non-negative")
    flow = np.empty(ipds.size + 1)
    flow[0] = start
    flow[1:] = start + np.cumsum(ipds)
    return flow


def sample_flow(trace: IpdTrace, n, rng, start_index=None) -> np.ndarray:
    """Flow of ``n`` packets starting at 0 whose IPDs are a contiguous run
    of ``trace`` beginning at a uniformly drawn index (no wrap-around)."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    n_starts = len(trace) - (n - 1) + 1
    if n_starts < 1:
        raise InvalidInputError(
            f"trace of length {len(trace)} cannot supply {n - 1} IPDs")
    if start_index is None:
        start_index = int(rng.integers(n_starts))
    elif not 0 <= start_index < n_starts:
        raise InvalidInputError("start_index out of range")
    return flow_from_ipds(0.0, trace.ipds[start_index:start_index + n - 1])


def delay_at(trace: DelayTrace, t):
    """Linearly interpolated delay at time(s) ``t``; holds the last sample
    beyond the end of the trace."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInputError("delay queried at negative time")
    grid = np.arange(len(trace)) * trace.sample_period
    out = np.interp(t, grid, trace.samples)
    return out if out.ndim else float(out)


def apply_delay(flow, trace: DelayTrace, rng=None, time_origin=None) -> np.ndarray:
    """Add the path delay ``delay_at(trace, origin + flow[i])`` to every packet.

    When ``time_origin`` is omitted it is drawn uniformly over the trace span
    (requires ``rng``). Output is re-sorted if jitter inverts packet order.
    """
    flow = as_flow(flow)
    if time_origin is None:
        if rng is None:
            raise InvalidInputError("need rng or time_origin")
        time_origin = float(rng.uniform(0.0, trace.span)) if trace.span > 0 else 0.0
    shifted = flow + delay_at(trace, time_origin + flow)
    return np.sort(shifted)


def synth_ipd_trace(model, params, length, rng) -> IpdTrace:
    """Parametric IPD corpus.

    ``lognormal``: params ``median``, ``shape`` (log-space std);
    ``pareto``: ``scale``, ``alpha`` (classical Pareto, support >= scale);
    ``exponential``: ``rate``;
    ``mixture``: a two-component lognormal (``burst_median``, ``burst_shape``,
    ``idle_median``, ``idle_shape``, ``idle_weight``).
    """
    p = dict(params)
    if length < 1:
        raise InvalidInputError("length must be >= 1")
    if model == "lognormal":
        x = p["median"] * np.exp(p.get("shape", 1.0) * rng.standard_normal(length))
    elif model == "pareto":
        x = p["scale"] * (1.0 + rng.pareto(p["alpha"], length))
    elif model == "exponential":
        x = rng.exponential(1.0 / p["rate"], length)
    elif model == "mixture":
        idle = rng.random(length) < p["idle_weight"]
        z = rng.standard_normal(length)
        x = np.where(idle,
                     p["idle_median"] * np.exp(p["idle_shape"] * z),
                     p["burst_median"] * np.exp(p["burst_shape"] * z))
    else:
        raise InvalidInputError(f"unknown IPD model {model!r}")
    return IpdTrace(x)


def synth_delay_trace(base, jitter_std, correlation, length, rng,
                      sample_period=0.05) -> DelayTrace:
    """AR(1) delay process around ``base`` with stationary std ``jitter_std``.

    Values are floored at 1% of ``base`` to keep delays positive.
    """
    if not 0 <= correlation < 1:
        raise InvalidInputError("correlation must lie in [0, 1)")
    if base <= 0 or jitter_std < 0 or length < 1:
        raise InvalidInputError("need base > 0, jitter_std >= 0, length >= 1")
    if jitter_std == 0:
        return DelayTrace(np.full(length, float(base)), sample_period)
    innov = jitter_std * np.sqrt(1.0 - correlation ** 2)
    e = rng.standard_normal(length)
    x = np.empty(length)
    x[0] = jitter_std * e[0]
    for i in range(1, length):
        x[i] = correlation * x[i - 1] + innov * e[i]
    return DelayTrace(np.maximum(base + x, 0.01 * base), sample_period)


def read_ipd_trace(path) -> IpdTrace:
    values = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        values.append(float(line))
    return IpdTrace(np.array(values))


def read_delay_trace(path) -> DelayTrace:
    period = None
    values = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("period="):
            period = float(line.split("=", 1)[1])
            continue
        values.append(float(line))
    if period is None:
        raise InvalidInputError(f"{path}: missing 'period=<seconds>' header")
    return DelayTrace(np.array(values), period)


def write_ipd_trace(path, trace: IpdTrace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# inter-packet delays, seconds\n")
        for v in trace.ipds:
            fh.write(f"{float(v)!r}\n")


def write_delay_trace(path, trace: DelayTrace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"period={trace.sample_period!r}\n")
        for v in trace.samples:
            fh.write(f"{float(v)!r}\n")
