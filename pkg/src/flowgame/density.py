"""One-dimensional densities: Gaussian KDE, its tabulated form, and the
truncated Gaussian used for adversary delays."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import InvalidInputError

DEFAULT_FLOOR = 1e-12
_SQRT2PI = np.sqrt(2.0 * np.pi)
# kernels further than this many bandwidths away are skipped
_CUTOFF = 12.0


def silverman_bandwidth(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    return 1.06 * np.std(samples, ddof=1) * samples.size ** (-0.2)


@dataclass(frozen=True)
class Kde1D:
    """Gaussian-kernel mixture with a density floor.

    ``pdf`` returns ``max(mixture, floor)`` so log-densities stay finite.
    """

    centers: np.ndarray
    bandwidth: float
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        c = np.sort(np.asarray(self.centers, dtype=float))
        if c.ndim != 1 or c.size < 2:
            raise InvalidInputError("a KDE needs at least 2 centers")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("KDE centers must be finite")
        if not self.bandwidth > 0 or not np.isfinite(self.bandwidth):
            raise InvalidInputError("bandwidth must be a positive real")
        if not self.floor > 0:
            raise InvalidInputError("floor must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    def mixture(self, x):
        """Raw mixture density (no floor)."""
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros(flat.size)
        if flat.size == 0:
            return out.reshape(x.shape)
        h = self.bandwidth
        order = np.argsort(flat, kind="stable")
        xs = flat[order]
        vals = np.empty(xs.size)
        chunk = 512
        for a in range(0, xs.size, chunk):
            block = xs[a:a + chunk]
            lo = np.searchsorted(self.centers, block[0] - _CUTOFF * h, "left")
            hi = np.searchsorted(self.centers, block[-1] + _CUTOFF * h, "right")
            if hi <= lo:
                vals[a:a + chunk] = 0.0
                continue
            z = (block[:, None] - self.centers[None, lo:hi]) / h
            with np.errstate(over="ignore"):
                vals[a:a + chunk] = np.exp(-0.5 * z * z).sum(axis=1)
        out[order] = vals / (self.centers.size * h * _SQRT2PI)
        return out.reshape(x.shape)

    def pdf(self, x):
        return np.maximum(self.mixture(x), self.floor)

    def logpdf(self, x):
        return np.log(self.pdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.centers) / self.bandwidth
        return ndtr(z).mean(axis=-1)

    def quantile(self, q):
        """Mixture quantile by bisection on the CDF."""
        lo = self.centers[0] - _CUTOFF * self.bandwidth
        hi = self.centers[-1] + _CUTOFF * self.bandwidth
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    @cached_property
    def bulk(self):
        """Interval holding all but ~1e-9 of the mass, for quadrature."""
        return (self.quantile(5e-10), self.quantile(1.0 - 5e-10))

    def tabulate(self, step=None, max_points=400_000) -> "GridDensity":
        """Piecewise-linear log-density table over the support, for fast
        repeated evaluation."""
        h = self.bandwidth
        lo = self.centers[0] - _CUTOFF * h
        hi = self.centers[-1] + _CUTOFF * h
        step = h / 8.0 if step is None else float(step)
        npts = int(np.ceil((hi - lo) / step)) + 1
        if npts > max_points:
            npts = max_points
        grid = np.linspace(lo, hi, npts)
        return GridDensity(grid, self.logpdf(grid), self.floor, self.bulk, h)

    def to_text(self) -> str:
        lines = [f"bandwidth={self.bandwidth!r}", f"floor={self.floor!r}"]
        lines += [repr(float(c)) for c in self.centers]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text) -> "Kde1D":
        bandwidth, floor, centers = None, DEFAULT_FLOOR, []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("bandwidth="):
                bandwidth = float(line.split("=", 1)[1])
            elif line.startswith("floor="):
                floor = float(line.split("=", 1)[1])
            else:
                centers.append(float(line))
        if bandwidth is None:
            raise InvalidInputError("missing bandwidth line")
        return cls(np.array(centers), bandwidth, floor)


@dataclass(frozen=True)
class GridDensity:
    """Log-density tabulated on a grid, linearly interpolated in log space.

    Outside the grid the density is the floor.
    """

    grid: np.ndarray
    log_values: np.ndarray
    floor: float = DEFAULT_FLOOR
    bulk: tuple = None
    bandwidth: float | None = None  # smallest feature width, if known

    def __post_init__(self):
        if self.bulk is None:
            object.__setattr__(self, "bulk", (float(self.grid[0]), float(self.grid[-1])))

    def logpdf(self, x):
        lf = np.log(self.floor)
        return np.interp(x, self.grid, self.log_values, left=lf, right=lf)

    def pdf(self, x):
        return np.exp(self.logpdf(x))


def kde_fit(samples, bandwidth="auto", floor=DEFAULT_FLOOR) -> Kde1D:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise InvalidInputError("need at least 2 samples for a KDE")
    if bandwidth == "auto" or bandwidth is None:
        bandwidth = silverman_bandwidth(samples)
        if not bandwidth > 0:
            raise InvalidInputError(
                "zero-variance samples: automatic bandwidth undefined")
    return Kde1D(samples, float(bandwidth), floor)


def kde_logpdf(kde, x):
    return kde.logpdf(x)


# --- truncated Gaussian -----------------------------------------------------

def _standardize(mu, sigma, lo, hi):
    return (lo - mu) / sigma, (hi - mu) / sigma


def _tail_form(alpha, beta):
    # Evaluate probabilities in whichever tail keeps ndtr accurate.
    flip = alpha > 0
    a = np.where(flip, -beta, alpha)
    b = np.where(flip, -alpha, beta)
    return flip, a, b


def tg_norm(mu, sigma, lo, hi):
    """Probability mass of N(mu, sigma^2) inside [lo, hi]."""
    alpha, beta = _standardize(mu, sigma, lo, hi)
    _, a, b = _tail_form(alpha, beta)
    return ndtr(b) - ndtr(a)


def tg_logpdf_array(x, mu, sigma, lo, hi):
    """Broadcasting log-pdf of the truncated Gaussian."""
    x = np.asarray(x, dtype=float)
    z = (x - mu) / sigma
    inside = (x >= lo) & (x <= hi)
    with np.errstate(divide="ignore"):
        logp = (-0.5 * z * z - np.log(sigma * _SQRT2PI)
                - np.log(tg_norm(mu, sigma, lo, hi)))
    return np.where(inside, logp, -np.inf)


@dataclass(frozen=True)
class TruncGauss:
    """N(mu, sigma^2) conditioned on [lo, hi]."""

    mu: float
    sigma: float
    lo: float
    hi: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        if not self.lo < self.hi:
            raise InvalidInputError("need lo < hi")

    @property
    def norm(self):
        return float(tg_norm(self.mu, self.sigma, self.lo, self.hi))

    def pdf(self, x):
        return np.exp(tg_logpdf_array(x, self.mu, self.sigma, self.lo, self.hi))

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        alpha, beta = _standardize(self.mu, self.sigma, self.lo, self.hi)
        z = (x - self.mu) / self.sigma
        if alpha > 0:
            return (ndtr(-alpha) - ndtr(-z)) / (ndtr(-alpha) - ndtr(-beta))
        return (ndtr(z) - ndtr(alpha)) / (ndtr(beta) - ndtr(alpha))

    def mean(self):
        alpha, beta = _standardize(self.mu, self.sigma, self.lo, self.hi)
        phi = lambda v: np.exp(-0.5 * v * v) / _SQRT2PI
        return float(self.mu + self.sigma * (phi(alpha) - phi(beta)) / self.norm)

    def ppf(self, u):
        return tg_ppf(u, self.mu, self.sigma, self.lo, self.hi)

    def sample(self, rng, size=None):
        return self.ppf(rng.random(size))


def tg_ppf(u, mu, sigma, lo, hi):
    """Inverse CDF, vectorized over every argument.

    Monotone in ``u`` for fixed parameters, so common uniforms give coupled
    draws across different ``sigma``.
    """
    mu = np.asarray(mu, dtype=float)
    alpha, beta = _standardize(mu, sigma, lo, hi)
    flip, a, b = _tail_form(alpha, beta)
    pa, pb = ndtr(a), ndtr(b)
    u = np.asarray(u, dtype=float)
    # mirrored draws use 1-u so the map stays increasing in u
    uu = np.where(flip, 1.0 - u, u)
    q = ndtri(pa + uu * (pb - pa))
    x = np.where(flip, mu - sigma * q, mu + sigma * q)
    return np.clip(x, lo, hi)


def tg_mean_array(mu, sigma, lo, hi):
    mu = np.asarray(mu, dtype=float)
    alpha, beta = _standardize(mu, sigma, lo, hi)
    phi_a = np.exp(-0.5 * alpha * alpha) / _SQRT2PI
    phi_b = np.exp(-0.5 * beta * beta) / _SQRT2PI
    return mu + sigma * (phi_a - phi_b) / tg_norm(mu, sigma, lo, hi)


def tg_pdf(d: TruncGauss, x):
    return d.pdf(x)


def tg_sample(d: TruncGauss, rng, size=None):
    return d.sample(rng, size)


def tg_mean(d: TruncGauss):
    return d.mean()
