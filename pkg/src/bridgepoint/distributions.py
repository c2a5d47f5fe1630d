"""Seeded random-variate generators used inside the Gibbs sweeps.

The scalar kernels are numba-compiled and take a :class:`numpy.random.Generator`
directly, so a chain's whole draw sequence is fixed by its ``(seed, stream_id)``.
The public ``sample_*`` functions validate their arguments and accept either an
:class:`RngStream` or a bare ``Generator``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

# Crossing point between the small-x and large-x alternating-series
# representations of the Jacobi density in the Polya-Gamma sampler.
TRUNCATION_POINT = 0.64

# Standardized truncation point above which naive rejection gives way to the
# exponential-proposal tail sampler.
NAIVE_REJECTION_LIMIT = 0.45

_PI = math.pi
_LOG_2PI = math.log(2.0 * math.pi)


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Streams with the same seed and different ids are statistically independent
    (``numpy.random.SeedSequence`` spawn keys over PCG64).
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def log_ndtr(x):
    """log of the standard normal CDF, accurate in the far lower tail."""
    if x > -20.0:
        return math.log(0.5 * math.erfc(-x / math.sqrt(2.0)))
    # asymptotic expansion of the Mills ratio
    x2 = x * x
    series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
    return -0.5 * x2 - math.log(-x) - 0.5 * _LOG_2PI + math.log(series)


@njit(cache=True)
def _std_normal_above(rng, a):
    """Standard normal restricted to [a, inf)."""
    if a < NAIVE_REJECTION_LIMIT:
        while True:
            x = rng.standard_normal()
            if x >= a:
                return x
    # Robert (1995) translated-exponential proposal with the optimal rate
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        x = a + rng.standard_exponential() / lam
        d = x - lam
        if rng.random() <= math.exp(-0.5 * d * d):
            return x


@njit(cache=True)
def truncnorm_geq0(rng, mean, sd):
    a = -mean / sd
    while True:
        x = mean + sd * _std_normal_above(rng, a)
        if x >= 0.0:
            return x


@njit(cache=True)
def truncnorm_lt0(rng, mean, sd):
    a = mean / sd
    while True:
        x = mean - sd * _std_normal_above(rng, a)
        if x < 0.0:
            return x


@njit(cache=True)
def _jacobi_coef(n, x, t):
    k = n + 0.5
    if x > t:
        return _PI * k * math.exp(-0.5 * k * k * _PI * _PI * x)
    return _PI * k * math.exp(-1.5 * math.log(0.5 * _PI * x) - 2.0 * k * k / x)


@njit(cache=True)
def _truncated_inverse_gaussian(rng, z, t):
    """Inverse Gaussian with mean 1/z and shape 1, restricted to (0, t)."""
    if z <= 0.0 or 1.0 / z > t:
        while True:
            while True:
                e1 = rng.standard_exponential()
                e2 = rng.standard_exponential()
                if e1 * e1 <= 2.0 * e2 / t:
                    break
            x = t / ((1.0 + t * e1) * (1.0 + t * e1))
            if rng.random() <= math.exp(-0.5 * z * z * x):
                return x
    mu = 1.0 / z
    while True:
        y = rng.standard_normal()
        y = y * y
        x = mu + 0.5 * mu * mu * y - 0.5 * mu * math.sqrt(4.0 * mu * y + (mu * y) ** 2)
        if rng.random() > mu / (mu + x):
            x = mu * mu / x
        if x < t:
            return x


@njit(cache=True)
def _left_mass_log(z, t):
    """log of 2 exp(-z) P(IG(1/z, 1) < t), the left-proposal mixture weight."""
    rt = math.sqrt(1.0 / t)
    l1 = -z + log_ndtr(rt * (t * z - 1.0))
    l2 = z + log_ndtr(-rt * (t * z + 1.0))
    hi = max(l1, l2)
    return math.log(2.0) + hi + math.log(math.exp(l1 - hi) + math.exp(l2 - hi))


@njit(cache=True)
def _jstar1(rng, z):
    """Devroye's exact sampler for J*(1, z), z >= 0."""
    t = TRUNCATION_POINT
    kk = _PI * _PI / 8.0 + 0.5 * z * z
    log_right = math.log(_PI / (2.0 * kk)) - kk * t
    log_left = _left_mass_log(z, t)
    p_right = 1.0 / (1.0 + math.exp(log_left - log_right))
    while True:
        if rng.random() < p_right:
            x = t + rng.standard_exponential() / kk
        else:
            x = _truncated_inverse_gaussian(rng, z, t)
        s = _jacobi_coef(0, x, t)
        y = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _jacobi_coef(n, x, t)
                if y <= s:
                    return x
            else:
                s += _jacobi_coef(n, x, t)
                if y > s:
                    break


@njit(cache=True)
def polya_gamma_1(rng, c):
    return 0.25 * _jstar1(rng, 0.5 * abs(c))


@njit(cache=True)
def inverse_gamma(rng, shape, rate):
    return rate / rng.standard_gamma(shape)


@njit(cache=True)
def _fill_normal(rng, mean, sd, out):
    for k in range(out.size):
        out[k] = mean + sd * rng.standard_normal()


@njit(cache=True)
def _fill_truncnorm(rng, mean, sd, geq, out):
    for k in range(out.size):
        out[k] = truncnorm_geq0(rng, mean, sd) if geq else truncnorm_lt0(rng, mean, sd)


@njit(cache=True)
def _fill_pg(rng, c, out):
    for k in range(out.size):
        out[k] = polya_gamma_1(rng, c)


@njit(cache=True)
def _fill_invgamma(rng, shape, rate, out):
    for k in range(out.size):
        out[k] = inverse_gamma(rng, shape, rate)


@njit(cache=True)
def _fill_beta(rng, a, b, out):
    for k in range(out.size):
        out[k] = rng.beta(a, b)


# ---------------------------------------------------------------------------
# public samplers


def _finish(out, size):
    return float(out[0]) if size is None else out


def sample_normal(rng, mean: float, sd: float, size: int | None = None):
    if not sd > 0:
        raise ValueError(f"sd must be positive, got {sd}")
    out = np.empty(1 if size is None else size)
    _fill_normal(as_generator(rng), float(mean), float(sd), out)
    return _finish(out, size)


def sample_truncated_normal(rng, mean: float, sd: float, side: str, size: int | None = None):
    """Normal(mean, sd^2) restricted to ``[0, inf)`` (``side="geq0"``) or ``(-inf, 0)`` (``"lt0"``)."""
    if not sd > 0:
        raise ValueError(f"sd must be positive, got {sd}")
    if side not in ("geq0", "lt0"):
        raise ValueError(f"side must be 'geq0' or 'lt0', got {side!r}")
    out = np.empty(1 if size is None else size)
    _fill_truncnorm(as_generator(rng), float(mean), float(sd), side == "geq0", out)
    return _finish(out, size)


def sample_polya_gamma_1(rng, c: float, size: int | None = None):
    if not np.isfinite(c):
        raise ValueError(f"c must be finite, got {c}")
    out = np.empty(1 if size is None else size)
    _fill_pg(as_generator(rng), float(c), out)
    return _finish(out, size)


def sample_inverse_gamma(rng, shape: float, rate: float, size: int | None = None):
    """X with 1/X ~ Gamma(shape, rate); mean rate/(shape-1) when shape > 1."""
    if not (shape > 0 and rate > 0):
        raise ValueError(f"shape and rate must be positive, got {shape}, {rate}")
    out = np.empty(1 if size is None else size)
    _fill_invgamma(as_generator(rng), float(shape), float(rate), out)
    return _finish(out, size)


def sample_beta(rng, a: float, b: float, size: int | None = None):
    if not (a > 0 and b > 0):
        raise ValueError(f"a and b must be positive, got {a}, {b}")
    out = np.empty(1 if size is None else size)
    _fill_beta(as_generator(rng), float(a), float(b), out)
    return _finish(out, size)


def polya_gamma_mean(c: float) -> float:
    """E[PG(1, c)] = tanh(c/2) / (2c), with the c -> 0 limit 1/4."""
    c = abs(c)
    if c < 1e-6:
        return 0.25 - c * c / 48.0
    return math.tanh(0.5 * c) / (2.0 * c)


def truncated_normal_mean(mean: float, sd: float, side: str = "geq0") -> float:
    """Closed-form mean of a normal truncated at zero."""
    from scipy.stats import norm

    if side == "geq0":
        a = -mean / sd
        return mean + sd * math.exp(norm.logpdf(a) - norm.logsf(a))
    b = -mean / sd
    return mean - sd * math.exp(norm.logpdf(b) - norm.logcdf(b))
