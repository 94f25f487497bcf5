"""Log-space numeric kernels shared across the package.

Everything here works on log-scale quantities so that probabilities down to
e^{-1e6} and beyond stay representable.  No routine in this module ever
materializes such a probability linearly.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

LOG2 = math.log(2.0)


def log1mexp(x):
    """log(1 - exp(-x)) for x > 0, stable near both ends.

    Uses log(-expm1(-x)) for x <= log 2 and log1p(-exp(-x)) above, the
    standard split point.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.log(-np.expm1(-x))
        large = np.log1p(-np.exp(-x))
    out = np.where(x <= LOG2, small, large)
    return float(out) if out.ndim == 0 else out


def log_bernoulli_le(log_c_squared):
    """log P[Exp(1) <= c^2] given log(c^2), exact across the full range.

    For log(c^2) below -40 the linear value 1 - e^{-c^2} equals c^2 to
    machine precision, so the log is taken directly.
    """
    t = np.asarray(log_c_squared, dtype=float)
    with np.errstate(over="ignore"):
        x = np.exp(t)
    out = np.where(t < -40.0, t, log1mexp(np.maximum(x, 1e-300)))
    return float(out) if out.ndim == 0 else out


def logsumexp(a, **kw):
    return special.logsumexp(a, **kw)


def lchoose(n, k):
    """log of the binomial coefficient, via log-gamma."""
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def log_poisson_tail(lam, n):
    """log P[Poisson(lam) >= n].

    The bulk is the regularized lower incomplete gamma identity
    P[Pois(lam) >= n] = P(n, lam); the deep tail (where that underflows)
    is summed as a log-scale series with geometrically decaying terms.
    """
    if n <= 0:
        return 0.0
    v = special.gammainc(n, lam)
    if v > 1e-280:
        return float(np.log(v))
    # deep tail: n >> lam, terms ratio lam/(n+j) < 1
    s, term = 1.0, 1.0
    for j in range(1, 500):
        term *= lam / (n + j)
        s += term
        if term < 1e-17 * s:
            break
    return n * math.log(lam) - lam - float(special.gammaln(n + 1)) + math.log(s)


def log_poisson_tail_remainder(lam, n_start):
    """log upper bound on sum_{n >= n_start} P[Poisson(lam) >= n].

    Valid whenever n_start >= 2*lam + 4 (the ratio bound below is then < 1).
    """
    q = (lam / (n_start + 1)) / (1.0 - lam / (n_start + 2))
    if not q < 1.0:
        raise ValueError("n_start too small for a certified remainder bound")
    return log_poisson_tail(lam, n_start) - math.log1p(-q)


def log_lower_gamma_cdf(shape, log_x):
    """log P[Gamma(shape, 1) <= x] given log x, accurate for tiny x.

    Series form shape*log(x) - lgamma(shape+1) - x + log sum_j x^j / prod(shape+i),
    truncated at relative 1e-14; falls back to the scipy regularized gamma when
    the probability is comfortably representable.
    """
    if shape <= 0:
        raise ValueError("shape must be positive")
    with np.errstate(over="ignore"):
        x = math.exp(min(log_x, 700.0))
    if x > shape:
        return float(np.log(special.gammainc(shape, x)))
    v = special.gammainc(shape, x) if log_x > -700 else 0.0
    if v > 1e-280:
        return float(np.log(v))
    # x << shape here, the series converges geometrically
    s, term = 1.0, 1.0
    for j in range(1, 10000):
        term *= x / (shape + j)
        s += term
        if term < 1e-14 * s:
            break
    return shape * log_x - float(special.gammaln(shape + 1)) - x + math.log(s)


def log_gamma_pdf(shape, y):
    """log density of Gamma(shape, 1) at y > 0."""
    return (shape - 1.0) * math.log(y) - y - float(special.gammaln(shape))


def inverse_conditional_gamma(shape, log_s, u):
    """Quantile of Gamma(shape,1) conditioned on being <= s, at probability u.

    Solves log F(y) = log u + log F(s) by Newton iteration in t = log y.
    Exact conditional law; used by the conditioned coefficient sampler.
    """
    if not 0.0 < u < 1.0:
        raise ValueError("u must be in (0,1)")
    target = math.log(u) + log_lower_gamma_cdf(shape, log_s)
    # F(y) ~ y^shape / Gamma(shape+1) for small y gives the starting point
    t = (target + float(special.gammaln(shape + 1))) / shape
    t = min(t, log_s)
    for _ in range(100):
        lf = log_lower_gamma_cdf(shape, t)
        y = math.exp(t)
        # d log F / dt = y f(y) / F(y)
        dlf = math.exp(t + log_gamma_pdf(shape, y) - lf)
        step = (lf - target) / max(dlf, 1e-300)
        step = max(min(step, 2.0), -2.0)
        t -= step
        if abs(step) < 1e-13:
            break
    return math.exp(t)


def certified_log_series(log_term, start, ratio_bound, *, rel_tol=1e-18, max_terms=100000):
    """log of sum_{n >= start} exp(log_term(n)) with a certified remainder.

    ``ratio_bound(n)`` must upper-bound exp(log_term(n+1) - log_term(n)) for
    every index at or beyond n.  Summation stops once the geometric remainder
    bound is below rel_tol of the accumulated sum; the bound itself is folded
    into the result so the return value is an upper bound on the true log-sum
    that is also within rel_tol of it.
    """
    acc = -math.inf
    n = start
    for _ in range(max_terms):
        t = log_term(n)
        acc = np.logaddexp(acc, t)
        q = ratio_bound(n)
        if q < 1.0:
            rem = t + math.log(q) - math.log1p(-q)
            if rem < acc + math.log(rel_tol):
                return float(np.logaddexp(acc, rem))
        n += 1
    raise RuntimeError("series did not certify convergence")
