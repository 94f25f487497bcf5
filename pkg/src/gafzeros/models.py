"""Gaussian analytic function models over the plane and the unit disk.

A model fixes the coefficient weights of the random series
sum_n a_n * sigma_n * z^n with a_n i.i.d. standard complex normal
(convention E|a_n|^2 = 1, so |a_n|^2 is a mean-1 exponential).  The planar
family has sigma_n^2 = 1/n! and covariance e^{z conj(w)}; the hyperbolic
family with positive index rho has sigma_n^2 = Gamma(n+rho)/(n! Gamma(rho))
and covariance (1 - z conj(w))^{-rho} inside the unit disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special

from . import _num


class Kind(Enum):
    PLANAR = "planar"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class GafModel:
    kind: Kind
    rho: float | None = None

    def __post_init__(self):
        if self.kind is Kind.HYPERBOLIC:
            if self.rho is None or not self.rho > 0:
                raise ValueError("hyperbolic model requires rho > 0")
        elif self.rho is not None:
            raise ValueError("planar model takes no rho")

    @classmethod
    def planar(cls) -> "GafModel":
        return cls(Kind.PLANAR)

    @classmethod
    def hyperbolic(cls, rho: float) -> "GafModel":
        return cls(Kind.HYPERBOLIC, float(rho))

    @property
    def max_radius(self) -> float:
        return math.inf if self.kind is Kind.PLANAR else 1.0


@dataclass(frozen=True)
class CoefficientDraw:
    """A sampled coefficient vector a_0..a_N plus its stream token."""

    values: np.ndarray
    stream: str | None = None

    def __len__(self):
        return len(self.values)

    @property
    def degree(self) -> int:
        return len(self.values) - 1


def log_sigma(model: GafModel, n):
    """log of the coefficient standard deviation sigma_n.

    Safe for n up to 1e6 and beyond: everything runs through log-gamma, no
    factorial is ever formed.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("n must be >= 0")
    if model.kind is Kind.PLANAR:
        out = -0.5 * special.gammaln(n + 1)
    else:
        rho = model.rho
        out = 0.5 * (special.gammaln(n + rho) - special.gammaln(n + 1) - special.gammaln(rho))
    return float(out) if out.ndim == 0 else out


def sigma(model: GafModel, n):
    """Coefficient standard deviation sigma_n (exp of log_sigma)."""
    return np.exp(log_sigma(model, n))


def covariance(model: GafModel, z: complex, w: complex) -> complex:
    """Closed-form covariance E[f(z) conj(f(w))] = sum sigma_n^2 z^n conj(w)^n."""
    t = complex(z) * complex(w).conjugate()
    if model.kind is Kind.PLANAR:
        return complex(np.exp(t))
    if abs(t) >= 1.0:
        raise ValueError("hyperbolic covariance needs |z conj(w)| < 1")
    return complex((1.0 - t) ** (-model.rho))


def sample_coefficients(rng: np.random.Generator, n_max: int, stream: str | None = None) -> CoefficientDraw:
    """Draw a_0..a_{n_max} i.i.d. standard complex normal (E|a|^2 = 1)."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    re = rng.standard_normal(n_max + 1)
    im = rng.standard_normal(n_max + 1)
    return CoefficientDraw(values=(re + 1j * im) * math.sqrt(0.5), stream=stream)


def split_streams(seed: int, count: int):
    """Disjoint, reproducible RNG streams: (generator, token) pairs."""
    out = []
    for k in range(count):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(k,))
        out.append((np.random.Generator(np.random.PCG64(ss)), f"seed={seed}/stream={k}"))
    return out


def stream(seed: int, key: int = 0) -> np.random.Generator:
    """Single reproducible stream for (seed, key)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(key,))))


def _check_radius(model: GafModel, r: float):
    if not r > 0:
        raise ValueError("radius must be positive")
    if model.kind is Kind.HYPERBOLIC and not r < 1:
        raise ValueError("hyperbolic model lives in the open unit disk")


def log_tail_variance(model: GafModel, degree: int, r: float) -> float:
    """log of sum_{n > degree} sigma_n^2 r^{2n}.

    Planar case via the regularized incomplete gamma identity
    sum_{n>N} r^{2n}/n! = e^{r^2} P[Pois(r^2) >= N+1]; hyperbolic case by
    direct summation with a certified term-ratio remainder bound.
    """
    _check_radius(model, r)
    if degree < -1:
        raise ValueError("degree must be >= -1")
    if model.kind is Kind.PLANAR:
        lam = r * r
        return lam + _num.log_poisson_tail(lam, degree + 1)

    rho, x = model.rho, r * r

    def log_term(n):
        return float(special.gammaln(n + rho) - special.gammaln(n + 1) - special.gammaln(rho)) + n * math.log(x)

    def ratio_bound(n):
        # term ratio x*(n+rho)/(n+1); decreasing in n once n+1 > rho
        if rho <= 1.0:
            return x
        k = max(n, 0)
        return min(x * (k + 1 + rho) / (k + 2), 0.999999999999)

    # for rho > 1 the first few term ratios can sit at or above 1; add those
    # head terms directly, then certify the geometric stage
    head = -math.inf
    n0 = degree + 1
    while rho > 1.0 and x * (n0 + rho) / (n0 + 1) >= 0.999999:
        head = np.logaddexp(head, log_term(n0))
        n0 += 1
    tail = _num.certified_log_series(log_term, n0, ratio_bound, rel_tol=1e-17)
    return float(np.logaddexp(head, tail))


def tail_sd(model: GafModel, degree: int, r: float) -> float:
    """Standard deviation of the discarded series tail past ``degree`` at radius r."""
    return math.exp(0.5 * log_tail_variance(model, degree, r))


def expected_count(model: GafModel, r: float) -> float:
    """Mean number of zeros in the disk of radius r.

    Planar intensity is 1/pi per unit area, giving r^2; the hyperbolic family
    has constant intensity rho/pi in the hyperbolic metric, giving
    rho r^2/(1-r^2).
    """
    _check_radius(model, r)
    if model.kind is Kind.PLANAR:
        return r * r
    return model.rho * r * r / (1.0 - r * r)


def choose_truncation(model: GafModel, r: float, rel_tol: float = 1e-9) -> int:
    """Smallest degree with tail_sd <= rel_tol * sqrt(covariance(r, r)).

    The statistical guard; per-sample correctness is certified separately by
    the circle tests in ``zeros``.
    """
    _check_radius(model, r)
    log_target = 2.0 * (math.log(rel_tol) + 0.5 * math.log(abs(covariance(model, r, r))))
    lo, hi = 0, max(8, int(math.ceil(r * r)) + 8)
    while log_tail_variance(model, hi, r) > log_target:
        lo, hi = hi, hi * 2
        if hi > 10**7:
            raise RuntimeError("truncation search exploded")
    while lo < hi:
        mid = (lo + hi) // 2
        if log_tail_variance(model, mid, r) <= log_target:
            hi = mid
        else:
            lo = mid + 1
    return hi


@dataclass(frozen=True)
class TruncatedGaf:
    """A sampled partial sum sum_{n<=N} a_n sigma_n z^n with its tail bound."""

    model: GafModel
    coeffs: CoefficientDraw
    radius_of_use: float
    tail_sd: float
    weighted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_radius(self.model, self.radius_of_use)
        w = self.coeffs.values * sigma(self.model, np.arange(len(self.coeffs.values)))
        object.__setattr__(self, "weighted", w)

    @property
    def degree(self) -> int:
        return self.coeffs.degree

    @property
    def weighted_coefficients(self) -> np.ndarray:
        return self.weighted

    def __call__(self, z):
        """Evaluate the partial sum at z (scalar or array), inside radius_of_use.

        The domain guard carries 1e-5 relative slack so the radius-perturbation
        retry policy (steps of 1e-6 r) stays inside it; the tail bound changes
        by a vanishing relative amount over that margin.
        """
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z) > self.radius_of_use * (1.0 + 1e-5)):
            raise ValueError("evaluation point outside radius_of_use")
        out = np.polynomial.polynomial.polyval(z, self.weighted)
        return complex(out) if out.ndim == 0 else out


def make_truncated(model: GafModel, draw: CoefficientDraw, r: float) -> TruncatedGaf:
    return TruncatedGaf(model=model, coeffs=draw, radius_of_use=r,
                        tail_sd=tail_sd(model, draw.degree, r))


def sample_truncated(model: GafModel, r: float, rng: np.random.Generator,
                     rel_tol: float = 1e-9, degree: int | None = None,
                     stream: str | None = None) -> TruncatedGaf:
    """Sample a truncated model function fit for use on the disk of radius r."""
    n = choose_truncation(model, r, rel_tol) if degree is None else degree
    draw = sample_coefficients(rng, n, stream=stream)
    return make_truncated(model, draw, r)
