"""Constructive coefficient events, their exact prices, and Monte Carlo.

An event is a product of constraints on disjoint coefficient sets: per-index
magnitude caps or floors plus at most one aggregate quadratic cap.  Each kind
is built so that occurrence forces the anchored term to dominate the rest of
the series on the circle, which pins the zero count in the disk.  Prices are
exact exponential/Gamma probabilities computed in log space; the looser
closed-form bounds used in asymptotic work are reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import special, stats

from . import _num
from .models import (CoefficientDraw, GafModel, Kind, choose_truncation,
                     log_sigma, make_truncated, sample_truncated, stream)
from .radial import RadialEnsemble, bernoulli_probs
from .zeros import InconclusiveCount, count_with_retry, max_modulus


class EventKind(Enum):
    PLANAR_DOMINATION = "planar-domination"
    HYPERBOLIC_DOMINATION = "hyperbolic-domination"
    VERY_LARGE_DOMINATION = "very-large-domination"
    MODERATE_GROUPED = "moderate-grouped"


class EventConstructionError(ValueError):
    """The requested parameters cannot yield a valid domination event."""


@dataclass
class IndexBlock:
    """Per-index constraint |a_n| <= c_n (mode 'le') or |a_n| >= c_n ('ge').

    ``hi`` is inclusive; None marks an unbounded block whose thresholds must
    be nondecreasing past the point where e^{-c_n^2} is negligible.
    """

    label: str
    lo: int
    hi: int | None
    mode: str
    log_threshold: Callable[[np.ndarray], np.ndarray]
    rule: str

    def indices_upto(self, n_max: int) -> np.ndarray:
        hi = n_max if self.hi is None else min(self.hi, n_max)
        return np.arange(self.lo, hi + 1)


@dataclass
class AggregateBlock:
    """Quadratic cap sum_{lo..hi} |a_n|^2 <= exp(log_bound)."""

    label: str
    lo: int
    hi: int
    log_bound: float
    rule: str

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass
class EventSpec:
    kind: EventKind
    model: GafModel
    r: float
    m: int
    blocks: list[IndexBlock]
    aggregate: AggregateBlock | None
    params: dict

    @property
    def structural_max_index(self) -> int:
        out = self.m
        for b in self.blocks:
            if b.hi is not None:
                out = max(out, b.hi)
            else:
                out = max(out, b.lo)
        if self.aggregate is not None:
            out = max(out, self.aggregate.hi)
        return out


@dataclass(frozen=True)
class EventLogProb:
    total: float
    bound_form: float
    by_block: dict


class Method(Enum):
    EXACT_DP = "exact-dp"
    MONTE_CARLO = "monte-carlo"
    EVENT_LOWER_BOUND = "event-lower-bound"


@dataclass(frozen=True)
class TailEstimate:
    log_p: float
    log_lo: float
    log_hi: float
    method: Method
    samples: int
    seed: str
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.log_lo <= self.log_p <= self.log_hi or math.isnan(self.log_p)):
            raise ValueError("bracket must contain the point value")


def _log_weight(model: GafModel, n, r: float):
    """log(sigma_n r^n), the size of the n-th term's coefficient weight."""
    n = np.asarray(n, dtype=float)
    return log_sigma(model, n) + n * math.log(r)


def domination_constant(model: GafModel, r: float, m: int) -> float:
    """Smallest C with sum_{n>m} g(n) sigma_n r^n <= C g(m) m-th weight.

    The growth factor g is n for the planar scaling and sqrt(n) for the
    hyperbolic one, matching the tail caps of the corresponding events.
    Computed by direct log-space summation with a certified remainder.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    growth_power = 0.5 if model.kind is Kind.HYPERBOLIC else 1.0

    def log_term(n):
        return growth_power * math.log(n) + float(_log_weight(model, n, r))

    def ratio_bound(n):
        # term ratio: ((n+1)/n)^g * sigma_{n+1} r / sigma_n
        g = ((n + 1.0) / n) ** growth_power
        if model.kind is Kind.PLANAR:
            return g * r / math.sqrt(n + 1.0)
        rho = model.rho
        return g * r * math.sqrt((n + rho) / (n + 1.0))

    n0 = m + 1
    # walk forward until the ratio bound certifies; planar always does once
    # n exceeds (2r)^2, hyperbolic once the sqrt factor settles under 1/r
    head = -math.inf
    while ratio_bound(n0) >= 0.999999:
        head = np.logaddexp(head, log_term(n0))
        n0 += 1
        if n0 > m + 10**6:
            raise RuntimeError("domination tail does not contract")
    log_tail = _num.certified_log_series(log_term, n0, ratio_bound, rel_tol=1e-16)
    log_tail = float(np.logaddexp(head, log_tail))
    log_scale = growth_power * math.log(m) + float(_log_weight(model, m, r))
    return math.exp(log_tail - log_scale)


def _below_anchor_rule(model: GafModel, r: float, m: int, log_budget: float):
    """Thresholds c_n = budget * (m-th weight) / (n-th weight) for n < m."""
    lw_m = float(_log_weight(model, m, r))

    def log_c(n):
        return log_budget + lw_m - _log_weight(model, n, r)

    return log_c


def build_event(kind: EventKind, model: GafModel | None = None, *, r: float,
                m: int | None = None, alpha: float | None = None,
                gamma: float | None = None, anchor_alpha: float | None = None) -> EventSpec:
    """Assemble a fully concrete event of the requested kind.

    Thresholds round conservatively (toward a smaller event) and each builder
    verifies the domination budget it needs, so occurrence of the returned
    event forces at least m zeros in the disk of radius r.  ``anchor_alpha``
    overrides the computed domination constant in the anchor threshold of the
    two fixed-disk kinds; validity is then up to ``verify_domination``.
    """
    if kind is EventKind.PLANAR_DOMINATION:
        model = model or GafModel.planar()
        if model.kind is not Kind.PLANAR or m is None or m < 1:
            raise ValueError("planar domination needs a planar model and m >= 1")
        c = domination_constant(model, r, m)
        a = c if anchor_alpha is None else anchor_alpha
        anchor = (a + 1.0) * m
        blocks = [
            IndexBlock("below-anchor", 0, m - 1, "le",
                       _below_anchor_rule(model, r, m, 0.0),
                       "per-index cap keeping each lower term under the anchor weight"),
            IndexBlock("anchor", m, m, "ge", _const_log(math.log(anchor)),
                       f"|a_{m}| >= {anchor:.6g}"),
            IndexBlock("upper-tail", m + 1, None, "le", _log_identity,
                       "|a_n| <= n for n > m"),
        ]
        return EventSpec(kind, model, r, m, blocks, None,
                         {"domination_constant": c, "anchor": anchor,
                          "anchor_alpha": a})

    if kind is EventKind.HYPERBOLIC_DOMINATION:
        if model is None or model.kind is not Kind.HYPERBOLIC:
            raise ValueError("hyperbolic domination needs a hyperbolic model")
        if not 0 < r < 1 or m is None or m < 1:
            raise ValueError("need 0 < r < 1 and m >= 1")
        c = domination_constant(model, r, m)
        a = c if anchor_alpha is None else anchor_alpha
        anchor = (a + 1.0) * math.sqrt(m)
        blocks = [
            IndexBlock("below-anchor", 0, m - 1, "le",
                       _below_anchor_rule(model, r, m, -0.5 * math.log(m)),
                       "per-index cap at 1/sqrt(m) of the anchor weight"),
            IndexBlock("anchor", m, m, "ge", _const_log(math.log(anchor)),
                       f"|a_{m}| >= {anchor:.6g}"),
            IndexBlock("upper-tail", m + 1, None, "le", _log_sqrt,
                       "|a_n| <= sqrt(n) for n > m"),
        ]
        return EventSpec(kind, model, r, m, blocks, None,
                         {"domination_constant": c, "anchor": anchor,
                          "anchor_alpha": a})

    if kind is EventKind.VERY_LARGE_DOMINATION:
        if alpha is None or gamma is None or not (alpha > 2 and gamma > 0 and r > 1):
            raise ValueError("very-large regime needs alpha > 2, gamma > 0, r > 1")
        model = model or GafModel.planar()
        mm = math.ceil(r * r + gamma * r ** alpha)
        bulge = gamma * r ** alpha
        # upper-tail caps |a_{m+k}| <= k: nearly free in probability and the
        # weighted tail budget sum_k k w_{m+k}/w_m stays O(r/sqrt(m))
        lw_m = float(_log_weight(model, mm, r))

        def tail_term(n):
            return math.log(n - mm) + float(_log_weight(model, n, r)) - lw_m

        def tail_ratio(n):
            k = n - mm
            return (k + 1.0) / k * r / math.sqrt(n + 1.0)

        budget = math.exp(_num.certified_log_series(tail_term, mm + 1, tail_ratio,
                                                    rel_tol=1e-14))
        anchor = float(mm)
        if bulge + budget >= anchor:
            anchor = (bulge + budget) * (1.0 + 1e-9)
        blocks = [
            IndexBlock("below-anchor", 0, mm - 1, "le",
                       _below_anchor_rule(model, r, mm, math.log(bulge / mm)),
                       "per-index cap at (gamma r^alpha / m) of the anchor weight"),
            IndexBlock("anchor", mm, mm, "ge", _const_log(math.log(anchor)),
                       f"|a_{mm}| >= {anchor:.6g}"),
            IndexBlock("upper-tail", mm + 1, None, "le",
                       _shifted_log(mm), "|a_n| <= n - m for n > m"),
        ]
        return EventSpec(kind, model, r, mm, blocks, None,
                         {"alpha": alpha, "gamma": gamma, "anchor": anchor,
                          "tail_budget": budget, "bulge": bulge})

    if kind is EventKind.MODERATE_GROUPED:
        if alpha is None or gamma is None or not (1 < alpha < 2 and gamma > 0 and r > 0):
            raise ValueError("moderate regime needs 1 < alpha < 2, gamma > 0, r > 0")
        model = model or GafModel.planar()
        mm = math.ceil(r * r + gamma * r ** alpha)
        big_m = math.floor(r * r - gamma * r ** alpha)
        if big_m < 1 or big_m + 2 > mm:
            raise EventConstructionError("r too small: grouped construction needs "
                                         "a nonempty window on each side of r^2")
        c_const = math.log(4.0) / gamma          # smallest C with e^{-gamma C} <= 1/4
        p = math.ceil(2.0 * c_const * r ** (2.0 - alpha))
        k_below = math.ceil(big_m / p)
        blocks = []
        for k in range(1, k_below + 1):
            lo = max(0, big_m - k * p + 1)
            hi = big_m - (k - 1) * p
            if hi < lo:
                continue
            blocks.append(IndexBlock(
                f"decay-below-{k}", lo, hi, "le",
                _const_log(k * math.log(2.0) - math.log(big_m)),
                f"|a_n| <= 2^{k}/{big_m} on the {k}-th width-{p} band below the window"))
        aggregate = AggregateBlock(
            "window", big_m + 1, mm - 1,
            math.log(16.0) + 2 * mm * math.log(r) - r * r - float(special.gammaln(mm + 1)),
            "sum of |a_n|^2 over the window capped so the windowed series stays"
            " under 4x the anchor weight")
        blocks.append(IndexBlock("anchor", mm, mm, "ge", _const_log(math.log(15.0)),
                                 f"|a_{mm}| >= 15"))
        far_start = math.floor(2.0 * r * r) + 1
        k = 1
        while True:
            lo = max(mm + 1, mm + (k - 1) * p)
            if lo > far_start - 1:
                break
            hi = min(mm + k * p - 1, far_start - 1)
            if hi >= lo:
                blocks.append(IndexBlock(
                    f"decay-above-{k}", lo, hi, "le",
                    _const_log(k * math.log(2.0) - math.log(big_m)),
                    f"|a_n| <= 2^{k}/{big_m} on the {k}-th width-{p} band above the anchor"))
            k += 1
        blocks.append(IndexBlock("far-tail", far_start, None, "le",
                                 _shifted_log(2.0 * r * r),
                                 "|a_n| <= n - 2 r^2 far beyond the anchor"))
        ev = EventSpec(kind, model, r, mm, blocks, aggregate,
                       {"alpha": alpha, "gamma": gamma, "window_lo": big_m,
                        "band_width": p, "decay_constant": c_const,
                        "far_start": far_start, "anchor": 15.0})
        _check_moderate_budget(ev)
        return ev

    raise ValueError(f"unknown event kind {kind}")


def _const_log(v: float):
    def log_c(n):
        return np.full(np.shape(n), v, dtype=float)
    return log_c


def _log_identity(n):
    return np.log(np.asarray(n, dtype=float))


def _log_sqrt(n):
    return 0.5 * np.log(np.asarray(n, dtype=float))


def _shifted_log(shift: float):
    def log_c(n):
        return np.log(np.asarray(n, dtype=float) - shift)
    return log_c


def _check_moderate_budget(ev: EventSpec):
    """Exact sup-side budget for the grouped event, in anchor-weight units.

    The per-band caps, the windowed aggregate (worth 4 units by construction)
    and the far tail must sum below the anchor floor of 15.
    """
    model, r, m = ev.model, ev.r, ev.m
    lw_m = float(_log_weight(model, m, r))
    total = 4.0
    for b in ev.blocks:
        if b.mode != "le":
            continue
        if b.hi is not None:
            n = b.indices_upto(b.hi)
            if len(n) == 0:
                continue
            contrib = np.exp(b.log_threshold(n) + _log_weight(model, n, r) - lw_m)
            total += float(contrib.sum())
        else:
            def log_term(n):
                return float(b.log_threshold(np.array([n]))[0]
                             + _log_weight(model, n, r) - lw_m)

            def ratio(n):
                th0 = float(b.log_threshold(np.array([n]))[0])
                th1 = float(b.log_threshold(np.array([n + 1]))[0])
                return math.exp(th1 - th0) * r / math.sqrt(n + 1.0)

            n0 = b.lo
            head = -math.inf
            while ratio(n0) >= 0.999999:
                head = np.logaddexp(head, log_term(n0))
                n0 += 1
            tail = _num.certified_log_series(log_term, n0, ratio, rel_tol=1e-14)
            total += math.exp(float(np.logaddexp(head, tail)))
    if not total < 15.0 * (1.0 - 1e-9):
        raise EventConstructionError(
            f"grouped budget {total:.4f} does not clear the anchor floor 15; "
            "increase r")
    ev.params["sup_budget"] = total


def event_tail_sup_bound(ev: EventSpec, n_max: int) -> float:
    """Deterministic bound on the discarded weighted tail past n_max.

    Under the event, sum_{n > n_max} |a_n| sigma_n r^n is at most the sum of
    the caps times the weights; this is what certifies counts of truncated
    conditioned samples.
    """
    model, r = ev.model, ev.r
    out = 0.0
    for b in ev.blocks:
        if b.mode != "le":
            continue
        lo = max(b.lo, n_max + 1)
        if b.hi is not None:
            if b.hi < lo:
                continue
            n = np.arange(lo, b.hi + 1)
            out += float(np.exp(b.log_threshold(n) + _log_weight(model, n, r)).sum())
        else:
            def log_term(n):
                return float(b.log_threshold(np.array([n]))[0]
                             + _log_weight(model, n, r))

            def ratio(n):
                th0 = float(b.log_threshold(np.array([n]))[0])
                th1 = float(b.log_threshold(np.array([n + 1]))[0])
                if model.kind is Kind.PLANAR:
                    wr = r / math.sqrt(n + 1.0)
                else:
                    wr = r * math.sqrt((n + model.rho) / (n + 1.0))
                return math.exp(th1 - th0) * wr

            n0 = lo
            head = -math.inf
            while ratio(n0) >= 0.999999:
                head = np.logaddexp(head, log_term(n0))
                n0 += 1
                if n0 > lo + 10**6:
                    raise RuntimeError("tail bound does not contract")
            tail = _num.certified_log_series(log_term, n0, ratio, rel_tol=1e-14)
            out += math.exp(float(np.logaddexp(head, tail)))
    return out


def _le_block_log_prob(block: IndexBlock, exact=True):
    """Exact (or closed-form-bound) log probability of a 'le' block."""
    if block.hi is not None:
        n = np.arange(block.lo, block.hi + 1)
        if len(n) == 0:
            return 0.0
        t2 = 2.0 * np.asarray(block.log_threshold(n), dtype=float)
        vals = _num.log_bernoulli_le(t2)
        if exact:
            return float(np.sum(vals))
        bound = np.where(t2 < 0.0, t2 - math.log(2.0), vals)
        return float(np.sum(bound))
    # unbounded block: thresholds grow, terms die off superexponentially
    total = 0.0
    lik = 0.0  # sum of e^{-c^2} for the union-style closed form
    n = block.lo
    while True:
        t2 = 2.0 * float(block.log_threshold(np.array([n]))[0])
        if t2 > 4.06:  # e^{-c^2} below ~1e-25: remainder negligible
            break
        total += float(_num.log_bernoulli_le(t2))
        lik += math.exp(-math.exp(t2))
        n += 1
        if n > block.lo + 10**6:
            raise RuntimeError("unbounded block does not decay")
    if exact:
        return total
    return math.log1p(-lik) if lik < 1.0 else total


def event_log_prob_detail(ev: EventSpec) -> EventLogProb:
    """Exact log probability of the event, with the closed-form comparison.

    Per-index caps price as products of exponential CDFs, floors as
    exponential tails, and the aggregate as the Gamma CDF evaluated by the
    small-argument log series.  The bound form swaps in the halved-argument
    bounds used in asymptotic work wherever those are valid.
    """
    by_block = {}
    total = 0.0
    bound_total = 0.0
    for b in ev.blocks:
        if b.mode == "ge":
            c2 = math.exp(2.0 * float(b.log_threshold(np.array([b.lo]))[0]))
            exact = bound = -c2
        else:
            exact = _le_block_log_prob(b, exact=True)
            bound = _le_block_log_prob(b, exact=False)
        by_block[b.label] = exact
        total += exact
        bound_total += bound
    if ev.aggregate is not None:
        k = ev.aggregate.size
        log_s = ev.aggregate.log_bound
        exact = _num.log_lower_gamma_cdf(k, log_s)
        s = math.exp(min(log_s, 700.0))
        if s <= k:
            bound = k * (log_s - math.log(2.0)) - float(special.gammaln(k)) - s / 2.0
        else:
            bound = exact
        by_block[ev.aggregate.label] = exact
        total += exact
        bound_total += bound
    return EventLogProb(total=total, bound_form=bound_total, by_block=by_block)


def event_log_prob(ev: EventSpec) -> float:
    """Exact log probability of the full independent product event."""
    return event_log_prob_detail(ev).total


def conditioned_sample(ev: EventSpec, rng: np.random.Generator,
                       n_max: int | None = None, stream_token: str | None = None) -> CoefficientDraw:
    """Draw a_0..a_{n_max} from the exact conditional law given the event.

    Magnitudes invert the constrained exponential (or Gamma-total) CDFs,
    phases stay uniform; unconstrained indices are plain complex normals.
    """
    structural = ev.structural_max_index
    if n_max is None:
        n_max = max(structural + 8, choose_truncation(ev.model, ev.r))
    if n_max < structural:
        raise ValueError(f"n_max must cover the structural indices (>= {structural})")

    sq = np.empty(n_max + 1)
    sq[:] = np.nan
    for b in ev.blocks:
        n = b.indices_upto(n_max)
        if len(n) == 0:
            continue
        u = rng.random(len(n))
        t2 = 2.0 * np.asarray(b.log_threshold(n), dtype=float)
        if b.mode == "le":
            with np.errstate(over="ignore", under="ignore"):
                c2 = np.exp(t2)
            tiny = t2 < -35.0
            w = np.where(tiny, np.exp(np.minimum(t2, 0.0)), -np.expm1(-np.minimum(c2, 700.0)))
            vals = np.where(tiny, u * w, -np.log1p(-u * w))
        else:
            vals = np.exp(t2) + rng.standard_exponential(len(n))
        sq[n] = vals
    if ev.aggregate is not None:
        agg = ev.aggregate
        total = _num.inverse_conditional_gamma(agg.size, agg.log_bound, float(rng.random()))
        if agg.size == 1:
            parts = np.array([total])
        else:
            cuts = np.sort(rng.random(agg.size - 1))
            parts = np.diff(np.concatenate(([0.0], cuts, [1.0]))) * total
        sq[agg.lo: agg.hi + 1] = parts

    free = np.isnan(sq)
    values = np.empty(n_max + 1, dtype=complex)
    k = int(free.sum())
    values[free] = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) * math.sqrt(0.5)
    constrained = ~free
    phases = rng.random(int(constrained.sum())) * 2.0 * math.pi
    values[constrained] = np.sqrt(sq[constrained]) * np.exp(1j * phases)
    return CoefficientDraw(values=values, stream=stream_token)


def sample_satisfies(ev: EventSpec, draw: CoefficientDraw, *, slack=1e-9) -> bool:
    """Check every constraint of the event against a coefficient vector."""
    v = np.abs(draw.values)
    n_max = draw.degree
    for b in ev.blocks:
        n = b.indices_upto(n_max)
        if len(n) == 0:
            continue
        with np.errstate(over="ignore"):
            c = np.exp(np.asarray(b.log_threshold(n), dtype=float))
        if b.mode == "le":
            if np.any(v[n] > c * (1.0 + slack)):
                return False
        else:
            if np.any(v[n] < c * (1.0 - slack)):
                return False
    if ev.aggregate is not None:
        agg = ev.aggregate
        if agg.hi > n_max:
            return False
        tot = float(np.sum(v[agg.lo: agg.hi + 1] ** 2))
        if tot > math.exp(agg.log_bound) * (1.0 + slack):
            return False
    return True


def verify_domination(ev: EventSpec, draw: CoefficientDraw) -> bool:
    """Numerically confirm strict single-term domination on the circle.

    The sample must satisfy the event (checked); False means the margin was
    not resolvable, not a refutation.
    """
    if not sample_satisfies(ev, draw):
        raise ValueError("sample does not satisfy the event")
    model, r, m = ev.model, ev.r, ev.m
    gaf = make_truncated(model, draw, r)
    w = gaf.weighted_coefficients.copy()
    anchor_term = abs(w[m]) * r ** m if m <= draw.degree else 0.0
    if anchor_term == 0.0:
        return False
    w[m] = 0.0

    def rest(z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), w)

    rest_max = max_modulus(rest, r, rel_tol=1e-6)
    tail = event_tail_sup_bound(ev, draw.degree)
    # the 1e-4 slack dominates the grid-max resolution error by two orders
    return anchor_term * (1.0 - 1e-9) > rest_max * (1.0 + 1e-4) + tail


def certified_event_count(ev: EventSpec, draw: CoefficientDraw):
    """Certified zero count of a conditioned sample, floored by the event tail."""
    gaf = make_truncated(ev.model, draw, ev.r)
    floor = event_tail_sup_bound(ev, draw.degree)
    return count_with_retry(gaf, ev.r, floor)


def event_tail_estimate(ev: EventSpec) -> TailEstimate:
    """Package the event probability as a one-sided tail estimate.

    The event forces at least m zeros, so its probability is a lower bound on
    the tail; the upper side is vacuous (log 1) unless paired with another
    method.
    """
    lp = event_log_prob(ev)
    return TailEstimate(log_p=lp, log_lo=lp, log_hi=0.0,
                        method=Method.EVENT_LOWER_BOUND, samples=0,
                        seed="deterministic",
                        extras={"kind": ev.kind.value, "m": ev.m, "r": ev.r})


def _clopper_pearson_log(hits: int, n: int, level: float):
    a = 1.0 - level
    if hits > 0:
        lo = stats.beta.ppf(a / 2.0, hits, n - hits + 1)
    else:
        lo = 0.0
    if hits < n:
        hi = stats.beta.ppf(1.0 - a / 2.0, hits + 1, n - hits)
    else:
        hi = 1.0
    with np.errstate(divide="ignore"):
        return float(np.log(lo)), float(np.log(hi))


def direct_mc_tail(target, r: float, m: int, trials: int, seed: int, *,
                   level: float = 0.99, chunk: int = 65536,
                   tail_guard: float = 100.0) -> TailEstimate:
    """Monte Carlo estimate of P[count in D(0,r) >= m] with exact CP bracket.

    ``target`` is a GafModel (counts are winding-certified, inconclusive
    replicas follow the retry policy and unresolved ones count as failures)
    or a RadialEnsemble (counts come from the exact radial laws).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = 0
    retries = 0
    unresolved = 0
    extras = {}
    if isinstance(target, RadialEnsemble):
        profile = bernoulli_probs(target, r, 1e-9, min_terms=m + 8)
        depth = profile.size
        extras["radial_depth"] = depth
        extras["neglected_log_mass"] = profile.log_neglected
        done = 0
        block = 0
        while done < trials:
            take = min(chunk, trials - done)
            rng = stream(seed, block)
            if target is RadialEnsemble.GINIBRE:
                shapes = np.broadcast_to(np.arange(1.0, depth + 1.0), (take, depth))
                radii2 = rng.standard_gamma(shapes)
                counts = (radii2 < r * r).sum(axis=1)
            else:
                k = np.arange(1, depth + 1)
                radii = rng.random((take, depth)) ** (1.0 / (2.0 * k))
                counts = (radii < r).sum(axis=1)
            hits += int((counts >= m).sum())
            done += take
            block += 1
    elif isinstance(target, GafModel):
        degree = choose_truncation(target, r)
        for i in range(trials):
            rng = stream(seed, i)
            gaf = sample_truncated(target, r, rng, degree=degree)
            floor = tail_guard * gaf.tail_sd
            try:
                res, used = count_with_retry(gaf, r, floor)
                retries += used
                if res.count >= m:
                    hits += 1
            except InconclusiveCount:
                unresolved += 1
        extras["retries"] = retries
        extras["unresolved_as_failure"] = unresolved
    else:
        raise TypeError("target must be a GafModel or RadialEnsemble")

    log_lo, log_hi = _clopper_pearson_log(hits, trials, level)
    with np.errstate(divide="ignore"):
        log_p = float(np.log(hits / trials))
    extras["hits"] = hits
    return TailEstimate(log_p=log_p, log_lo=log_lo, log_hi=log_hi,
                        method=Method.MONTE_CARLO, samples=trials,
                        seed=f"seed={seed}", extras=extras)


@dataclass(frozen=True)
class FitResult:
    coefficients: tuple
    max_rel_residual: float
    basis: str


_BASES = {
    "m2logm+m2": lambda x, a: np.column_stack([x * x * np.log(x), x * x]),
    "m2logm": lambda x, a: (x * x * np.log(x))[:, None],
    "r2alpha-logr": lambda x, a: (x ** (2 * a) * np.log(x))[:, None],
    "r3alpha-2": lambda x, a: (x ** (3 * a - 2))[:, None],
}


def exponent_fit(points, basis: str, alpha: float | None = None) -> FitResult:
    """Least squares fit of (x, neg_log_p) pairs on one of the named bases."""
    if basis not in _BASES:
        raise ValueError(f"unknown basis {basis!r}; choose from {sorted(_BASES)}")
    if basis in ("r2alpha-logr", "r3alpha-2") and alpha is None:
        raise ValueError("this basis needs alpha")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (x, value) points")
    x, y = pts[:, 0], pts[:, 1]
    if len(np.unique(x)) != len(x):
        raise ValueError("abscissae must be distinct")
    design = _BASES[basis](x, alpha)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ValueError("rank-deficient design")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = design @ coef - y
    rel = float(np.max(np.abs(resid) / np.maximum(np.abs(y), 1e-300)))
    return FitResult(coefficients=tuple(float(c) for c in coef),
                     max_rel_residual=rel, basis=basis)
