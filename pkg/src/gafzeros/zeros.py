"""Certified zero counting on disks, polynomial roots, and circle functionals.

The counter walks the image of a circle and accumulates phase increments; a
count is only reported once every adjacent increment is below pi/2 (a 2x
safety factor against aliasing a full loop).  Certification compares the
smallest sampled modulus, minus a continuity margin, against a caller-supplied
floor (typically a truncation tail bound), which is what makes the truncated
count transferable to the full series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import TruncatedGaf

_TWO_PI = 2.0 * math.pi
PHASE_LIMIT = math.pi / 2.0
MAX_NODES = 2**20
HARD_FLOOR = 1e-300  # moduli below this are treated as a hard failure, never clamped


class InconclusiveCount(RuntimeError):
    """The circle test could not certify a count (possible zero near the circle)."""


class RootsDidNotConverge(RuntimeError):
    """Simultaneous iteration failed the residual test; partial roots attached."""

    def __init__(self, message, roots=None):
        super().__init__(message)
        self.roots = roots


@dataclass(frozen=True)
class CountResult:
    count: int
    certified: bool
    min_modulus_on_circle: float
    circle_nodes_used: int


@dataclass(frozen=True)
class JensenCheck:
    r: float
    R: float
    mean_log_R: float
    mean_log_r: float
    integral_n_over_u: float
    residual: float


def _circle_values(f, r, n):
    theta = np.linspace(0.0, _TWO_PI, n, endpoint=False)
    return theta, np.asarray(f(r * np.exp(1j * theta)), dtype=complex)


def _interleave(f, r, old_vals):
    n = len(old_vals)
    theta_new = (np.arange(n) + 0.5) * (_TWO_PI / n)
    new_vals = np.asarray(f(r * np.exp(1j * theta_new)), dtype=complex)
    out = np.empty(2 * n, dtype=complex)
    out[0::2] = old_vals
    out[1::2] = new_vals
    return out


def count_zeros_winding(f, r, floor, *, start_nodes=256, max_nodes=MAX_NODES) -> CountResult:
    """Count zeros of analytic f in |z| < r by the argument principle.

    ``floor`` is the certification threshold: an Inconclusive error is raised
    if any sampled modulus falls at or below it, and the certified flag is set
    only when min |f| minus the continuity margin clears it.

    The grid doubles until all phase increments resolve; it keeps doubling (up
    to the node cap) while certification is the only thing missing.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    if not floor >= 0:
        raise ValueError("floor must be nonnegative")
    _, vals = _circle_values(f, r, start_nodes)
    while True:
        mods = np.abs(vals)
        mn = float(mods.min())
        if mn <= max(floor, HARD_FLOOR):
            raise InconclusiveCount(
                f"min |f| = {mn:.3e} at or below floor {floor:.3e} on |z| = {r}")
        nxt = np.roll(vals, -1)
        diffs = np.angle(nxt / vals)
        # per-arc continuity margin: |f| between two nodes cannot drop below
        # the smaller endpoint by more than about the endpoint jump once the
        # grid resolves f
        jumps = np.abs(nxt - vals)
        arc_floor = float((np.minimum(mods, np.abs(nxt)) - jumps).min())
        phase_ok = float(np.abs(diffs).max()) < PHASE_LIMIT
        certified = arc_floor > floor
        if phase_ok and (certified or len(vals) >= max_nodes):
            break
        if len(vals) >= max_nodes:
            raise InconclusiveCount(
                f"phase increments unresolved at {len(vals)} nodes on |z| = {r}")
        vals = _interleave(f, r, vals)
    total = float(diffs.sum())
    winding = total / _TWO_PI
    count = int(round(winding))
    if abs(winding - count) > 1e-6:
        raise InconclusiveCount(f"winding {winding} is not an integer to 1e-6")
    if count < 0:
        raise InconclusiveCount(f"negative winding {count} for an analytic function")
    return CountResult(count=count, certified=certified,
                       min_modulus_on_circle=mn, circle_nodes_used=len(vals))


def count_with_retry(f, r, floor, *, max_retries=3, require_certified=True,
                     start_nodes=256):
    """Winding count with the radius-perturbation retry policy.

    An inconclusive (or uncertified, when required) result retries at radii
    perturbed by multiples of 1e-6 * r, at most ``max_retries`` times, then the
    last error is raised.  Returns (CountResult, retries_used).
    """
    deltas = [0.0, 1e-6, -1e-6, 2e-6]
    last_exc = None
    for attempt, d in enumerate(deltas[: max_retries + 1]):
        try:
            res = count_zeros_winding(f, r * (1.0 + d), floor, start_nodes=start_nodes)
            if res.certified or not require_certified:
                return res, attempt
            last_exc = InconclusiveCount(
                f"uncertified count at radius perturbation {d:+.1e}")
        except InconclusiveCount as exc:
            last_exc = exc
    raise last_exc


def _initial_root_guesses(coeffs):
    """Starting points on circles read off the coefficient magnitude profile.

    Upper convex hull of (n, log |c_n|); each hull edge contributes points on
    the circle whose radius matches the two dominant terms trading places.
    """
    mags = np.abs(coeffs)
    with np.errstate(divide="ignore"):
        logm = np.where(mags > 0, np.log(np.maximum(mags, 1e-300)), -np.inf)
    pts = [(i, logm[i]) for i in range(len(coeffs)) if np.isfinite(logm[i])]
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    guesses = []
    for seg, ((k1, u1), (k2, u2)) in enumerate(zip(hull[:-1], hull[1:])):
        cnt = k2 - k1
        radius = math.exp((u1 - u2) / cnt)
        ang = _TWO_PI * (np.arange(cnt) + 0.375) / cnt + 0.61 * seg
        guesses.append(radius * np.exp(1j * ang))
    return np.concatenate(guesses)


def _polyval_many(coeffs, z):
    return np.polynomial.polynomial.polyval(z, coeffs)


def find_roots(coeffs, *, residual_tol=1e-10, max_iter=200) -> np.ndarray:
    """All roots of sum c_n z^n by Aberth-Ehrlich iteration with Newton polish.

    Residuals are checked against the backward-error scale sum |c_n| |z|^n; a
    failure raises RootsDidNotConverge carrying the partial result.
    """
    c = np.asarray(coeffs, dtype=complex)
    nz = np.nonzero(np.abs(c))[0]
    if len(nz) == 0:
        raise ValueError("zero polynomial has no well-defined roots")
    c = c[: nz[-1] + 1]  # strip trailing (high-order) zeros
    lead_zeros = nz[0]
    roots_at_zero = np.zeros(lead_zeros, dtype=complex)
    c = c[lead_zeros:]
    deg = len(c) - 1
    if deg == 0:
        return roots_at_zero
    if deg == 1:
        return np.concatenate([roots_at_zero, [-c[0] / c[1]]])

    dc = c[1:] * np.arange(1, deg + 1)
    z = _initial_root_guesses(c)
    done = np.zeros(deg, dtype=bool)

    def values_with_pullback(z):
        # overflowing iterates (giant initial radii at high degree) are pulled
        # toward the origin until evaluation is finite
        with np.errstate(over="ignore", invalid="ignore"):
            p = _polyval_many(c, z)
            dp = _polyval_many(dc, z)
            for _ in range(200):
                nonfin = ~(np.isfinite(p) & np.isfinite(dp))
                if not np.any(nonfin):
                    break
                z = np.where(nonfin, 0.7 * z, z)
                p = np.where(nonfin, _polyval_many(c, z), p)
                dp = np.where(nonfin, _polyval_many(dc, z), dp)
        return z, p, dp

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            z, p, dp = values_with_pullback(z)
            bad = dp == 0
            if np.any(bad):
                dp = np.where(bad, 1e-30, dp)
            w = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = (1.0 / diff).sum(axis=1)
            denom = 1.0 - w * s
            denom = np.where(denom == 0, 1e-30, denom)
            corr = np.where(done, 0.0, w / denom)
            z = z - corr
            done |= np.abs(corr) <= 1e-14 * (1.0 + np.abs(z))
            if done.all():
                break
        for _ in range(2):  # Newton polish
            z, p, dp = values_with_pullback(z)
            dp = np.where(dp == 0, 1e-30, dp)
            step = p / dp
            z = z - np.where(np.isfinite(step), step, 0.0)

        scale = _polyval_many(np.abs(c), np.abs(z)).real
        resid = np.abs(_polyval_many(c, z))
    roots = np.concatenate([roots_at_zero, z])
    rel = resid / np.maximum(scale, 1e-300)
    # NaN must count as failure, never as a pass
    ok = np.isfinite(rel) & (rel <= residual_tol)
    if not np.all(ok):
        worst = float(np.nanmax(np.where(np.isfinite(rel), rel, np.inf)))
        raise RootsDidNotConverge(
            f"max relative residual {worst:.3e}", roots=roots)
    return roots


def count_in_disk(roots, r) -> int:
    return int(np.count_nonzero(np.abs(roots) < r))


def circle_mean_log_abs(f, s, tol, *, start_nodes=128, max_nodes=MAX_NODES) -> float:
    """(1/2pi) integral of log |f(s e^{i theta})| d theta by node-doubling trapezoid.

    On a periodic uniform grid the trapezoid rule is the plain node mean and
    converges spectrally for analytic nonvanishing f.  Moduli below 1e-300
    are a hard failure: clamping would silently corrupt downstream bounds.
    """
    if not s > 0:
        raise ValueError("radius must be positive")
    _, vals = _circle_values(f, s, start_nodes)
    mods = np.abs(vals)
    if mods.min() <= HARD_FLOOR:
        raise InconclusiveCount("modulus below 1e-300 on the quadrature circle")
    est = float(np.mean(np.log(mods)))
    while True:
        vals = _interleave(f, s, vals)
        mods = np.abs(vals)
        if mods.min() <= HARD_FLOOR:
            raise InconclusiveCount("modulus below 1e-300 on the quadrature circle")
        new = float(np.mean(np.log(mods)))
        if abs(new - est) < tol:
            return new
        if len(vals) >= max_nodes:
            raise InconclusiveCount(
                f"quadrature unstable at node cap ({len(vals)} nodes)")
        est = new


def jensen_residual(gaf: TruncatedGaf, r: float, R: float, *, quad_tol=1e-8) -> JensenCheck:
    """Residual of the circular-mean identity for log |f| between radii r < R.

    The radial zero-count integral is assembled exactly from the polynomial
    roots: a root of modulus u < R contributes log(R / max(u, r)).
    """
    if not (0 < r < R <= gaf.radius_of_use * (1 + 1e-12)):
        raise ValueError("need 0 < r < R <= radius_of_use")
    w = gaf.weighted_coefficients
    if abs(w[0]) == 0:
        raise ValueError("f(0) = 0: the identity needs a nonzero constant term")
    roots = find_roots(w)
    mods = np.abs(roots)
    inside = mods < R
    integral = float(np.sum(np.log(R / np.maximum(mods[inside], r))))
    mean_R = circle_mean_log_abs(gaf, R, quad_tol)
    mean_r = circle_mean_log_abs(gaf, r, quad_tol)
    return JensenCheck(r=r, R=R, mean_log_R=mean_R, mean_log_r=mean_r,
                       integral_n_over_u=integral,
                       residual=abs(mean_R - mean_r - integral))


def rouche_certify(gaf: TruncatedGaf, r: float, tail_bound: float,
                   *, start_nodes=256, max_nodes=MAX_NODES) -> bool:
    """True iff min |f| on |z| = r, less a continuity margin, beats tail_bound.

    A True certificate means the truncation has the same zero count in the
    disk as anything within tail_bound of it on the circle; never raises.
    """
    _, vals = _circle_values(gaf, r, start_nodes)
    while True:
        mods = np.abs(vals)
        mn = float(mods.min())
        nxt = np.roll(vals, -1)
        jumps = np.abs(nxt - vals)
        arc_floor = float((np.minimum(mods, np.abs(nxt)) - jumps).min())
        phase_ok = float(np.abs(np.angle(nxt / vals)).max()) < PHASE_LIMIT
        if phase_ok and arc_floor > tail_bound:
            return True
        if len(vals) >= max_nodes:
            return False
        if phase_ok and mn <= tail_bound:
            return False
        vals = _interleave(gaf, r, vals)


def _polished_circle_max(f, r, vals):
    """Grid max improved by parabolic refinement at every local maximum.

    Keeps narrow peaks that sit between nodes from being under-read, which a
    plain doubling-change test can miss when two peaks run nearly equal.
    """
    n = len(vals)
    y = np.abs(vals)
    left, right = np.roll(y, 1), np.roll(y, -1)
    peaks = np.nonzero((y >= left) & (y >= right))[0]
    if len(peaks) == 0:
        return float(y.max())
    h = _TWO_PI / n
    denom = left[peaks] - 2.0 * y[peaks] + right[peaks]
    safe = np.where(denom == 0.0, 1.0, denom)
    delta = np.clip(np.where(denom == 0.0, 0.0, 0.5 * (left[peaks] - right[peaks]) / safe),
                    -1.0, 1.0)
    theta = (peaks + delta) * h
    cand = np.abs(np.asarray(f(r * np.exp(1j * theta)), dtype=complex))
    return float(max(y.max(), cand.max()))


def max_modulus(f, r, *, rel_tol=1e-9, start_nodes=128, max_nodes=MAX_NODES) -> float:
    """max |f| over |z| = r (equals the disk max, by the maximum principle)."""
    _, vals = _circle_values(f, r, start_nodes)
    best = _polished_circle_max(f, r, vals)
    while len(vals) < max_nodes:
        vals = _interleave(f, r, vals)
        new = _polished_circle_max(f, r, vals)
        if abs(new - best) <= rel_tol * max(new, best, 1e-300):
            return max(new, best)
        best = new
    return best
