"""Temporal Hölder and spatial Sobolev regularity of trajectory ensembles.

Hölder exponents are estimated by moment scaling: the log of
``E ||X(t+h) - X(t)||_theta^p`` (averaged over ``t`` and paths) is regressed
on ``log h`` and the slope divided by ``p``.  Ensembles are consumed in
chunks through accumulators so that large runs never sit in memory at
once; chunk results merge by plain summation.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .spectral import eigenvalues

MIN_PATHS = 30
MIN_LAGS = 4
MIN_SPAN_DECADES = 1.5
CI_STDERRS = 2.0
DEFAULT_SLACK = 0.05


def _batch(paths) -> np.ndarray:
    states = getattr(paths, "states", paths)
    a = np.asarray(states, dtype=float)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise ValueError("expected (paths, times, modes) states")
    return a


def default_lags(n_steps: int, n_lags: int = 8, lo: int = 4) -> np.ndarray:
    """Geometric integer lags in ``[lo, n_steps/4]``."""
    hi = n_steps // 4
    if hi < lo:
        raise ValueError(f"n_steps={n_steps} too small for lags in [{lo}, n_steps/4]")
    return np.unique(np.round(np.geomspace(lo, hi, n_lags)).astype(int))


def _theta_weights(n_modes: int, theta: float) -> np.ndarray:
    return eigenvalues(n_modes) ** theta


@dataclass
class HolderAccumulator:
    """Running sums of ``||X(t+h)-X(t)||_theta^p`` per lag over paths."""

    theta: float
    p: float
    lags: np.ndarray
    moment_sum: np.ndarray = None
    sup_sum: np.ndarray = None
    n_paths: int = 0

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=int)
        if self.moment_sum is None:
            self.moment_sum = np.zeros(self.lags.size)
            self.sup_sum = np.zeros(self.lags.size)

    def add(self, paths) -> "HolderAccumulator":
        X = _batch(paths)
        if self.lags.max() >= X.shape[1]:
            raise ValueError("lag exceeds the trajectory length")
        w = _theta_weights(X.shape[-1], self.theta)
        for i, k in enumerate(self.lags):
            d = X[:, k:] - X[:, :-k]
            norm = np.sqrt(np.einsum("ptn,n->pt", d * d, w))
            self.moment_sum[i] += float((norm**self.p).mean(axis=1).sum())
            self.sup_sum[i] += float(norm.max(axis=1).sum())
        self.n_paths += X.shape[0]
        return self

    def merge(self, other: "HolderAccumulator") -> "HolderAccumulator":
        if not (np.array_equal(self.lags, other.lags) and self.theta == other.theta and self.p == other.p):
            raise ValueError("accumulators disagree on (theta, p, lags)")
        return HolderAccumulator(self.theta, self.p, self.lags, self.moment_sum + other.moment_sum,
                                 self.sup_sum + other.sup_sum, self.n_paths + other.n_paths)

    def estimate(self, dt: float, *, min_paths: int = MIN_PATHS, min_span_decades: float = MIN_SPAN_DECADES) -> "HolderEstimate":
        if self.n_paths < min_paths:
            raise ValueError(f"need >= {min_paths} paths, got {self.n_paths}")
        if self.lags.size < MIN_LAGS:
            raise ValueError(f"need >= {MIN_LAGS} lags, got {self.lags.size}")
        h = self.lags * dt
        if math.log10(h[-1] / h[0]) < min_span_decades - 1e-12:
            raise ValueError(f"lags span {math.log10(h[-1] / h[0]):.2f} decades, need {min_span_decades}")
        mom = self.moment_sum / self.n_paths
        if np.any(mom <= 0):
            raise ValueError("degenerate (all-zero) increments")
        fit = stats.linregress(np.log(h), np.log(mom))
        sup = stats.linregress(np.log(h), np.log(self.sup_sum / self.n_paths))
        d = fit.slope / self.p
        half = CI_STDERRS * fit.stderr / self.p
        return HolderEstimate(self.theta, self.p, float(d), float(d - half), float(d + half),
                              float(fit.stderr / self.p), float(sup.slope), h, mom, self.n_paths)


@dataclass(frozen=True)
class HolderEstimate:
    theta: float
    p: float
    delta_hat: float
    ci_lo: float
    ci_hi: float
    stderr: float
    delta_sup: float  # slope of log E[max_t ||increment||] (pathwise diagnostic)
    lags: np.ndarray = field(repr=False)
    moments: np.ndarray = field(repr=False)
    n_paths: int = 0

    @property
    def ci_width(self) -> float:
        return self.ci_hi - self.ci_lo


def estimate_holder(paths, theta: float, p: float, lags=None, dt: float | None = None, **kw) -> HolderEstimate:
    """Moment-scaling Hölder exponent of an ensemble (``Trajectory`` list or array).

    ``lags`` are integer step counts; the default is :func:`default_lags`.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if isinstance(paths, (list, tuple)) and paths and hasattr(paths[0], "states"):
        dt = paths[0].dt if dt is None else dt
        X = np.stack([tr.states for tr in paths])
    else:
        X = _batch(paths)
    if dt is None:
        raise ValueError("dt is required for array input")
    lags = default_lags(X.shape[1] - 1) if lags is None else np.asarray(lags, dtype=int)
    return HolderAccumulator(theta, p, lags).add(X).estimate(dt, **kw)


def sup_holder_exponent(series, theta: float, lags, dt: float) -> float:
    """Slope of ``log max_t ||f(t+h) - f(t)||_theta`` against ``log h`` for one path."""
    X = _batch(series)
    acc = HolderAccumulator(theta, 2.0, lags).add(X)
    h = acc.lags * dt
    return float(stats.linregress(np.log(h), np.log(acc.sup_sum / acc.n_paths)).slope)


# ---------------------------------------------------------------------------
# spatial profile


def harmonic_threshold(n_modes: int) -> float:
    """``H_N / H_{N/2}``: full/half ratio of the borderline series ``sum 1/n``."""
    n = np.arange(1, n_modes + 1)
    H = np.cumsum(1.0 / n)
    return float(H[-1] / H[n_modes // 2 - 1])


@dataclass
class ProfileAccumulator:
    """Sums over paths of ``||X(t)||_theta^p`` with all and with half the modes."""

    p: float
    thetas: np.ndarray
    full: np.ndarray = None
    half: np.ndarray = None
    n_paths: int = 0

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)

    def add(self, paths) -> "ProfileAccumulator":
        X = _batch(paths)
        N = X.shape[-1]
        sq = X * X
        keep = N // 2
        full = np.empty((self.thetas.size, X.shape[1]))
        half = np.empty_like(full)
        for i, th in enumerate(self.thetas):
            w = _theta_weights(N, th)
            a = np.einsum("ptn,n->pt", sq, w)
            b = np.einsum("ptn,n->pt", sq[..., :keep], w[:keep])
            full[i] = (a ** (self.p / 2)).sum(axis=0)
            half[i] = (b ** (self.p / 2)).sum(axis=0)
        if self.full is None:
            self.full, self.half = full, half
        else:
            self.full += full
            self.half += half
        self.n_paths += X.shape[0]
        self._n_modes = N
        return self

    def merge(self, other: "ProfileAccumulator") -> "ProfileAccumulator":
        out = ProfileAccumulator(self.p, self.thetas, self.full + other.full, self.half + other.half,
                                 self.n_paths + other.n_paths)
        out._n_modes = self._n_modes
        return out

    def profile(self) -> "SpatialProfile":
        if self.n_paths == 0:
            raise ValueError("no paths accumulated")
        mean_full = self.full / self.n_paths
        mean_half = self.half / self.n_paths
        sup_full = mean_full.max(axis=1)
        sup_half = mean_half.max(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(sup_half > 0, (sup_full / sup_half) ** (2.0 / self.p), 1.0)
        thr = harmonic_threshold(self._n_modes)
        return SpatialProfile(self.p, self.thetas, sup_full, sup_half, ratio, thr, ratio > thr,
                              mean_full, self._n_modes)


@dataclass(frozen=True)
class SpatialProfile:
    p: float
    thetas: np.ndarray
    sup_moment: np.ndarray
    sup_moment_half: np.ndarray
    ratio: np.ndarray  # (full/half)^(2/p), comparable to a ratio of mode sums
    threshold: float
    divergent: np.ndarray
    per_time: np.ndarray = field(repr=False)
    n_modes: int = 0


def spatial_profile(paths, p: float, theta_grid) -> SpatialProfile:
    """Sup-in-time ``E ||X(t)||_theta^p`` per ``theta`` with a truncation flag.

    The flag compares the moment against the one with the top half of the
    modes removed: a convergent mode sum changes little, a divergent one
    grows at least like the harmonic series, whose ratio is the threshold.
    """
    return ProfileAccumulator(p, theta_grid).add(paths).profile()


# ---------------------------------------------------------------------------
# predicted region


@dataclass(frozen=True)
class Membership:
    """``X in C^delta(H^theta)`` for ``theta`` in an interval, ``delta`` affine in ``theta``.

    ``strict`` means every ``delta < bound`` is admitted; otherwise the
    bound itself is.  ``cap`` clips the bound from above.
    """

    label: str
    theta_lo: float
    theta_hi: float
    lo_closed: bool
    hi_closed: bool
    offset: float
    slope: float
    strict: bool
    optimal: bool
    cap: float = math.inf

    def contains(self, theta: float) -> bool:
        lo_ok = theta >= self.theta_lo if self.lo_closed else theta > self.theta_lo
        hi_ok = theta <= self.theta_hi if self.hi_closed else theta < self.theta_hi
        return lo_ok and hi_ok

    def bound(self, theta: float) -> float | None:
        if not self.contains(theta):
            return None
        return min(self.offset + self.slope * theta, self.cap)


@dataclass(frozen=True)
class Region:
    beta: float
    gamma: float
    alpha: float
    p: float
    memberships: tuple

    def bounds_at(self, theta: float):
        return [(m, m.bound(theta)) for m in self.memberships if m.contains(theta)]

    def best_bound(self, theta: float) -> float | None:
        b = [v for _, v in self.bounds_at(theta)]
        return max(b) if b else None


def predicted_region(beta: float, gamma: float, alpha: float, p: float) -> Region:
    """Admissible ``(delta, theta)`` memberships for claimed ``(beta, gamma, alpha, p)``.

    ``p = inf`` gives the limit over all moments, where ``alpha = 1/2`` is
    also allowed.  Each membership is kept separately.
    """
    if not gamma >= 0:
        raise ValueError("need gamma >= 0")
    if not beta >= gamma:
        raise ValueError("need beta >= gamma")
    if math.isinf(p):
        if not 0 < alpha <= 0.5:
            raise ValueError("need 0 < alpha <= 1/2 when p = inf")
        inv_p = 0.0
    else:
        if not p > 2:
            raise ValueError("need p > 2")
        if not 1 / p < alpha < 0.5:
            raise ValueError("need 1/p < alpha < 1/2")
        inv_p = 1.0 / p
    a = alpha - inv_p
    beta_branch = Membership("initial", -math.inf, beta, False, True, beta / 2, -0.5, False, False, 1.0)
    if gamma == 0:
        ms = (
            Membership("base", 0.0, 0.0, True, True, a, 0.0, True, True),
            Membership("sobolev", 0.0, 2 * a, False, False, a, -0.5, False, True),
            beta_branch,
        )
    else:
        ms = (
            Membership("gamma", gamma, gamma, True, True, a, 0.0, True, True),
            Membership("below_gamma", 0.0, gamma, False, False, a, 0.0, False, True),
            Membership("above_gamma", gamma, gamma + 2 * a, False, False, a + gamma / 2, -0.5, False, True),
            beta_branch,
        )
    return Region(beta, gamma, alpha, p, ms)


# ---------------------------------------------------------------------------
# verdicts


class Verdict(enum.IntEnum):
    CONSISTENT = 0
    INCONCLUSIVE = 1
    VIOLATED = 2


@dataclass(frozen=True)
class VerdictRow:
    theta: float
    p: float
    delta_hat: float
    ci_lo: float
    ci_hi: float
    bound: float
    verdict: Verdict
    membership: str
    direction: str  # "", "above" or "below"


def judge(ci_lo: float, ci_hi: float, bound: float, optimal: bool, slack: float = DEFAULT_SLACK):
    """Return ``(verdict, direction)`` for one CI against one bound."""
    width = ci_hi - ci_lo
    lo, hi = bound - slack, bound + slack
    if ci_hi >= lo and ci_lo <= hi:
        return Verdict.CONSISTENT, ""
    if ci_lo > hi:
        if ci_lo - hi > width:
            return Verdict.VIOLATED, "above"
        return Verdict.INCONCLUSIVE, "above"
    # rougher than the bound: only a contradiction where the bound is sharp
    if not optimal:
        return Verdict.CONSISTENT, "below"
    if lo - ci_hi > width:
        return Verdict.VIOLATED, "below"
    return Verdict.INCONCLUSIVE, "below"


@dataclass(frozen=True)
class RegularityReport:
    rows: tuple
    region: Region
    profile: SpatialProfile | None = None
    slack: float = DEFAULT_SLACK

    @property
    def any_violated(self) -> bool:
        return any(r.verdict is Verdict.VIOLATED for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("theta,p,delta_hat,ci_lo,ci_hi,bound,verdict\n")
        for r in self.rows:
            buf.write(f"{_fmt(r.theta)},{_fmt(r.p)},{_fmt(r.delta_hat)},{_fmt(r.ci_lo)},{_fmt(r.ci_hi)},"
                      f"{_fmt(r.bound)},{int(r.verdict)}\n")
        return buf.getvalue()

    def summary(self) -> str:
        g = self.region
        lines = [f"claimed beta={g.beta:g} gamma={g.gamma:g} alpha={g.alpha:g} p={g.p:g}; slack={self.slack:g}"]
        for r in self.rows:
            d = f" ({r.direction})" if r.direction else ""
            lines.append(f"theta={r.theta:g} [{r.membership}] delta_hat={r.delta_hat:.4f} "
                         f"CI=[{r.ci_lo:.4f}, {r.ci_hi:.4f}] bound={r.bound:.4f} -> {r.verdict.name.lower()}{d}")
        if self.profile is not None:
            pr = self.profile
            lines.append(f"spatial profile (p={pr.p:g}, N={pr.n_modes}, threshold={pr.threshold:.4f}):")
            for th, m, rt, dv in zip(pr.thetas, pr.sup_moment, pr.ratio, pr.divergent):
                lines.append(f"  theta={th:g} sup_moment={m:.6g} ratio={rt:.4f} {'divergent' if dv else 'convergent'}")
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.10g}"


def consistency_verdict(estimates, region: Region, slack: float = DEFAULT_SLACK, profile: SpatialProfile | None = None) -> RegularityReport:
    """One row per (estimate, membership containing its theta)."""
    rows = []
    for e in estimates:
        hits = region.bounds_at(e.theta)
        if not hits:
            rows.append(VerdictRow(e.theta, e.p, e.delta_hat, e.ci_lo, e.ci_hi, math.nan, Verdict.INCONCLUSIVE, "none", ""))
        for m, b in hits:
            v, d = judge(e.ci_lo, e.ci_hi, b, m.optimal, slack)
            rows.append(VerdictRow(e.theta, e.p, e.delta_hat, e.ci_lo, e.ci_hi, b, v, m.label, d))
    return RegularityReport(tuple(rows), region, profile, slack)
