"""Grönwall inequality with an integrable singular kernel.

If ``f(t) <= m(t) + int_0^t K(t-r) f(r) dr`` with ``m`` nondecreasing, then
``f(t) <= c e^{lambda0 t} m(t)`` whenever ``int_0^T e^{-lambda0 r} K(r) dr``
is below ``1 - 1/c``.  This module finds such a ``lambda0`` and checks both
sides of the implication on sampled data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature

LAMBDA_MAX = 1e12


class KernelNotIntegrable(ValueError):
    pass


class KernelMassDoesNotDecay(ValueError):
    pass


def kernel_mass(K, T: float, lam: float, *, refine: int = 0) -> float:
    """``int_0^T exp(-lam t) K(t) dt`` on the dyadic graded mesh."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    res = quadrature.dyadic_integral(
        lambda t: np.exp(-lam * t) * quadrature.evaluate(K, t), T, refine=refine
    )
    if not res.convergent:
        raise KernelNotIntegrable(f"kernel not integrable at 0 (panel ratio {res.ratio:.4f})")
    return res.value


def _certified_mass(K, T, lam):
    # the certificate is re-checked on a refined mesh, so require both to pass
    return max(kernel_mass(K, T, lam), kernel_mass(K, T, lam, refine=2))


@dataclass(frozen=True)
class GronwallCertificate:
    """``f <= factor * exp(lambda0 t) * m(t)`` on ``[0, T]``, ``factor = 1/(1-target)``."""

    kernel: object = field(repr=False)
    T: float
    lambda0: float
    kernel_mass_at_lambda0: float
    target: float = 0.5

    def __post_init__(self):
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be >= 0")
        if not 0 < self.target < 1:
            raise ValueError("target mass must lie in (0, 1)")
        self.revalidate()

    def revalidate(self) -> float:
        mass = kernel_mass(self.kernel, self.T, self.lambda0, refine=2)
        if not mass < self.target:
            raise ValueError(f"kernel mass {mass} at lambda0={self.lambda0} is not below {self.target}")
        return mass

    @property
    def factor(self) -> float:
        return 1.0 / (1.0 - self.target)

    def bound(self, t, m):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = self.factor * np.exp(self.lambda0 * t) * np.asarray(m, dtype=float)
        # exp overflow with m = 0 gives nan; the bound is 0 there
        return np.where(np.asarray(m) == 0, 0.0, out)


def find_lambda0(K, T: float, target: float = 0.5, tol: float = 1e-6, *, lambda_max: float = LAMBDA_MAX) -> GronwallCertificate:
    """Smallest bracketed ``lambda`` with kernel mass strictly below ``target``.

    Geometric bracketing from ``lambda = 1`` then bisection to relative
    width ``tol``; the upper end (mass below target) is returned.
    """
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    m0 = _certified_mass(K, T, 0.0)
    if m0 < target:
        return GronwallCertificate(K, T, 0.0, m0, target)
    lo, hi = 0.0, 1.0
    m_hi = _certified_mass(K, T, hi)
    while not m_hi < target:
        lo, hi = hi, 2.0 * hi
        if hi > lambda_max:
            raise KernelMassDoesNotDecay(f"kernel mass does not decay below {target} for lambda <= {lambda_max:g}")
        m_hi = _certified_mass(K, T, hi)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        m_mid = _certified_mass(K, T, mid)
        if m_mid < target:
            hi, m_hi = mid, m_mid
        else:
            lo = mid
    return GronwallCertificate(K, T, hi, m_hi, target)


def _uniform_step(grid) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] != 0:
        raise ValueError("grid must be 1-d, start at 0 and have >= 2 points")
    dt = np.diff(grid)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    return float(dt[0])


def panel_weights(K, grid) -> np.ndarray:
    """``W_k = int_{(k-1)dt}^{k dt} K``, ``k = 1..n``, exact for piecewise-constant f.

    Closed form when the kernel exposes ``antiderivative``; otherwise the
    singular first panel uses the dyadic rule and the rest Gauss panels.
    """
    dt = _uniform_step(grid)
    n = len(grid) - 1
    edges = dt * np.arange(n + 1)
    if hasattr(K, "antiderivative"):
        return np.diff(K.antiderivative(edges))
    first = quadrature.dyadic_integral(lambda t: quadrature.evaluate(K, t), dt)
    if not first.convergent:
        raise KernelNotIntegrable("kernel not integrable at 0")
    rest = quadrature.gauss_panels(K, edges[1:]) if n > 1 else np.zeros(0)
    return np.concatenate([[first.value], rest])


def _convolve(W: np.ndarray, f: np.ndarray) -> np.ndarray:
    # (K * f)(t_i) = sum_{j<i} W_{i-j} f_j
    n = f.size
    out = np.zeros(n)
    for i in range(1, n):
        out[i] = W[:i][::-1] @ f[:i]
    return out


def resolvent_solution(m_samples, K, grid) -> np.ndarray:
    """Solve ``f_i = m_i + sum_{j<i} W_{i-j} f_j`` (the tight hypothesis) by forward substitution."""
    m = np.asarray(m_samples, dtype=float)
    W = panel_weights(K, grid)
    f = np.empty_like(m)
    for i in range(m.size):
        f[i] = m[i] + (W[:i][::-1] @ f[:i] if i else 0.0)
    return f


@dataclass(frozen=True)
class BoundCheck:
    hypothesis_holds: bool
    hypothesis_slack: float  # min_i (rhs_i - f_i); >= 0 when the hypothesis holds
    conclusion_holds: bool
    conclusion_slack: float  # min_i (bound_i - f_i)
    conclusion_factor: float  # min_i bound_i / f_i over f_i > 0
    worst_index: int

    @property
    def counterexample(self) -> bool:
        """Hypothesis satisfied but conclusion violated."""
        return self.hypothesis_holds and not self.conclusion_holds


def check_bound(f_samples, m_samples, K, cert: GronwallCertificate, grid, rtol: float = 1e-10) -> BoundCheck:
    """Check hypothesis and conclusion of the lemma on a uniform grid.

    ``f`` is read as piecewise constant from the left endpoints, for which
    the convolution with ``K`` is integrated exactly panel by panel.
    """
    f = np.asarray(f_samples, dtype=float)
    m = np.asarray(m_samples, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if not f.shape == m.shape == grid.shape:
        raise ValueError("f, m and grid must share one shape")
    if np.any(np.diff(m) < 0):
        raise ValueError("m must be nondecreasing")
    if grid[-1] > cert.T * (1 + 1e-12):
        raise ValueError("grid extends beyond the certificate horizon")
    rhs = m + _convolve(panel_weights(K, grid), f)
    hyp = rhs - f
    scale = np.maximum(np.abs(rhs), 1.0)
    bound = cert.bound(grid, m)
    with np.errstate(invalid="ignore"):
        con = bound - f
    pos = f > 0
    with np.errstate(divide="ignore", over="ignore"):
        factor = float(np.min(bound[pos] / f[pos])) if np.any(pos) else math.inf
    worst = int(np.argmin(con))
    return BoundCheck(
        hypothesis_holds=bool(np.all(hyp >= -rtol * scale)),
        hypothesis_slack=float(hyp.min()),
        conclusion_holds=bool(np.all(con >= -rtol * np.maximum(np.abs(bound), 1.0))),
        conclusion_slack=float(con.min()),
        conclusion_factor=factor,
        worst_index=worst,
    )


@dataclass(frozen=True)
class SuiteCase:
    index: int
    exponent: float
    lambda0: float
    kernel_mass: float
    hypothesis_slack: float
    conclusion_factor: float
    conclusion_holds: bool


def random_step_function(rng: np.random.Generator, grid: np.ndarray, max_jumps: int = 5) -> np.ndarray:
    """Nondecreasing positive step function on ``grid``."""
    base = rng.uniform(0.1, 2.0)
    k = rng.integers(0, max_jumps + 1)
    at = rng.uniform(0, grid[-1], k)
    size = rng.exponential(1.0, k)
    return base + (size[None, :] * (grid[:, None] >= at[None, :])).sum(axis=1)


def lemma_suite(seed: int = 0, n_cases: int = 100, T: float = 1.0, n_grid: int = 200,
                target: float = 0.5, max_exponent: float = 0.9, lambda_max: float = 1e16) -> list[SuiteCase]:
    """Random ``(m, K = t^-a)`` cases with the tight resolvent ``f``."""
    from .coefficients import PowerKernel

    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, T, n_grid + 1)
    cases = []
    for i in range(n_cases):
        a = float(rng.uniform(0.0, max_exponent))
        K = PowerKernel(1.0, a)
        m = random_step_function(rng, grid)
        cert = find_lambda0(K, T, target, lambda_max=lambda_max)
        f = resolvent_solution(m, K, grid)
        rep = check_bound(f, m, K, cert, grid)
        cases.append(SuiteCase(i, a, cert.lambda0, cert.kernel_mass_at_lambda0, rep.hypothesis_slack,
                               rep.conclusion_factor, rep.conclusion_holds))
    return cases
