"""Nemytskii drift/diffusion operators and the kernel bounds they satisfy.

Drift ``F(x) = d/dxi f(x(.))`` maps ``H`` into ``\\dot H^{-1}``; diffusion
``G(x) h_n = sqrt(q_n) g(x(.)) h_n``.  The kernel families record the
functions ``K_F, K_G, K_{F,gamma}, K_{G,gamma}`` that bound ``S(t)F`` and
``S(t)G`` for the three built-in noise regimes, with every unspecified
constant set to one.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import quadrature
from .spectral import AliasingWarning, SpectralVector, eigenvalues, synthesis_matrix, to_physical, to_spectral

# ---------------------------------------------------------------------------
# scalar Lipschitz functions


_BASES = {
    "zero": (lambda u: np.zeros_like(u), 0.0),
    "one": (lambda u: np.ones_like(u), 0.0),
    "identity": (lambda u: u, 1.0),
    "sin": (np.sin, 1.0),
    "cos": (np.cos, 1.0),
    "tanh": (np.tanh, 1.0),
}


class _Elementwise:
    # picklable ``shift + scale * base(u)``
    def __init__(self, base: str, scale: float, shift: float):
        if base not in _BASES:
            raise ValueError(f"unknown base function {base!r}; choose from {sorted(_BASES)}")
        self.base, self.scale, self.shift = base, float(scale), float(shift)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.shift + self.scale * _BASES[self.base][0](u)

    def __repr__(self):
        return f"{self.shift:+g}{self.scale:+g}*{self.base}(u)"


@dataclass(frozen=True)
class ScalarLipschitz:
    """A vectorised ``R -> R`` map together with its Lipschitz constant.

    ``func`` must be side-effect free; it is evaluated pointwise on grids.
    ``constant_value`` is set when the map is constant, which lets the
    solvers skip grid round trips and check the additive-noise contract.
    """

    func: object
    lipschitz_constant: float
    constant_value: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.lipschitz_constant < 0:
            raise ValueError("Lipschitz constant must be >= 0")

    def __call__(self, u):
        return self.func(u)

    @property
    def vanishes_at_zero(self) -> bool:
        return float(self.func(np.zeros(1))[0]) == 0.0

    @property
    def is_zero(self) -> bool:
        return self.constant_value == 0.0

    def check_lipschitz(self, rng=None, n_pairs: int = 1000, scale: float = 10.0) -> bool:
        """Spot-check ``|f(a) - f(b)| <= L |a - b|`` on random pairs."""
        rng = np.random.default_rng(0) if rng is None else rng
        a, b = rng.uniform(-scale, scale, (2, n_pairs))
        lhs = np.abs(self.func(a) - self.func(b))
        return bool(np.all(lhs <= self.lipschitz_constant * np.abs(a - b) * (1 + 1e-12) + 1e-15))

    @classmethod
    def elementwise(cls, base: str, scale: float = 1.0, shift: float = 0.0) -> "ScalarLipschitz":
        fn = _Elementwise(base, scale, shift)
        lip = abs(scale) * _BASES[base][1]
        const = None
        if base == "zero" or scale == 0:
            const = shift
        elif base == "one":
            const = shift + scale
        return cls(fn, lip, const, repr(fn))

    @classmethod
    def zero(cls):
        return cls.elementwise("zero")

    @classmethod
    def constant(cls, c: float):
        return cls.elementwise("one", scale=c)

    @classmethod
    def linear(cls, a: float):
        return cls.elementwise("identity", scale=a)


# ---------------------------------------------------------------------------
# Nemytskii operators


def _check_aliasing(n_modes: int, grid_size: int, who: str):
    if grid_size < 2 * n_modes:
        warnings.warn(
            f"{who}: grid_size={grid_size} < 2*n_modes={2 * n_modes}, products of resolved modes alias",
            AliasingWarning,
            stacklevel=3,
        )


@lru_cache(maxsize=16)
def _divergence_matrix(n_modes: int, grid_size: int) -> np.ndarray:
    # Weak derivative on sine series: <d/dxi sum_m s_m e_m, e_n> = sum_m D[n,m] s_m,
    # D[n,m] = 4nm/(n^2-m^2) if n+m odd else 0 (boundary terms vanish with e_n).
    n = np.arange(1, n_modes + 1)[:, None]
    m = np.arange(1, grid_size + 1)[None, :]
    odd = (n + m) % 2 == 1
    D = np.where(odd, 4.0 * n * m / np.where(odd, n * n - m * m, 1), 0.0)
    # fold in the full-resolution sine analysis so F = phi @ B
    B = synthesis_matrix(grid_size, grid_size).T @ D.T / (grid_size + 1)
    B.setflags(write=False)
    return B


def apply_F(x, f: ScalarLipschitz, grid_size: int):
    """Sine coefficients of ``d/dxi f(x(xi))`` (an element of ``\\dot H^{-1}``).

    ``f(x) - f(0)`` vanishes at both ends, so it is analysed into all ``M``
    discrete sine modes and differentiated with the exact sine-to-sine weak
    derivative; the constant ``f(0)`` has zero divergence.
    """
    c = x.coeffs if isinstance(x, SpectralVector) else np.asarray(x, dtype=float)
    N = c.shape[-1]
    _check_aliasing(N, grid_size, "apply_F")
    if f.constant_value is not None:
        out = np.zeros_like(c)
    else:
        u = to_physical(c, grid_size)
        phi = f(u) - f(np.zeros(1))[0]
        out = phi @ _divergence_matrix(N, grid_size)
    return SpectralVector(out) if isinstance(x, SpectralVector) else out


def apply_G_increment(x, g: ScalarLipschitz, dW_row, spec=None, grid_size: int | None = None):
    """Sine coefficients of ``g(x(xi)) * sum_n dW_n h_n(xi)``.

    ``dW_row`` already carries the ``sqrt(q_n)`` weights (see
    :class:`~spdelab.noise.WienerIncrements`).  Leading batch axes of ``x``
    and ``dW_row`` broadcast.
    """
    c = x.coeffs if isinstance(x, SpectralVector) else np.asarray(x, dtype=float)
    dw = np.asarray(dW_row, dtype=float)
    N = c.shape[-1]
    if dw.shape[-1] != N:
        raise ValueError(f"dW_row has {dw.shape[-1]} modes, state has {N}")
    if spec is not None and spec.n_modes != N:
        raise ValueError("noise spec and state disagree on n_modes")
    if grid_size is None:
        grid_size = 2 * N
    _check_aliasing(N, grid_size, "apply_G_increment")
    if g.constant_value is not None:
        out = g.constant_value * np.broadcast_to(dw, np.broadcast_shapes(c.shape, dw.shape))
    else:
        u = to_physical(c, grid_size)
        noise = to_physical(dw, grid_size)
        out = to_spectral(g(u) * noise, N)
    out = np.array(out, dtype=float)
    return SpectralVector(out) if isinstance(x, SpectralVector) else out


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class PowerKernel:
    """``K(t) = coef * t^-exponent``."""

    coef: float = 1.0
    exponent: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.coef * t ** (-self.exponent)

    def antiderivative(self, x):
        """``int_0^x K``; finite for ``exponent < 1``."""
        if self.exponent >= 1:
            raise ValueError("t^-a is not integrable at 0 for a >= 1")
        x = np.asarray(x, dtype=float)
        return self.coef * x ** (1 - self.exponent) / (1 - self.exponent)


@dataclass(frozen=True)
class WhiteNoiseKernel:
    """``K_G(t) = (sum_n exp(-2 lambda_n t))^(1/2)`` for ``d = 1``.

    With ``n_modes=None`` the full series is evaluated: a truncated direct
    sum for ``t >= 0.05`` and its Jacobi theta-transform otherwise; both are
    cut where the next term is below ``exp(-40)`` of the leading one.
    ``n_modes`` restricts to the resolved modes instead.
    """

    n_modes: int | None = None

    def squared(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        if self.n_modes is not None:
            lam = eigenvalues(self.n_modes)
            flat = t.reshape(-1)
            res = np.empty_like(flat)
            for i0 in range(0, flat.size, 4096):
                blk = flat[i0:i0 + 4096]
                res[i0:i0 + 4096] = np.exp(-2.0 * np.outer(blk, lam)).sum(axis=1)
            return res.reshape(t.shape)
        big = t >= 0.05
        if np.any(big):
            tb = t[big]
            n_max = int(math.ceil(math.sqrt(40.0 / (2 * math.pi**2 * tb.min())))) + 1
            n = np.arange(1, n_max + 1)
            out[big] = np.exp(-2.0 * np.pi**2 * np.multiply.outer(tb, n**2)).sum(axis=-1)
        small = ~big
        if np.any(small):
            ts = t[small]
            k_max = int(math.ceil(math.sqrt(80.0 * ts.max()))) + 1
            k = np.arange(1, k_max + 1)
            dual = 1.0 + 2.0 * np.exp(-np.multiply.outer(1.0 / (2.0 * ts), k**2)).sum(axis=-1)
            out[small] = 0.5 * (dual / np.sqrt(2 * np.pi * ts) - 1.0)
        return out

    def __call__(self, t):
        shape = np.shape(t)
        return np.sqrt(np.maximum(self.squared(t), 0.0)).reshape(shape)


class Regime(str, enum.Enum):
    WHITE_D1 = "white_d1"
    COLORED_Q0 = "colored_q0"
    COLORED_QEPS = "colored_qeps"


@dataclass(frozen=True)
class KernelFamily:
    K_F: object
    K_G: object
    K_F_gamma: object
    K_G_gamma: object
    gamma: float
    regime: Regime


def builtin_kernels(regime, gamma: float = 0.0, *, eps: float | None = None, q_eps: float = 1.0) -> KernelFamily:
    """Kernel bounds for the example regimes with unit constants.

    * ``white_d1``: space-time white noise, ``gamma = 0`` only.
    * ``colored_q0``: ``Q_0 < inf``; ``K_G = 1``, ``K_{G,gamma} = t^{-gamma/2}``,
      ``gamma < 1``.
    * ``colored_qeps``: ``Q_eps < inf``; ``K_G = K_{G,gamma} = q_eps``,
      ``gamma < eps`` and ``gamma != 1/2``.

    ``K_F = K_{F,gamma} = t^{-1/2}`` in every regime.
    """
    regime = Regime(regime)
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    K_F = PowerKernel(1.0, 0.5)
    if regime is Regime.WHITE_D1:
        if gamma != 0:
            raise ValueError("white noise in d=1 only supports gamma = 0")
        K_G = WhiteNoiseKernel()
        return KernelFamily(K_F, K_G, K_F, K_G, 0.0, regime)
    if regime is Regime.COLORED_Q0:
        if gamma >= 1:
            raise ValueError("colored Q_0 regime needs gamma < 1")
        return KernelFamily(K_F, PowerKernel(1.0, 0.0), K_F, PowerKernel(1.0, gamma / 2), gamma, regime)
    if eps is None or not 0 < eps <= 1:
        raise ValueError("colored Q_eps regime needs eps in (0, 1]")
    if not gamma < eps:
        raise ValueError(f"colored Q_eps regime needs gamma < eps (gamma={gamma}, eps={eps})")
    if gamma == 0.5:
        raise ValueError("gamma = 1/2 is excluded: the Sobolev-Slobodeckij characterisation fails there")
    K_G = PowerKernel(float(q_eps), 0.0)
    return KernelFamily(K_F, K_G, K_F, K_G, gamma, regime)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    convergent: bool


@dataclass(frozen=True)
class AssumptionReport:
    KF0: IntegralResult
    KG0: IntegralResult
    KFgamma: IntegralResult
    KGgamma: IntegralResult
    KFgammaAlpha: IntegralResult
    KGgammaAlpha: IntegralResult
    alpha: float
    T: float

    def rows(self):
        for name in ("KF0", "KG0", "KFgamma", "KGgamma", "KFgammaAlpha", "KGgammaAlpha"):
            r = getattr(self, name)
            yield name, r.value, r.convergent

    @property
    def all_convergent(self) -> bool:
        return all(c for _, _, c in self.rows())


def _drift_type(K, T, weight=0.0):
    r = quadrature.dyadic_integral(lambda t: t ** (-weight) * quadrature.evaluate(K, t), T)
    return IntegralResult(r.value, r.convergent)


def _diffusion_type(K, T, weight=0.0):
    r = quadrature.dyadic_integral(lambda t: t ** (-2 * weight) * quadrature.evaluate(K, t) ** 2, T)
    return IntegralResult(math.sqrt(r.value), r.convergent)


def verify_assumptions(kernels: KernelFamily, alpha: float, T: float) -> AssumptionReport:
    """Evaluate the six kernel integrals on ``(0, T]`` with singular quadrature.

    Drift-type entries are ``int K`` (weighted by ``t^-alpha`` for the
    alpha entry); diffusion-type entries are ``(int K^2)^(1/2)`` (weighted
    by ``t^-2alpha``).  Divergent integrals report their finite partial sum.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not T > 0:
        raise ValueError("T must be > 0")
    return AssumptionReport(
        KF0=_drift_type(kernels.K_F, T),
        KG0=_diffusion_type(kernels.K_G, T),
        KFgamma=_drift_type(kernels.K_F_gamma, T),
        KGgamma=_diffusion_type(kernels.K_G_gamma, T),
        KFgammaAlpha=_drift_type(kernels.K_F_gamma, T, alpha),
        KGgammaAlpha=_diffusion_type(kernels.K_G_gamma, T, alpha),
        alpha=alpha,
        T=T,
    )
