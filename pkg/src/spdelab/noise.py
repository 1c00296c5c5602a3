"""Q-Wiener increments in the sine basis and summability diagnostics for Q.

The covariance operator is diagonal in the PDE eigenbasis, ``h_n = e_n``, so

.. math:: W(t) = \\sum_n \\sqrt{q_n}\\, e_n\\, \\beta_n(t)

with independent scalar Brownian motions ``beta_n``.  Increments are drawn
from a counter-based generator keyed on ``(seed, path_index, stream)``, so a
path can be regenerated in isolation regardless of execution order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

# stream tags keep the increment draws and the exact-OU draws of the same
# (seed, path) statistically independent
STREAM_INCREMENTS = 0
STREAM_EXACT_OU = 1


class NoiseKind(str, enum.Enum):
    WHITE = "white"
    TRACE_CLASS = "trace_class"
    HOLDER_EIGEN = "holder_eigen"


@dataclass(frozen=True)
class NoiseSpec:
    """Eigenvalues ``q_n`` of Q (eigenfunctions fixed to the sine basis)."""

    q: np.ndarray
    kind: NoiseKind = NoiseKind.TRACE_CLASS
    eps: float | None = None

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("q must be a non-empty 1-d array")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise ValueError("q_n must be finite and >= 0")
        kind = NoiseKind(self.kind)
        if kind is NoiseKind.WHITE and not np.all(q == 1.0):
            raise ValueError("white noise requires q_n = 1 for all n")
        if kind is NoiseKind.HOLDER_EIGEN:
            if self.eps is None or not 0 < self.eps <= 1:
                raise ValueError(f"Holder-eigenfunction noise needs eps in (0, 1], got {self.eps}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "kind", kind)

    @property
    def n_modes(self) -> int:
        return self.q.size

    @property
    def sqrt_q(self) -> np.ndarray:
        return np.sqrt(self.q)

    @classmethod
    def white(cls, n_modes: int) -> "NoiseSpec":
        return cls(np.ones(n_modes), NoiseKind.WHITE)

    @classmethod
    def power_law(cls, n_modes: int, decay: float, eps: float | None = None) -> "NoiseSpec":
        """``q_n = n^-decay``; tagged Holder-eigen when ``eps`` is given."""
        q = np.arange(1, n_modes + 1, dtype=float) ** (-decay)
        kind = NoiseKind.HOLDER_EIGEN if eps is not None else NoiseKind.TRACE_CLASS
        return cls(q, kind, eps)


@dataclass(frozen=True)
class WienerIncrements:
    """``dW[k, n] = sqrt(q_n) (beta_n(t_{k+1}) - beta_n(t_k))``."""

    dW: np.ndarray
    dt: float
    seed: int | None = None
    path_index: int = 0
    lineage: tuple = field(default=())

    def __post_init__(self):
        a = np.array(self.dW, dtype=float)
        if a.ndim != 2:
            raise ValueError("dW must be (n_steps, n_modes)")
        a.setflags(write=False)
        object.__setattr__(self, "dW", a)

    @property
    def n_steps(self) -> int:
        return self.dW.shape[0]

    @property
    def n_modes(self) -> int:
        return self.dW.shape[1]


def path_generator(seed: int, path_index: int = 0, stream: int = STREAM_INCREMENTS) -> np.random.Generator:
    """Philox generator keyed on ``(seed, path_index, stream)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(path_index), int(stream)])
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_increments(spec: NoiseSpec, n_steps: int, dt: float, seed: int, path_index: int = 0) -> WienerIncrements:
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    rng = path_generator(seed, path_index, STREAM_INCREMENTS)
    z = rng.standard_normal((n_steps, spec.n_modes))
    dW = z * (spec.sqrt_q * math.sqrt(dt))
    return WienerIncrements(dW, dt, seed, path_index, lineage=(int(seed), int(path_index), STREAM_INCREMENTS))


@dataclass(frozen=True)
class SeriesDiagnostic:
    """Partial sum of a nonnegative series plus a finite-N divergence proxy."""

    value: float
    divergent: bool
    tail_slope: float
    last_term: float
    terms: np.ndarray = field(repr=False)


def series_diagnostic(terms, margin: float = 0.05) -> SeriesDiagnostic:
    """Flag divergence from the log-log slope of the summands.

    The slope of ``log(term_n)`` against ``log(n)`` is fitted over the last
    decade of indices; the series is flagged divergent when the slope is
    above ``-1 - margin``, i.e. not safely steeper than the harmonic series.
    Summands that vanish identically in the tail count as convergent.
    """
    terms = np.asarray(terms, dtype=float)
    N = terms.size
    value = float(terms.sum())
    lo = max(1, N // 10)
    n = np.arange(lo, N + 1)
    tail = terms[lo - 1:]
    pos = tail > 0
    if pos.sum() < 2:
        slope = -math.inf if not np.any(tail > 0) else math.nan
        divergent = False
    else:
        slope = float(np.polyfit(np.log(n[pos]), np.log(tail[pos]), 1)[0])
        divergent = slope > -1.0 - margin
    return SeriesDiagnostic(value, bool(divergent), slope, float(terms[-1]), terms)


SUP_NORM_SQ = 2.0  # ||e_n||_inf^2 for the sine basis


def q0_diagnostic(spec: NoiseSpec) -> SeriesDiagnostic:
    """Partial sums of ``Q_0 = sum_n q_n ||h_n||_inf^2``."""
    return series_diagnostic(SUP_NORM_SQ * spec.q)


def q_eps_diagnostic(spec: NoiseSpec, eps: float) -> SeriesDiagnostic:
    """Partial sums of ``Q_eps = sum_n q_n ||h_n||_{C^eps}^2``.

    Uses ``||e_n||_{C^eps} ~ sqrt(2) (1 + (n pi)^eps)`` (sup part plus the
    Holder seminorm of ``sin(n pi xi)``).
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    n = np.arange(1, spec.n_modes + 1)
    return series_diagnostic(SUP_NORM_SQ * spec.q * (1.0 + (n * np.pi) ** eps) ** 2)
