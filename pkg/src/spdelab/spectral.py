"""Dirichlet Laplacian on (0, 1) in its sine eigenbasis.

Everything here is exact per mode: the operator ``A = d^2/dxi^2`` with zero
boundary values has eigenpairs

.. math:: -A e_n = \\lambda_n e_n, \\quad \\lambda_n = (n\\pi)^2,
          \\quad e_n(\\xi) = \\sqrt{2}\\sin(n\\pi\\xi),

so the semigroup, fractional powers and the ``\\dot H^\\gamma`` norms are
coefficient-wise multiplications.  Arrays whose *last* axis is the mode
axis are accepted everywhere, which lets the solvers push whole ensembles
(paths x times x modes) through the same functions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class AliasingWarning(UserWarning):
    """Emitted when a physical grid is too coarse for the requested modes."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralVector:
    """Coefficients ``v_n`` of ``sum_n v_n e_n`` for ``n = 1..n_modes``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _readonly(self.coeffs)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-d array")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @classmethod
    def zeros(cls, n_modes: int) -> "SpectralVector":
        return cls(np.zeros(n_modes))

    @classmethod
    def unit(cls, n: int, n_modes: int, amplitude: float = 1.0) -> "SpectralVector":
        """``amplitude * e_n`` truncated to ``n_modes``."""
        if not 1 <= n <= n_modes:
            raise ValueError(f"mode {n} outside 1..{n_modes}")
        c = np.zeros(n_modes)
        c[n - 1] = amplitude
        return cls(c)

    def __len__(self):
        return self.n_modes


@dataclass(frozen=True)
class PhysicalField:
    """Values at the interior points ``xi_j = j/(M+1)``, ``j = 1..M``.

    Boundary values are zero and are not stored.
    """

    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        object.__setattr__(self, "values", v)

    @property
    def grid_size(self) -> int:
        return self.values.size

    @property
    def points(self) -> np.ndarray:
        return grid_points(self.grid_size)


@dataclass(frozen=True)
class SineMode:
    """The eigenfunction ``e_n(xi) = sqrt(2) sin(n pi xi)``."""

    n: int

    def __call__(self, xi):
        return math.sqrt(2.0) * np.sin(self.n * np.pi * np.asarray(xi, dtype=float))

    def __str__(self):
        return f"sqrt(2)*sin({self.n}*pi*xi)"


def eigenvalue(n: int) -> float:
    if n < 1:
        raise ValueError(f"eigen-index must be >= 1, got {n}")
    return (n * math.pi) ** 2


def eigenpair(n: int) -> tuple[float, SineMode]:
    """Return ``(lambda_n, e_n)`` for ``n >= 1``."""
    return eigenvalue(n), SineMode(n)


@lru_cache(maxsize=64)
def _eigenvalues(n_modes: int) -> np.ndarray:
    lam = (np.pi * np.arange(1, n_modes + 1)) ** 2
    lam.setflags(write=False)
    return lam


def eigenvalues(n_modes: int) -> np.ndarray:
    """``lambda_1..lambda_N`` as a read-only array."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return _eigenvalues(int(n_modes))


def _coeffs(v) -> np.ndarray:
    if isinstance(v, SpectralVector):
        return v.coeffs
    return np.asarray(v, dtype=float)


def _wrap(like, out: np.ndarray):
    return SpectralVector(out) if isinstance(like, SpectralVector) else out


def sobolev_norm(v, gamma: float, *, return_tail: bool = False):
    """``||v||_gamma = (sum_n lambda_n^gamma v_n^2)^(1/2)``.

    With ``return_tail=True`` also returns the squared contribution of the
    last resolved mode, the truncation diagnostic for the mode sum.
    Batched input reduces over the last axis.
    """
    c = _coeffs(v)
    w = eigenvalues(c.shape[-1]) ** gamma
    terms = w * c**2
    norm = np.sqrt(terms.sum(axis=-1))
    if np.ndim(norm) == 0:
        norm = float(norm)
    if return_tail:
        return norm, terms[..., -1]
    return norm


def apply_semigroup(v, t: float):
    """``S(t) v``: multiply mode ``n`` by ``exp(-lambda_n t)``."""
    if t < 0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    c = _coeffs(v)
    return _wrap(v, c * np.exp(-eigenvalues(c.shape[-1]) * t))


def apply_fractional_power(v, mu: float):
    """``(-A)^mu v``: multiply mode ``n`` by ``lambda_n^mu``."""
    c = _coeffs(v)
    return _wrap(v, c * eigenvalues(c.shape[-1]) ** mu)


def smoothing_constant(mu: float) -> float:
    """Sharp ``C`` in ``||(-A)^mu S(t)|| <= C t^-mu``; ``sup_x x^mu e^-x = (mu/e)^mu``."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if mu == 0:
        return 1.0
    return (mu / math.e) ** mu


def grid_points(grid_size: int) -> np.ndarray:
    return np.arange(1, grid_size + 1) / (grid_size + 1)


@lru_cache(maxsize=32)
def _synthesis_matrix(n_modes: int, grid_size: int) -> np.ndarray:
    # E[n, j] = e_{n+1}(xi_{j+1})
    n = np.arange(1, n_modes + 1)[:, None]
    j = np.arange(1, grid_size + 1)[None, :]
    E = math.sqrt(2.0) * np.sin(np.pi * n * j / (grid_size + 1))
    E.setflags(write=False)
    return E


def synthesis_matrix(n_modes: int, grid_size: int) -> np.ndarray:
    """Matrix ``E`` with ``values = coeffs @ E``; analysis is ``E.T / (M+1)``."""
    return _synthesis_matrix(int(n_modes), int(grid_size))


def to_physical(v, grid_size: int):
    """Evaluate ``sum_n v_n e_n`` on the interior grid.

    Returns a :class:`PhysicalField` for a :class:`SpectralVector` input and
    a raw array (last axis = grid) otherwise.
    """
    c = _coeffs(v)
    vals = c @ synthesis_matrix(c.shape[-1], grid_size)
    return PhysicalField(vals) if isinstance(v, SpectralVector) else vals


def to_spectral(field, n_modes: int):
    """Discrete sine analysis with weight ``1/(M+1)``.

    For ``n_modes <= M`` this inverts :func:`to_physical` exactly on the
    first ``n_modes`` modes.  ``n_modes > M`` aliases and warns.
    """
    vals = field.values if isinstance(field, PhysicalField) else np.asarray(field, dtype=float)
    M = vals.shape[-1]
    if n_modes > M:
        warnings.warn(
            f"to_spectral with n_modes={n_modes} > grid_size={M}: modes above M alias",
            AliasingWarning,
            stacklevel=2,
        )
    out = vals @ synthesis_matrix(n_modes, M).T / (M + 1)
    return SpectralVector(out) if isinstance(field, PhysicalField) else out
