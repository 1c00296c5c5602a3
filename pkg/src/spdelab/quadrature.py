"""Graded dyadic quadrature for integrands with an integrable blow-up at 0."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

N_PANELS = 60
ORDER = 24
RATIO_WINDOW = 10
DIVERGENCE_RATIO = 0.999


@lru_cache(maxsize=8)
def _gauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


def evaluate(func, t: np.ndarray) -> np.ndarray:
    """Call ``func`` on an array, broadcasting scalar-valued callables."""
    return np.broadcast_to(np.asarray(func(t), dtype=float), np.shape(t))


@dataclass(frozen=True)
class PanelIntegral:
    value: float
    convergent: bool
    ratio: float
    tail: float
    panels: np.ndarray = field(repr=False)


def dyadic_integral(
    func,
    T: float,
    *,
    n_panels: int = N_PANELS,
    order: int = ORDER,
    refine: int = 0,
    finite_above: float | None = None,
) -> PanelIntegral:
    """Integrate ``func`` over ``(0, T]`` on panels ``[T 2^-(k+1), T 2^-k]``.

    Contributions of successive panels toward 0 must shrink geometrically;
    their mean ratio over the last ``RATIO_WINDOW`` panels decides
    convergence (ratio ``>= 0.999`` is divergent) and, when convergent,
    supplies the geometric tail for ``(0, T 2^-n_panels)``.  ``refine``
    splits every panel into ``2**refine`` equal pieces.
    ``finite_above`` raises on non-finite values at ``t >= finite_above``.
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    x, w = _gauss(order)
    k = np.arange(n_panels)
    a = T * 2.0 ** (-(k + 1))
    width = a  # panel [a, 2a]
    sub = 2**refine
    # nodes: (panel, sub-panel, gauss)
    offs = (np.arange(sub)[:, None] + x[None, :]) / sub
    t = a[:, None, None] + width[:, None, None] * offs[None, :, :]
    vals = evaluate(func, t)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        cutoff = T * 2.0**-30 if finite_above is None else finite_above
        if np.any(bad & (t >= cutoff)):
            raise ValueError("integrand is not finite away from 0")
        panels = np.where(np.any(bad, axis=(1, 2)), np.inf, 0.0)
        good = ~np.any(bad, axis=(1, 2))
        panels[good] = (vals[good] * w).sum(axis=(1, 2)) * width[good] / sub
        return PanelIntegral(float(np.sum(panels[np.isfinite(panels)])), False, math.inf, math.inf, panels)
    panels = (vals * w).sum(axis=(1, 2)) * width / sub
    if np.any(panels < 0):
        raise ValueError("integrand must be nonnegative")
    total = float(panels.sum())
    last = panels[-RATIO_WINDOW - 1:]
    if np.all(last == 0):
        return PanelIntegral(total, True, 0.0, 0.0, panels)
    if np.any(last == 0):
        # panels vanish only partially near 0: treat as compactly supported away from 0
        ratio = 0.0
    else:
        ratio = float(np.exp(np.mean(np.log(last[1:] / last[:-1]))))
    if ratio >= DIVERGENCE_RATIO:
        return PanelIntegral(total, False, ratio, math.inf, panels)
    tail = float(panels[-1] * ratio / (1.0 - ratio))
    return PanelIntegral(total + tail, True, ratio, tail, panels)


def gauss_panels(func, edges: np.ndarray, order: int = ORDER) -> np.ndarray:
    """Integral of ``func`` over each ``[edges[i], edges[i+1]]`` (regular integrand)."""
    x, w = _gauss(order)
    a = edges[:-1, None]
    h = np.diff(edges)[:, None]
    vals = evaluate(func, a + h * x[None, :])
    return (vals * w).sum(axis=1) * h[:, 0]
