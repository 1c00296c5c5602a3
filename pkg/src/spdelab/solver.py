"""Mild-solution trajectories of the stochastic heat equation in the sine basis.

    dX = (A X + d/dxi f(X)) dt + g(X) dW,   X(0) = X0,

on (0, 1) with Dirichlet conditions.  Provides exponential Euler, the
Picard iteration of the mild-solution map, exact OU sampling, and the
factorization operators ``G_alpha`` / ``R_alpha``.  Every routine accepts a
leading path axis so that ensembles run as one vectorised loop over time.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from .coefficients import ScalarLipschitz, apply_F, apply_G_increment
from .noise import STREAM_EXACT_OU, NoiseSpec, WienerIncrements, path_generator, sample_increments
from .spectral import SpectralVector, eigenvalues, sobolev_norm


class BlowUpError(FloatingPointError):
    def __init__(self, step: int, path_index: int | None = None):
        self.step = step
        self.path_index = path_index
        super().__init__(f"non-finite state at step {step}" + ("" if path_index is None else f" (path {path_index})"))


class PicardNonConvergence(RuntimeError):
    def __init__(self, residuals):
        self.residuals = list(residuals)
        super().__init__(f"Picard iteration did not converge; last residual {self.residuals[-1]:.3e}")


@dataclass(frozen=True)
class ProblemSpec:
    n_modes: int
    grid_size: int
    T: float
    n_steps: int
    x0: SpectralVector
    f: ScalarLipschitz
    g: ScalarLipschitz
    noise: NoiseSpec
    beta_claim: float = 0.0
    gamma_claim: float = 0.0
    alpha_claim: float = 0.25

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.grid_size < 2 * self.n_modes:
            raise ValueError(f"grid_size={self.grid_size} must be >= 2*n_modes={2 * self.n_modes}")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        x0 = self.x0 if isinstance(self.x0, SpectralVector) else SpectralVector(self.x0)
        object.__setattr__(self, "x0", x0)
        if x0.n_modes != self.n_modes or self.noise.n_modes != self.n_modes:
            raise ValueError("x0, noise and n_modes disagree")
        if not math.isfinite(sobolev_norm(x0, self.beta_claim)):
            raise ValueError("x0 has infinite norm at beta_claim")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    @property
    def lam(self) -> np.ndarray:
        return eigenvalues(self.n_modes)

    @property
    def is_ou(self) -> bool:
        return self.f.is_zero and self.g.constant_value == 1.0

    def increments(self, seed: int, path_index: int = 0) -> WienerIncrements:
        return sample_increments(self.noise, self.n_steps, self.dt, seed, path_index)


@dataclass(frozen=True)
class Trajectory:
    """One sample path on the uniform grid; ``states[k]`` is ``X(t_k)``."""

    times: np.ndarray
    states: np.ndarray
    scheme: str
    lineage: tuple = ()
    iterations: int | None = None
    residuals: tuple = field(default=(), repr=False)

    def __post_init__(self):
        s = np.array(self.states, dtype=float)
        if s.ndim != 2 or s.shape[0] != len(self.times):
            raise ValueError("states must be (n_times, n_modes)")
        if not np.all(np.isfinite(s)):
            raise ValueError("trajectory contains non-finite states")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))

    @property
    def n_modes(self) -> int:
        return self.states.shape[1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def state(self, k: int) -> SpectralVector:
        return SpectralVector(self.states[k])


def _as_batch(dW):
    a = dW.dW if isinstance(dW, WienerIncrements) else np.asarray(dW, dtype=float)
    return (a[None], True) if a.ndim == 2 else (a, False)


def _check_shape(p: ProblemSpec, dW: np.ndarray):
    if dW.shape[-2:] != (p.n_steps, p.n_modes):
        raise ValueError(f"increments have shape {dW.shape[-2:]}, problem needs {(p.n_steps, p.n_modes)}")


def _drift(p, X):
    return apply_F(X, p.f, p.grid_size)


def _noise(p, X, dW_k):
    return apply_G_increment(X, p.g, dW_k, grid_size=p.grid_size)


@dataclass(frozen=True)
class EnsembleResult:
    states: np.ndarray  # (paths, n_steps+1, N); aborted paths hold NaN after the blow-up
    blowup_step: np.ndarray  # -1 when the path stayed finite

    @property
    def aborted(self) -> np.ndarray:
        return self.blowup_step >= 0


def exp_euler_states(p: ProblemSpec, dW) -> EnsembleResult:
    """``X_{k+1} = S(dt)[X_k + dt F(X_k) + G(X_k) dW_k]`` for a batch of increment paths."""
    dW, _ = _as_batch(dW)
    _check_shape(p, dW)
    P = dW.shape[0]
    decay = np.exp(-p.lam * p.dt)
    out = np.empty((P, p.n_steps + 1, p.n_modes))
    X = np.broadcast_to(p.x0.coeffs, (P, p.n_modes)).copy()
    out[:, 0] = X
    blow = np.full(P, -1)
    alive = np.ones(P, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(p.n_steps):
            X = decay * (X + p.dt * _drift(p, X) + _noise(p, X, dW[:, k]))
            bad = alive & ~np.all(np.isfinite(X), axis=1)
            if np.any(bad):
                blow[bad] = k + 1
                alive &= ~bad
                X[bad] = 0.0
            out[:, k + 1] = X
    for i in np.flatnonzero(blow >= 0):
        out[i, blow[i]:] = np.nan
    return EnsembleResult(out, blow)


def solve_exp_euler(p: ProblemSpec, w: WienerIncrements) -> Trajectory:
    res = exp_euler_states(p, w.dW)
    if res.blowup_step[0] >= 0:
        raise BlowUpError(int(res.blowup_step[0]), w.path_index)
    return Trajectory(p.times, res.states[0], "exp_euler", w.lineage)


def _mild_map(p: ProblemSpec, X: np.ndarray, dW: np.ndarray, phi: np.ndarray, decay: np.ndarray) -> np.ndarray:
    # discrete M(X): drift with exact weights int_0^dt S(s) ds, noise by left-point rule
    P, n1, N = X.shape
    flat = X[:, :-1].reshape(-1, N)
    F = _drift(p, flat).reshape(P, n1 - 1, N)
    GdW = _noise(p, flat, dW.reshape(-1, N)).reshape(P, n1 - 1, N)
    inc = phi * F + decay * GdW
    Y = np.empty_like(X)
    Y[:, 0] = p.x0.coeffs
    for k in range(n1 - 1):
        Y[:, k + 1] = decay * Y[:, k] + inc[:, k]
    return Y


def picard_states(p: ProblemSpec, dW, max_iter: int = 100, tol: float = 1e-10, damping: float = 0.0):
    """Fixed point of the discrete mild map; returns ``(states, residual history)``.

    The residual is ``max_t ||X^{k+1}(t) - X^k(t)||`` (maximised over paths
    as well for a batch).  ``damping`` in ``[0, 1)`` mixes in the previous
    iterate.
    """
    if not 0 <= damping < 1:
        raise ValueError("damping must lie in [0, 1)")
    dW, single = _as_batch(dW)
    _check_shape(p, dW)
    lam = p.lam
    decay = np.exp(-lam * p.dt)
    phi = -np.expm1(-lam * p.dt) / lam
    t = p.times
    X = np.broadcast_to(p.x0.coeffs * np.exp(-np.outer(t, lam)), (dW.shape[0], t.size, p.n_modes)).copy()
    history = []
    for _ in range(max_iter):
        Y = _mild_map(p, X, dW, phi, decay)
        if damping:
            Y = (1 - damping) * Y + damping * X
        if not np.all(np.isfinite(Y)):
            history.append(math.inf)
            raise PicardNonConvergence(history)
        r = float(np.sqrt(((Y - X) ** 2).sum(axis=-1)).max())
        history.append(r)
        X = Y
        if r <= tol:
            return (X[0] if single else X), history
    raise PicardNonConvergence(history)


def picard_solve(p: ProblemSpec, w: WienerIncrements, max_iter: int = 100, tol: float = 1e-10, damping: float = 0.0) -> Trajectory:
    X, hist = picard_states(p, w.dW, max_iter, tol, damping)
    return Trajectory(p.times, X, f"picard({len(hist)})", w.lineage, len(hist), tuple(hist))


def _require_ou(p: ProblemSpec):
    if not p.is_ou:
        raise ValueError("exact OU sampling needs f = 0 and g = 1")


def exact_ou_states(p: ProblemSpec, seed: int, path_indices) -> np.ndarray:
    """Distributionally exact OU values on the grid, one row per path index."""
    _require_ou(p)
    lam = p.lam
    decay = np.exp(-lam * p.dt)
    sd = np.sqrt(p.noise.q * -np.expm1(-2 * lam * p.dt) / (2 * lam))
    idx = list(path_indices)
    out = np.empty((len(idx), p.n_steps + 1, p.n_modes))
    for i, k in enumerate(idx):
        z = path_generator(seed, k, STREAM_EXACT_OU).standard_normal((p.n_steps, p.n_modes)) * sd
        X = out[i]
        X[0] = p.x0.coeffs
        for s in range(p.n_steps):
            X[s + 1] = decay * X[s] + z[s]
    return out


def exact_ou(p: ProblemSpec, seed: int, path_index: int = 0) -> Trajectory:
    X = exact_ou_states(p, seed, [path_index])[0]
    return Trajectory(p.times, X, "exact_ou", (int(seed), int(path_index), STREAM_EXACT_OU))


def _diffusion_terms(p: ProblemSpec, dW: np.ndarray, states) -> np.ndarray:
    # G(X(t_j)) dW_j for j = 0..n_steps-1, batched
    if p.g.constant_value is not None:
        return p.g.constant_value * dW
    if states is None:
        raise ValueError("multiplicative noise needs the trajectory states")
    X = states.states if isinstance(states, Trajectory) else np.asarray(states, dtype=float)
    X = X[None] if X.ndim == 2 else X
    P, _, N = X.shape
    flat = X[:, :-1].reshape(-1, N)
    return _noise(p, flat, np.broadcast_to(dW, X[:, :-1].shape).reshape(-1, N)).reshape(P, -1, N)


def stochastic_convolution(p: ProblemSpec, w, traj=None) -> np.ndarray:
    """Direct ``S<>G(X)`` on the grid: ``Y_{k+1} = S(dt)(Y_k + G(X_k) dW_k)``."""
    dW, single = _as_batch(w)
    _check_shape(p, dW)
    b = _diffusion_terms(p, dW, traj)
    decay = np.exp(-p.lam * p.dt)
    Y = np.zeros((b.shape[0], p.n_steps + 1, p.n_modes))
    for k in range(p.n_steps):
        Y[:, k + 1] = decay * (Y[:, k] + b[:, k])
    return Y[0] if single else Y


def _power_exp_integral(nu: float, lam: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``int_a^b s^(nu-1) exp(-lam s) ds`` for ``nu > 0``, broadcasting ``a, b`` against ``lam``."""
    xa, xb = lam * a, lam * b
    scale = special.gamma(nu) * lam ** (-nu)
    lower = special.gammainc(nu, xb) - special.gammainc(nu, xa)
    upper = special.gammaincc(nu, xa) - special.gammaincc(nu, xb)
    return scale * np.where(xa < nu, lower, upper)


def _panel_moments(nu: float, lam: np.ndarray, n: int, dt: float):
    edges = dt * np.arange(n + 1)[:, None]
    return _power_exp_integral(nu, lam[None, :], edges[:-1], edges[1:])


def _causal_conv(kernel: np.ndarray, x: np.ndarray) -> np.ndarray:
    # out[..., i, :] = sum_{d=0}^{i} kernel[d, :] * x[..., i-d, :]
    n = x.shape[-2]
    full = signal.fftconvolve(x, np.broadcast_to(kernel, x.shape[:-2] + kernel.shape), mode="full", axes=-2)
    return full[..., :n, :]


def g_alpha_weights(lam: np.ndarray, alpha: float, n: int, dt: float) -> np.ndarray:
    """Panel means ``(1/dt) int_{(m-1)dt}^{m dt} s^-alpha e^{-lam s} ds``, ``m = 1..n``."""
    return _panel_moments(1.0 - alpha, lam, n, dt) / dt


def factorized_g_alpha(p: ProblemSpec, w, traj=None, alpha: float = 0.25) -> np.ndarray:
    """``G_alpha(t_i) = sum_{j<i} c_{i-j} G(X_j) dW_j`` with panel-exact singular weights."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    dW, single = _as_batch(w)
    _check_shape(p, dW)
    b = _diffusion_terms(p, dW, traj)
    c = g_alpha_weights(p.lam, alpha, p.n_steps, p.dt)
    out = np.zeros((b.shape[0], p.n_steps + 1, p.n_modes))
    out[:, 1:] = _causal_conv(c, b)
    return out[0] if single else out


def r_alpha_weights(lam: np.ndarray, alpha: float, n: int, dt: float):
    """Convolution weights of ``R_alpha`` for piecewise-linear input.

    Returns ``(w, A)`` with ``R f(t_i) = sum_{d<=i} w_d f_{i-d} - A_{i+1} f_0``.
    """
    I0 = _panel_moments(alpha, lam, n + 1, dt)
    I1 = _panel_moments(alpha + 1.0, lam, n + 1, dt)
    m = np.arange(1, n + 2)[:, None]
    B = I1 / dt - (m - 1) * I0  # weight on the far (older) endpoint
    A = I0 - B
    w = A.copy()
    w[1:] += B[:-1]
    return w[: n + 1], A


def r_alpha(f_traj, alpha: float, dt: float | None = None) -> np.ndarray:
    """``R_alpha f(t_i) = int_0^{t_i} (t_i-r)^(alpha-1) S(t_i-r) f(r) dr``.

    ``f`` is interpolated linearly between grid times and each panel is
    integrated exactly against the weight.  Time is the second-to-last axis.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if isinstance(f_traj, Trajectory):
        dt, f = f_traj.dt, f_traj.states
    else:
        f = np.asarray(f_traj, dtype=float)
        if dt is None:
            raise ValueError("dt is required for array input")
    n = f.shape[-2] - 1
    lam = eigenvalues(f.shape[-1])
    w, A = r_alpha_weights(lam, alpha, n, dt)
    out = _causal_conv(w, f)
    out -= A * f[..., :1, :]
    return out


def factorization_reconstruction(p: ProblemSpec, w, traj=None, alpha: float = 0.25) -> np.ndarray:
    """``sin(pi alpha)/pi * R_alpha G_alpha``, an estimate of ``S<>G(X)``."""
    G = factorized_g_alpha(p, w, traj, alpha)
    return math.sin(math.pi * alpha) / math.pi * r_alpha(G, alpha, p.dt)


def relative_grid_error(approx: np.ndarray, reference: np.ndarray) -> float:
    """``||approx - reference|| / ||reference||`` in the grid-L2 sense over all entries."""
    return float(np.sqrt(np.sum((approx - reference) ** 2) / np.sum(reference**2)))


def dump_trajectory(traj: Trajectory, directory, index: int) -> str:
    """Write ``path_{index}.csv`` with columns ``t,mode_1..mode_N``."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"path_{index}.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t"] + [f"mode_{n}" for n in range(1, traj.n_modes + 1)])
        for t, row in zip(traj.times, traj.states):
            wr.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
    return path
