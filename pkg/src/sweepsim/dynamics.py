"""Perturbation fields f(t, x, eps): sampled Lipschitz and monotonicity
constants, Bohr means of time-dependent fields, and integral-continuity
deviations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError

Field = Callable[[float, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class Perturbation:
    """Right-hand side ``f(t, x, eps)`` with its reference parameter ``eps0``.

    ``freq_hint(eps)`` returns the largest angular frequency of the field in
    ``t`` at parameter ``eps``; it drives the step limits of quadrature and
    time stepping for high-frequency forcing.
    """

    eval: Field
    eps0: float = 0.0
    declared_L_f: Optional[float] = None
    declared_alpha: Optional[float] = None
    dim: int = 1
    freq_hint: Optional[Callable[[float], float]] = None

    def __call__(self, t: float, x, eps: float) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.eval(t, x, eps), dtype=float))

    def max_step(self, eps: float) -> float:
        """Largest admissible time step: one twentieth of 1/frequency."""
        if self.freq_hint is None:
            return np.inf
        w = self.freq_hint(eps)
        return np.inf if w <= 0 else 1.0 / (20.0 * w)


def _finite(v, what="field value"):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"non-finite {what}")
    return v


def _ball_samples(rng, n, dim, radius):
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)
    return g * r


def estimate_monotonicity(f: Perturbation, eps: float, domain_radius: float,
                          t_window, samples: int = 10_000,
                          rng: np.random.Generator | None = None) -> float:
    """Smallest sampled ``<f(t,x1)-f(t,x2), x1-x2> / |x1-x2|^2``.

    The result is an upper estimate of the true monotonicity constant on the
    sampled domain; positive values are evidence of monotonicity.
    """
    if samples < 1000:
        raise ValueError("samples must be at least 1000")
    if domain_radius <= 0:
        raise ValueError("domain_radius must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    t0, t1 = t_window
    ts = rng.uniform(t0, t1, samples)
    X1 = _ball_samples(rng, samples, f.dim, domain_radius)
    X2 = _ball_samples(rng, samples, f.dim, domain_radius)
    best = np.inf
    for t, x1, x2 in zip(ts, X1, X2):
        d = x1 - x2
        dd = d @ d
        if dd == 0.0:
            continue
        df = _finite(f(t, x1, eps)) - _finite(f(t, x2, eps))
        best = min(best, float(df @ d) / dd)
    return best


def estimate_lipschitz(f: Perturbation, eps: float, domain_radius: float, t_window,
                       samples: int = 10_000,
                       rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Sampled difference-quotient maxima ``(L_x, L_t)``.

    Half of the state pairs are far apart and half are close; time pairs
    are separated by a step small against the field's frequency hint.
    Both values are lower bounds on the true constants.
    """
    if samples < 1000:
        raise ValueError("samples must be at least 1000")
    rng = rng if rng is not None else np.random.default_rng(0)
    t0, t1 = t_window
    ts = rng.uniform(t0, t1, samples)
    X1 = _ball_samples(rng, samples, f.dim, domain_radius)
    X2 = _ball_samples(rng, samples, f.dim, domain_radius)
    half = samples // 2
    X2[half:] = X1[half:] + 1e-4 * domain_radius * _ball_samples(rng, samples - half, f.dim, 1.0)
    w = f.freq_hint(eps) if f.freq_hint is not None else 1.0
    dt = 1e-3 / max(1.0, w, 1.0 / max(t1 - t0, 1e-300))
    L_x = 0.0
    L_t = 0.0
    for t, x1, x2 in zip(ts, X1, X2):
        fa = _finite(f(t, x1, eps))
        d = np.linalg.norm(x1 - x2)
        if d > 0:
            L_x = max(L_x, float(np.linalg.norm(fa - _finite(f(t, x2, eps)))) / d)
        L_t = max(L_t, float(np.linalg.norm(_finite(f(t + dt, x1, eps)) - fa)) / dt)
    return L_x, L_t


def _samples_along(g, ts, x):
    """Evaluate ``g(t, x)`` on a time grid; one vectorized call when ``g``
    broadcasts over ``t``, a loop otherwise."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    try:
        out = np.asarray(g(ts, x), dtype=float)
        if out.ndim == 1 and x.shape[0] == 1 and out.shape[0] == ts.shape[0]:
            return _finite(out[:, None], "integrand")
        if out.shape == (ts.shape[0], x.shape[0]):
            return _finite(out, "integrand")
    except (ValueError, TypeError):
        pass
    return _finite(np.array([np.atleast_1d(g(t, x)) for t in ts], dtype=float), "integrand")


def trapezoid_mean(values: np.ndarray, dt: float, T: float) -> np.ndarray:
    return np.trapezoid(values, dx=dt, axis=0) / T


@dataclass(frozen=True)
class BohrMean:
    value: np.ndarray
    tail: float  # |mean over [0,T] - mean over [0,T/2]|


def bohr_mean(g: Callable, x, T: float = 1e3, steps: int = 100_000) -> BohrMean:
    """Composite-trapezoid estimate of ``(1/T) int_0^T g(tau, x) dtau``."""
    if T <= 0:
        raise ValueError("T must be positive")
    if steps < 1000:
        raise ValueError("steps must be at least 1000")
    steps += steps % 2
    ts = np.linspace(0.0, T, steps + 1)
    vals = _samples_along(g, ts, x)
    dt = T / steps
    full = trapezoid_mean(vals, dt, T)
    half = trapezoid_mean(vals[: steps // 2 + 1], dt, T / 2)
    return BohrMean(full, float(np.linalg.norm(full - half)))


@dataclass
class AveragedField:
    """Pointwise Bohr mean ``g0(x)`` with an exact-argument cache."""

    g: Callable
    horizon_T: float
    sample_steps: int
    _cache: dict = field(default_factory=dict, repr=False)

    def g0(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = bohr_mean(self.g, x, self.horizon_T, self.sample_steps).value
            self._cache[key] = hit
        return hit.copy()

    __call__ = g0


def averaged_field(g: Callable, T: float = 1e3, steps: int = 100_000) -> AveragedField:
    if T <= 0 or steps < 1000:
        raise ValueError("need T > 0 and steps >= 1000")
    return AveragedField(g, T, steps)


def integral_deviation(f: Perturbation, eps: float, x, tau: float, t: float,
                       steps: int = 10_000) -> float:
    """``| int_tau^t f(s,x,eps) - f(s,x,eps0) ds |`` by composite trapezoid.

    The step count is raised automatically so that the quadrature step
    resolves the field's frequency hint at ``eps``.
    """
    if not t > tau:
        raise ValueError("need t > tau")
    if steps < 1000:
        raise ValueError("steps must be at least 1000")
    if eps == f.eps0:
        return 0.0
    h_max = f.max_step(eps)
    if np.isfinite(h_max):
        steps = max(steps, int(np.ceil((t - tau) / h_max)))
    ts = np.linspace(tau, t, steps + 1)
    diff = (_samples_along(lambda s, y: f.eval(s, y, eps), ts, x)
            - _samples_along(lambda s, y: f.eval(s, y, f.eps0), ts, x))
    return float(np.linalg.norm(np.trapezoid(diff, ts, axis=0)))
