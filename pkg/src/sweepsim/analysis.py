"""Numerical checks of contraction, almost periodicity, perturbation
response and averaging for computed sweeping-process trajectories."""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .convex_sets import MovingSet, hausdorff_distance
from .errors import NotMonotoneError
from .integrator import Scenario, Trajectory, bounded_solution, catch_up

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("SWEEPSIM_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- Gronwall

def gronwall_envelope(t: np.ndarray, a0: float, lam: float,
                      b: Callable | None = None) -> np.ndarray:
    """``e^{lam (t - t0)} a0 + int_t0^t e^{lam (t - s)} b(s) ds`` on the
    sample times (cumulative trapezoid on the samples)."""
    t = np.asarray(t, dtype=float)
    tau = t - t[0]
    env = np.exp(lam * tau) * a0
    if b is not None:
        bs = np.array([b(s) for s in t], dtype=float)
        g = np.exp(-lam * tau) * bs
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(tau))])
        env = env + np.exp(lam * tau) * cum
    return env


def gronwall_check(samples, lam: float, b: Callable | None = None,
                   slack: float = 1e-6) -> bool:
    """True iff every sample ``a(t)`` lies under the Gronwall envelope.

    The envelope is widened by ``slack * |envelope|``.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 3:
        raise ValueError("samples must be at least 3 (t, a) pairs")
    t, a = arr[:, 0], arr[:, 1]
    if np.any(np.diff(t) < 0):
        raise ValueError("samples must be sorted by time")
    env = gronwall_envelope(t, a[0], lam, b)
    return bool(np.all(a <= env + slack * np.abs(env)))


# ------------------------------------------------------- incremental decay

@dataclass
class StabilityReport:
    fitted_rate: Optional[float]  # per second; None when unreliable
    r_squared: Optional[float]
    gap_samples: list  # [(t, |x1(t) - x2(t)|)]
    gronwall_satisfied: bool
    reliable: bool = True
    alpha_declared: float = 0.0
    floor: float = 0.0


def _fit_log(t, g):
    y = np.log(g)
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), min(max(r2, 0.0), 1.0)


def incremental_decay(s: Scenario, x0_a, x0_b, alpha_declared: float,
                      slack: float = 0.05) -> StabilityReport:
    """Integrate two solutions and compare their gap with ``e^{-alpha t}``.

    The log-gap fit and the envelope check use samples from the start up
    to the first time the gap drops to ``10 h``.
    """
    ta, tb = _pmap(lambda x: catch_up(replace(s, x0=x)), [x0_a, x0_b])
    gaps = np.linalg.norm(ta.states - tb.states, axis=1)
    t = ta.times
    floor = 10 * s.h
    below = np.nonzero(gaps <= floor)[0]
    stop = below[0] if len(below) else len(gaps)
    samples = [(float(a), float(b)) for a, b in zip(t, gaps)]
    if stop < 3:
        return StabilityReport(None, None, samples, True, False, alpha_declared, floor)
    rate, r2 = _fit_log(t[:stop], gaps[:stop])
    sq = np.column_stack([t[:stop], gaps[:stop] ** 2])
    ok = gronwall_check(sq, -2.0 * alpha_declared, None, slack)
    return StabilityReport(rate, r2, samples, ok, True, alpha_declared, floor)


# --------------------------------------------------- almost-period search

@dataclass
class AlmostPeriodReport:
    epsilon_tol: float
    periods_found: list
    residual_samples: list  # [(s, residual)] on the scan grid
    residual: Callable[[float], float] = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"epsilon_tol": self.epsilon_tol,
                "periods_found": list(self.periods_found),
                "residual_samples": [list(p) for p in self.residual_samples],
                "residual_at_periods": [self.residual(s) for s in self.periods_found]}


def _golden_min(fn, a, b, iters=90):
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
        if b - a <= 4 * np.finfo(float).eps * max(1.0, abs(a)):
            break
    return (c, fc) if fc <= fd else (d, fd)


def _set_residual(ms: MovingSet, ts: np.ndarray):
    base = [ms(t) for t in ts]

    def r(s):
        return max(hausdorff_distance(ms(t + s), c) for t, c in zip(ts, base))
    return r


def _signal_residual(sig: Callable, ts: np.ndarray):
    base = np.asarray(sig(ts), dtype=float).reshape(len(ts), -1)

    def r(s):
        shifted = np.asarray(sig(ts + s), dtype=float).reshape(len(ts), -1)
        return float(np.max(np.linalg.norm(shifted - base, axis=1)))
    return r


def almost_period_search(target, eps_tol: float, s_range, s_grid: float, t_window,
                         t_grid: float) -> AlmostPeriodReport:
    """Scan shifts ``s`` for ``sup_t |phi(t+s) - phi(t)| < eps_tol``.

    ``target`` is a :class:`MovingSet` (Hausdorff distance), a
    :class:`Trajectory` (Euclidean norm, shifts rounded to multiples of the
    step) or a callable ``phi(t)`` that broadcasts over arrays of ``t``.
    Each local minimum of the scan is refined inside one grid cell on
    either side and kept when its residual is below ``eps_tol``.
    """
    s_lo, s_hi = map(float, s_range)
    w0, w1 = map(float, t_window)
    if s_grid <= 0 or t_grid <= 0:
        raise ValueError("grids must be positive")
    if w1 - w0 < 2 * s_hi:
        raise ValueError(f"t_window length {w1 - w0} is shorter than 2 * s_max = {2 * s_hi}")

    if isinstance(target, Trajectory):
        h = target.h
        ks = max(1, int(round(s_grid / h)))
        if abs(ks * h - s_grid) > 1e-9 * max(1.0, s_grid):
            warnings.warn(f"shift grid {s_grid} rounded to {ks * h} (multiple of h)")
        kt = max(1, int(round(t_grid / h)))
        i0, i1 = target.index(w0), target.index(w1)
        idx = np.arange(i0, i1 + 1, kt)
        X = target.states

        def resid(s):
            k = int(round(s / h))
            if idx[-1] + k >= len(X):
                raise ValueError("trajectory too short for the requested shift")
            return float(np.max(np.linalg.norm(X[idx + k] - X[idx], axis=1)))

        shifts = h * np.arange(int(math.ceil(s_lo / h - 1e-9)), int(math.floor(s_hi / h + 1e-9)) + 1, ks)
        values = np.array([resid(s) for s in shifts])
        found = []
        for i in _local_minima(values):
            lo = max(s_lo, shifts[i] - ks * h)
            hi = min(s_hi, shifts[i] + ks * h)
            cand = h * np.arange(int(math.ceil(lo / h - 1e-9)), int(math.floor(hi / h + 1e-9)) + 1)
            vals = [resid(c) for c in cand]
            j = int(np.argmin(vals))
            if vals[j] < eps_tol:
                found.append(float(cand[j]))
    else:
        ts = np.arange(w0, w1 + 0.5 * t_grid, t_grid)
        resid = _set_residual(target, ts) if isinstance(target, MovingSet) else _signal_residual(target, ts)
        n = int(math.floor((s_hi - s_lo) / s_grid + 1e-9))
        shifts = s_lo + s_grid * np.arange(n + 1)
        values = np.array([resid(s) for s in shifts])
        found = []
        for i in _local_minima(values):
            lo = max(s_lo, shifts[i] - s_grid)
            hi = min(s_hi, shifts[i] + s_grid)
            s_best, v_best = _golden_min(resid, lo, hi)
            if values[i] < v_best:
                s_best, v_best = shifts[i], values[i]
            if v_best < eps_tol:
                found.append(float(s_best))
    found = sorted(set(found))
    samples = [(float(s), float(v)) for s, v in zip(shifts, values)]
    return AlmostPeriodReport(eps_tol, found, samples, resid)


def _local_minima(v: np.ndarray) -> list:
    n = len(v)
    out = []
    for i in range(n):
        left = v[i - 1] if i > 0 else np.inf
        right = v[i + 1] if i < n - 1 else np.inf
        if v[i] <= left and v[i] <= right and not (i > 0 and v[i] == left):
            out.append(i)
    return out


def shift_tolerance(input_residual: float, L0: float, M: float, alpha: float) -> float:
    """Bound on ``sup_t |x0(t+s) - x0(t)|`` for a shift ``s`` under which the
    data (set and field) move by at most ``input_residual``:
    ``sqrt(input_residual * 2 (L0 + M) / alpha)``."""
    if alpha <= 0:
        raise NotMonotoneError("alpha must be positive")
    return math.sqrt(input_residual * 2.0 * (L0 + M) / alpha)


# ------------------------------------------------ perturbation response

def theorem4_bound(alpha: float, M: float, sup_df: float) -> float:
    """Asymptotic response envelope ``sqrt(sup_df * M / (2 alpha))``."""
    if alpha <= 0:
        raise NotMonotoneError("alpha must be positive")
    if M < 0 or sup_df < 0:
        raise ValueError("M and sup_df must be nonnegative")
    return math.sqrt(sup_df * M / (2.0 * alpha))


@dataclass
class ResponseReport:
    eps_values: list
    sup_gaps: list
    bound_values: list  # None entries where no bound applies
    window: tuple = (0.0, 0.0)
    h_values: list = field(default_factory=list)
    sup_df: list = field(default_factory=list)
    transient_bound: float = 0.0
    window_too_early: bool = False
    within_bound: list = field(default_factory=list)
    decreasing: bool = False

    @property
    def passed(self) -> bool:
        if any(b is not None for b in self.bound_values):
            return self.window_too_early or all(self.within_bound)
        return self.decreasing


def _sup_gap(a: Trajectory, b: Trajectory, window) -> float:
    i0, i1 = a.index(window[0]), a.index(window[1])
    j0 = b.index(window[0])
    d = a.states[i0:i1 + 1] - b.states[j0:j0 + (i1 - i0) + 1]
    return float(np.max(np.linalg.norm(d, axis=1)))


def _strictly_decreasing(vals) -> bool:
    return all(b < a for a, b in zip(vals, vals[1:]))


def perturbation_response(base: Scenario, eps_values: Sequence[float], window, alpha: float,
                          tol: float = 1e-4, sup_df_inflation: float = 1.1) -> ResponseReport:
    """Distance between perturbed solutions and the unperturbed bounded one.

    ``x0`` is the bounded solution at ``eps0``; every ``x_eps`` starts from
    ``base.x0`` at ``base.t_start``. The bound for each ``eps`` uses the
    field deviation sampled along ``x_eps`` (inflated by 10%). An entry is
    within bound when ``sup_gap <= 1.05 bound + 5 h``; the window counts as
    too early when the decaying transient ``2 M e^{-alpha (w0 - t_start)}``
    still exceeds the ``5 h`` slack.
    """
    if alpha <= 0:
        raise NotMonotoneError("alpha must be positive")
    w0, w1 = window
    if not base.t_start <= w0 < w1 <= base.t_end + 1e-12:
        raise ValueError("window must lie inside the integration range")
    f, M, h = base.field, base.moving_set.bound_M, base.h
    x0 = bounded_solution(replace(base, eps=f.eps0), alpha, tol)
    n_end = int(round((w1 - base.t_start) / h))

    def one(eps):
        tr = catch_up(replace(base, eps=eps))
        gap = _sup_gap(tr, x0, window)
        dev = 0.0
        for k in range(n_end + 1):
            t = base.t_start + k * h
            x = tr.states[k]
            dev = max(dev, float(np.linalg.norm(f(t, x, eps) - f(t, x, f.eps0))))
        return gap, dev * sup_df_inflation

    out = _pmap(one, eps_values)
    gaps = [g for g, _ in out]
    sup_df = [d for _, d in out]
    bounds = [theorem4_bound(alpha, M, d) for d in sup_df]
    transient = 2 * M * math.exp(-alpha * (w0 - base.t_start))
    within = [g <= 1.05 * b + 5 * h for g, b in zip(gaps, bounds)]
    nonref = [g for e, g in zip(eps_values, gaps) if e != f.eps0]
    return ResponseReport(list(map(float, eps_values)), gaps, bounds, (w0, w1),
                          [h] * len(gaps), sup_df, transient, transient > 5 * h, within,
                          _strictly_decreasing(nonref))


def averaging_check(hf_scenario_family: Callable[[float], Scenario], averaged: Scenario,
                    eps_values: Sequence[float], window, alpha: float | None = None,
                    tol: float = 1e-4, noise_band: float = 0.2) -> ResponseReport:
    """Distance between high-frequency solutions and the averaged bounded one.

    For each ``eps`` the averaged process is solved on the same step as the
    high-frequency run. ``decreasing`` allows each gap to exceed its
    predecessor by at most ``noise_band`` (relative).
    """
    if alpha is None:
        alpha = averaged.field.declared_alpha
    if alpha is None or alpha <= 0:
        raise NotMonotoneError("averaged scenario must be monotone (alpha > 0)")
    scen = [hf_scenario_family(e) for e in eps_values]
    for e, s in zip(eps_values, scen):
        if s.h > s.field.max_step(e) * (1 + 1e-9):
            raise ValueError(f"step {s.h} too coarse for eps={e}: need h <= {s.field.max_step(e)}")

    def one(s):
        ref = bounded_solution(replace(averaged, h=s.h, t_start=s.t_start, t_end=s.t_end,
                                       x0=averaged.moving_set(s.t_start).project(averaged.x0)),
                               alpha, tol)
        return _sup_gap(catch_up(s), ref, window)

    gaps = _pmap(one, scen)
    decreasing = all(b <= a * (1 + noise_band) for a, b in zip(gaps, gaps[1:]))
    return ResponseReport(list(map(float, eps_values)), gaps, [None] * len(gaps),
                          tuple(window), [s.h for s in scen], [], 0.0, False, [], decreasing)
