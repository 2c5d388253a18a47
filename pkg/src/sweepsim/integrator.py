"""Catching-up time stepping for ``-x' in N_C(t)(x) + f(t, x, eps)``.

One step advances the state with the explicit drift and projects onto the
next snapshot of the moving set::

    x_{k+1} = P_{C(t_{k+1})}(x_k - h f(t_k, x_k, eps))
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .convex_sets import MovingSet, contains, distance, normal_cone_residual, DYKSTRA_TOL
from .dynamics import Perturbation
from .errors import InfeasibleError, NotMonotoneError, NumericalError, SweepError

MAX_STEPS = 10**8
FEASIBILITY_TOL = 1e-8
# Membership slack for computed states (10x the projection tolerance).
STATE_TOL = 10 * DYKSTRA_TOL


@dataclass(frozen=True)
class Scenario:
    moving_set: MovingSet
    field: Perturbation
    eps: float
    x0: np.ndarray
    t_start: float
    t_end: float
    h: float
    name: str = ""

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x0", x0)
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.n_steps > MAX_STEPS:
            raise ValueError(f"{self.n_steps} steps exceed the budget of {MAX_STEPS}; raise h")
        if not contains(self.moving_set(self.t_start), x0, FEASIBILITY_TOL):
            raise InfeasibleError(
                f"initial state {x0.tolist()} is not in C(t_start) at t_start={self.t_start}")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.h))

    def time(self, k: int) -> float:
        return self.t_start + k * self.h


@dataclass(frozen=True, eq=False)
class Trajectory:
    t_start: float
    h: float
    states: np.ndarray  # shape (n_steps + 1, dim)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(len(self.states))

    @property
    def t_end(self) -> float:
        return self.t_start + self.h * (len(self.states) - 1)

    def index(self, t: float) -> int:
        k = int(round((t - self.t_start) / self.h))
        if not 0 <= k < len(self.states):
            raise IndexError(f"time {t} outside trajectory range")
        return k

    def at(self, t: float) -> np.ndarray:
        return self.states[self.index(t)]

    def window(self, t0: float, t1: float) -> "Trajectory":
        i, j = self.index(t0), self.index(t1)
        return Trajectory(self.t_start + i * self.h, self.h, self.states[i:j + 1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = self.states.shape[1]
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(dim)])
        for t, x in zip(self.times, self.states):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in x])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        h = data[1, 0] - data[0, 0] if len(data) > 1 else 1.0
        return cls(float(data[0, 0]), float(h), data[:, 1:])


def catch_up(s: Scenario) -> Trajectory:
    """Integrate the scenario with the catching-up scheme.

    Every returned state (from the first step on) is checked for membership
    in its snapshot; failures name the step index.
    """
    n = s.n_steps
    f, eps, C = s.field, s.eps, s.moving_set
    states = np.empty((n + 1, s.x0.shape[0]))
    x = s.x0.copy()
    states[0] = x
    for k in range(n):
        t = s.t_start + k * s.h
        drift = f(t, x, eps)
        if not np.all(np.isfinite(drift)):
            raise NumericalError(f"non-finite field value at step {k} (t={t})")
        snap = C(s.t_start + (k + 1) * s.h)
        try:
            x = snap.project(x - s.h * drift)
        except SweepError as e:
            raise type(e)(f"projection failed at step {k + 1}: {e}") from e
        if distance(snap, x) > STATE_TOL:
            raise InfeasibleError(f"state left C(t) at step {k + 1}")
        states[k + 1] = x
    return Trajectory(s.t_start, s.h, states)


def inclusion_residual(traj: Trajectory, s: Scenario, samples_per_step: int = 8,
                       seed: int = 0, membership_tol: float = 1e-6) -> float:
    """Worst discrete normal-cone violation along a trajectory.

    For each step ``xi_k = -(x_{k+1}-x_k)/h - f(t_k, x_k)`` must lie in the
    normal cone of ``C(t_{k+1})`` at ``x_{k+1}``; the returned value is
    ``max_k residual(h xi_k) / h``. A state outside its set has an empty
    normal cone and contributes ``dist / h`` instead.
    """
    rng = np.random.default_rng(seed)
    h = traj.h
    X = traj.states
    worst = -np.inf
    for k in range(len(X) - 1):
        t = traj.t_start + k * h
        snap = s.moving_set(traj.t_start + (k + 1) * h)
        xn = X[k + 1]
        d = distance(snap, xn)
        if d > membership_tol:
            worst = max(worst, d / h)
            continue
        xi_h = X[k] - xn - h * s.field(t, X[k], s.eps)
        r = normal_cone_residual(snap, xn, xi_h, samples_per_step, rng, membership_tol)
        worst = max(worst, r / h)
    return float(worst)


@dataclass(frozen=True)
class OrderReport:
    order: float | None  # None when saturated
    saturated: bool
    h_values: list
    errors: list
    h_ref: float
    raw_slope: float | None = None  # plain log-log slope, biased by the reference error


def _run_at(s: Scenario, h: float) -> Trajectory:
    return catch_up(replace(s, h=h))


def richardson_order(s: Scenario, h_list) -> OrderReport:
    """Empirical convergence order against a reference run at ``min(h)/4``.

    The error of each run is its largest deviation from the reference over
    the grid of the coarsest step. Because the reference carries its own
    error ``C h_ref^p``, the order ``p`` is the least-squares fit of
    ``log e = log C + log(h^p - h_ref^p)``; the plain log-log slope is
    reported alongside.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3 or any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h_list must be strictly decreasing with at least 3 entries")
    h_ref = h_list[-1] / 4
    span = s.t_end - s.t_start
    for h in h_list + [h_ref]:
        if abs(span / h - round(span / h)) > 1e-6:
            raise ValueError(f"step {h} does not divide the time window")
        if abs(h_list[0] / h - round(h_list[0] / h)) > 1e-6:
            raise ValueError(f"step {h} is not an integer fraction of {h_list[0]}")
    ref = _run_at(s, h_ref)
    coarse = np.arange(int(round(span / h_list[0])) + 1)
    errors = []
    for h in h_list:
        tr = _run_at(s, h)
        ratio_c = int(round(h_list[0] / h))
        ratio_r = int(round(h_list[0] / h_ref))
        diff = tr.states[coarse * ratio_c] - ref.states[coarse * ratio_r]
        errors.append(float(np.max(np.linalg.norm(diff, axis=1))))
    if max(errors) < 1e-12:
        return OrderReport(None, True, h_list, errors, h_ref)
    good = [(h, e) for h, e in zip(h_list, errors) if e >= 1e-12]
    if len(good) < 2:
        return OrderReport(None, True, h_list, errors, h_ref)
    hs = np.array([g[0] for g in good])
    le = np.log([g[1] for g in good])
    slope = float(np.polyfit(np.log(hs), le, 1)[0])

    def misfit(p):
        model = np.log(hs**p - h_ref**p)
        r = le - model
        return float(np.sum((r - r.mean()) ** 2))

    p = minimize_scalar(misfit, bounds=(0.05, 6.0), method="bounded",
                        options={"xatol": 1e-10}).x
    return OrderReport(float(p), False, h_list, errors, h_ref, slope)


def burn_in_horizon(bound_M: float, alpha: float, tol: float) -> float:
    """Time after which two solutions in a set of radius ``M`` are within
    ``tol`` under exponential contraction at rate ``alpha``."""
    if alpha <= 0:
        raise NotMonotoneError("not in monotone regime: alpha must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    return max(0.0, math.log(2 * bound_M / tol) / alpha)


def bounded_solution(s: Scenario, alpha: float, tol: float, start=None) -> Trajectory:
    """Approximate the unique bounded solution on ``[t_start, t_end]``.

    Integration begins ``ln(2M/tol)/alpha`` before ``t_start`` from the
    projection of ``start`` (the origin by default) onto the set at that
    time; the burn-in segment is discarded.
    """
    T_burn = burn_in_horizon(s.moving_set.bound_M, alpha, tol)
    n_burn = int(math.ceil(T_burn / s.h - 1e-9))
    t_begin = s.t_start - n_burn * s.h
    dim = s.x0.shape[0]
    p = np.zeros(dim) if start is None else np.atleast_1d(np.asarray(start, dtype=float))
    x_begin = s.moving_set(t_begin).project(p)
    full = catch_up(replace(s, t_start=t_begin, x0=x_begin))
    return Trajectory(s.t_start, s.h, full.states[n_burn:])


def velocity_bound(traj: Trajectory) -> float:
    """Largest discrete speed ``|x_{k+1} - x_k| / h``."""
    if len(traj.states) < 2:
        return 0.0
    return float(np.max(np.linalg.norm(np.diff(traj.states, axis=0), axis=1)) / traj.h)
