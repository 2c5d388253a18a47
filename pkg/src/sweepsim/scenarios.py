"""Compiled-in scenario registry.

Each entry builds a :class:`Scenario` from ``(eps, h, t_start, t_end, x0)``
with per-entry defaults. Fields broadcast over arrays of ``t`` so that
quadrature can evaluate them in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convex_sets import HalfspaceIntersection, Interval, MovingSet, Translate
from .dynamics import Perturbation
from .integrator import Scenario

SQRT2 = math.sqrt(2.0)


def sine_band(t: float) -> Interval:
    """The moving interval ``[sin t, sin t + 1]``."""
    s = math.sin(t)
    return Interval(s, s + 1.0)


SINE_BAND = MovingSet(sine_band, lipschitz_L_C=1.0, bound_M=2.0)


def coefficient(t):
    """Monotone coefficient ``sin(sqrt(2) t) + 2`` of the examples."""
    return np.sin(SQRT2 * t) + 2.0


def _example1_field(t, x, eps):
    return eps * x**2 + coefficient(t) * x


def _example2_field(t, x, eps):
    if eps == 0:
        return coefficient(t) * x
    return np.sin(t / eps) * x**2 + coefficient(t) * x


def _averaged_field(t, x, eps):
    return coefficient(t) * x


EXAMPLE1_FIELD = Perturbation(_example1_field, eps0=0.0, declared_alpha=1.0)
EXAMPLE2_FIELD = Perturbation(_example2_field, eps0=0.0,
                              freq_hint=lambda eps: 1.0 / abs(eps) if eps else SQRT2)
AVERAGED_FIELD = Perturbation(_averaged_field, eps0=0.0, declared_alpha=1.0)


def _hf_step(eps: float, h: float | None) -> float:
    return h if h is not None else EXAMPLE2_FIELD.max_step(eps)


@dataclass(frozen=True)
class RegistryEntry:
    build: Callable[..., Scenario]
    description: str
    defaults: dict


def _example1(eps=0.0, h=None, t_start=None, t_end=None, x0=None):
    return Scenario(SINE_BAND, EXAMPLE1_FIELD, eps, 0.5 if x0 is None else x0,
                    0.0 if t_start is None else t_start, 20.0 if t_end is None else t_end,
                    1e-3 if h is None else h, name="example1")


def _example2(eps=0.05, h=None, t_start=None, t_end=None, x0=None):
    return Scenario(SINE_BAND, EXAMPLE2_FIELD, eps, 0.5 if x0 is None else x0,
                    0.0 if t_start is None else t_start, 10.0 if t_end is None else t_end,
                    _hf_step(eps, h), name="example2")


def _example2_averaged(eps=0.0, h=None, t_start=None, t_end=None, x0=None):
    return Scenario(SINE_BAND, AVERAGED_FIELD, 0.0, 0.5 if x0 is None else x0,
                    0.0 if t_start is None else t_start, 10.0 if t_end is None else t_end,
                    1e-3 if h is None else h, name="example2_averaged")


def _pure_sweep(eps=0.0, h=None, t_start=None, t_end=None, x0=None):
    t_start = 0.0 if t_start is None else t_start
    t_end = 5.0 if t_end is None else t_end
    ms = MovingSet(lambda t: Interval(t, t + 1.0), lipschitz_L_C=1.0,
                   bound_M=max(abs(t_start), abs(t_end)) + 1.0)
    field = Perturbation(lambda t, x, e: np.zeros_like(np.asarray(x, dtype=float)), eps0=0.0)
    return Scenario(ms, field, eps, 0.0 if x0 is None else x0, t_start, t_end,
                    1e-3 if h is None else h, name="pure_sweep")


def _identity_field():
    return Perturbation(lambda t, x, e: np.asarray(x, dtype=float), eps0=0.0,
                        declared_L_f=1.0, declared_alpha=1.0)


def _interior_ode(eps=0.0, h=None, t_start=None, t_end=None, x0=None):
    ms = MovingSet(lambda t: Interval(-2.0, 2.0), lipschitz_L_C=0.0, bound_M=2.0)
    return Scenario(ms, _identity_field(), eps, 1.0 if x0 is None else x0,
                    0.0 if t_start is None else t_start, 1.0 if t_end is None else t_end,
                    1e-3 if h is None else h, name="interior_ode")


def _fixed_point_monotone(eps=0.0, h=None, t_start=None, t_end=None, x0=None):
    ms = MovingSet(lambda t: Interval(-1.0, 1.0), lipschitz_L_C=0.0, bound_M=1.0)
    return Scenario(ms, _identity_field(), eps, 0.5 if x0 is None else x0,
                    0.0 if t_start is None else t_start, 10.0 if t_end is None else t_end,
                    1e-3 if h is None else h, name="fixed_point_monotone")


_SQUARE = HalfspaceIntersection(
    np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
    np.array([0.5, 0.5, 0.5, 0.5]), np.zeros(2))


def square_orbit_set(t: float) -> Translate:
    return Translate(_SQUARE, np.array([0.75 * math.sin(t), 0.75 * math.cos(SQRT2 * t)]))


def _square_orbit(eps=0.0, h=None, t_start=None, t_end=None, x0=None):
    # |offset'| <= 0.75 * sqrt(1 + 2); |c| <= 0.75 * sqrt(2) + sqrt(2) / 2
    ms = MovingSet(square_orbit_set, lipschitz_L_C=0.75 * math.sqrt(3.0),
                   bound_M=1.25 * SQRT2)
    field = Perturbation(lambda t, x, e: (coefficient(t) + e * np.sin(t)) * np.asarray(x, dtype=float),
                         eps0=0.0, declared_alpha=1.0, dim=2)
    t_start = 0.0 if t_start is None else t_start
    x0 = square_orbit_set(t_start).project(np.zeros(2)) if x0 is None else x0
    return Scenario(ms, field, eps, x0, t_start, 10.0 if t_end is None else t_end,
                    1e-2 if h is None else h, name="square_orbit")


REGISTRY: dict[str, RegistryEntry] = {
    "example1": RegistryEntry(
        _example1, "moving band [sin t, sin t+1], f = eps x^2 + (sin(sqrt2 t)+2) x",
        {"eps": 0.0, "h": 1e-3, "t_start": 0.0, "t_end": 20.0, "x0": 0.5}),
    "example2": RegistryEntry(
        _example2, "moving band, f = sin(t/eps) x^2 + (sin(sqrt2 t)+2) x",
        {"eps": 0.05, "h": "eps/20", "t_start": 0.0, "t_end": 10.0, "x0": 0.5}),
    "example2_averaged": RegistryEntry(
        _example2_averaged, "moving band, averaged field (sin(sqrt2 t)+2) x",
        {"eps": 0.0, "h": 1e-3, "t_start": 0.0, "t_end": 10.0, "x0": 0.5}),
    "pure_sweep": RegistryEntry(
        _pure_sweep, "translating interval [t, t+1], f = 0",
        {"eps": 0.0, "h": 1e-3, "t_start": 0.0, "t_end": 5.0, "x0": 0.0}),
    "interior_ode": RegistryEntry(
        _interior_ode, "fixed interval [-2, 2], f = x (no contact)",
        {"eps": 0.0, "h": 1e-3, "t_start": 0.0, "t_end": 1.0, "x0": 1.0}),
    "fixed_point_monotone": RegistryEntry(
        _fixed_point_monotone, "fixed interval [-1, 1], f = x, equilibrium at 0",
        {"eps": 0.0, "h": 1e-3, "t_start": 0.0, "t_end": 10.0, "x0": 0.5}),
    "square_orbit": RegistryEntry(
        _square_orbit, "unit square translated along (0.75 sin t, 0.75 cos(sqrt2 t)), "
                       "f = (sin(sqrt2 t)+2+eps sin t) x",
        {"eps": 0.0, "h": 1e-2, "t_start": 0.0, "t_end": 10.0, "x0": "P_C(0)(0)"}),
}


def get_scenario(name: str, **overrides) -> Scenario:
    try:
        entry = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(REGISTRY)}") from None
    return entry.build(**{k: v for k, v in overrides.items() if v is not None})
