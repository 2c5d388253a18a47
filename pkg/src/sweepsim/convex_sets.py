"""Closed convex sets: projection, membership, support functions and
Hausdorff distances.

All set values are immutable. Points are 1-D float arrays; an ``Interval``
is the one-dimensional case and accepts scalars wherever a point is
expected.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection as _QhullHalfspaces
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .errors import ConvergenceError, DimensionError, InfeasibleError, NumericalError

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_ITER = 10_000
UNIT_NORMAL_TOL = 1e-12


def _vec(p, dim: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(p, dtype=float))
    if v.ndim != 1 or v.shape[0] != dim:
        raise DimensionError(f"expected a point of dimension {dim}, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InfeasibleError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def dim(self) -> int:
        return 1

    def project(self, p) -> np.ndarray:
        return np.clip(_vec(p, 1), self.lo, self.hi)

    def support_points(self, U: np.ndarray) -> np.ndarray:
        return np.where(U > 0, self.hi, self.lo).astype(float)

    def support(self, u) -> float:
        u = _vec(u, 1)[0]
        return max(u * self.lo, u * self.hi)

    def bounding_radius(self) -> float:
        return max(abs(self.lo), abs(self.hi))


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box bounds must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise InfeasibleError("empty box: lo > hi in some coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def project(self, p) -> np.ndarray:
        return np.clip(_vec(p, self.dim), self.lo, self.hi)

    def support_points(self, U: np.ndarray) -> np.ndarray:
        return np.where(U > 0, self.hi, self.lo)

    def support(self, u) -> float:
        u = _vec(u, self.dim)
        return float(np.sum(np.maximum(u * self.lo, u * self.hi)))

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(np.maximum(np.abs(self.lo), np.abs(self.hi))))


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1:
            raise DimensionError("ball center must be a 1-D array")
        if not self.radius >= 0:
            raise InfeasibleError(f"negative ball radius {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, p) -> np.ndarray:
        p = _vec(p, self.dim)
        d = p - self.center
        n = np.linalg.norm(d)
        if n <= self.radius:
            return p
        return self.center + d * (self.radius / n)

    def support_points(self, U: np.ndarray) -> np.ndarray:
        return self.center + self.radius * U

    def support(self, u) -> float:
        u = _vec(u, self.dim)
        return float(self.center @ u + self.radius * np.linalg.norm(u))

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.center) + self.radius)


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection:
    """Bounded polytope ``{x : <n_i, x> <= b_i}`` with unit normals.

    A strictly interior point must be supplied. Nonemptiness follows from
    it; boundedness is certified by finite support values along the
    ``2 * dim`` coordinate directions.
    """

    normals: np.ndarray
    offsets: np.ndarray
    interior: np.ndarray
    tol: float = DYKSTRA_TOL
    max_iter: int = DYKSTRA_MAX_ITER

    def __post_init__(self):
        N = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        z = np.atleast_1d(np.asarray(self.interior, dtype=float))
        if N.shape[0] != b.shape[0] or N.shape[1] != z.shape[0]:
            raise DimensionError("normals, offsets and interior point disagree in shape")
        norms = np.linalg.norm(N, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORMAL_TOL):
            raise ValueError("halfspace normals must have unit Euclidean norm")
        if not np.all(N @ z < b):
            raise InfeasibleError("supplied interior point is not strictly interior")
        object.__setattr__(self, "normals", N)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "interior", z)
        for k in range(z.shape[0]):
            for sign in (1.0, -1.0):
                c = np.zeros(z.shape[0])
                c[k] = -sign
                res = linprog(c, A_ub=N, b_ub=b, bounds=[(None, None)] * z.shape[0],
                              method="highs")
                if res.status == 3:
                    raise ValueError("halfspace intersection is unbounded")
                if res.status != 0:
                    raise NumericalError(f"boundedness check failed: {res.message}")

    @classmethod
    def from_inequalities(cls, A, b, interior, **kw) -> "HalfspaceIntersection":
        """Build from ``A x <= b`` with arbitrary (nonzero) row scaling."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float)
        s = np.linalg.norm(A, axis=1)
        return cls(A / s[:, None], b / s, interior, **kw)

    @property
    def dim(self) -> int:
        return self.interior.shape[0]

    @cached_property
    def vertices(self) -> np.ndarray:
        if self.dim == 1:
            n = self.normals[:, 0]
            hi = np.min(self.offsets[n > 0] / n[n > 0])
            lo = np.max(self.offsets[n < 0] / n[n < 0])
            return np.array([[lo], [hi]])
        hs = np.hstack([self.normals, -self.offsets[:, None]])
        return _QhullHalfspaces(hs, self.interior).intersections

    def project(self, p) -> np.ndarray:
        return dykstra_project(self, p, self.tol, self.max_iter)

    def support_points(self, U: np.ndarray) -> np.ndarray:
        V = self.vertices
        return V[np.argmax(U @ V.T, axis=1)]

    def support(self, u) -> float:
        u = _vec(u, self.dim)
        return float(np.max(self.vertices @ u))

    def bounding_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))


@dataclass(frozen=True, eq=False)
class Translate:
    base: "ConvexSetSnapshot"
    offset: np.ndarray

    def __post_init__(self):
        off = _vec(self.offset, self.base.dim)
        object.__setattr__(self, "offset", off)

    @property
    def dim(self) -> int:
        return self.base.dim

    def project(self, p) -> np.ndarray:
        p = _vec(p, self.dim)
        return self.base.project(p - self.offset) + self.offset

    def support_points(self, U: np.ndarray) -> np.ndarray:
        return self.base.support_points(U) + self.offset

    def support(self, u) -> float:
        u = _vec(u, self.dim)
        return self.base.support(u) + float(u @ self.offset)

    def bounding_radius(self) -> float:
        base = self.base
        if isinstance(base, Interval):
            return Interval(base.lo + self.offset[0], base.hi + self.offset[0]).bounding_radius()
        if isinstance(base, Box):
            return Box(base.lo + self.offset, base.hi + self.offset).bounding_radius()
        if isinstance(base, Ball):
            return Ball(base.center + self.offset, base.radius).bounding_radius()
        if isinstance(base, HalfspaceIntersection):
            return float(np.max(np.linalg.norm(base.vertices + self.offset, axis=1)))
        return base.bounding_radius() + float(np.linalg.norm(self.offset))


ConvexSetSnapshot = Union[Interval, Box, Ball, HalfspaceIntersection, Translate]


@dataclass(frozen=True)
class MovingSet:
    """Time-parameterized family ``t -> C(t)`` with declared constants.

    ``lipschitz_L_C`` bounds the Hausdorff speed and ``bound_M`` bounds
    ``sup_c |c|`` uniformly in time.
    """

    snapshot_fn: Callable[[float], ConvexSetSnapshot]
    lipschitz_L_C: float
    bound_M: float

    def __call__(self, t: float) -> ConvexSetSnapshot:
        return self.snapshot_fn(t)

    def check(self, times, dir_samples: int | None = None) -> dict:
        """Sampled violations of the Lipschitz and bound declarations.

        Returns the worst excess over ``L_C |t1 - t2| + 1e-8`` among
        consecutive and random pairs, and the worst excess of the
        bounding radius over ``bound_M``.
        """
        times = np.sort(np.asarray(times, dtype=float))
        snaps = [self.snapshot_fn(t) for t in times]
        lip_excess = -np.inf
        for i in range(len(times) - 1):
            for j in (i + 1, min(i + 7, len(times) - 1)):
                d = hausdorff_distance(snaps[i], snaps[j], dir_samples)
                lip_excess = max(lip_excess,
                                 d - self.lipschitz_L_C * abs(times[j] - times[i]) - 1e-8)
        m_excess = max(bounding_radius(s) - self.bound_M for s in snaps)
        return {"lipschitz_excess": float(lip_excess), "bound_excess": float(m_excess)}


def project(set: ConvexSetSnapshot, p) -> np.ndarray:
    """Euclidean projection of ``p`` onto ``set``."""
    return set.project(p)


def dykstra_project(halfspaces: HalfspaceIntersection, p, tol: float = DYKSTRA_TOL,
                    max_iter: int = DYKSTRA_MAX_ITER) -> np.ndarray:
    """Dykstra's alternating projections onto an intersection of halfspaces.

    Stops once a full sweep changes both the iterate and the correction
    vectors by less than ``tol`` and every constraint is violated by less
    than ``tol``. The iterate alone can stall for a sweep while the
    corrections are still moving, so it is not a safe criterion by itself.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    N, b = halfspaces.normals, halfspaces.offsets
    x = _vec(p, halfspaces.dim).copy()
    if np.all(N @ x <= b):
        return x
    m = N.shape[0]
    y = np.zeros((m, x.shape[0]))
    rows = [N[i] for i in range(m)]
    for _ in range(max_iter):
        x_prev, y_prev = x, y.copy()
        for i in range(m):
            z = x + y[i]
            viol = rows[i] @ z - b[i]
            x = z - viol * rows[i] if viol > 0 else z
            y[i] = z - x
        move = max(np.linalg.norm(x - x_prev), np.linalg.norm(y - y_prev))
        worst = np.max(N @ x - b)
        if move < tol and worst < tol:
            return x
    raise ConvergenceError("Dykstra projection did not converge", max(move, worst))


def contains(set: ConvexSetSnapshot, p, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    p = _vec(p, set.dim)
    return bool(np.linalg.norm(p - set.project(p)) <= tol)


def distance(set: ConvexSetSnapshot, p) -> float:
    p = _vec(p, set.dim)
    return float(np.linalg.norm(p - set.project(p)))


def support(set: ConvexSetSnapshot, u) -> float:
    u = _vec(u, set.dim)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("support direction must be a unit vector")
    return set.support(u)


def bounding_radius(set: ConvexSetSnapshot) -> float:
    return set.bounding_radius()


def unit_directions(dim: int, count: int | None = None) -> np.ndarray:
    """Deterministic, spread-out unit directions.

    Exact ``+-1`` in 1-D, equally spaced angles in 2-D (default 360) and a
    scrambled Sobol set pushed through the normal quantile in higher
    dimensions (default 512).
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        count = count or 360
        a = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(a), np.sin(a)])
    count = count or 512
    pts = qmc.Sobol(d=dim, scramble=True, seed=0).random(count)
    g = _normal.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _same_base(a, b) -> bool:
    if a is b:
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, Interval):
        return a.lo == b.lo and a.hi == b.hi
    if isinstance(a, Box):
        return np.array_equal(a.lo, b.lo) and np.array_equal(a.hi, b.hi)
    if isinstance(a, Ball):
        return np.array_equal(a.center, b.center) and a.radius == b.radius
    if isinstance(a, HalfspaceIntersection):
        return np.array_equal(a.normals, b.normals) and np.array_equal(a.offsets, b.offsets)
    return False


def hausdorff_distance(A: ConvexSetSnapshot, B: ConvexSetSnapshot,
                       dir_samples: int | None = None) -> float:
    """Hausdorff distance between two convex sets.

    Closed form for interval, box, ball and equal-base translate pairs;
    otherwise ``max_u |h_A(u) - h_B(u)|`` over spread unit directions,
    which is a lower bound that is exact in 1-D.
    """
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch {A.dim} vs {B.dim}")
    if isinstance(A, Interval) and isinstance(B, Interval):
        return max(abs(A.lo - B.lo), abs(A.hi - B.hi))
    if isinstance(A, Box) and isinstance(B, Box):
        dlo, dhi = A.lo - B.lo, A.hi - B.hi
        up = np.maximum(np.maximum(dhi, -dlo), 0.0)
        down = np.maximum(np.maximum(-dhi, dlo), 0.0)
        return float(max(np.linalg.norm(up), np.linalg.norm(down)))
    if isinstance(A, Ball) and isinstance(B, Ball):
        return float(np.linalg.norm(A.center - B.center) + abs(A.radius - B.radius))
    if isinstance(A, Translate) and isinstance(B, Translate) and _same_base(A.base, B.base):
        return float(np.linalg.norm(A.offset - B.offset))
    polytope = any(isinstance(s, HalfspaceIntersection)
                   or (isinstance(s, Translate) and isinstance(s.base, HalfspaceIntersection))
                   for s in (A, B))
    if polytope and A.dim > 1 and dir_samples is not None and dir_samples < 16:
        raise ValueError("dir_samples must be at least 16 for polytopes")
    U = unit_directions(A.dim, dir_samples)
    hA = np.einsum("ij,ij->i", A.support_points(U), U)
    hB = np.einsum("ij,ij->i", B.support_points(U), U)
    return float(np.max(np.abs(hA - hB)))


def normal_cone_residual(set: ConvexSetSnapshot, x, xi, sample_count: int = 8,
                         rng: np.random.Generator | None = None,
                         membership_tol: float = 1e-6) -> float:
    """Signed worst value of ``<xi, c - x>`` over sampled ``c`` in ``set``.

    Candidates are the support point in direction ``xi`` (which makes the
    value exact for every variant here), support points in random
    directions, and projections of random exterior points. A value ``<= 0``
    up to tolerance certifies ``xi`` in the normal cone at ``x``.
    """
    if sample_count < 8:
        raise ValueError("sample_count must be at least 8")
    x = _vec(x, set.dim)
    xi = _vec(xi, set.dim)
    if not contains(set, x, membership_tol):
        raise InfeasibleError("normal cone is empty: point lies outside the set")
    rng = rng if rng is not None else np.random.default_rng(0)
    U = rng.standard_normal((sample_count, set.dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    nxi = np.linalg.norm(xi)
    if nxi > 0:
        U = np.vstack([xi / nxi, U])
    cands = [set.support_points(U)]
    scale = 1.0 + set.bounding_radius()
    far = x + 2 * scale * U[-(sample_count // 2):]
    cands.append(np.array([set.project(q) for q in far]))
    C = np.vstack(cands)
    return float(np.max((C - x) @ xi))
