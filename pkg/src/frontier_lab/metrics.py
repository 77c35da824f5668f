"""Hausdorff, Frechet (modulo reparametrization) and natural-parametrization distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

_EPS = 1e-12


@dataclass(eq=False)
class TimedPolyline:
    points: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        if len(self.points) != len(self.times) or len(self.points) == 0:
            raise ValueError("points and times must be nonempty and of equal length")
        if self.times[0] != 0:
            raise ValueError("times must start at 0")
        d = np.diff(self.times)
        if np.any(d < 0) or (len(d) > 2 and np.any(d[1:-1] <= 0)):
            raise ValueError("times must increase strictly (repeats allowed only at the ends)")

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @classmethod
    def uniform(cls, points, duration: float | None = None) -> "TimedPolyline":
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        n = len(p) - 1
        dur = float(n) if duration is None else float(duration)
        return cls(p, np.linspace(0.0, dur, len(p)) if n else np.zeros(1))

    @classmethod
    def from_frontier_curve(cls, curve, scale: float = 1.0) -> "TimedPolyline":
        """Curve vertices times ``scale``, one per_traversal_duration per step."""
        return cls(np.asarray(curve.vertices, dtype=float) * scale, curve.times())

    def translated(self, v) -> "TimedPolyline":
        return TimedPolyline(self.points + np.asarray(v, dtype=float), self.times)


def hausdorff_distance(A, B) -> float:
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    B = np.asarray(B, dtype=float).reshape(-1, 2)
    if len(A) == 0 or len(B) == 0:
        raise ValueError("both sets must be nonempty")
    da, _ = cKDTree(B).query(A)
    db, _ = cKDTree(A).query(B)
    return float(max(da.max(), db.max()))


@njit(cache=True)
def _seg_interval(px, py, qx, qy, rx, ry, eps):
    """Fractions s in [0, 1] with |q + s (r - q) - p| <= eps, as (lo, hi);
    lo > hi when empty."""
    ux = rx - qx
    uy = ry - qy
    wx = qx - px
    wy = qy - py
    a = ux * ux + uy * uy
    b = ux * wx + uy * wy
    c = wx * wx + wy * wy - eps * eps
    if a <= 0.0:
        if c <= 1e-12:
            return 0.0, 1.0
        return 1.0, 0.0
    disc = b * b - a * c
    if disc < 0.0:
        return 1.0, 0.0
    sq = np.sqrt(disc)
    lo = (-b - sq) / a
    hi = (-b + sq) / a
    return max(lo, 0.0), min(hi, 1.0)


@njit(cache=True)
def _time_interval(t_fixed, t0, t1, tau):
    """Fractions s in [0, 1] with |t0 + s (t1 - t0) - t_fixed| <= tau."""
    d = t1 - t0
    if d <= 0.0:
        if abs(t0 - t_fixed) <= tau + 1e-12:
            return 0.0, 1.0
        return 1.0, 0.0
    lo = (t_fixed - tau - t0) / d
    hi = (t_fixed + tau - t0) / d
    return max(lo, 0.0), min(hi, 1.0)


@njit(cache=True)
def _free(p, tp, q0, q1, t0, t1, eps, tau):
    lo, hi = _seg_interval(p[0], p[1], q0[0], q0[1], q1[0], q1[1], eps)
    if lo > hi:
        return lo, hi
    a, b = _time_interval(tp, t0, t1, tau)
    return max(lo, a), min(hi, b)


@njit(cache=True)
def decide(A, ta, B, tb, eps, tau):
    """Is there a monotone matching with |a - b| <= eps and |t - s| <= tau?"""
    m = A.shape[0]
    n = B.shape[0]
    dx = A[0, 0] - B[0, 0]
    dy = A[0, 1] - B[0, 1]
    if dx * dx + dy * dy > eps * eps + 1e-12:
        return False
    dx = A[m - 1, 0] - B[n - 1, 0]
    dy = A[m - 1, 1] - B[n - 1, 1]
    if dx * dx + dy * dy > eps * eps + 1e-12 or abs(ta[m - 1] - tb[n - 1]) > tau + 1e-12:
        return False
    # reachable intervals: left edges L[i, j] (a-vertex i, b-segment j),
    # bottom edges Bt[i, j] (a-segment i, b-vertex j)
    Llo = np.full((m, n - 1), 1.0)
    Lhi = np.full((m, n - 1), 0.0)
    Blo = np.full((m - 1, n), 1.0)
    Bhi = np.full((m - 1, n), 0.0)
    ok = True
    for i in range(m - 1):
        lo, hi = _free(B[0], tb[0], A[i], A[i + 1], ta[i], ta[i + 1], eps, tau)
        if ok and lo <= _EPS and lo <= hi:
            Blo[i, 0] = 0.0
            Bhi[i, 0] = hi
            ok = hi >= 1.0 - _EPS
        else:
            ok = False
    ok = True
    for j in range(n - 1):
        lo, hi = _free(A[0], ta[0], B[j], B[j + 1], tb[j], tb[j + 1], eps, tau)
        if ok and lo <= _EPS and lo <= hi:
            Llo[0, j] = 0.0
            Lhi[0, j] = hi
            ok = hi >= 1.0 - _EPS
        else:
            ok = False
    for i in range(m - 1):
        for j in range(n - 1):
            has_left = Llo[i, j] <= Lhi[i, j]
            has_bot = Blo[i, j] <= Bhi[i, j]
            if not (has_left or has_bot):
                continue
            lo, hi = _free(A[i + 1], ta[i + 1], B[j], B[j + 1], tb[j], tb[j + 1], eps, tau)
            if lo <= hi:
                if has_bot:
                    Llo[i + 1, j] = lo
                    Lhi[i + 1, j] = hi
                else:
                    lo2 = max(lo, Llo[i, j])
                    if lo2 <= hi:
                        Llo[i + 1, j] = lo2
                        Lhi[i + 1, j] = hi
            lo, hi = _free(B[j + 1], tb[j + 1], A[i], A[i + 1], ta[i], ta[i + 1], eps, tau)
            if lo <= hi:
                if has_left:
                    Blo[i, j + 1] = lo
                    Bhi[i, j + 1] = hi
                else:
                    lo2 = max(lo, Blo[i, j])
                    if lo2 <= hi:
                        Blo[i, j + 1] = lo2
                        Bhi[i, j + 1] = hi
    if n >= 2 and Llo[m - 1, n - 2] <= Lhi[m - 1, n - 2] and Lhi[m - 1, n - 2] >= 1.0 - _EPS:
        return True
    if m >= 2 and Blo[m - 2, n - 1] <= Bhi[m - 2, n - 1] and Bhi[m - 2, n - 1] >= 1.0 - _EPS:
        return True
    return False


@njit(cache=True)
def _bisect(A, ta, B, tb, tau, H, K):
    """Smallest feasible point of the grid {k H / 2^K} (0 included), or inf."""
    if not decide(A, ta, B, tb, H, tau):
        return np.inf
    if decide(A, ta, B, tb, 0.0, tau):
        return 0.0
    lo = 0.0
    hi = H
    for _ in range(K):
        mid = 0.5 * (lo + hi)
        if decide(A, ta, B, tb, mid, tau):
            hi = mid
        else:
            lo = mid
    return hi


def _prepare(c: TimedPolyline):
    p, t = c.points, c.times
    if len(p) == 1:
        p = np.vstack([p, p])
        t = np.array([0.0, 0.0])
    return np.ascontiguousarray(p), np.ascontiguousarray(t)


def _grid(a: TimedPolyline, b: TimedPolyline, tol: float) -> tuple[float, int]:
    pts = np.vstack([a.points, b.points])
    H = float(np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)).max()) if len(pts) < 2000 \
        else 2 * float(np.sqrt(((pts - pts.mean(0)) ** 2).sum(1)).max())
    H = max(H, tol) * (1 + 1e-9)
    return H, max(1, math.ceil(math.log2(H / tol)))


def frechet_distance(a: TimedPolyline, b: TimedPolyline, tol: float = 1e-3) -> float:
    """Frechet distance (modulo reparametrization) to within tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, ta = _prepare(a)
    B, tb = _prepare(b)
    H, K = _grid(a, b, tol)
    return float(_bisect(A, ta, B, tb, np.inf, H, K))


def np_distance_detail(a: TimedPolyline, b: TimedPolyline, tol: float = 1e-3) -> tuple[float, float, float]:
    """(rho, time bound, space bound) of the best pair found on the tol-grid."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, ta = _prepare(a)
    B, tb = _prepare(b)
    H, K = _grid(a, b, tol)
    tau0 = abs(a.duration - b.duration)
    tau_max = max(a.duration, b.duration)
    best = (np.inf, np.inf, np.inf)
    k = 0
    while True:
        tau = tau0 + k * tol
        if tau >= best[0]:
            break
        eps = _bisect(A, ta, B, tb, tau, H, K)
        if tau + eps < best[0]:
            best = (tau + eps, tau, eps)
        if tau >= tau_max:
            break
        k += 1
    return float(best[0]), float(best[1]), float(best[2])


def np_distance(a: TimedPolyline, b: TimedPolyline, tol: float = 1e-3) -> float:
    """Natural-parametrization distance: min over the tol-grid of time bound
    plus the smallest feasible space bound."""
    return np_distance_detail(a, b, tol)[0]


def resample_uniform(curve: TimedPolyline, m: int) -> TimedPolyline:
    if m < 2:
        raise ValueError("m must be at least 2")
    t = np.linspace(0.0, curve.duration, m)
    x = np.interp(t, curve.times, curve.points[:, 0])
    y = np.interp(t, curve.times, curve.points[:, 1])
    pts = np.column_stack([x, y])
    pts[0], pts[-1] = curve.points[0], curve.points[-1]
    return TimedPolyline(pts, t)
