"""Occupation measures, Minkowski content, nice boxes and the Green profile."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid_geometry import PathOccupancy, Region, _segments_of, sausage_cells

ALPHA = 2.0 / 3.0
FRONTIER_DIM = 4.0 / 3.0


@dataclass(eq=False)
class EmpiricalMeasure:
    """Atoms at points of the closed unit disk with nonnegative masses."""
    points: np.ndarray
    masses: np.ndarray
    scale_index: int = 0
    c1: float = 1.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(self.points) != len(self.masses):
            raise ValueError("points and masses differ in length")
        if np.any(self.masses < 0):
            raise ValueError("masses must be nonnegative")
        if len(self.points) and np.max((self.points**2).sum(axis=1)) > 1 + 1e-9:
            raise ValueError("atoms must lie in the closed unit disk")

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


def occupation_measure(frontier, scale_index: int, c1: float = 1.0) -> EmpiricalMeasure:
    """Unit-disk atoms v * 2^-k of mass c1 * 2^(-4k/3) for each frontier vertex v."""
    v = np.array(sorted(frontier), dtype=float).reshape(-1, 2)
    R = 2.0**scale_index
    mass = c1 * R ** (-FRONTIER_DIM)
    return EmpiricalMeasure(v / R, np.full(len(v), mass), scale_index, c1)


def measure_on_box(mu: EmpiricalMeasure, box) -> float:
    x0, y0, x1, y1 = box
    p = mu.points
    inside = (p[:, 0] >= x0) & (p[:, 0] <= x1) & (p[:, 1] >= y0) & (p[:, 1] <= y1)
    return float(mu.masses[inside].sum())


def box_grid_measure(mu: EmpiricalMeasure, cells: int) -> EmpiricalMeasure:
    """Aggregate atoms onto the centres of a cells x cells grid over [-1, 1]^2."""
    if len(mu.points) == 0:
        return EmpiricalMeasure(np.zeros((0, 2)), np.zeros(0), mu.scale_index, mu.c1)
    ij = np.clip(np.floor((mu.points + 1) / 2 * cells).astype(int), 0, cells - 1)
    flat = ij[:, 0] * cells + ij[:, 1]
    mass = np.bincount(flat, weights=mu.masses, minlength=cells * cells)
    keep = np.flatnonzero(mass > 0)
    centres = np.column_stack([keep // cells, keep % cells]) + 0.5
    pts = centres / cells * 2 - 1
    # grid centres near the rim can fall just outside the disk
    norm = np.sqrt((pts**2).sum(axis=1))
    pts = pts / np.maximum(norm, 1.0)[:, None]
    return EmpiricalMeasure(pts, mass[keep], mu.scale_index, mu.c1)


def bl_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure, h: float) -> float:
    """Bounded-Lipschitz distance over the probes clip(a - |y - c|, -1, 1)
    with centres c on the h-grid and levels a on the h-grid, plus constants."""
    if h <= 0:
        raise ValueError("h must be positive")
    pts = np.concatenate([mu.points, nu.points])
    w = np.concatenate([mu.masses, -nu.masses])
    if len(pts) == 0:
        return 0.0
    best = abs(w.sum())
    lo = np.floor((pts.min(axis=0) - 1) / h).astype(int)
    hi = np.ceil((pts.max(axis=0) + 1) / h).astype(int)
    cx = np.arange(lo[0], hi[0] + 1) * h
    cy = np.arange(lo[1], hi[1] + 1) * h
    diam = float(np.sqrt(((pts.max(axis=0) - pts.min(axis=0)) ** 2).sum()))
    levels = np.arange(-1, math.ceil((2 + diam) / h) + 1) * h
    for x in cx:
        dx2 = (pts[:, 0] - x) ** 2
        for y in cy:
            d = np.sqrt(dx2 + (pts[:, 1] - y) ** 2)
            vals = np.clip(levels[:, None] - d[None, :], -1.0, 1.0) @ w
            best = max(best, float(np.abs(vals).max()))
    return best


# ------------------------------------------------------------------ boxes

@dataclass(frozen=True)
class NiceBox:
    k1: int
    k2: int
    level: int

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        s = 2.0 ** -self.level
        return self.k1 * s, self.k2 * s, (self.k1 + 1) * s, (self.k2 + 1) * s

    @property
    def diam(self) -> float:
        return math.sqrt(2) * 2.0 ** -self.level

    def dist_origin(self) -> float:
        x0, y0, x1, y1 = self.bounds
        dx = max(x0, 0.0, -x1)
        dy = max(y0, 0.0, -y1)
        return math.hypot(dx, dy)

    def dist_circle(self) -> float:
        """Distance to the unit circle (negative if the box pokes outside)."""
        x0, y0, x1, y1 = self.bounds
        far = max(math.hypot(x, y) for x in (x0, x1) for y in (y0, y1))
        return 1.0 - far

    def is_nice(self) -> bool:
        return min(self.dist_origin(), self.dist_circle()) >= 2 * self.diam


def nice_boxes(n_max: int) -> list[NiceBox]:
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    out = []
    for n in range(1, n_max + 1):
        m = 2**n
        for k1 in range(-m, m):
            for k2 in range(-m, m):
                b = NiceBox(k1, k2, n)
                if b.is_nice():
                    out.append(b)
    return out


# ------------------------------------------------------------------ Minkowski

class MinkowskiEstimate(NamedTuple):
    eps: np.ndarray
    estimates: np.ndarray
    extrapolated: float


def _sausage_area(shape, eps: float, q: int) -> float:
    if isinstance(shape, Region):
        if shape.kind != "disk":
            raise ValueError("only disk regions are supported")
        cx, cy, rho = shape.params
        reach = rho + eps
        i = np.arange(math.floor((cx - reach) * q) - 1, math.ceil((cx + reach) * q) + 1)
        j = np.arange(math.floor((cy - reach) * q) - 1, math.ceil((cy + reach) * q) + 1)
        ii, jj = np.meshgrid(i, j, indexing="ij")
        d = np.hypot((ii + 0.5) / q - cx, (jj + 0.5) / q - cy)
        return float((d <= reach + 1e-12).sum()) / q**2
    if isinstance(shape, PathOccupancy):
        if len(shape.edges):
            a, b = _segments_of(shape)
        else:
            a = b = shape.vertices.astype(float)
    else:
        arr = np.asarray(shape, dtype=float)
        if arr.ndim == 3:
            a, b = arr[:, 0], arr[:, 1]
        else:
            a = b = arr.reshape(-1, 2)
    return len(sausage_cells(a, b, eps, q)) / q**2


def minkowski_content(shape, delta: float, eps_list, refine: int) -> MinkowskiEstimate:
    """eps^(delta-2) * Area(eps-sausage) for each eps, and the linear-in-eps
    extrapolation through the last three values.

    ``shape`` is a PathOccupancy (its edges), an (N, 2) point array, an
    (N, 2, 2) segment array, or a disk Region.
    """
    eps = np.asarray(eps_list, dtype=float)
    if len(eps) < 3:
        raise ValueError("need at least three eps values")
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise ValueError("eps_list must be positive and decreasing")
    if eps.min() < 1.0 / refine:
        raise ValueError("eps below the raster resolution 1/refine")
    est = np.array([e ** (delta - 2) * _sausage_area(shape, e, refine) for e in eps])
    slope, icpt = np.polyfit(eps[-3:], est[-3:], 1)
    return MinkowskiEstimate(eps, est, float(icpt))


# ------------------------------------------------------------------ Green profile

def green_profile(z) -> float:
    """a(z) = d^(1-alpha) for |z| >= 1/2, d^(1/4-alpha) otherwise, d = min(|z|, 1-|z|)."""
    r = math.hypot(float(z[0]), float(z[1]))
    if not 0 < r < 1:
        raise ValueError("profile is defined for 0 < |z| < 1")
    d = min(r, 1 - r)
    return d ** (1 - ALPHA) if r >= 0.5 else d ** (0.25 - ALPHA)


class C1Fit(NamedTuple):
    constant: float
    spread: float


def calibrate_c1(counts: dict[float, float]) -> C1Fit:
    """Constant C with count(n) ~ C e^{4n/3}, fitted in log space.

    ``spread`` is the standard deviation of ln(count e^{-4n/3}).
    """
    if len(counts) < 3:
        raise ValueError("need at least three scales")
    n = np.array(list(counts.keys()), dtype=float)
    c = np.array(list(counts.values()), dtype=float)
    if np.any(c <= 0):
        raise ValueError("counts must be positive")
    r = np.log(c) - FRONTIER_DIM * n
    return C1Fit(float(np.exp(r.mean())), float(r.std()))


# ------------------------------------------------------------------ CSV

def measure_to_csv(mu: EmpiricalMeasure) -> str:
    buf = io.StringIO()
    buf.write(f"# scale_index={mu.scale_index} c1={mu.c1!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "mass"])
    for (x, y), m in zip(mu.points.tolist(), mu.masses.tolist()):
        w.writerow([repr(x), repr(y), repr(m)])
    return buf.getvalue()


def measure_from_csv(text: str) -> EmpiricalMeasure:
    lines = text.splitlines()
    meta = dict(tok.split("=") for tok in lines[0].lstrip("# ").split())
    rows = list(csv.reader(lines[2:]))
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return EmpiricalMeasure(arr[:, :2], arr[:, 2], int(meta["scale_index"]), float(meta["c1"]))
