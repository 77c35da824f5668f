"""Random walks, Brownian grid paths and their Skorokhod coupling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from . import _kernels as K

STEP_VECTORS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)


class StepBudgetExceeded(RuntimeError):
    """A sample ran past its step budget and was aborted."""


class CouplingAborted(StepBudgetExceeded):
    """The simulated Brownian horizon did not contain the needed crossings."""


@dataclass(frozen=True)
class RngState:
    seed: int
    stream: int

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


def make_rng(seed: int, stream: int) -> RngState:
    if not (0 <= seed < 2**64 and 0 <= stream < 2**64):
        raise ValueError("seed and stream must be 64-bit unsigned integers")
    return RngState(int(seed), int(stream))


@dataclass(eq=False)
class Walk:
    start: tuple[int, int]
    steps: np.ndarray
    scale_index: int = 0

    def __post_init__(self):
        self.start = (int(self.start[0]), int(self.start[1]))
        self.steps = np.ascontiguousarray(self.steps, dtype=np.uint8)
        if self.steps.ndim != 1 or (self.steps.size and self.steps.max() > 3):
            raise ValueError("steps must be a 1-d sequence of codes 0..3")

    def __len__(self) -> int:
        return int(self.steps.size)

    def __eq__(self, other):
        if not isinstance(other, Walk):
            return NotImplemented
        return (self.start == other.start and self.scale_index == other.scale_index
                and np.array_equal(self.steps, other.steps))

    @property
    def vertices(self) -> np.ndarray:
        """(len+1, 2) array of visited vertices in order."""
        out = np.empty((len(self) + 1, 2), dtype=np.int64)
        out[0] = self.start
        np.cumsum(STEP_VECTORS[self.steps], axis=0, out=out[1:])
        out[1:] += out[0]
        return out

    @property
    def end(self) -> tuple[int, int]:
        v = self.vertices[-1]
        return int(v[0]), int(v[1])

    @classmethod
    def from_vertices(cls, vertices, scale_index: int = 0) -> "Walk":
        v = np.asarray(vertices, dtype=np.int64)
        d = np.diff(v, axis=0)
        codes = np.full(len(d), 255, dtype=np.int64)
        for c, vec in enumerate(STEP_VECTORS):
            codes[(d == vec).all(axis=1)] = c
        if (codes == 255).any():
            raise ValueError("consecutive vertices must be lattice neighbours")
        return cls((int(v[0, 0]), int(v[0, 1])), codes.astype(np.uint8), scale_index)


def scale_index_of(radius: float) -> int:
    """Dyadic scale index k with 2**k <= radius."""
    return max(0, int(math.floor(math.log2(radius)))) if radius >= 1 else 0


def default_budget(exit_radius: float) -> int:
    return int(100 * exit_radius * exit_radius) + 100


def sample_walk_until_exit(rng: RngState, start, exit_radius: int,
                           budget: int | None = None) -> Walk:
    """Simple random walk from start, stopped on reaching norm >= exit_radius."""
    x0, y0 = int(start[0]), int(start[1])
    R2 = exit_radius * exit_radius
    if x0 * x0 + y0 * y0 >= R2:
        raise ValueError("start must lie strictly inside the exit radius")
    budget = default_budget(exit_radius) if budget is None else int(budget)
    gen = rng.generator()
    chunks = []
    done = 0
    x, y = x0, y0
    size = min(max(4 * R2, 64), budget + 64)
    while True:
        buf = np.empty(size, dtype=np.uint8)
        status, count, x, y = K.walk_record(gen, x, y, R2, budget, done, buf)
        chunks.append(buf[:count])
        done += count
        if status == 0:
            break
        if status == 2:
            raise StepBudgetExceeded(f"walk exceeded {budget} steps")
    steps = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    return Walk((x0, y0), steps, scale_index_of(exit_radius))


# ------------------------------------------------------------------ Brownian

@dataclass(eq=False)
class BmPath:
    """Planar Brownian path.

    kind "grid": samples at times i*dt, linear between samples.
    kind "skeleton": samples at the given event times, constant in between.
    """
    dt: float
    samples: np.ndarray
    origin: tuple[float, float] = (0.0, 0.0)
    kind: str = "grid"
    times: np.ndarray | None = None

    def sample_times(self) -> np.ndarray:
        if self.times is not None:
            return self.times
        return np.arange(len(self.samples)) * self.dt

    def at(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ts = self.sample_times()
        if self.kind == "grid":
            x = np.interp(t, ts, self.samples[:, 0])
            y = np.interp(t, ts, self.samples[:, 1])
            return np.column_stack([x, y])
        idx = np.searchsorted(ts, t, side="right") - 1
        return self.samples[np.clip(idx, 0, len(ts) - 1)].astype(float)


def sample_bm_grid(rng: RngState, dt: float, stop_radius: float,
                   budget: int | None = None) -> BmPath:
    """Planar BM on the dt-grid, stopped at the first grid time with norm >= stop_radius."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if stop_radius <= 0:
        return BmPath(dt, np.zeros((1, 2)))
    if budget is None:
        budget = int(100 * stop_radius**2 / dt) + 100
    gen = rng.generator()
    sq = math.sqrt(dt)
    chunk = max(1024, min(int(stop_radius**2 / dt), 1 << 22))
    pos = np.zeros(2)
    parts = [pos[None, :].copy()]
    n = 0
    r2 = stop_radius * stop_radius
    while True:
        inc = gen.standard_normal((chunk, 2)) * sq
        path = np.cumsum(inc, axis=0) + pos
        hit = np.flatnonzero((path * path).sum(axis=1) >= r2)
        if hit.size:
            parts.append(path[: hit[0] + 1])
            break
        parts.append(path)
        pos = path[-1]
        n += chunk
        if n > budget:
            raise StepBudgetExceeded(f"BM path exceeded {budget} grid steps")
    return BmPath(dt, np.concatenate(parts))


@lru_cache(maxsize=1)
def exit_time_table(size: int = (1 << 13) + 1, t_split: float = 1.5):
    """Inverse-CDF table for the exit time of standard BM from (-1, 1).

    Returns (utab, umax): for u < umax the quantile is read off utab by
    linear interpolation; above it the one-term tail expansion is exact to
    ~1e-7 relative error.
    """
    t = np.linspace(0.02, t_split, 400_001)
    k = np.arange(-12, 13)[:, None]
    a = (2 * k + 1) / np.sqrt(t)
    b = (2 * k - 1) / np.sqrt(t)
    stay = ((-1.0) ** k * (ndtr(a) - ndtr(b))).sum(axis=0)
    cdf = 1.0 - stay
    cdf = np.maximum.accumulate(cdf)
    umax = float(cdf[-1])
    u = np.linspace(0.0, umax, size)
    utab = np.interp(u, cdf, t)
    return utab, umax


def exit_time_cdf(t):
    """P(exit time of standard BM from (-1, 1) <= t)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(-12, 13)[:, None]
    st = np.sqrt(np.maximum(t, 1e-300))
    stay = ((-1.0) ** k * (ndtr((2 * k + 1) / st) - ndtr((2 * k - 1) / st))).sum(axis=0)
    return np.where(t > 0, 1.0 - stay, 0.0)


def sample_exit_times(rng: RngState, n: int) -> np.ndarray:
    utab, umax = exit_time_table()
    gen = rng.generator()
    return _draw_exit_times(gen, utab, umax, n)


def _draw_exit_times(gen, utab, umax, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = K.exit_time_draw(gen, utab, umax)
    return out


@dataclass(eq=False)
class CouplingSample:
    walk: Walk
    bm: BmPath
    alignment: np.ndarray
    max_deviation: float
    exit_radius: float
    crossing_times: np.ndarray | None = None
    end_time: float = 0.0
    method: str = "grid"

    def __post_init__(self):
        if np.any(np.diff(self.alignment) < 0):
            raise ValueError("alignment must be nondecreasing")
        if self.max_deviation < 0:
            raise ValueError("max_deviation must be nonnegative")


def default_dt(exit_radius: float) -> float:
    return 1e-3 if exit_radius <= 256 else 1e-3 * 256 / exit_radius


def skorokhod_embed(rng: RngState, dt: float | None, exit_radius: float, *,
                    method: str = "grid", max_dt: float = 1e-2,
                    horizon: float = 12.0, step_budget: int | None = None) -> CouplingSample:
    """Embed a simple random walk into a planar BM through unit crossings.

    method="grid" simulates each coordinate on the dt-grid and finds unit
    crossings by linear interpolation.  method="skeleton" samples the crossing
    times exactly and represents W by its crossing skeleton; use it when the
    dt-grid would not fit in memory.  ``horizon`` bounds the grid length to
    horizon * R^2 / dt samples per coordinate.
    """
    R = float(exit_radius)
    budget = default_budget(R) if step_budget is None else int(step_budget)
    gen = rng.generator()
    if method == "grid":
        dt = default_dt(R) if dt is None else float(dt)
        if not 0 < dt <= max_dt:
            raise ValueError(f"dt must lie in (0, {max_dt}]")
        max_grid = int(horizon * R * R / dt) + 1024
        if max_grid > 60_000_000:
            raise ValueError("grid too large for memory; use method='skeleton'")
        dev, status, X, Y, ng, codes, stimes, xtimes = K.grid_coupling(gen, R, dt, max_grid, budget)
        if status:
            raise CouplingAborted("crossing times exhausted the simulated horizon")
        walk = Walk((0, 0), codes.copy(), scale_index_of(R))
        bm = BmPath(dt, np.column_stack([X[:ng], Y[:ng]]))
        end = _grid_end_time(bm, R, float(stimes[-1]))
        return CouplingSample(walk, bm, stimes.copy(), float(dev), R, xtimes.copy(), end, "grid")
    if method == "skeleton":
        utab, umax = exit_time_table()
        dev, m, tau, status, codes, stimes, ev_t, ev_x, ev_y = K.skeleton_coupling(
            gen, R, utab, umax, budget, True)
        if status:
            raise CouplingAborted("step budget exhausted")
        walk = Walk((0, 0), codes.copy(), scale_index_of(R))
        times = np.concatenate([[0.0], ev_t])
        samples = np.column_stack([np.concatenate([[0], ev_x]), np.concatenate([[0], ev_y])])
        bm = BmPath(0.0, samples.astype(float), kind="skeleton", times=times)
        return CouplingSample(walk, bm, stimes.copy(), float(dev), R, None, float(tau), "skeleton")
    raise ValueError(f"unknown method {method!r}")


def _grid_end_time(bm: BmPath, R: float, tau: float) -> float:
    r2 = (bm.samples**2).sum(axis=1)
    hit = np.flatnonzero(r2 >= R * R)
    if hit.size and hit[0] * bm.dt < tau:
        return float(hit[0] * bm.dt)
    return tau


def coupling_max_deviation(rng: RngState, exit_radius: float, *, step_budget: int | None = None) -> float:
    """Skeleton-coupling deviation without materializing the paths."""
    R = float(exit_radius)
    budget = default_budget(R) if step_budget is None else int(step_budget)
    utab, umax = exit_time_table()
    dev, m, tau, status = K.skeleton_deviation(rng.generator(), R, utab, umax, budget)
    if status:
        raise CouplingAborted("step budget exhausted")
    return float(dev)


def max_coupling_deviation(sample: CouplingSample, t_max: float) -> float:
    """sup |W(t) - S(t)| over grid/event times and step times up to t_max."""
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    ts = sample.bm.sample_times()
    times = np.union1d(ts[ts <= t_max], sample.alignment[sample.alignment <= t_max])
    times = np.union1d(times, [0.0])
    w = sample.bm.at(times)
    verts = sample.walk.vertices
    idx = np.searchsorted(sample.alignment, times, side="right")
    s = verts[idx]
    return float(np.sqrt(((w - s) ** 2).sum(axis=1)).max())
