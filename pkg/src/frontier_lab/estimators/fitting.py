"""Log-log exponent regression with bootstrap intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BOOTSTRAP = 1000


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    points: tuple[tuple[float, float], ...]
    bootstrap_ci: tuple[float, float]

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
                "r2": self.r2, "points": [list(p) for p in self.points],
                "bootstrap_ci": list(self.bootstrap_ci)}


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float, float, float]:
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    sxx = (w * (x - xm) ** 2).sum()
    if sxx <= 0:
        raise ValueError("scales must not all coincide")
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    icpt = ym - slope * xm
    res = y - icpt - slope * x
    sse = (w * res**2).sum()
    syy = (w * (y - ym) ** 2).sum()
    n = len(x)
    stderr = float(np.sqrt(sse / (n - 2) / sxx)) if n > 2 else 0.0
    if sse <= 1e-24 * max(syy, 1.0):
        stderr, sse = 0.0, 0.0
    r2 = 1.0 - sse / syy if syy > 0 else 1.0
    return float(slope), float(icpt), stderr, float(min(max(r2, 0.0), 1.0))


def _slope_only(x, y, w) -> float:
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    return float((w * (x - xm) * (y - ym)).sum() / (w * (x - xm) ** 2).sum())


def fit_exponent(points, weights=None, *, decay: bool = False, replicates=None,
                 seed: int = 0) -> ExponentFit:
    """Weighted least squares of ln(value) on ln(scale).

    With ``decay`` the response is -ln(value), so a power law s^(-a) has
    slope a.  ``replicates`` is an optional (B, n_points) array of bootstrap
    values (resampled per-scale sample sets); without it the points
    themselves are resampled.  The interval is the 2.5/97.5 percentile range,
    widened if needed to contain the fitted slope.
    """
    pts = [(float(s), float(v)) for s, v in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    s = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(s <= 0) or np.any(v <= 0):
        raise ValueError("scales and values must be positive")
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != s.shape or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive, one per point")
    sign = -1.0 if decay else 1.0
    x = np.log(s)
    y = sign * np.log(v)
    slope, icpt, stderr, r2 = _wls(x, y, w)

    rng = np.random.default_rng(seed)
    boots = []
    if replicates is not None:
        reps = np.asarray(replicates, dtype=float)
        for row in reps:
            if np.all(row > 0):
                boots.append(_slope_only(x, sign * np.log(row), w))
    else:
        n = len(pts)
        for _ in range(N_BOOTSTRAP):
            idx = rng.integers(0, n, n)
            if np.ptp(x[idx]) > 0:
                boots.append(_slope_only(x[idx], y[idx], w[idx]))
    if boots:
        lo, hi = np.percentile(boots, [2.5, 97.5])
    else:
        lo = hi = slope
    ci = (float(min(lo, slope)), float(max(hi, slope)))
    return ExponentFit(slope, icpt, stderr, r2, tuple((float(a), float(b)) for a, b in zip(x, y)), ci)


def binomial_replicates(successes, samples, n_boot: int = N_BOOTSTRAP, seed: int = 0) -> np.ndarray:
    """(n_boot, n_points) resampled proportions, each scale resampled independently."""
    rng = np.random.default_rng(seed)
    k = np.asarray(successes, dtype=float)
    n = np.asarray(samples, dtype=np.int64)
    p = np.where(n > 0, k / np.maximum(n, 1), 0.0)
    return rng.binomial(n[None, :], p[None, :], size=(n_boot, len(n))) / np.maximum(n, 1)[None, :]


def resample_rows(rows: np.ndarray, stat, n_boot: int, rng: np.random.Generator) -> np.ndarray:
    """Bootstrap a statistic of a per-sample row array."""
    n = len(rows)
    out = np.empty(n_boot)
    for b in range(n_boot):
        out[b] = stat(rows[rng.integers(0, n, n)])
    return out
