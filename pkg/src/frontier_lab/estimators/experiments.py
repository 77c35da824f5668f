"""Named scaling experiments.

Each experiment is a deterministic function of its ExperimentConfig and
returns an ExperimentResult whose JSON form is byte-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import chisquare

from .. import _kernels as K
from ..frontier import default_disk_radii, edge_grid
from ..grid_geometry import (bad_disk_event, center_distances, discrete_boundary_mask,
                             four_arm_times)
from ..measures import EmpiricalMeasure, bl_distance, calibrate_c1
from ..sim import (StepBudgetExceeded, coupling_max_deviation, default_budget, make_rng,
                   sample_walk_until_exit, skorokhod_embed)
from .constants import REFERENCE
from .fitting import ExponentFit, binomial_replicates, fit_exponent, resample_rows
from .harness import (ExperimentConfig, ProbabilityEstimate, SampleBatch, _jsonable,
                      probability_from_batch, run_samples, run_sums, wilson_interval)

SCHEMA_VERSION = 1
NICE_BOX = (0.375, 0.0, 0.5, 0.125)


@dataclass
class ExperimentResult:
    experiment: str
    config: ExperimentConfig
    per_scale: list[dict]
    fit: ExponentFit | None
    expected: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def aborts(self) -> int:
        return int(sum(s.get("aborts", 0) for s in self.per_scale))

    @property
    def valid(self) -> bool:
        return all(s.get("valid", True) for s in self.per_scale)

    def to_dict(self) -> dict:
        from .. import __version__
        return _clean({
            "schema_version": SCHEMA_VERSION,
            "artifact_version": __version__,
            "experiment": self.experiment,
            "config_digest": self.config.digest(),
            "config": self.config.canonical(),
            "base_seed": self.config.base_seed,
            "per_scale": self.per_scale,
            "fit": self.fit.as_dict() if self.fit else None,
            "ci": list(self.fit.bootstrap_ci) if self.fit else None,
            "expected": self.expected,
            "extra": self.extra,
            "aborts": self.aborts,
            "valid": self.valid,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _clean(x: Any):
    x = _jsonable(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_clean(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _boot_seed(config: ExperimentConfig, tag: int = 0) -> int:
    return int(np.random.SeedSequence([config.base_seed, 0xB007, tag]).generate_state(1)[0])


def _budget(params: dict, R: float) -> int:
    return int(params.get("budget", default_budget(R)))


def _mark_walk(gen, g, stamp, x0, y0, R, budget):
    n, x, y = K.walk_mark(gen, x0, y0, R * R, budget, g.E, stamp, g.off, g.W)
    if n < 0:
        raise StepBudgetExceeded(f"walk exceeded {budget} steps")
    return x, y


def _trace_from(g, stamp, x, y):
    return g.trace(stamp, x, y, K.outward_axis(x, y))


def _prob_fit(config, scales, ests: list[ProbabilityEstimate], *, decay: bool, tag: int = 0):
    """Fit over the scales with a positive estimate."""
    keep = [i for i, e in enumerate(ests) if e.p > 0]
    if len(keep) < 3:
        return None, [scales[i] for i in range(len(scales)) if i not in keep]
    s = [scales[i] for i in keep]
    k = [ests[i].successes for i in keep]
    n = [ests[i].samples for i in keep]
    p = np.array(k) / np.array(n)
    w = np.array(n) * p / np.maximum(1 - p, 1.0 / np.array(n))
    reps = binomial_replicates(k, n, seed=_boot_seed(config, tag))
    fit = fit_exponent(list(zip(s, p)), w, decay=decay, replicates=reps)
    return fit, [scales[i] for i in range(len(scales)) if i not in keep]


# ------------------------------------------------------------------ one arm

def _eval_one_arm(rng, R, params):
    r = int(params["r"])
    g = edge_grid(R + 2)
    stamp = g.next_stamp()
    x, y = _mark_walk(rng.generator(), g, stamp, r, 0, R, _budget(params, R))
    L, _, _ = _trace_from(g, stamp, x, y)
    return 0.0 if K.disk_enclosed(g.cbuf, L, 0.0, 0.0, float(r)) else 1.0


def one_arm_experiment(config: ExperimentConfig) -> ExperimentResult:
    """P(a walk from the circle of radius r reaches R without disconnecting
    the disk of radius r) against R/r."""
    if "r" in config.params:
        r = int(config.params["r"])
        outer = list(config.scales)
    else:
        r, outer = config.scales[0], list(config.scales[1:])
    if any(R <= r for R in outer):
        raise ValueError("every outer radius must exceed r")
    params = {**config.params, "r": r}
    ests = []
    rows = []
    for R in outer:
        batch = run_samples(_eval_one_arm, R, config.samples_per_scale, config.base_seed,
                            params, config.workers)
        e = probability_from_batch(batch)
        ests.append(e)
        rows.append({"scale": R, "ratio": R / r, **e.as_dict()})
    fit, dropped = _prob_fit(config, [R / r for R in outer], ests, decay=True)
    return ExperimentResult("one_arm", config, rows, fit, {"slope": REFERENCE.one_arm},
                            {"r": r, "dropped_ratios": dropped})


# ------------------------------------------------------------------ two arms / dimension

def _eval_two_arm(rng, R, params):
    g = edge_grid(R + 2)
    stamp = g.next_stamp()
    gen = rng.generator()
    budget = _budget(params, R)
    x, y = _mark_walk(gen, g, stamp, 0, 0, R, budget)
    _mark_walk(gen, g, stamp, 0, 0, R, budget)
    _, _, vstamp = _trace_from(g, stamp, x, y)
    return 1.0 if g.V[g.off * g.W + g.off] == vstamp else 0.0


def two_arm_experiment(config: ExperimentConfig) -> ExperimentResult:
    """P(origin on the frontier of two independent walks stopped at radius R)."""
    ests, rows = [], []
    for R in config.scales:
        e = probability_from_batch(run_samples(_eval_two_arm, R, config.samples_per_scale,
                                               config.base_seed, config.params, config.workers))
        ests.append(e)
        rows.append({"scale": R, **e.as_dict()})
    fit, dropped = _prob_fit(config, list(config.scales), ests, decay=True)
    return ExperimentResult("two_arm", config, rows, fit, {"slope": REFERENCE.alpha},
                            {"dropped_scales": dropped})


def _eval_dimension(rng, R, params):
    g = edge_grid(R + 2)
    stamp = g.next_stamp()
    x, y = _mark_walk(rng.generator(), g, stamp, 0, 0, R, _budget(params, R))
    _, nv, _ = _trace_from(g, stamp, x, y)
    return float(nv)


def _mean_fit(config, scales, samples: list[np.ndarray], *, decay=False, stat=np.mean, tag=0):
    vals = np.array([stat(s) for s in samples])
    rng = np.random.default_rng(_boot_seed(config, tag))
    reps = np.column_stack([resample_rows(s, stat, 1000, rng) for s in samples])
    if stat is np.mean:
        var = np.array([s.var(ddof=1) / len(s) / stat(s) ** 2 for s in samples])
    else:
        var = reps.var(axis=0) / np.maximum(vals, 1e-300) ** 2
    w = 1.0 / np.maximum(var, 1e-300)
    return fit_exponent(list(zip(scales, vals)), w, decay=decay, replicates=reps), vals, reps


def frontier_dimension_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Mean number of frontier vertices of a walk stopped at radius R."""
    samples, rows = [], []
    for R in config.scales:
        b = run_samples(_eval_dimension, R, config.samples_per_scale, config.base_seed,
                        config.params, config.workers)
        v = b.values[:, 0]
        samples.append(v)
        rows.append({"scale": R, "mean_count": float(v.mean()), "sd": float(v.std(ddof=1)),
                     "samples": len(v), "aborts": b.aborts, "valid": b.valid})
    fit, _, _ = _mean_fit(config, list(config.scales), samples)
    return ExperimentResult("frontier_dimension", config, rows, fit,
                            {"slope": REFERENCE.frontier_dim})


# ------------------------------------------------------------------ Green profile

def green_probe_radii(R: int) -> np.ndarray:
    """Integer distances k along the axes with d_z >= R^(-1/6), z = k/R."""
    dmin = R ** (-1.0 / 6.0)
    k = np.arange(1, R)
    z = k / R
    return k[np.minimum(z, 1 - z) >= dmin]


def _eval_green(rng, R, params):
    ks = np.asarray(params["probe_k"], dtype=np.int64)
    g = edge_grid(R + 2)
    stamp = g.next_stamp()
    x, y = _mark_walk(rng.generator(), g, stamp, 0, 0, R, _budget(params, R))
    _, _, vstamp = _trace_from(g, stamp, x, y)
    n = len(ks)
    out = np.zeros(4 * n, dtype=np.int64)
    z = np.zeros(n, dtype=np.int64)
    for rot, (px, py) in enumerate(((ks, z), (z, ks), (-ks, z), (z, -ks))):
        K.probe_hits(g.V, vstamp, g.off, g.W, px, py, out[rot * n:(rot + 1) * n])
    return out


def green_shape_experiment(config: ExperimentConfig) -> ExperimentResult:
    """R^alpha P(z on the frontier) along the axes, regressed on d_z per branch."""
    R = config.scales[-1]
    ks = green_probe_radii(R) if "probe_k" not in config.params else np.asarray(config.params["probe_k"])
    params = {**config.params, "probe_k": [int(k) for k in ks]}
    b = run_sums(_eval_green, R, config.samples_per_scale, config.base_seed, params, config.workers)
    N = b.samples - b.aborts
    n = len(ks)
    per_rot = b.values[0].reshape(4, n)
    hits = per_rot.sum(axis=0)
    trials = 4 * N
    z = ks / R
    d = np.minimum(z, 1 - z)
    est = R ** REFERENCE.alpha * hits / trials
    rows = []
    for i, k in enumerate(ks):
        lo, hi = wilson_interval(hits[i], trials)
        rows.append({"k": int(k), "z": float(z[i]), "d_z": float(d[i]), "hits": int(hits[i]),
                     "trials": int(trials), "estimate": float(est[i]),
                     "ci": [R ** REFERENCE.alpha * lo, R ** REFERENCE.alpha * hi],
                     "per_rotation": [int(h) for h in per_rot[:, i]]})
    fits = {}
    for name, mask in (("outer", z >= 0.5), ("inner", z < 0.5)):
        sel = mask & (hits > 0)
        if sel.sum() < 3:
            fits[name] = None
            continue
        p = hits[sel] / trials
        reps = binomial_replicates(hits[sel], np.full(sel.sum(), trials),
                                   seed=_boot_seed(config, 1 if name == "outer" else 2))
        w = trials * p / (1 - p)
        fits[name] = fit_exponent(list(zip(d[sel], est[sel])), w,
                                  replicates=reps * R ** REFERENCE.alpha)
    # rotation check: chi-square of the four rotation totals against equal shares
    tot = per_rot.sum(axis=1)
    rot_p = float(chisquare(tot).pvalue) if tot.sum() > 0 else 1.0
    extra = {"scale": R, "samples": N, "fits": {k: (v.as_dict() if v else None) for k, v in fits.items()},
             "rotation_totals": [int(t) for t in tot], "rotation_chisquare_p": rot_p}
    return ExperimentResult("green_shape", config,
                            [{"scale": R, "aborts": b.aborts, "valid": b.valid, "probes": rows}],
                            fits["outer"], {"outer_slope": 1 - REFERENCE.alpha,
                                            "inner_slope": 0.25 - REFERENCE.alpha}, extra)


# ------------------------------------------------------------------ two-point

def _box_lattice(R: int, box) -> tuple[int, int, int, int]:
    x0, y0, x1, y1 = box
    return (int(math.ceil(x0 * R)), int(math.floor(x1 * R)), int(math.ceil(y0 * R)), int(math.floor(y1 * R)))


def _eval_two_point(rng, R, params):
    x0, x1, y0, y1 = params["lattice_box"]
    seps = np.asarray(params["separations"], dtype=np.int64)
    g = edge_grid(R + 2)
    stamp = g.next_stamp()
    x, y = _mark_walk(rng.generator(), g, stamp, 0, 0, R, _budget(params, R))
    _, _, vstamp = _trace_from(g, stamp, x, y)
    single = np.zeros(1, dtype=np.int64)
    both = np.zeros(len(seps), dtype=np.int64)
    K.pair_hits(g.V, vstamp, g.off, g.W, x0, x1, y0, y1, seps, single, both)
    return np.concatenate([single, both])


def two_point_experiment(config: ExperimentConfig) -> ExperimentResult:
    """P(z and w on the frontier) / (P(z) P(w)) against |z - w| in a nice box."""
    R = config.scales[-1]
    seps = [int(s) for s in config.params.get("separations", (4, 8, 16, 32))]
    if min(seps) < 4:
        raise ValueError("separations must be at least 4 lattice units")
    box = tuple(config.params.get("box", NICE_BOX))
    lb = _box_lattice(R, box)
    params = {**config.params, "separations": seps, "lattice_box": list(lb), "box": list(box)}
    b = run_samples(_eval_two_point, R, config.samples_per_scale, config.base_seed, params, config.workers)
    nx, ny = lb[1] - lb[0] + 1, lb[3] - lb[2] + 1
    npts = nx * ny
    npairs = np.array([(nx - s) * ny + nx * (ny - s) for s in seps], dtype=float)

    def ratios(rows):
        N = len(rows)
        tot = rows.sum(axis=0)
        p1 = tot[0] / (N * npts)
        p2 = tot[1:] / (N * npairs)
        return p2 / p1**2 if p1 > 0 else np.full(len(seps), np.nan)

    vals = b.values
    r = ratios(vals)
    rng = np.random.default_rng(_boot_seed(config))
    reps = np.empty((1000, len(seps)))
    for i in range(1000):
        reps[i] = ratios(vals[rng.integers(0, len(vals), len(vals))])
    sd = np.nanstd(reps, axis=0)
    tot = vals.sum(axis=0)
    rows = [{"separation": s, "ratio": float(r[i]), "pair_hits": int(tot[1 + i]),
             "pairs_per_sample": int(npairs[i]), "ratio_sd": float(sd[i])} for i, s in enumerate(seps)]
    keep = np.isfinite(r) & (r > 0)
    fit = None
    if keep.sum() >= 3:
        w = 1.0 / np.maximum((sd[keep] / r[keep]) ** 2, 1e-300)
        fit = fit_exponent(list(zip(np.array(seps)[keep], r[keep])), w, replicates=reps[:, keep])
    per_scale = [{"scale": R, "samples": len(vals), "aborts": b.aborts, "valid": b.valid,
                  "single_hits": int(tot[0]), "points_per_sample": npts, "separations": rows}]
    return ExperimentResult("two_point", config, per_scale, fit, {"slope": -REFERENCE.alpha},
                            {"lattice_box": list(lb), "mean_ratio_ge_1": bool(np.nanmean(r) >= 1)})


# ------------------------------------------------------------------ crossing tails

def _eval_crossings(rng, ratio_key, params):
    N = int(params["exit_radius"])
    Ra = float(params["outer_radius"])
    ratios = params["ratios"]
    x0, x1, y0, y1 = params["lattice_box"]
    gen = rng.generator()
    cx = int(gen.integers(x0, x1 + 1))
    cy = int(gen.integers(y0, y1 + 1))
    g = edge_grid(N + 2)
    stamp = g.next_stamp()
    x, y = _mark_walk(gen, g, stamp, 0, 0, N, _budget(params, N))
    L, _, _ = _trace_from(g, stamp, x, y)
    return np.array([K.count_traversals(g.cbuf, L, float(cx), float(cy), Ra / q, Ra)
                     for q in ratios], dtype=float)


def crossing_counts(config: ExperimentConfig) -> tuple[np.ndarray, SampleBatch, dict]:
    params = {"exit_radius": 512, "outer_radius": 64, "box": list(NICE_BOX), **config.params}
    N = int(params["exit_radius"])
    params["ratios"] = [int(q) for q in config.scales]
    params["lattice_box"] = list(_box_lattice(N, params["box"]))
    b = run_samples(_eval_crossings, 0, config.samples_per_scale, config.base_seed, params, config.workers)
    return b.values, b, params


def crossing_tail_experiments(config: ExperimentConfig, ks=(1, 2, 3, 4)) -> dict[int, ExperimentResult]:
    """P(the frontier curve crosses A(x, r, R) at least k times), x uniform in
    a nice box, against R/r (config.scales).  One sample set serves all k."""
    counts, b, params = crossing_counts(config)
    out = {}
    for k in ks:
        if not 1 <= k <= 6:
            raise ValueError("k must lie in 1..6")
        ests, rows = [], []
        for j, q in enumerate(config.scales):
            s = int((counts[:, j] >= k).sum())
            n = len(counts)
            e = ProbabilityEstimate(s / n, wilson_interval(s, n), s, n, b.aborts, b.valid)
            ests.append(e)
            rows.append({"scale": q, "ratio": 1.0 / q, "inner_radius": params["outer_radius"] / q,
                         **e.as_dict()})
        fit, dropped = _prob_fit(config, list(config.scales), ests, decay=True, tag=k)
        out[k] = ExperimentResult(f"crossing_tail_k{k}", config, rows, fit,
                                  {"slope_lower_bound": REFERENCE.lambda_of_k(k) - 0.1,
                                   "lambda": REFERENCE.lambda_of_k(k)},
                                  {"k": k, "dropped_ratios": dropped,
                                   "lattice_box": params["lattice_box"]})
    return out


def crossing_tail_experiment(config: ExperimentConfig, k: int) -> ExperimentResult:
    return crossing_tail_experiments(config, (k,))[k]


# ------------------------------------------------------------------ bad disks

def _eval_bad_disk(rng, _, params):
    N = int(params["exit_radius"])
    Ra = float(params["outer_radius"])
    x0, x1, y0, y1 = params["lattice_box"]
    # the centre uses a child stream so it is independent of the walk
    cg = np.random.default_rng(np.random.SeedSequence(rng.seed, spawn_key=(rng.stream, 1)))
    c = (int(cg.integers(x0, x1 + 1)), int(cg.integers(y0, y1 + 1)))
    v = sample_walk_until_exit(rng, (0, 0), N, params.get("budget")).vertices
    dist = center_distances(v, c)
    out = []
    for q in params["ratios"]:
        t = four_arm_times(v, c, Ra / q, Ra, dist=dist)
        arms = None if t is None else [v[t[i]:t[i + 1] + 1] for i in (0, 2, 4, 6)]
        out.append(1.0 if bad_disk_event(arms) else 0.0)
    return np.array(out)


def bad_disk_experiment(config: ExperimentConfig) -> ExperimentResult:
    """P(four-arm construction succeeds and the arms pair up disjointly)
    against R/r (config.scales)."""
    params = {"exit_radius": 256, "outer_radius": 32, "box": list(NICE_BOX), **config.params}
    N = int(params["exit_radius"])
    params["ratios"] = [int(q) for q in config.scales]
    params["lattice_box"] = list(_box_lattice(N, params["box"]))
    b = run_samples(_eval_bad_disk, 0, config.samples_per_scale, config.base_seed, params, config.workers)
    ests, rows = [], []
    for j, q in enumerate(config.scales):
        e = probability_from_batch(SampleBatch(b.values[:, j:j + 1], b.aborts, b.samples))
        ests.append(e)
        rows.append({"scale": q, "ratio": 1.0 / q, **e.as_dict()})
    fit, dropped = _prob_fit(config, list(config.scales), ests, decay=True)
    return ExperimentResult("bad_disk", config, rows, fit, {"slope": REFERENCE.xi22},
                            {"dropped_ratios": dropped})


# ------------------------------------------------------------------ frontier disks

def _eval_frontier_disk(rng, R, params):
    zx, zy = params["z"]
    cx, cy = int(round(zx * R)), int(round(zy * R))
    rho, env = default_disk_radii(R)
    rho = params.get("disk_radius", rho)
    env = params.get("envelope_radius", env)
    walk = sample_walk_until_exit(rng, (0, 0), R, params.get("budget"))
    v = walk.vertices
    g = edge_grid(R + 4)
    stamp = g.next_stamp()
    K.mark_codes(0, 0, walk.steps, 0, len(walk), g.E, stamp, g.off, g.W)
    ex, ey = walk.end
    _, _, vstamp = _trace_from(g, stamp, ex, ey)
    point = g.V[(cx + g.off) * g.W + (cy + g.off)] == vstamp

    d2 = ((v - (cx, cy)) ** 2).sum(axis=1)
    disk = False
    if (d2 < rho * rho).any():
        idx = np.flatnonzero(discrete_boundary_mask(v, (cx, cy), rho))
        a, b = int(idx[0]), int(idx[-1])
        if (d2[a:b + 1] < env * env).all():
            s2 = g.next_stamp()
            K.mark_codes(0, 0, walk.steps, 0, a, g.E, s2, g.off, g.W)
            K.mark_codes(int(v[b, 0]), int(v[b, 1]), walk.steps, b, len(walk), g.E, s2, g.off, g.W)
            ir = int(math.ceil(rho)) + 1
            fi, fj = [], []
            for i in range(cx - ir, cx + ir):
                for j in range(cy - ir, cy + ir):
                    dx = max(i - cx, 0, cx - i - 1)
                    dy = max(j - cy, 0, cy - j - 1)
                    if dx * dx + dy * dy < rho * rho:
                        fi.append(i)
                        fj.append(j)
            far2 = float((R + 2) ** 2)
            fst = g.next_stamp()
            disk = bool(K.faces_reach_far(g.E, s2, g.off, g.W, np.array(fi, dtype=np.int64),
                                          np.array(fj, dtype=np.int64), far2, g.F, fst, g.queue))
    return np.array([float(point), float(disk)])


def frontier_disk_ratio_experiment(config: ExperimentConfig) -> ExperimentResult:
    """P(frontier-disk event at z) / P(z on the frontier), sharing samples."""
    params = {"z": [0.4375, 0.0625], **config.params}
    rows, ratios = [], []
    for R in config.scales:
        b = run_samples(_eval_frontier_disk, R, config.samples_per_scale, config.base_seed,
                        params, config.workers)
        n = len(b.values)
        kp = int(b.values[:, 0].sum())
        kd = int(b.values[:, 1].sum())
        rho, env = default_disk_radii(R)
        if kp > 0:
            ratio, lower_bound = (kd / n) / (kp / n), False
        else:
            ratio, lower_bound = (kd / n) / wilson_interval(0, n)[1], True
        ratios.append(ratio)
        rows.append({"scale": R, "point_hits": kp, "disk_hits": kd, "samples": n,
                     "ratio": ratio, "ratio_is_lower_bound": lower_bound,
                     "disk_radius": rho, "envelope_radius": env,
                     "normalized": ratio / (math.log(R) * R ** (0.75 * REFERENCE.alpha)),
                     "aborts": b.aborts, "valid": b.valid})
    fit = None
    pos = [(R, r) for R, r in zip(config.scales, ratios) if r > 0]
    if len(pos) >= 3:
        fit = fit_exponent(pos)
    return ExperimentResult("frontier_disk_ratio", config, rows, fit,
                            {"growth": "n e^{3 alpha n / 4}", "power": 0.75 * REFERENCE.alpha},
                            {"monotone": bool(all(b > a for a, b in zip(ratios, ratios[1:]))),
                             "all_above_one": bool(all(r > 1 for r in ratios))})


# ------------------------------------------------------------------ occupation measure

def _eval_occupation(rng, R, params):
    x0, x1, y0, y1 = _box_lattice(R, params["box"])
    cells = int(params["cells"])
    g = edge_grid(R + 2)
    stamp = g.next_stamp()
    x, y = _mark_walk(rng.generator(), g, stamp, 0, 0, R, _budget(params, R))
    L, nv, vstamp = _trace_from(g, stamp, x, y)
    box = K.count_box_vertices(g.V, vstamp, g.off, g.W, x0, x1, y0, y1)
    hist = np.zeros(cells * cells, dtype=np.int64)
    K.contour_histogram(g.cbuf, L, g.V, vstamp, g.off, g.W, R, cells, hist)
    return np.concatenate([[box, nv], hist])


def _grid_measure(mean_hist: np.ndarray, cells: int, mass: float, n: int) -> EmpiricalMeasure:
    keep = np.flatnonzero(mean_hist > 0)
    c = (np.column_stack([keep // cells, keep % cells]) + 0.5) / cells * 2 - 1
    c = c / np.maximum(np.sqrt((c**2).sum(axis=1)), 1.0)[:, None]
    return EmpiricalMeasure(c, mean_hist[keep] * mass, n)


def occupation_stability_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Mean and variance of nu_n(V) on a nice box, after calibrating c1 so
    that the mean total mass is scale-free."""
    if len(config.scales) < 3:
        raise ValueError("need at least three scales")
    params = {"box": list(NICE_BOX), "cells": 16, "h": 0.125, **config.params}
    cells = int(params["cells"])
    data = {}
    for R in config.scales:
        data[R] = run_samples(_eval_occupation, R, config.samples_per_scale, config.base_seed,
                              params, config.workers)
    fit_c = calibrate_c1({math.log(R): float(data[R].values[:, 1].mean()) for R in config.scales})
    c1 = 1.0 / fit_c.constant
    rng = np.random.default_rng(_boot_seed(config))
    rows, means, measures = [], [], []
    for R in config.scales:
        v = data[R].values
        unit = c1 * R ** (-REFERENCE.frontier_dim)
        box = v[:, 0] * unit
        var_boot = resample_rows(box, lambda a: a.var(ddof=1), 1000, rng)
        mean_boot = resample_rows(box, np.mean, 1000, rng)
        means.append(float(box.mean()))
        measures.append(_grid_measure(v[:, 2:].mean(axis=0), cells, unit, int(round(math.log2(R)))))
        rows.append({"scale": R, "mean": float(box.mean()), "variance": float(box.var(ddof=1)),
                     "mean_ci": [float(np.percentile(mean_boot, 2.5)), float(np.percentile(mean_boot, 97.5))],
                     "variance_ci": [float(np.percentile(var_boot, 2.5)), float(np.percentile(var_boot, 97.5))],
                     "mean_box_count": float(v[:, 0].mean()), "mean_frontier_count": float(v[:, 1].mean()),
                     "samples": len(v), "aborts": data[R].aborts, "valid": data[R].valid})
    ratios = [b / a if a > 0 else None for a, b in zip(means, means[1:])]
    bl = [bl_distance(a, b, float(params["h"])) for a, b in zip(measures, measures[1:])]
    return ExperimentResult("occupation_stability", config, rows, None, {"ratio": 1.0},
                            {"c1": c1, "calibration_constant": fit_c.constant,
                             "calibration_spread": fit_c.spread, "successive_mean_ratios": ratios,
                             "bl_successive": bl, "box": params["box"]})


# ------------------------------------------------------------------ coupling

def _eval_coupling(rng, R, params):
    return coupling_max_deviation(rng, R, step_budget=params.get("budget"))


def embedded_step_counts(seed: int, n_steps: int, radius: int = 64) -> np.ndarray:
    """Counts of the four step codes over embedded walks totalling n_steps."""
    counts = np.zeros(4, dtype=np.int64)
    total = 0
    i = 0
    while total < n_steps:
        s = skorokhod_embed(make_rng(seed, i), None, radius, method="skeleton")
        take = s.walk.steps[: n_steps - total]
        counts += np.bincount(take, minlength=4)
        total += len(take)
        i += 1
    return counts


def coupling_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Median sup |W - S| of the Skorokhod coupling against R."""
    samples, rows = [], []
    for R in config.scales:
        b = run_samples(_eval_coupling, R, config.samples_per_scale, config.base_seed,
                        config.params, config.workers)
        v = b.values[:, 0]
        samples.append(v)
        rows.append({"scale": R, "median": float(np.median(v)), "mean": float(v.mean()),
                     "q10": float(np.quantile(v, 0.1)), "q90": float(np.quantile(v, 0.9)),
                     "samples": len(v), "aborts": b.aborts, "valid": b.valid})
    fit, _, _ = _mean_fit(config, list(config.scales), samples, stat=np.median)
    n_steps = int(config.params.get("uniformity_steps", 100_000))
    counts = embedded_step_counts(_boot_seed(config, 9), n_steps)
    p = float(chisquare(counts).pvalue)
    return ExperimentResult("coupling", config, rows, fit, {"slope_range": [0.4, 0.6]},
                            {"step_counts": [int(c) for c in counts], "uniformity_p": p})


EXPERIMENTS = {
    "one_arm": one_arm_experiment,
    "two_arm": two_arm_experiment,
    "frontier_dimension": frontier_dimension_experiment,
    "green_shape": green_shape_experiment,
    "two_point": two_point_experiment,
    "crossing_tail": crossing_tail_experiments,
    "bad_disk": bad_disk_experiment,
    "frontier_disk_ratio": frontier_disk_ratio_experiment,
    "occupation_stability": occupation_stability_experiment,
    "coupling": coupling_experiment,
}

DEFAULT_CONFIGS = {
    "one_arm": dict(scales=[32, 64, 128, 256, 512], samples_per_scale=100_000, params={"r": 16}),
    "two_arm": dict(scales=[32, 64, 128, 256, 512, 1024], samples_per_scale=10_000),
    "frontier_dimension": dict(scales=[32, 64, 128, 256, 512, 1024], samples_per_scale=10_000),
    "green_shape": dict(scales=[512], samples_per_scale=100_000),
    "two_point": dict(scales=[512], samples_per_scale=100_000, params={"separations": [4, 8, 16, 32]}),
    "crossing_tail": dict(scales=[4, 8, 16], samples_per_scale=100_000,
                          params={"exit_radius": 512, "outer_radius": 64}),
    "bad_disk": dict(scales=[4, 8, 16], samples_per_scale=1_000_000,
                     params={"exit_radius": 256, "outer_radius": 32}),
    "frontier_disk_ratio": dict(scales=[64, 128, 256], samples_per_scale=10_000),
    "occupation_stability": dict(scales=[256, 512, 1024], samples_per_scale=10_000),
    "coupling": dict(scales=[64, 128, 256, 512, 1024, 2048], samples_per_scale=1_000),
}


def default_config(name: str, **overrides) -> ExperimentConfig:
    kw = {**DEFAULT_CONFIGS[name]}
    params = {**kw.pop("params", {}), **overrides.pop("params", {})}
    kw.update(overrides)
    return ExperimentConfig(params=params, **kw)
