import json
import math

import numpy as np
import pytest

from frontier_lab import _kernels as K
from frontier_lab.estimators import (REFERENCE, ExperimentConfig, estimate_probability,
                                     fit_exponent, intersection_exponent, lambda_of_k,
                                     run_samples, run_sums, wilson_interval)
from frontier_lab.estimators import experiments as E
from frontier_lab.estimators.fitting import binomial_replicates
from frontier_lab.frontier import (edge_grid, frontier_vertices, is_frontier_point,
                                   trace_frontier_curve)
from frontier_lab.grid_geometry import (AnnulusSpec, Region, build_occupancy, crossing_segments,
                                        disconnects, union_occupancy)
from frontier_lab.sim import StepBudgetExceeded, Walk, make_rng, sample_walk_until_exit


# -------------------------------------------------------------- exponents

def test_exact_exponents():
    assert intersection_exponent(1, 1) == pytest.approx(5 / 4, abs=1e-12)
    assert intersection_exponent(2, 2) == pytest.approx(35 / 12, abs=1e-12)
    assert abs(intersection_exponent(2, 1e-12) - 2 / 3) < 1e-5
    assert abs(intersection_exponent(1, 1e-12) - 1 / 4) < 1e-5


def test_exponent_increasing():
    lams = [0.01, 0.5, 1, 2, 5]
    for k in (1, 2, 3):
        vals = [intersection_exponent(k, lam) for lam in lams]
        assert all(b > a for a, b in zip(vals, vals[1:]))
    assert intersection_exponent(3, 1) > intersection_exponent(2, 1)


@pytest.mark.parametrize("k,lam", [(0, 1), (1.5, 1), (1, 0), (1, -2)])
def test_exponent_domain(k, lam):
    with pytest.raises(ValueError):
        intersection_exponent(k, lam)


def test_reference_constants():
    assert abs(REFERENCE.alpha - intersection_exponent(2, 1e-12)) < 1e-6
    assert REFERENCE.xi22 == intersection_exponent(2, 2)
    assert REFERENCE.frontier_dim == pytest.approx(2 - REFERENCE.alpha, abs=1e-12)
    assert [lambda_of_k(k) for k in range(1, 5)] == [0.25, 0.5, 0.75, 1.0]


# -------------------------------------------------------------- harness

def always(rng, scale, params):
    return 1.0


def coin(rng, scale, params):
    return float(rng.generator().random() < 0.5)


def flaky(rng, scale, params):
    if rng.stream % 50 == 0:
        raise StepBudgetExceeded("budget")
    return 1.0


def counts(rng, scale, params):
    return np.array([int(rng.generator().integers(0, 10)), 1])


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig([32, 32], 100)
    with pytest.raises(ValueError):
        ExperimentConfig([32], 99)
    with pytest.raises(ValueError):
        ExperimentConfig([], 100)
    with pytest.raises(ValueError):
        ExperimentConfig([32], 100, base_seed=2**64)


def test_digest_ignores_workers():
    a = ExperimentConfig([32, 64], 100, 7, workers=1, params={"r": 4})
    b = ExperimentConfig([32, 64], 100, 7, workers=4, params={"r": 4})
    c = ExperimentConfig([32, 64], 100, 8, workers=1, params={"r": 4})
    assert a.digest() == b.digest() != c.digest()
    assert json.loads(json.dumps(a.canonical())) == a.canonical()


def test_always_true():
    e = estimate_probability(always, ExperimentConfig([8], 200), 8)
    assert e.p == 1.0 and e.ci[1] == 1.0 and e.ci[0] > 0.98
    assert e.valid and e.aborts == 0


def test_fair_coin_pinned():
    e = estimate_probability(coin, ExperimentConfig([8], 10_000, base_seed=42), 8)
    assert 0.48 <= e.p <= 0.52
    assert e.successes == 5078


def test_worker_count_does_not_change_results():
    one = run_samples(coin, 8, 400, 42, workers=1)
    three = run_samples(coin, 8, 400, 42, workers=3)
    assert one.values.tobytes() == three.values.tobytes()
    s1 = run_sums(counts, 8, 300, 1, workers=1)
    s3 = run_sums(counts, 8, 300, 1, workers=3)
    assert np.array_equal(s1.values, s3.values) and s1.values[0, 1] == 300


def test_env_var_overrides_workers(monkeypatch):
    from frontier_lab.estimators.harness import effective_workers
    monkeypatch.setenv("FRONTIER_LAB_THREADS", "3")
    assert effective_workers(1) == 3
    monkeypatch.delenv("FRONTIER_LAB_THREADS")
    assert effective_workers(2) == 2


def test_abort_fraction_marks_invalid():
    b = run_samples(flaky, 8, 200, 0)
    assert b.aborts == 4 and len(b.values) == 196
    assert not b.valid


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)
    w1 = np.diff(wilson_interval(300, 1000))[0]
    w4 = np.diff(wilson_interval(1200, 4000))[0]
    assert w1 / w4 == pytest.approx(2.0, rel=0.02)


# -------------------------------------------------------------- fitting

def test_exact_power_law():
    pts = [(s, 7 * s**-0.25) for s in (2, 4, 8, 16, 32)]
    f = fit_exponent(pts)
    assert f.slope == pytest.approx(-0.25, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(7), abs=1e-12)
    assert f.stderr == 0.0 and f.r2 == 1.0
    assert f.bootstrap_ci[0] <= f.slope <= f.bootstrap_ci[1]
    assert fit_exponent(pts, decay=True).slope == pytest.approx(0.25, abs=1e-12)


def test_noisy_power_law():
    rng = np.random.default_rng(0)
    s = 2.0 ** np.arange(3, 11)
    pts = [(x, 3 * x**0.75 * (1 + 0.05 * rng.standard_normal())) for x in s]
    f = fit_exponent(pts)
    assert abs(f.slope - 0.75) < 0.02
    assert f.bootstrap_ci[0] <= f.slope <= f.bootstrap_ci[1]


def test_fit_preconditions():
    with pytest.raises(ValueError):
        fit_exponent([(1, 1), (2, 2)])
    with pytest.raises(ValueError):
        fit_exponent([(1, 1), (2, 0), (4, 3)])
    with pytest.raises(ValueError):
        fit_exponent([(1, 1), (2, 2), (4, 3)], weights=[1, 1])


def test_binomial_replicate_ci_covers_truth():
    s = np.array([32, 64, 128, 256])
    p = 0.9 * s**-0.5
    n = np.full(4, 20_000)
    k = np.round(p * n).astype(int)
    reps = binomial_replicates(k, n, seed=1)
    f = fit_exponent(list(zip(s, k / n)), decay=True, replicates=reps)
    assert f.bootstrap_ci[0] < 0.5 < f.bootstrap_ci[1]


# -------------------------------------------------------------- fast events vs reference

@pytest.mark.parametrize("seed", range(60))
def test_one_arm_event_matches_disconnects(seed):
    rng = make_rng(3, seed)
    r, R = 6, 24
    fast = E._eval_one_arm(rng, R, {"r": r})
    w = sample_walk_until_exit(rng, (r, 0), R)
    occ = build_occupancy(w)
    occ.bbox = (-R - 4, -R - 4, R + 4, R + 4)
    assert fast == float(not disconnects(occ, Region.disk((0, 0), r)))


@pytest.mark.parametrize("seed", range(60))
def test_two_arm_event_matches_frontier(seed):
    rng = make_rng(4, seed)
    R = 12
    fast = E._eval_two_arm(rng, R, {})
    gen = rng.generator()
    walks = []
    for _ in range(2):
        buf = np.empty(100_000, dtype=np.uint8)
        status, n, _, _ = K.walk_record(gen, 0, 0, R * R, 10**6, 0, buf)
        assert status == 0
        walks.append(Walk((0, 0), buf[:n]))
    occ = union_occupancy(*(build_occupancy(w) for w in walks))
    assert fast == float(is_frontier_point(occ, (0, 0)))


@pytest.mark.parametrize("seed", range(30))
def test_dimension_count_matches_frontier(seed):
    rng = make_rng(5, seed)
    fast = E._eval_dimension(rng, 32, {})
    w = sample_walk_until_exit(rng, (0, 0), 32)
    fr = frontier_vertices(build_occupancy(w))
    assert fast == len(fr)
    assert fast <= len(w) + 1


@pytest.mark.parametrize("seed", range(20))
def test_two_point_hits_match_frontier(seed):
    rng = make_rng(6, seed)
    R = 64
    lb = E._box_lattice(R, E.NICE_BOX)
    seps = [4, 8]
    fast = E._eval_two_point(rng, R, {"lattice_box": list(lb), "separations": seps})
    fr = frontier_vertices(build_occupancy(sample_walk_until_exit(rng, (0, 0), R)))
    x0, x1, y0, y1 = lb
    box = {(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)}
    hit = fr & box
    assert fast[0] == len(hit)
    for j, s in enumerate(seps):
        pairs = sum(((x + s, y) in hit) + ((x, y + s) in hit) for x, y in hit)
        assert fast[1 + j] == pairs


@pytest.mark.parametrize("seed", range(20))
def test_crossing_counts_match_segments(seed):
    rng = make_rng(7, seed)
    params = {"exit_radius": 64, "outer_radius": 16, "ratios": [2, 4],
              "lattice_box": list(E._box_lattice(64, E.NICE_BOX))}
    fast = E._eval_crossings(rng, 0, params)
    gen = rng.generator()
    x0, x1, y0, y1 = params["lattice_box"]
    c = (float(gen.integers(x0, x1 + 1)), float(gen.integers(y0, y1 + 1)))
    buf = np.empty(10**6, dtype=np.uint8)
    status, n, _, _ = K.walk_record(gen, 0, 0, 64 * 64, 10**7, 0, buf)
    curve = trace_frontier_curve(Walk((0, 0), buf[:n])).vertices
    for j, q in enumerate(params["ratios"]):
        assert fast[j] == len(crossing_segments(curve, AnnulusSpec(c, 16 / q, 16)))


@pytest.mark.parametrize("seed", range(20))
def test_occupation_row_matches_frontier(seed):
    rng = make_rng(8, seed)
    R = 64
    row = E._eval_occupation(rng, R, {"box": list(E.NICE_BOX), "cells": 4})
    fr = frontier_vertices(build_occupancy(sample_walk_until_exit(rng, (0, 0), R)))
    x0, x1, y0, y1 = E._box_lattice(R, E.NICE_BOX)
    assert row[0] == sum(x0 <= x <= x1 and y0 <= y <= y1 for x, y in fr)
    assert row[1] == len(fr)
    inside = [p for p in fr if p[0] ** 2 + p[1] ** 2 <= R * R]
    assert row[2:].sum() == len(inside)


def test_frontier_disk_row_matches_reference():
    from frontier_lab.frontier import default_disk_radii, frontier_disk_event
    R = 64
    rho, env = default_disk_radii(R)
    z = (0.4375, 0.0625)
    c = (round(z[0] * R), round(z[1] * R))
    seen = set()
    for seed in range(60):
        rng = make_rng(9, seed)
        point, disk = E._eval_frontier_disk(rng, R, {"z": list(z)})
        w = sample_walk_until_exit(rng, (0, 0), R)
        occ = build_occupancy(w)
        assert point == float(is_frontier_point(occ, c))
        assert disk == float(frontier_disk_event(w, c, rho, env))
        seen.add((point, disk))
    assert (0.0, 1.0) in seen


# -------------------------------------------------------------- experiments

def small(name, **kw):
    return E.default_config(name, **{"samples_per_scale": 100, **kw})


def test_one_arm_rejects_degenerate_radius():
    with pytest.raises(ValueError):
        E.one_arm_experiment(small("one_arm", scales=[16, 32, 64], params={"r": 16}))


def test_one_arm_probability_nonincreasing():
    res = E.one_arm_experiment(small("one_arm", scales=[8, 16, 32, 64], samples_per_scale=400,
                                     params={"r": 4}))
    ps = [row["p"] for row in res.per_scale]
    assert all(b <= a + 0.03 for a, b in zip(ps, ps[1:]))
    assert res.expected["slope"] == 0.25


def test_two_arm_tiny_radius_positive():
    res = E.two_arm_experiment(small("two_arm", scales=[2, 4, 8]))
    assert res.per_scale[0]["p"] > 0
    d = json.loads(res.to_json())
    assert d["experiment"] == "two_arm" and d["config_digest"] == res.config.digest()
    assert set(d) >= {"schema_version", "artifact_version", "base_seed", "per_scale", "fit", "ci",
                      "aborts", "valid"}


def test_dimension_counts_grow():
    res = E.frontier_dimension_experiment(small("frontier_dimension", scales=[8, 16, 32]))
    means = [row["mean_count"] for row in res.per_scale]
    assert means[0] < means[1] < means[2]


def test_two_point_rejects_small_separation():
    with pytest.raises(ValueError):
        E.two_point_experiment(small("two_point", scales=[64], params={"separations": [2, 4, 8]}))


def test_crossing_slopes_ordered_in_k():
    cfg = small("crossing_tail", samples_per_scale=300, params={"exit_radius": 128, "outer_radius": 32})
    res = E.crossing_tail_experiments(cfg, (1, 2))
    for k in (1, 2):
        ps = [row["p"] for row in res[k].per_scale]
        assert all(b <= a for a, b in zip(ps, ps[1:]))
    p1 = [row["p"] for row in res[1].per_scale]
    p2 = [row["p"] for row in res[2].per_scale]
    assert all(b <= a for a, b in zip(p1, p2))


def test_crossing_k_range():
    with pytest.raises(ValueError):
        E.crossing_tail_experiments(small("crossing_tail", params={"exit_radius": 64, "outer_radius": 16}), (7,))


def test_occupation_needs_three_scales():
    with pytest.raises(ValueError):
        E.occupation_stability_experiment(small("occupation_stability", scales=[64, 128]))


def test_occupation_calibration_identity():
    # box counts following C e^{4n/3} exactly give ratios of 1 after calibration
    from frontier_lab.measures import calibrate_c1
    scales = [64, 128, 256]
    counts = {math.log(R): 2.5 * R ** (4 / 3) for R in scales}
    c1 = 1 / calibrate_c1(counts).constant
    masses = [c1 * R ** (-4 / 3) * counts[math.log(R)] for R in scales]
    assert masses == pytest.approx([1.0] * 3, rel=1e-12)


def test_green_probe_radii_respect_distance_floor():
    R = 512
    ks = E.green_probe_radii(R)
    d = np.minimum(ks / R, 1 - ks / R)
    assert np.all(d >= R ** (-1 / 6))
    assert ks.min() == 182 and ks.max() == 330


def test_bad_disk_row_matches_arm_extraction():
    from frontier_lab.grid_geometry import bad_disk_event, extract_four_arms
    lb = list(E._box_lattice(64, E.NICE_BOX))
    params = {"exit_radius": 64, "outer_radius": 16, "ratios": [2, 4], "lattice_box": lb}
    hits = 0
    for seed in range(150):
        rng = make_rng(12, seed)
        row = E._eval_bad_disk(rng, 0, params)
        cg = np.random.default_rng(np.random.SeedSequence(rng.seed, spawn_key=(rng.stream, 1)))
        c = (int(cg.integers(lb[0], lb[1] + 1)), int(cg.integers(lb[2], lb[3] + 1)))
        w = sample_walk_until_exit(rng, (0, 0), 64)
        want = [float(bad_disk_event(extract_four_arms(w, c, 16 / q, 16))) for q in (2, 4)]
        assert row.tolist() == want
        hits += want[0]
    assert hits > 0
