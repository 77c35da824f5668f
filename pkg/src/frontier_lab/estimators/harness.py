"""Deterministic Monte Carlo over per-sample seed streams."""

from __future__ import annotations

import hashlib
import json
import math
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple

import numpy as np

from ..sim import RngState, StepBudgetExceeded, make_rng

MAX_ABORT_FRACTION = 1e-3
Z95 = 1.959963984540054

# an evaluator maps (rng, scale, params) to a 1-d float array, one row per sample
Evaluator = Callable[[RngState, int, dict], np.ndarray]


@dataclass(frozen=True)
class ExperimentConfig:
    scales: tuple[int, ...]
    samples_per_scale: int
    base_seed: int = 0
    workers: int = 1
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        if not self.scales:
            raise ValueError("scales must be nonempty")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError("scales must be strictly increasing")
        if self.samples_per_scale < 100:
            raise ValueError("samples_per_scale must be at least 100")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    def canonical(self) -> dict:
        """Everything that determines the results (the worker count does not)."""
        return {"scales": list(self.scales), "samples_per_scale": self.samples_per_scale,
                "base_seed": self.base_seed, "params": _jsonable(self.params)}

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_params(self, **kw) -> "ExperimentConfig":
        return ExperimentConfig(self.scales, self.samples_per_scale, self.base_seed,
                                self.workers, {**self.params, **kw})


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def effective_workers(workers: int) -> int:
    env = os.environ.get("FRONTIER_LAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(workers))


def scale_seed(base_seed: int, scale: int) -> int:
    """Seed for all samples at one scale; sample i uses stream i."""
    ss = np.random.SeedSequence([int(base_seed), int(scale)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class SampleBatch(NamedTuple):
    values: np.ndarray   # (n_ok, d), in sample-index order
    aborts: int
    samples: int

    @property
    def abort_fraction(self) -> float:
        return self.aborts / self.samples if self.samples else 0.0

    @property
    def valid(self) -> bool:
        return self.abort_fraction <= MAX_ABORT_FRACTION


def _run_chunk(evaluator: Evaluator, seed: int, scale: int, params: dict, i0: int, i1: int):
    rows = []
    aborts = 0
    for i in range(i0, i1):
        try:
            rows.append(np.atleast_1d(np.asarray(evaluator(make_rng(seed, i), scale, params), dtype=float)))
        except StepBudgetExceeded:
            aborts += 1
    return rows, aborts


def run_samples(evaluator: Evaluator, scale: int, n: int, base_seed: int,
                params: dict | None = None, workers: int = 1) -> SampleBatch:
    """Evaluate samples 0..n-1 at one scale and stack their rows in index order."""
    params = params or {}
    seed = scale_seed(base_seed, scale)
    w = min(effective_workers(workers), n)
    if w == 1:
        chunks = [_run_chunk(evaluator, seed, scale, params, 0, n)]
    else:
        bounds = np.linspace(0, n, 4 * w + 1).astype(int)
        with ProcessPoolExecutor(w, mp_context=mp.get_context("spawn")) as ex:
            futs = [ex.submit(_run_chunk, evaluator, seed, scale, params, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            chunks = [f.result() for f in futs]
    rows = [r for c in chunks for r in c[0]]
    aborts = sum(c[1] for c in chunks)
    values = np.vstack(rows) if rows else np.zeros((0, 1))
    return SampleBatch(values, aborts, n)


def _sum_chunk(evaluator: Evaluator, seed: int, scale: int, params: dict, i0: int, i1: int):
    rows, aborts = _run_chunk(evaluator, seed, scale, params, i0, i1)
    return (np.sum(rows, axis=0) if rows else None), len(rows), aborts


def run_sums(evaluator: Evaluator, scale: int, n: int, base_seed: int,
             params: dict | None = None, workers: int = 1) -> SampleBatch:
    """Like run_samples but keeps only the column sums (values has one row).

    Rows must hold integers so that the sums do not depend on chunking.
    """
    params = params or {}
    seed = scale_seed(base_seed, scale)
    w = min(effective_workers(workers), n)
    if w == 1:
        chunks = [_sum_chunk(evaluator, seed, scale, params, 0, n)]
    else:
        bounds = np.linspace(0, n, 4 * w + 1).astype(int)
        with ProcessPoolExecutor(w, mp_context=mp.get_context("spawn")) as ex:
            futs = [ex.submit(_sum_chunk, evaluator, seed, scale, params, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            chunks = [f.result() for f in futs]
    sums = [c[0] for c in chunks if c[0] is not None]
    total = np.sum(sums, axis=0)[None, :] if sums else np.zeros((1, 1))
    return SampleBatch(total, sum(c[2] for c in chunks), n)


def wilson_interval(successes: float, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = successes / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


class ProbabilityEstimate(NamedTuple):
    p: float
    ci: tuple[float, float]
    successes: int
    samples: int
    aborts: int
    valid: bool

    def as_dict(self) -> dict:
        return {"p": self.p, "ci": list(self.ci), "successes": self.successes,
                "samples": self.samples, "aborts": self.aborts, "valid": self.valid}


def probability_from_batch(batch: SampleBatch, column: int = 0) -> ProbabilityEstimate:
    ok = len(batch.values)
    s = int(np.count_nonzero(batch.values[:, column] > 0)) if ok else 0
    p = s / ok if ok else 0.0
    return ProbabilityEstimate(p, wilson_interval(s, ok), s, ok, batch.aborts, batch.valid)


def estimate_probability(evaluator: Evaluator, config: ExperimentConfig, scale: int) -> ProbabilityEstimate:
    """Fraction of non-aborted samples whose evaluator returns a positive value."""
    batch = run_samples(evaluator, scale, config.samples_per_scale, config.base_seed,
                        config.params, config.workers)
    return probability_from_batch(batch)
