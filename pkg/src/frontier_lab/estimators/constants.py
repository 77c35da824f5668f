"""Closed-form exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable


def intersection_exponent(k: int, lam: float) -> float:
    """xi(k, lam) = ((sqrt(24k+1) + sqrt(24 lam+1) - 2)^2 - 4) / 48."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    if not lam > 0:
        raise ValueError("lam must be positive")
    s = math.sqrt(24 * k + 1) + math.sqrt(24 * lam + 1) - 2
    return (s * s - 4) / 48


def lambda_of_k(k: int) -> float:
    return k / 4


@dataclass(frozen=True)
class ReferenceConstants:
    alpha: float = 2 / 3
    one_arm: float = 1 / 4
    frontier_dim: float = 4 / 3
    xi22: float = 35 / 12
    lambda_of_k: Callable[[int], float] = field(default=lambda_of_k)


REFERENCE = ReferenceConstants()
