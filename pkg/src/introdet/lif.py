"""Largest invariant factor: s_n(A) approximated by lcm of solution denominators."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from math import lcm

from .bigmat import IntMatrix, hadamard_bound
from .modfield import PrimeSampler
from .padic import dixon_solve

__all__ = [
    "LifConfig",
    "lif",
    "lif_trace",
    "lif_config_for",
    "ceil_log2",
    "symmetric_entries",
]


def ceil_log2(x: int) -> int:
    """Exact ceil(log2(x)) for an integer x >= 1."""
    return (x - 1).bit_length()


def symmetric_entries(rng: random.Random, count: int, size: int) -> list[int]:
    """``count`` draws from the ``size`` contiguous integers {-floor(size/2), ..., ceil(size/2)-1}."""
    lo = -(size // 2)
    return [lo + rng.randrange(size) for _ in range(count)]


@dataclass(frozen=True)
class LifConfig:
    r: int
    beta: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.beta < 2:
            raise ValueError("beta must be >= 2")


def lif_config_for(H: int, regime: str = "expected-O1", epsilon: float | None = None) -> LifConfig:
    """(r, beta) for one of the LIF regimes, with logarithms in base 2.

    ``expected-O1``: r = 2, beta = ceil(log H).
    ``probability-1/3``: r = 2, beta = 6 + ceil(2 log H).
    ``epsilon``: r = ceil(log log H + log(1/epsilon)), beta even.
    """
    if H < 2:
        raise ValueError("H must be >= 2")
    logH = ceil_log2(H)
    if regime == "expected-O1":
        return LifConfig(2, max(2, logH))
    if regime == "probability-1/3":
        return LifConfig(2, 6 + ceil_log2(H * H))
    if regime == "epsilon":
        if epsilon is None or not 0 < epsilon < 1:
            raise ValueError("the epsilon regime needs 0 < epsilon < 1")
        r = math.ceil(math.log2(max(math.log2(H), 1.0)) + math.log2(1 / epsilon) - 1e-12)
        beta = max(2, logH + (logH & 1))
        return LifConfig(max(r, 1), beta)
    raise ValueError(f"unknown regime {regime!r}")


def lif_trace(
    A: IntMatrix,
    cfg: LifConfig,
    seed=0,
    sampler: PrimeSampler | None = None,
) -> list[int]:
    """Running lcm after each of the cfg.r solves (last entry is the estimate)."""
    rng = random.Random(f"lif:{seed}")
    if sampler is None:
        sampler = PrimeSampler(seed=f"lif:{seed}")
    n = A.rows
    s = 1
    out = []
    for _ in range(cfg.r):
        b = symmetric_entries(rng, n, cfg.beta)
        x = dixon_solve(A, b, sampler)
        s = lcm(s, x.denominator)
        out.append(s)
    return out


def lif(A: IntMatrix, cfg: LifConfig | None = None, seed=0, sampler: PrimeSampler | None = None) -> int:
    """Divisor of s_n(A) from the lcm of the denominators of cfg.r random solves."""
    if cfg is None:
        cfg = lif_config_for(max(hadamard_bound(A), 2))
    return lif_trace(A, cfg, seed, sampler)[-1]

