"""Dixon p-adic lifting for A x = b over the rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Sequence

import numpy as np

from .bigmat import IntMatrix, hadamard_bound
from .modfield import PrimeSampler, inverse_mod_p

__all__ = [
    "RationalVector",
    "ReconstructionError",
    "SingularMatrixError",
    "rational_reconstruct",
    "solution_bounds",
    "dixon_solve",
]

_I64 = 1 << 62


class ReconstructionError(ArithmeticError):
    """No fraction within the bounds matches the residue."""


class SingularMatrixError(ArithmeticError):
    """The matrix is singular (over Q, as far as the tried primes can tell)."""


@dataclass(frozen=True)
class RationalVector:
    """x = numerators / denominator with gcd(denominator, all numerators) = 1."""

    numerators: tuple[int, ...]
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")

    def __len__(self):
        return len(self.numerators)

    def fractions(self) -> list[Fraction]:
        return [Fraction(a, self.denominator) for a in self.numerators]


def rational_reconstruct(u: int, M: int, N_bound: int, D_bound: int) -> tuple[int, int]:
    """Fraction n/d with |n| <= N_bound, 0 < d <= D_bound and n = u*d (mod M)."""
    if 2 * N_bound * D_bound > M:
        raise ValueError("bounds too large for the modulus: need 2*N*D <= M")
    r0, r1 = M, u % M
    s0, s1 = 0, 1
    while r1 > N_bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > D_bound or gcd(r1, s1) != 1:
        raise ReconstructionError(f"no fraction for {u} mod {M} within ({N_bound}, {D_bound})")
    if s1 < 0:
        r1, s1 = -r1, -s1
    return r1, s1


def solution_bounds(A: IntMatrix, b: Sequence[int]) -> tuple[int, int]:
    """Cramer bounds (N, D): numerators of det(A)*x and det(A) itself.

    D = hadamard_bound(A); N = ceil((sqrt(n) ||A||)^(n-1) * sqrt(n) * ||b||).
    """
    n = A.rows
    D = hadamard_bound(A)
    bn = max((abs(v) for v in b), default=0)
    sq = n**n * A.norm() ** (2 * n - 2) * bn * bn
    N = isqrt(sq)
    if N * N < sq:
        N += 1
    return max(N, 1), D


def _lift_digits(A: IntMatrix, C: np.ndarray, b: Sequence[int], p: int, steps: int):
    n = A.rows
    small = A.norm() * n * p < _I64 and max((abs(v) for v in b), default=0) < _I64
    Aarr = A.as_array()
    if small and Aarr.dtype == np.int64:
        r = np.array(b, dtype=np.int64)
    else:
        Aarr = np.array(A.entries, dtype=object).reshape(n, n)
        r = np.array(list(b), dtype=object)
    wide = n * p * p >= _I64
    Cw = C.astype(object) if wide else C
    digits = []
    for _ in range(steps):
        rp = (r % p).astype(np.int64)
        xi = ((Cw.dot(rp.astype(object)) % p).astype(np.int64) if wide else (C @ rp) % p)
        digits.append(xi)
        if r.dtype == object:
            r = (r - Aarr.dot(xi.astype(object))) // p
        else:
            r = (r - Aarr @ xi) // p
    acc = np.zeros(n, dtype=object)
    for xi in reversed(digits):
        acc = acc * p + xi.astype(object)
    return [int(v) for v in acc]


def _reconstruct_vector(us: list[int], M: int, N: int, D: int) -> tuple[list[int], int]:
    d = 1
    nums: list[int] = []
    half = M // 2
    for u in us:
        v = u * d % M
        if v > half:
            v -= M
        if abs(v) <= N:
            nums.append(v)
            continue
        a, c = rational_reconstruct(v, M, N, D)
        # x_j = a / (c d): rescale what we already have to the new denominator
        nums = [t * c for t in nums]
        nums.append(a)
        d *= c
        if d > D:
            raise ReconstructionError("common denominator exceeds the determinant bound")
    g = d
    for t in nums:
        g = gcd(g, t)
        if g == 1:
            break
    if g > 1:
        nums = [t // g for t in nums]
        d //= g
    return nums, d


def dixon_solve(
    A: IntMatrix,
    b: Sequence[int],
    sampler: PrimeSampler | None = None,
    max_retries: int = 3,
    bounds: tuple[int, int] | None = None,
) -> RationalVector:
    """Exact rational solution of A x = b by p-adic lifting with one prime.

    The lifting runs to p^m >= 2*N*D for the Cramer bounds, then each entry is
    rebuilt by rational reconstruction, sharing the denominator found so far.
    The result is checked by exact multiplication before it is returned.
    """
    if not A.is_square:
        raise ValueError("square matrix required")
    n = A.rows
    b = [int(v) for v in b]
    if len(b) != n:
        raise ValueError("right-hand side has the wrong length")
    if sampler is None:
        sampler = PrimeSampler()
    C = None
    for _ in range(max_retries):
        p = sampler.sample()
        C = inverse_mod_p(A, p)
        if C is not None:
            break
    if C is None:
        raise SingularMatrixError(f"A has rank < {n} modulo {max_retries} random primes")
    if not any(b):
        return RationalVector((0,) * n, 1)
    N, D = bounds if bounds is not None else solution_bounds(A, b)
    target = 2 * N * D
    steps, Mod = 0, 1
    while Mod < target:
        Mod *= p
        steps += 1
    us = _lift_digits(A, C, b, p, steps)
    nums, d = _reconstruct_vector(us, Mod, N, D)
    lhs = A.matvec(nums)
    if any(x != y * d for x, y in zip(lhs, b)):
        raise ArithmeticError("lifted solution failed exact verification")
    return RationalVector(tuple(nums), d)
