"""Word-size prime fields: prime sampling, determinant and rank modulo p."""

from __future__ import annotations

import math
import random
from functools import lru_cache

import numpy as np

from .bigmat import IntMatrix

__all__ = [
    "PrimeSampler",
    "PrimeExhaustedError",
    "is_prime",
    "count_primes",
    "lu_det_mod_p",
    "rank_mod_p",
    "rank_mod_p_batch",
    "inverse_mod_p",
    "DEFAULT_PRIME_BITS",
]

DEFAULT_PRIME_BITS = 19
# int64 elimination keeps products of two residues below 2**62
MAX_PRIME_BITS = 30
_SIEVE_LIMIT = 1 << 26

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class PrimeExhaustedError(RuntimeError):
    """The prime window has no unused primes left."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=16)
def _sieve(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return flags


def count_primes(lo: int, hi: int) -> int:
    """Number of primes p with lo < p < hi."""
    if hi <= lo + 1:
        return 0
    if hi > _SIEVE_LIMIT:
        # Rosser-Schoenfeld: x/ln x < pi(x) < 1.25506 x/ln x; the difference
        # of the two is a safe under-count of the window
        return max(0, int(hi / math.log(hi) - 1.25506 * lo / math.log(lo)))
    flags = _sieve(max(hi, 1024))
    return int(flags[lo + 1 : hi].sum())


class PrimeSampler:
    """Uniform sampling of distinct primes from the open window (l, upper).

    Candidates are drawn uniformly from the window and kept when they pass a
    deterministic Miller-Rabin test, so every prime is equally likely. Issued
    primes are never repeated.
    """

    def __init__(self, l: int = 1 << DEFAULT_PRIME_BITS, upper: int | None = None, seed=0):
        if upper is None:
            upper = 2 * l
        if l < 2 or upper <= l + 1:
            raise ValueError("empty prime window")
        if upper.bit_length() > MAX_PRIME_BITS + 1:
            raise ValueError(f"primes must stay below 2**{MAX_PRIME_BITS}")
        self.l = l
        self.upper = upper
        self.used: set[int] = set()
        self.order: list[int] = []
        self.population = count_primes(l, upper)
        self._rng = random.Random(f"primes:{l}:{upper}:{seed}")

    @classmethod
    def from_bits(cls, bits: int = DEFAULT_PRIME_BITS, seed=0) -> "PrimeSampler":
        return cls(1 << bits, 1 << (bits + 1), seed)

    @property
    def remaining(self) -> int:
        return self.population - len(self.used)

    def sample(self) -> int:
        if self.remaining <= 0:
            raise PrimeExhaustedError(
                f"all {self.population} primes in ({self.l}, {self.upper}) used"
            )
        lo, hi = self.l + 1, self.upper - 1
        # rejection sampling degrades once the window is mostly used up
        if self.remaining * 64 < self.population:
            pool = [
                p for p in range(lo, hi + 1)
                if p not in self.used and is_prime(p)
            ]
            p = self._rng.choice(pool)
        else:
            while True:
                p = self._rng.randint(lo, hi)
                if p not in self.used and is_prime(p):
                    break
        self.used.add(p)
        self.order.append(p)
        return p

    __call__ = sample

    def discard(self, p: int) -> None:
        """Mark p as used without returning it (e.g. it divides a known factor)."""
        if p not in self.used:
            self.used.add(p)


def _as_residues(A, p: int) -> np.ndarray:
    if isinstance(A, IntMatrix):
        return A.reduce_mod(p)
    return np.asarray(A, dtype=np.int64) % p


def _eliminate(M: np.ndarray, p: int, want_det: bool):
    """Gaussian elimination over Z_p in place; returns (rank, det)."""
    m, n = M.shape
    det = 1
    rank = 0
    for c in range(n):
        if rank == m:
            break
        col = M[rank:, c]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            if want_det:
                return rank, 0
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            M[[rank, piv]] = M[[piv, rank]]
            det = -det
        a = int(M[rank, c])
        det = det * a % p
        inv = pow(a, -1, p)
        below = M[rank + 1 :, c]
        if below.any():
            f = below * inv % p
            M[rank + 1 :, c:] = (M[rank + 1 :, c:] - np.outer(f, M[rank, c:]) % p) % p
        rank += 1
    return rank, det % p


def lu_det_mod_p(A, p: int) -> int:
    """det(A) mod p in [0, p); zero when A is singular modulo p."""
    M = _as_residues(A, p)
    if M.shape[0] != M.shape[1]:
        raise ValueError("square matrix required")
    if M.shape[0] == 0:
        return 1 % p
    _, det = _eliminate(M, p, want_det=True)
    return det


def rank_mod_p(A, p: int) -> int:
    """Rank of A over Z_p."""
    M = _as_residues(A, p)
    if M.size == 0:
        return 0
    rank, _ = _eliminate(M, p, want_det=False)
    return rank


def inverse_mod_p(A, p: int) -> np.ndarray | None:
    """Inverse of A over Z_p as an int64 array, or None when singular mod p."""
    M = _as_residues(A, p)
    n = M.shape[0]
    W = np.concatenate([M, np.eye(n, dtype=np.int64)], axis=1)
    for c in range(n):
        nz = np.flatnonzero(W[c:, c])
        if nz.size == 0:
            return None
        piv = c + int(nz[0])
        if piv != c:
            W[[c, piv]] = W[[piv, c]]
        W[c] = W[c] * pow(int(W[c, c]), -1, p) % p
        f = W[:, c].copy()
        f[c] = 0
        if f.any():
            W = (W - np.outer(f, W[c]) % p) % p
    return np.ascontiguousarray(W[:, n:])


def rank_mod_p_batch(stack: np.ndarray, p: int) -> np.ndarray:
    """Ranks over Z_p of a stack of small matrices, shape (trials, m, n).

    Vectorized across the stack for Monte Carlo use; agrees with
    :func:`rank_mod_p` matrix by matrix.
    """
    M = np.array(stack, dtype=np.int64) % p
    t, m, n = M.shape
    rank = np.zeros(t, dtype=np.int64)
    idx = np.arange(t)
    inv_table = np.zeros(p, dtype=np.int64)
    inv_table[1:] = [pow(a, -1, p) for a in range(1, p)]
    rows = np.arange(m)
    for c in range(n):
        # candidate pivot rows: index >= current rank with nonzero entry
        cand = (M[:, :, c] != 0) & (rows[None, :] >= rank[:, None])
        has = cand.any(axis=1)
        piv = np.where(has, cand.argmax(axis=1), 0)
        act = idx[has]
        if act.size == 0:
            continue
        r = rank[act]
        pr = piv[act]
        # swap pivot row into position r
        tmp = M[act, r].copy()
        M[act, r] = M[act, pr]
        M[act, pr] = tmp
        prow = M[act, r]  # (a, n)
        inv = inv_table[prow[:, c]]
        prow = prow * inv[:, None] % p
        M[act, r] = prow
        f = M[act, :, c].copy()
        f[np.arange(act.size), r] = 0
        M[act] = (M[act] - f[:, :, None] * prow[:, None, :] % p) % p
        rank[act] += 1
    return rank
