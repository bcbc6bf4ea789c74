"""Extended bonus: divisors of the product of the last invariant factors.

Columns of a multi right-hand-side solve X = N / s~ are perturbed by a random
i x n matrix R; s~^i / gcd(det(R N), s~^i) divides s_n s_{n-1} ... s_{n-i+1}.
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass, field
from enum import Enum
from math import gcd, lcm
from typing import Callable

from .bigmat import IntMatrix, hadamard_bound
from .cra import cra_det_certified
from .lif import ceil_log2, symmetric_entries
from .modfield import PrimeSampler
from .padic import RationalVector, dixon_solve

__all__ = [
    "BonusParams",
    "BonusState",
    "Outcome",
    "expected_factor_count",
    "bonus_params",
    "extend_solution",
    "numerator_matrix",
    "pi_estimate",
    "bonus_round",
]

_REDRAW_CAP = 3


def expected_factor_count(n: int, lam: int) -> int:
    """Bound ceil(sqrt(2 log_lam n)) + 3 on the expected nontrivial invariant factor count."""
    if lam < 2:
        warnings.warn(f"lambda={lam} < 2 clamped to 2", stacklevel=2)
        lam = 2
    if n < 2:
        return 3
    return math.ceil(math.sqrt(2 * math.log(n) / math.log(lam)) - 1e-12) + 3


@dataclass(frozen=True)
class BonusParams:
    S: int
    i_min: int
    i_max: int

    def __post_init__(self):
        if self.S < 2:
            raise ValueError("S must be >= 2")
        if not 1 <= self.i_min <= self.i_max:
            raise ValueError("need 1 <= i_min <= i_max")


def infer_lambda(A: IntMatrix) -> int:
    """Size of the symmetric entry set that A's entries could come from."""
    return max(2, 2 * A.norm())


def bonus_params(
    A: IntMatrix,
    lam: int | None = None,
    i_min: int = 2,
    i_max: int | None = None,
    H: int | None = None,
) -> BonusParams:
    """S = 13 E^3 ceil(log2 H)^4 and i_max = max(i_min, E), E the factor-count bound."""
    if H is None:
        H = hadamard_bound(A)
    if lam is None:
        lam = infer_lambda(A)
    E = expected_factor_count(max(A.rows, 2), lam)
    S = 13 * E**3 * max(ceil_log2(max(H, 2)), 1) ** 4
    if i_max is None:
        i_max = max(i_min, E)
    return BonusParams(S=S, i_min=min(i_min, i_max), i_max=i_max)


class Outcome(Enum):
    EXTENDED = "extended"
    NEW_LEVEL = "new-level"
    CONFIRMED = "confirmed"
    TERMINATED = "terminated"


@dataclass
class BonusState:
    """Bookkeeping of the extended-bonus loop (two phases of solutions)."""

    s_tilde: int = 1
    phase_cols: dict[int, list[RationalVector]] = field(default_factory=lambda: {0: [], 1: []})
    pi: dict[int, int] = field(default_factory=lambda: {0: 1})
    K: int = 1
    k_done: int = 0
    k_app: int = 0
    j: int = 0
    i: int = 1
    solvings: int = 0
    unconfirmed: set[int] = field(default_factory=set)
    history: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def X_cols(self) -> list[RationalVector]:
        return self.phase_cols[self.j]

    @property
    def N(self) -> IntMatrix:
        return numerator_matrix(self.X_cols[: self.i], self.s_tilde)


def numerator_matrix(cols: list[RationalVector], s_tilde: int) -> IntMatrix:
    """N = s~ X as an exact integer n x k matrix."""
    if not cols:
        raise ValueError("no solution columns")
    n = len(cols[0])
    scaled = []
    for x in cols:
        f, rem = divmod(s_tilde, x.denominator)
        if rem:
            raise ValueError("s_tilde is not a multiple of every denominator")
        scaled.append([a * f for a in x.numerators])
    return IntMatrix(n, len(cols), (scaled[c][r] for r in range(n) for c in range(len(cols))))


def extend_solution(
    st: BonusState,
    A: IntMatrix,
    S: int,
    rng: random.Random,
    sampler: PrimeSampler | None = None,
    on_solve: Callable[[], object] | None = None,
) -> BonusState:
    """Solve for a fresh right-hand side and make it column i of the current phase."""
    cols = st.phase_cols[st.j]
    del cols[st.i - 1 :]
    while len(cols) < st.i:
        b = symmetric_entries(rng, A.rows, S)
        if on_solve is not None:
            with on_solve():
                x = dixon_solve(A, b, sampler)
        else:
            x = dixon_solve(A, b, sampler)
        st.solvings += 1
        st.s_tilde = lcm(st.s_tilde, x.denominator)
        cols.append(x)
    return st


def pi_estimate(
    st: BonusState,
    i: int,
    S: int,
    rng: random.Random,
    sampler: PrimeSampler | None = None,
) -> int:
    """s~^i / gcd(det(R N), s~^i) for a random i x n perturbation R (s~ itself when i = 1)."""
    s = st.s_tilde
    if i == 1:
        return s
    N = numerator_matrix(st.phase_cols[st.j][:i], s)
    n = N.rows
    si = s**i
    for _ in range(_REDRAW_CAP):
        R = IntMatrix(i, n, symmetric_entries(rng, i * n, S))
        d = cra_det_certified(R @ N, sampler=sampler)
        if d:
            g = gcd(d, si)
            q, rem = divmod(si, g)
            assert rem == 0
            st.unconfirmed.discard(i)
            return q
    st.unconfirmed.add(i)
    return st.pi.get(i - 1, 1)


def _equal_test(pi_i: int, pi_prev: int) -> bool:
    return pi_i == pi_prev


def bonus_round(
    st: BonusState,
    A: IntMatrix,
    params: BonusParams,
    rng: random.Random,
    solve_sampler: PrimeSampler | None = None,
    det_sampler: PrimeSampler | None = None,
    after_update: Callable[[BonusState], bool] | None = None,
    stable_test: Callable[[int, int], bool] = _equal_test,
    on_solve: Callable[[], object] | None = None,
) -> Outcome:
    """One pass of the inner loop body at level ``st.i``.

    Extends the current phase, estimates pi_i, folds it into K, then gives
    ``after_update`` (the caller's remaindering step) the chance to finish.
    Stabilization above i_min either opens a new level (phase swap) or, for a
    level seen before, reports it as confirmed. Otherwise i advances.
    """
    i = st.i
    extend_solution(st, A, params.S, rng, solve_sampler, on_solve)
    pi_i = pi_estimate(st, i, params.S, rng, det_sampler)
    st.K = lcm(st.K, pi_i)
    st.pi[i] = st.K
    st.history.append((i, st.j, st.K))
    if after_update is not None and after_update(st):
        return Outcome.TERMINATED
    if i > params.i_min and stable_test(st.pi[i], st.pi.get(i - 1, 1)):
        if i > st.k_app:
            st.k_done, st.k_app = st.k_app, i
            st.j = (st.j + 1) % 2
            return Outcome.NEW_LEVEL
        return Outcome.CONFIRMED
    st.i += 1
    return Outcome.EXTENDED
