"""Chinese remaindering of det(A)/K with early termination.

The state keeps the raw modular determinants so the reconstruction can be
rebuilt whenever the known divisor K changes; nothing computed modulo a prime
is thrown away unless that prime divides K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .bigmat import IntMatrix, hadamard_bound
from .modfield import PrimeSampler, lu_det_mod_p

__all__ = [
    "CraState",
    "cra_update",
    "set_divisor",
    "et_ratio",
    "et_probability_holds",
    "et_static_count",
    "cra_det_certified",
    "symmetric",
    "ceil_log",
]


def symmetric(x: int, m: int) -> int:
    """Representative of x mod m in [-floor(m/2), ceil(m/2))."""
    x %= m
    return x - m if x >= (m + 1) // 2 else x


def ceil_log(x, base: int) -> int:
    """Smallest integer R >= 0 with base**R >= x, for rational x > 0."""
    x = Fraction(x)
    if x <= 1:
        return 0
    R, acc = 0, Fraction(1)
    # jump close to the answer first, then settle exactly
    guess = max(0, int(math.log(x.numerator, base) - math.log(x.denominator, base)) - 1)
    if guess:
        R, acc = guess, Fraction(base) ** guess
    while acc < x:
        acc *= base
        R += 1
    while R > 0 and acc / base >= x:
        acc /= base
        R -= 1
    return R


@dataclass
class CraState:
    """Residues of det(A) and the symmetric reconstruction of det(A)/K.

    ``raw`` holds every (prime, det mod prime) pair in arrival order;
    ``pairs`` the ones in use and ``evicted`` those whose prime divides K.
    ``stable_index``/``stable_modulus`` locate the first prime of the
    current run of identical reconstructions.
    """

    H: int
    l: int = 1 << 19
    population: int = 0
    K: int = 1
    raw: list[tuple[int, int]] = field(default_factory=list)
    pairs: list[tuple[int, int]] = field(default_factory=list)
    evicted: list[tuple[int, int]] = field(default_factory=list)
    modulus: int = 1
    r_current: int = 0
    stability: int = 0
    stable_index: int = 0
    stable_modulus: int = 1

    @property
    def H_eff(self) -> int:
        return -(-self.H // self.K)

    @property
    def certified(self) -> bool:
        return self.modulus >= 2 * self.H_eff

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.pairs]

    def value(self) -> int:
        """Current reconstruction scaled back to det(A)."""
        return self.r_current * self.K

    def _admit(self, p: int, d: int) -> None:
        v = d * pow(self.K, -1, p) % p
        M = self.modulus
        x = self.r_current % M
        x += M * ((v - x) * pow(M, -1, p) % p)
        M *= p
        new = symmetric(x, M)
        index = len(self.pairs)
        if index and new == self.r_current:
            self.stability += 1
        else:
            self.stability = 0
            self.stable_index = index
            self.stable_modulus = M
        self.pairs.append((p, d % p))
        self.modulus = M
        self.r_current = new

    def update(self, p: int, d: int) -> "CraState":
        """Add det(A) mod p, keeping the symmetric reconstruction of det(A)/K."""
        if self.K % p == 0:
            raise ValueError(f"prime {p} divides the known factor K")
        if self.modulus % p == 0:
            raise ValueError(f"prime {p} already used")
        self.raw.append((p, d % p))
        self._admit(p, d)
        return self

    def set_divisor(self, K: int) -> "CraState":
        """Switch to reconstructing det(A)/K by replaying the stored residues.

        Pairs whose prime divides K are moved to ``evicted``; the replay
        recomputes the stability run from scratch over the kept pairs.
        """
        if K < 1:
            raise ValueError("K must be positive")
        self.K = K
        self.pairs, self.evicted = [], []
        self.modulus, self.r_current = 1, 0
        self.stability, self.stable_index, self.stable_modulus = 0, 0, 1
        for p, d in self.raw:
            if K % p == 0:
                self.evicted.append((p, d))
            else:
                self._admit(p, d)
        return self

    def et_ratio(self, remaining: int | None = None) -> Fraction:
        if remaining is None:
            remaining = self.population - self.stable_index - 1
        return et_ratio(
            self.H_eff, self.r_current, self.stable_modulus, self.l, self.stability, remaining
        )

    def et_holds(self, epsilon, remaining: int | None = None) -> bool:
        if self.certified:
            return True
        if not self.pairs:
            return False
        return self.et_ratio(remaining) < Fraction(epsilon)


def cra_update(st: CraState, p: int, d: int) -> CraState:
    return st.update(p, d)


def set_divisor(st: CraState, K: int) -> CraState:
    return st.set_divisor(K)


def et_ratio(H: int, r: int, stable_modulus: int, l: int, k: int, remaining: int) -> Fraction:
    """R'(R'-1)...(R'-k+1) / (remaining (remaining-1) ... (remaining-k+1)).

    R' = ceil(log_l((H + |r|) / stable_modulus)); ``remaining`` is the number
    of unused primes when the stable run began (|P| - t - 1).
    """
    Rp = ceil_log(Fraction(H + abs(r), stable_modulus), l)
    num = den = 1
    for m in range(k):
        num *= max(Rp - m, 0)
        den *= remaining - m
        if num == 0:
            return Fraction(0)
        if den <= 0:
            return Fraction(1)
    return Fraction(num, den)


def et_probability_holds(st: CraState, epsilon, P_remaining: int | None = None) -> bool:
    """Early-termination test: certified bound reached or on-the-fly ratio < epsilon."""
    return st.et_holds(epsilon, P_remaining)


def et_static_count(H: int, l: int, P_size: int, epsilon: float) -> int:
    """Stability count k that alone guarantees failure probability < epsilon."""
    log_l_H = max(math.log(H) / math.log(l), 1.0) if H > 1 else 1.0
    P_prime = P_size - math.ceil(log_l_H)
    if P_prime <= log_l_H:
        raise ValueError(
            f"prime set too small: |P|={P_size} leaves {P_prime} <= log_l(H)={log_l_H:.2f}"
        )
    k = math.log(1 / epsilon) / (math.log(P_prime) - math.log(log_l_H))
    return max(1, math.ceil(k - 1e-12))


def next_admissible_prime(sampler: PrimeSampler, K: int) -> int:
    while True:
        p = sampler.sample()
        if K % p:
            return p


def cra_det_certified(
    A: IntMatrix,
    K: int = 1,
    sampler: PrimeSampler | None = None,
    seed=0,
    H: int | None = None,
) -> int:
    """Exact det(A)/K by remaindering up to the full bound 2*ceil(H/K).

    K must divide det(A) for the result to be meaningful.
    """
    if sampler is None:
        sampler = PrimeSampler(seed=seed)
    if H is None:
        H = hadamard_bound(A)
    st = CraState(H=H, l=sampler.l, population=sampler.population)
    if K != 1:
        st.set_divisor(K)
    while not st.certified:
        p = next_admissible_prime(sampler, K)
        st.update(p, lu_det_mod_p(A, p))
    return st.r_current
