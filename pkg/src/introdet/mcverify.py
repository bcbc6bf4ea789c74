"""Monte Carlo estimators checking the probabilistic bounds behind the algorithm.

Each estimator returns an :class:`McResult` whose ``bound`` is an upper
bound on the estimated quantity. Lower-bound statements are turned around
(an equality frequency of at least q becomes a failure frequency of at most
1 - q) so that a single pass rule covers every suite.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from .bigmat import IntMatrix, gen_engineered, gen_random, hadamard_bound, smith_form
from .bonus import BonusState, bonus_params, expected_factor_count, extend_solution, pi_estimate
from .lif import lif, lif_config_for
from .modfield import PrimeSampler, rank_mod_p_batch

__all__ = [
    "McResult",
    "rank_bound",
    "mc_rank_bound",
    "mc_factor_count",
    "mc_perturbed_det",
    "mc_lif_gap",
    "mc_bonus_gap",
    "trivial_smith_v",
]

_BATCH = 20000


@dataclass
class McResult:
    """Outcome of one estimator run.

    ``estimate = successes / trials``. For probabilities ``successes`` counts
    events; for means it is the sum of the observed values. ``slack`` is three
    standard errors and the run passes when estimate <= bound + slack.
    """

    name: str
    trials: int
    successes: float
    estimate: float
    bound: float
    slack: float
    kind: str = "probability"
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + self.slack

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _probability(name, hits: int, trials: int, bound: float, **params) -> McResult:
    est = hits / trials
    slack = 3 * math.sqrt(est * (1 - est) / trials)
    return McResult(name, trials, hits, est, float(bound), slack, "probability", params)


def _mean(name, values, bound: float, **params) -> McResult:
    v = np.asarray(values, dtype=float)
    t = len(v)
    std = float(v.std(ddof=1)) if t > 1 else 0.0
    return McResult(name, t, float(v.sum()), float(v.mean()), float(bound), 3 * std / math.sqrt(t), "mean", params)


def _entry_range(lam: int) -> tuple[int, int]:
    # lam + 1 contiguous integers, the set gen_random draws from
    return -(lam // 2), (lam + 1) // 2


def rank_bound(n: int, k: int, S: int, p: int, j: int, form: str = "loose") -> Fraction:
    """Upper bound on P(rank_p = j) for a random k x n matrix over S contiguous integers.

    ``loose``: beta^((n-j)(k-j)) (1/(1-beta))^(k-j).
    ``tight``: prod_{i<j}(1 - alpha^(n-i)) beta^((n-j)(k-j))
    (1/(1-beta))^max(k-j-1, 0) (1 + beta + ... + beta^(k-j)).
    Here alpha = floor(S/p)/S and beta = ceil(S/p)/S.
    """
    if not 0 <= j <= k <= n:
        raise ValueError("need 0 <= j <= k <= n")
    alpha = Fraction(S // p, S)
    beta = Fraction(-(-S // p), S)
    if beta == 1:
        return Fraction(1)
    if form == "loose":
        return beta ** ((n - j) * (k - j)) * (1 / (1 - beta)) ** (k - j)
    if form != "tight":
        raise ValueError(f"unknown form {form!r}")
    out = Fraction(1)
    for i in range(j):
        out *= 1 - alpha ** (n - i)
    out *= beta ** ((n - j) * (k - j))
    out *= (1 / (1 - beta)) ** max(k - j - 1, 0)
    out *= sum(beta**e for e in range(k - j + 1))
    return out


def mc_rank_bound(n: int, k: int, lam: int, p: int, j: int, trials: int, seed=0, form: str = "loose") -> McResult:
    """Estimate P(rank_p(A) = j) for k x n matrices with entries from lam + 1 contiguous integers."""
    if not 0 <= j <= k <= n:
        raise ValueError("need 0 <= j <= k <= n")
    lo, hi = _entry_range(lam)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        b = min(_BATCH, trials - done)
        stack = rng.integers(lo, hi + 1, size=(b, k, n))
        hits += int((rank_mod_p_batch(stack, p) == j).sum())
        done += b
    bound = rank_bound(n, k, lam + 1, p, j, form)
    return _probability("rank", hits, trials, float(bound), n=n, k=k, lam=lam, p=p, j=j, form=form, seed=seed)


def mc_factor_count(n: int, lam: int, trials: int, seed=0, p: int | None = None) -> McResult:
    """Mean number of nontrivial invariant factors of random n x n matrices.

    With ``p`` given, counts the invariant factors divisible by p instead and
    compares against 4.
    """
    counts = []
    for t in range(trials):
        A = gen_random(n, lam, seed * 1_000_003 + t)
        sf = smith_form(A)
        # rank deficiency contributes zero factors, divisible by everything
        missing = n - sf.rank
        if p is None:
            counts.append(sf.nontrivial() + missing)
        else:
            counts.append(sf.count_divisible(p) + missing)
    if p is None:
        bound = expected_factor_count(n, lam)
        return _mean("factors", counts, bound, n=n, lam=lam, seed=seed)
    return _mean("factors-p", counts, 4, n=n, lam=lam, p=p, seed=seed)


def trivial_smith_v(k: int, n: int, S: int, rng: random.Random, retries: int = 8) -> IntMatrix:
    """k x n matrix [I_k | W] with W random, checked to have Smith form all ones."""
    lo = -(S // 2)
    for _ in range(retries):
        rows = [[int(r == c) for c in range(k)] + [lo + rng.randrange(S) for _ in range(n - k)] for r in range(k)]
        V = IntMatrix.from_rows(rows)
        sf = smith_form(V)
        if sf.rank == k and all(s == 1 for s in sf):
            return V
    raise RuntimeError("could not build a matrix with trivial Smith form")


def _batch_det(T: np.ndarray) -> np.ndarray:
    """Exact determinants of a stack of small int64 matrices (fraction-free elimination)."""
    t, k, _ = T.shape
    m = int(np.abs(T).max(initial=0))
    # elimination step products pair two (k-1)-minors; the result is a k-minor
    minor = m ** (k - 1) * math.factorial(k - 1)
    wide = 2 * minor * minor >= 1 << 62 or m**k * math.factorial(k) >= 1 << 62
    M = T.astype(object) if wide else T.copy()
    sign = np.ones(t, dtype=np.int64)
    prev = np.ones(t, dtype=M.dtype)
    zero = np.zeros(t, dtype=bool)
    idx = np.arange(t)
    for c in range(k):
        col = M[:, c:, c]
        nzmask = col != 0
        has = nzmask.any(axis=1)
        zero |= ~has
        piv = c + np.where(has, nzmask.argmax(axis=1), 0)
        swap = piv != c
        if swap.any():
            s = idx[swap]
            rows_c = M[s, c].copy()
            M[s, c] = M[s, piv[swap]]
            M[s, piv[swap]] = rows_c
            sign[s] = -sign[s]
        pv = M[:, c, c].copy()
        pv[zero] = 1
        for r in range(c + 1, k):
            M[:, r, c + 1 :] = (pv[:, None] * M[:, r, c + 1 :] - M[:, r, c][:, None] * M[:, c, c + 1 :]) // prev[:, None]
            M[:, r, c] = 0
        prev = pv
    d = M[:, k - 1, k - 1] * sign
    d[zero] = 0
    return d


def mc_perturbed_det(n: int, k: int, S: int, p: int, l: int, trials: int, seed=0) -> McResult:
    """Estimate P(p^l | det(V M)) for a fixed trivial-Smith V and random n x k M over S integers."""
    if l > 0 and p**l >= S:
        raise ValueError("need p**l < S")
    rng = random.Random(f"perturbed:{seed}")
    V = trivial_smith_v(k, n, S, rng)
    Va = np.array(V.tolist(), dtype=np.int64)
    nrng = np.random.default_rng(seed)
    lo = -(S // 2)
    q = p**l
    hits = done = 0
    while done < trials:
        b = min(_BATCH, trials - done)
        Ms = nrng.integers(lo, lo + S, size=(b, n, k))
        dets = _batch_det(np.einsum("ij,tjk->tik", Va, Ms))
        hits += int(sum(1 for d in dets if int(d) % q == 0))
        done += b
    return _probability("perturbed", hits, trials, 3 / q, n=n, k=k, S=S, p=p, l=l, seed=seed)


def mc_lif_gap(n: int, regime: str, trials: int, seed=0) -> McResult:
    """Gap between s_n and the LIF estimate on engineered matrices.

    ``expected-O1``: mean of log2(s_n / s~_n), bound 8.
    ``probability-1/3``: frequency of s~_n != s_n, bound 2/3.
    """
    if regime not in ("expected-O1", "probability-1/3"):
        raise ValueError(f"unknown regime {regime!r}")
    gaps, misses = [], 0
    for t in range(trials):
        A = gen_engineered(n, seed * 1_000_003 + t) if n > 1 else IntMatrix.identity(1)
        sn = smith_form(A).largest(1)
        cfg = lif_config_for(max(hadamard_bound(A), 2), regime)
        est = lif(A, cfg, seed=f"{seed}:{t}", sampler=PrimeSampler(seed=f"lifgap:{seed}:{t}"))
        q, rem = divmod(sn, est)
        if rem:
            raise AssertionError("LIF estimate does not divide s_n")
        gaps.append(math.log2(q))
        misses += q != 1
    if regime == "expected-O1":
        return _mean("lif-gap", gaps, 8, n=n, regime=regime, seed=seed)
    return _probability("lif-miss", misses, trials, 2 / 3, n=n, regime=regime, seed=seed)


def mc_bonus_gap(n: int, trials: int, seed=0, k: int = 2) -> McResult:
    """Mean log2(pi_k / pi~_k) on engineered matrices, pi~_k confirmed by two independent runs."""
    gaps = []
    for t in range(trials):
        A = gen_engineered(n, seed * 1_000_003 + t)
        pik = smith_form(A).largest(k)
        params = bonus_params(A)
        est = 1
        for run in range(2):
            rng = random.Random(f"bonus-gap:{seed}:{t}:{run}")
            sampler = PrimeSampler(seed=f"bonus-gap:{seed}:{t}:{run}")
            st = BonusState()
            st.i = k
            extend_solution(st, A, params.S, rng, sampler)
            est = lcm(est, pi_estimate(st, k, params.S, rng, sampler))
        q, rem = divmod(pik, est)
        if rem:
            raise AssertionError("bonus estimate does not divide pi_k")
        gaps.append(math.log2(q))
    return _mean("bonus-gap", gaps, 12, n=n, k=k, seed=seed)
