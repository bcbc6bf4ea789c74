"""Introspective determinant: remaindering interleaved with bonus rounds.

The controller measures how long a modular LU and a p-adic solve take and
hands the remaindering loop budgets expressed in solve times, so cheap
residues are preferred whenever the solves stop paying for themselves.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

from .bigmat import IntMatrix, bareiss_det, hadamard_bound
from .bonus import BonusState, Outcome, bonus_params, bonus_round
from .cra import CraState, et_static_count, next_admissible_prime
from .lif import ceil_log2, lif, lif_config_for
from .modfield import DEFAULT_PRIME_BITS, PrimeExhaustedError, PrimeSampler, lu_det_mod_p
from .padic import SingularMatrixError

__all__ = [
    "DetOptions",
    "DetReport",
    "Stopwatch",
    "determinant",
    "cra_budget_run",
    "cra_step",
    "lu_switch_condition",
    "fallback_certified",
    "PATHS",
    "ALGORITHMS",
    "run_algorithm",
    "certified_cra",
    "et_cra",
    "lif_then_et",
]

PATHS = ("early-cra", "bonus-et", "fallback-certified")


class Stopwatch:
    """Running mean durations of modular LUs and system solvings.

    ``mode="wall"`` measures perf_counter time. ``mode="ops"`` charges a
    fixed operation-count model instead, which makes every scheduling
    decision reproducible.
    """

    def __init__(self, mode: str = "wall", lu_cost: float = 1.0, solve_cost: float = 1.0):
        if mode not in ("wall", "ops"):
            raise ValueError(f"unknown stopwatch mode {mode!r}")
        self.mode = mode
        self.model = {"lu": lu_cost, "solve": solve_cost}
        self.total: dict[str, float] = {}
        self.count: dict[str, int] = {}

    def record(self, kind: str, duration: float) -> None:
        self.total[kind] = self.total.get(kind, 0.0) + duration
        self.count[kind] = self.count.get(kind, 0) + 1

    def mean(self, kind: str) -> float:
        c = self.count.get(kind, 0)
        if not c:
            return self.model.get(kind, 0.0) if self.mode == "ops" else 0.0
        return self.total[kind] / c

    def time_of(self, kind: str) -> float:
        return self.mean(kind)

    @contextmanager
    def measure(self, kind: str):
        if self.mode == "ops":
            yield
            self.record(kind, self.model[kind])
            return
        t0 = time.perf_counter()
        yield
        self.record(kind, max(time.perf_counter() - t0, 1e-9))

    def last_cost(self, kind: str) -> float:
        return self.mean(kind)


@dataclass
class DetOptions:
    seed: int = 0
    prime_bits: int = DEFAULT_PRIME_BITS
    i_max: int | None = None
    i_min: int = 2
    lam: int | None = None
    adaptive_switch: bool = False
    clock: str = "wall"
    final: str = "certified"
    threads: int = 1


@dataclass
class DetReport:
    det: int
    path: str
    solvings: int
    primes_used: int
    K_bits: int
    epsilon: float
    timings: dict[str, float] = field(default_factory=dict)
    n: int = 0
    K: int = 1
    s_tilde: int = 1
    k_static: int = 0
    i_min: int = 0
    i_max: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["det"] = str(self.det)
        d["K"] = str(self.K)
        d["s_tilde"] = str(self.s_tilde)
        return d


def cra_step(st: CraState, A: IntMatrix, sampler: PrimeSampler, sw: Stopwatch | None = None) -> int:
    """Sample an admissible prime, compute det(A) mod p and fold it in."""
    p = next_admissible_prime(sampler, st.K)
    if sw is None:
        d = lu_det_mod_p(A, p)
    else:
        with sw.measure("lu"):
            d = lu_det_mod_p(A, p)
    st.update(p, d)
    return p


def cra_budget_run(
    st: CraState,
    A: IntMatrix,
    budget: float,
    sampler: PrimeSampler,
    epsilon: float,
    sw: Stopwatch | None = None,
) -> tuple[CraState, bool]:
    """Whole LU iterations on det(A)/K until the next one would overrun ``budget``.

    Returns immediately when the stored residues already satisfy the early
    termination rule; otherwise at least one iteration is performed.
    """
    if st.et_holds(epsilon):
        return st, True
    if sw is None:
        sw = Stopwatch()
    spent = 0.0
    while True:
        before = sw.total.get("lu", 0.0)
        cra_step(st, A, sampler, sw)
        spent += sw.total["lu"] - before
        if st.et_holds(epsilon):
            return st, True
        if spent + sw.mean("lu") > budget:
            return st, False


def lu_switch_condition(pi_i: int, pi_prev: int, sw: Stopwatch, l: int) -> bool:
    """True when log(pi_i / pi_prev) <= (time(solving) / time(LU)) * log(l).

    The bits gained by the last solving could then have been bought at least
    as cheaply with remaindering steps.
    """
    if pi_i <= pi_prev:
        return True
    gained = math.log2(pi_i) - math.log2(pi_prev)
    lu = sw.time_of("lu")
    if lu <= 0:
        return False
    return gained <= sw.time_of("solve") / lu * math.log2(l)


def fallback_certified(
    A: IntMatrix,
    st: CraState,
    sampler: PrimeSampler | None = None,
    threads: int = 1,
) -> int:
    """Finish the remaindering to the full bound 2*ceil(H/K), reusing every stored residue."""
    if sampler is None:
        sampler = PrimeSampler(st.l, 2 * st.l, seed="fallback")
    if threads <= 1:
        while not st.certified:
            cra_step(st, A, sampler)
        return st.value()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        while not st.certified:
            missing = 2 * st.H_eff // st.modulus + 1
            batch = min(threads, max(1, (missing.bit_length() + sampler.l.bit_length() - 2) // (sampler.l.bit_length() - 1)))
            primes = [next_admissible_prime(sampler, st.K) for _ in range(batch)]
            for p, d in zip(primes, pool.map(lambda q: lu_det_mod_p(A, q), primes)):
                st.update(p, d)
    return st.value()


def _ops_model(n: int, H: int, prime_bits: int) -> tuple[float, float]:
    lu = n**3 / 3 + n * n
    steps = 2 * max(ceil_log2(max(H, 2)), 1) / prime_bits + 2
    solve = n**3 + 2 * n * n * steps
    return lu, solve


def determinant(A: IntMatrix, epsilon: float = 2.0**-20, options: DetOptions | None = None, **kw) -> DetReport:
    """Integer determinant, correct with probability at least 1 - epsilon.

    Phases: a short early-terminated remaindering run; then rounds of random
    solves that grow a known divisor K of det(A), each followed by resumed
    remaindering of det(A)/K for about one solve's worth of time; finally,
    if the rounds run out, certified remaindering of det(A)/K.
    """
    if options is None:
        options = DetOptions(**kw)
    elif kw:
        options = DetOptions(**{**asdict(options), **kw})
    if not A.is_square:
        raise ValueError(f"square matrix required, got {A.rows}x{A.cols}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    n = A.rows
    if n == 0:
        return DetReport(1, "early-cra", 0, 0, 0, epsilon)

    t_start = time.perf_counter()
    timings: dict[str, float] = {}
    H = hadamard_bound(A)
    seed = options.seed
    bits = options.prime_bits
    sampler = PrimeSampler.from_bits(bits, seed=f"cra:{seed}")
    solve_sampler = PrimeSampler.from_bits(bits, seed=f"solve:{seed}")
    det_sampler = PrimeSampler.from_bits(bits, seed=f"minor:{seed}")
    if options.clock == "ops":
        sw = Stopwatch("ops", *_ops_model(n, H, bits))
    else:
        sw = Stopwatch("wall")
    # half the failure budget for early termination; the rest is reserved
    # for under-approximated divisors, which only cost time
    eps_et = epsilon / 2
    st = CraState(H=H, l=sampler.l, population=sampler.population)
    bst = BonusState()
    params = None
    try:
        k = et_static_count(H, sampler.l, sampler.population, eps_et)
    except ValueError:
        # the window is too small for early termination to mean anything
        k = 0

    def report(path: str) -> DetReport:
        timings["total"] = time.perf_counter() - t_start
        timings["lu"] = sw.total.get("lu", 0.0)
        timings["solve"] = sw.total.get("solve", 0.0)
        return DetReport(
            det=st.value(),
            path=path,
            solvings=bst.solvings,
            primes_used=len(st.raw),
            K_bits=st.K.bit_length(),
            epsilon=epsilon,
            timings=timings,
            n=n,
            K=st.K,
            s_tilde=bst.s_tilde,
            k_static=k,
            i_min=params.i_min if params else 0,
            i_max=params.i_max if params else 0,
        )

    if not k:
        fallback_certified(A, st, sampler, options.threads)
        return report("fallback-certified")

    try:
        # a stability count of k needs k + 1 residues
        for _ in range(k + 1):
            cra_step(st, A, sampler, sw)
            if st.et_holds(eps_et):
                return report("early-cra")
    except PrimeExhaustedError:
        fallback_certified(A, st, sampler, options.threads)
        return report("fallback-certified")
    timings["initial"] = time.perf_counter() - t_start

    params = bonus_params(A, options.lam, options.i_min, options.i_max, H)
    rng = random.Random(f"bonus:{seed}")

    def after_update(b: BonusState) -> bool:
        if b.K != st.K:
            st.set_divisor(b.K)
        _, done = cra_budget_run(st, A, sw.mean("solve"), sampler, eps_et, sw)
        return done

    if options.adaptive_switch:
        def stable_test(a, b):
            return lu_switch_condition(a, b, sw, sampler.l)
    else:
        def stable_test(a, b):
            return a == b

    try:
        while bst.k_done <= params.i_max:
            bst.i = bst.k_done + 1
            exhausted = True
            while bst.i <= params.i_max:
                out = bonus_round(
                    bst, A, params, rng,
                    solve_sampler=solve_sampler,
                    det_sampler=det_sampler,
                    after_update=after_update,
                    stable_test=stable_test,
                    on_solve=lambda: sw.measure("solve"),
                )
                if out is Outcome.TERMINATED:
                    return report("bonus-et")
                if out is Outcome.NEW_LEVEL:
                    exhausted = False
                    break
                if out is Outcome.CONFIRMED:
                    budget = (params.i_max - bst.i) * sw.mean("solve")
                    _, done = cra_budget_run(st, A, budget, sampler, eps_et, sw)
                    if done:
                        return report("bonus-et")
                    # keep extending from the last level; a second
                    # confirmation there leaves the loop for the fallback
                    bst.i = params.i_max if bst.i < params.i_max else params.i_max + 1
            if exhausted:
                break
    except SingularMatrixError:
        # det(A) = 0: only remaindering may conclude that
        pass
    except PrimeExhaustedError:
        pass
    else:
        if options.final == "et":
            try:
                while True:
                    _, done = cra_budget_run(st, A, math.inf, sampler, eps_et, sw)
                    if done:
                        return report("bonus-et")
            except PrimeExhaustedError:
                pass
    fallback_certified(A, st, sampler, options.threads)
    return report("fallback-certified")


def _baseline_report(A: IntMatrix, st: CraState, algo: str, epsilon: float, t0: float, sw: Stopwatch, K: int = 1, solvings: int = 0) -> DetReport:
    return DetReport(
        det=st.value(),
        path=algo,
        solvings=solvings,
        primes_used=len(st.raw),
        K_bits=K.bit_length(),
        epsilon=epsilon,
        timings={"total": time.perf_counter() - t0, "lu": sw.total.get("lu", 0.0)},
        n=A.rows,
        K=K,
        s_tilde=K,
    )


def certified_cra(A: IntMatrix, seed=0, prime_bits: int = DEFAULT_PRIME_BITS, threads: int = 1) -> DetReport:
    """Remaindering up to the full Hadamard bound; deterministic correctness."""
    t0 = time.perf_counter()
    sampler = PrimeSampler.from_bits(prime_bits, seed=f"cra:{seed}")
    st = CraState(H=hadamard_bound(A), l=sampler.l, population=sampler.population)
    sw = Stopwatch()
    if threads > 1:
        fallback_certified(A, st, sampler, threads)
    else:
        while not st.certified:
            cra_step(st, A, sampler, sw)
    return _baseline_report(A, st, "certified-cra", 0.0, t0, sw)


def et_cra(A: IntMatrix, epsilon: float = 2.0**-20, seed=0, prime_bits: int = DEFAULT_PRIME_BITS, K: int = 1) -> DetReport:
    """Remaindering of det(A)/K stopped by the early termination rule alone."""
    t0 = time.perf_counter()
    sampler = PrimeSampler.from_bits(prime_bits, seed=f"cra:{seed}")
    st = CraState(H=hadamard_bound(A), l=sampler.l, population=sampler.population)
    if K != 1:
        st.set_divisor(K)
    sw = Stopwatch()
    cra_budget_run(st, A, math.inf, sampler, epsilon, sw)
    return _baseline_report(A, st, "et-cra", epsilon, t0, sw, K)


def lif_then_et(A: IntMatrix, epsilon: float = 2.0**-20, seed=0, prime_bits: int = DEFAULT_PRIME_BITS) -> DetReport:
    """Largest invariant factor first, then early-terminated remaindering of det(A)/s~."""
    t0 = time.perf_counter()
    H = hadamard_bound(A)
    try:
        s = lif(A, lif_config_for(max(H, 2)), seed=seed, sampler=PrimeSampler.from_bits(prime_bits, seed=f"solve:{seed}"))
        solves = 2
    except SingularMatrixError:
        s, solves = 1, 0
    rep = et_cra(A, epsilon / 2, seed, prime_bits, K=s)
    rep.path = "lif-only"
    rep.solvings = solves
    rep.epsilon = epsilon
    rep.timings["total"] = time.perf_counter() - t0
    return rep


ALGORITHMS = ("introspective", "certified-cra", "et-cra", "abbott", "lif-only", "bareiss")


def run_algorithm(name: str, A: IntMatrix, epsilon: float = 2.0**-20, **options) -> DetReport:
    """Dispatch by algorithm id; ``options`` are DetOptions fields (ignored where meaningless)."""
    seed = options.get("seed", 0)
    bits = options.get("prime_bits", DEFAULT_PRIME_BITS)
    if not A.is_square:
        raise ValueError(f"square matrix required, got {A.rows}x{A.cols}")
    if name == "introspective":
        return determinant(A, epsilon, **options)
    if name == "abbott":
        # one bonus level, then plain early-terminated remaindering
        opts = {**options, "i_max": 1, "i_min": 1, "final": "et"}
        rep = determinant(A, epsilon, **opts)
        rep.path = "abbott"
        return rep
    if name == "certified-cra":
        return certified_cra(A, seed, bits, options.get("threads", 1))
    if name == "et-cra":
        return et_cra(A, epsilon, seed, bits)
    if name == "lif-only":
        return lif_then_et(A, epsilon, seed, bits)
    if name == "bareiss":
        t0 = time.perf_counter()
        d = bareiss_det(A)
        return DetReport(d, "bareiss", 0, 0, 0, 0.0, {"total": time.perf_counter() - t0}, n=A.rows)
    raise ValueError(f"unknown algorithm {name!r}")
