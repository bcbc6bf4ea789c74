import numpy as np
import pytest
import sympy

from introdet.bigmat import IntMatrix, bareiss_det, gen_random
from introdet.modfield import (
    PrimeExhaustedError,
    PrimeSampler,
    count_primes,
    inverse_mod_p,
    is_prime,
    lu_det_mod_p,
    rank_mod_p,
    rank_mod_p_batch,
)


def test_is_prime_against_trial_division():
    def slow(n):
        return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))

    assert [n for n in range(2000) if is_prime(n)] == [n for n in range(2000) if slow(n)]
    # strong pseudoprimes to several small bases
    for n in (2047, 1373653, 25326001, 3215031751, 3825123056546413051):
        assert not is_prime(n)
    assert is_prime(2**31 - 1) and is_prime((1 << 61) - 1)


def test_window_population():
    # sympy.primepi(2**20) - sympy.primepi(2**19)
    assert count_primes(2**19, 2**20) == 38635
    assert count_primes(100, 200) == sympy.primepi(199) - sympy.primepi(100)
    assert PrimeSampler().population == 38635


def test_sampler_distinct_in_window_and_seeded():
    s = PrimeSampler(seed=5)
    ps = [s.sample() for _ in range(300)]
    assert len(set(ps)) == 300
    assert all(2**19 < p < 2**20 and is_prime(p) for p in ps)
    t = PrimeSampler(seed=5)
    assert [t() for _ in range(300)] == ps
    u = PrimeSampler(seed=6)
    assert [u() for _ in range(300)] != ps


def test_sampler_exhaustion():
    s = PrimeSampler(100, 130, seed=1)
    got = sorted(s.sample() for _ in range(s.population))
    assert got == [101, 103, 107, 109, 113, 127]
    with pytest.raises(PrimeExhaustedError):
        s.sample()


def test_sampler_rejects_bad_windows():
    with pytest.raises(ValueError):
        PrimeSampler(10, 11)
    with pytest.raises(ValueError):
        PrimeSampler(1 << 31, 1 << 32)
    assert PrimeSampler.from_bits(10).l == 1024


@pytest.mark.parametrize("n,seed", [(1, 0), (5, 1), (12, 2), (30, 3)])
def test_det_mod_p_matches_exact(n, seed):
    A = gen_random(n, 200, seed)
    d = bareiss_det(A)
    for p in (2, 3, 65537, 1048573):
        assert lu_det_mod_p(A, p) == d % p


def test_det_mod_p_singular_and_large_entries():
    assert lu_det_mod_p(IntMatrix.from_rows([[1, 2], [2, 4]]), 101) == 0
    A = IntMatrix.from_rows([[2**80 + 1, 3], [5, 2**70]])
    p = 1000003
    assert lu_det_mod_p(A, p) == bareiss_det(A) % p


def test_rank_and_inverse():
    A = IntMatrix.from_rows([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    assert rank_mod_p(A, 7) == 2
    assert inverse_mod_p(A, 7) is None
    B = gen_random(8, 50, 4)
    p = 524309
    C = inverse_mod_p(B, p)
    prod = (B.reduce_mod(p).astype(object) @ C.astype(object)) % p
    assert (prod == np.eye(8, dtype=object)).all()


def test_rank_batch_matches_scalar():
    rng = np.random.default_rng(0)
    stack = rng.integers(-1, 2, size=(400, 5, 7))
    ranks = rank_mod_p_batch(stack, 3)
    assert ranks.tolist() == [rank_mod_p(m, 3) for m in stack]
    ranks2 = rank_mod_p_batch(stack, 2)
    assert ranks2.tolist() == [rank_mod_p(m, 2) for m in stack]
