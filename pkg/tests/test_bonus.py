import random
import warnings
from math import lcm

import pytest

from introdet.bigmat import bareiss_det, gen_engineered, gen_random, hadamard_bound, smith_form
from introdet.bonus import (
    BonusParams,
    BonusState,
    Outcome,
    bonus_params,
    bonus_round,
    expected_factor_count,
    extend_solution,
    numerator_matrix,
    pi_estimate,
)
from introdet.modfield import PrimeSampler
from introdet.padic import RationalVector


def test_expected_factor_count_values():
    # ceil(sqrt(2 log_4 40)) + 3 = ceil(2.307) + 3
    assert expected_factor_count(40, 4) == 6
    assert expected_factor_count(100, 200) == 5
    assert expected_factor_count(2, 2) == 5
    assert expected_factor_count(1, 16) == 3
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert expected_factor_count(40, 1) == expected_factor_count(40, 2)
    assert w


def test_bonus_params_formula():
    A = gen_random(40, 4, 0)
    H = hadamard_bound(A)
    p = bonus_params(A, lam=4)
    assert p.S == 13 * 6**3 * ((H - 1).bit_length()) ** 4
    assert (p.i_min, p.i_max) == (2, 6)
    assert bonus_params(A, lam=4, i_max=1).i_min == 1
    with pytest.raises(ValueError):
        BonusParams(1, 1, 1)


def test_numerator_matrix():
    cols = [RationalVector((1, 2), 3), RationalVector((5, -1), 2)]
    N = numerator_matrix(cols, 6)
    assert N.tolist() == [[2, 15], [4, -3]]
    with pytest.raises(ValueError):
        numerator_matrix(cols, 4)


@pytest.mark.parametrize("seed", range(4))
def test_pi_estimates_divide_true_products(seed):
    A = gen_engineered(16, seed)
    sf = smith_form(A)
    params = bonus_params(A)
    st = BonusState()
    rng = random.Random(seed)
    sampler = PrimeSampler(seed=seed)
    for i in (1, 2, 3):
        st.i = i
        extend_solution(st, A, params.S, rng, sampler)
        assert sf.largest(1) % st.s_tilde == 0
        assert sf.largest(i) % pi_estimate(st, i, params.S, rng, sampler) == 0
    assert st.solvings == 3


def test_round_bookkeeping():
    A = gen_engineered(12, 1)
    params = BonusParams(S=10**6, i_min=2, i_max=4)
    st = BonusState()
    rng = random.Random(1)
    seen = []
    outcomes = []
    for _ in range(4):
        out = bonus_round(st, A, params, rng, PrimeSampler(seed=2), PrimeSampler(seed=3), after_update=lambda s: seen.append(s.K) or False)
        outcomes.append(out)
        if out is not Outcome.EXTENDED:
            break
    assert bareiss_det(A) % st.K == 0
    # K only grows by divisibility, and a stabilized level flips the phase
    assert all(b % a == 0 for a, b in zip(seen, seen[1:]))
    if outcomes[-1] is Outcome.NEW_LEVEL:
        assert st.j == 1 and st.k_app >= 3 and st.k_done == 0


def test_round_termination_hook():
    A = gen_random(10, 16, 1)
    params = bonus_params(A)
    st = BonusState()
    out = bonus_round(st, A, params, random.Random(0), after_update=lambda s: True)
    assert out is Outcome.TERMINATED
    assert st.solvings == 1 and st.K == st.s_tilde


def test_confirmed_level_on_second_phase():
    A = gen_engineered(10, 2)
    params = BonusParams(S=10**8, i_min=1, i_max=3)
    st = BonusState()
    rng = random.Random(5)
    always = lambda a, b: True
    first = bonus_round(st, A, params, rng, stable_test=always)
    # i = 1 is not above i_min, so the level only advances
    assert first is Outcome.EXTENDED
    assert bonus_round(st, A, params, rng, stable_test=always) is Outcome.NEW_LEVEL
    assert (st.k_done, st.k_app, st.j) == (0, 2, 1)
    st.i = 1
    assert bonus_round(st, A, params, rng, stable_test=always) is Outcome.EXTENDED
    assert bonus_round(st, A, params, rng, stable_test=always) is Outcome.CONFIRMED
