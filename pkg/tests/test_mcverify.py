import itertools
import json
import random
from fractions import Fraction

import numpy as np
import pytest

from introdet.bigmat import IntMatrix, bareiss_det, smith_form
from introdet.mcverify import (
    McResult,
    _batch_det,
    mc_bonus_gap,
    mc_factor_count,
    mc_lif_gap,
    mc_perturbed_det,
    mc_rank_bound,
    rank_bound,
    trivial_smith_v,
)
from introdet.modfield import rank_mod_p


def count_rank_fq(k, n, q, j):
    # number of k x n matrices over F_q of rank j
    num = 1
    for i in range(j):
        num *= (q**k - q**i) * (q**n - q**i)
    den = 1
    for i in range(j):
        den *= q**j - q**i
    return num // den


def test_rank_counting_oracle_sums_to_one():
    assert sum(count_rank_fq(3, 4, 3, j) for j in range(4)) == 3**12


def test_two_by_two_binary_bound_is_attained():
    hits = sum(
        1
        for e in itertools.product((0, 1), repeat=4)
        if rank_mod_p(np.array(e).reshape(2, 2), 2) == 1
    )
    assert Fraction(hits, 16) == Fraction(9, 16)
    assert rank_bound(2, 2, 2, 2, 1, form="tight") == Fraction(9, 16)
    assert rank_bound(2, 2, 2, 2, 1) == 1


def test_tight_form_fails_for_uniform_ternary_8x8():
    # exact rank-7 probability of a uniform 8x8 matrix over F_3 exceeds the
    # product form, while the final (loose) form still holds for every j
    exact = {j: Fraction(count_rank_fq(8, 8, 3, j), 3**64) for j in range(9)}
    assert exact[7] > rank_bound(8, 8, 3, 3, 7, form="tight")
    assert float(exact[7]) == pytest.approx(0.4200, abs=1e-4)
    for j in range(1, 9):
        assert exact[j] <= rank_bound(8, 8, 3, 3, j)


def test_rank_estimator_close_to_exact():
    res = mc_rank_bound(8, 8, 2, 3, 6, 20000, seed=3)
    exact = count_rank_fq(8, 8, 3, 6) / 3**64
    assert abs(res.estimate - exact) < 4 * np.sqrt(exact * (1 - exact) / 20000)
    assert res.passed
    assert res.bound == pytest.approx(1 / 36)


def test_rank_bound_validation():
    with pytest.raises(ValueError):
        rank_bound(2, 3, 2, 2, 1)
    with pytest.raises(ValueError):
        rank_bound(3, 3, 2, 2, 1, form="medium")


def test_result_invariants_and_json():
    r = mc_rank_bound(2, 2, 1, 2, 1, 4000, seed=1, form="tight")
    assert r.estimate == r.successes / r.trials
    assert r.slack == pytest.approx(3 * np.sqrt(r.estimate * (1 - r.estimate) / r.trials))
    d = json.loads(r.to_json())
    assert d["pass"] == r.passed and d["trials"] == 4000
    assert McResult("x", 10, 9, 0.9, 0.5, 0.0).passed is False


def test_estimators_reproducible():
    a = mc_perturbed_det(6, 3, 64, 2, 3, 5000, seed=7)
    b = mc_perturbed_det(6, 3, 64, 2, 3, 5000, seed=7)
    assert a.successes == b.successes


def test_batch_det_matches_bareiss():
    rng = np.random.default_rng(2)
    T = rng.integers(-40, 41, size=(300, 4, 4))
    T[5] = 0
    T[6, :, 1] = T[6, :, 0] * 2
    T[7, 0, 0] = 0
    got = _batch_det(T)
    assert [int(x) for x in got] == [bareiss_det(IntMatrix.from_rows(m.tolist())) for m in T]
    big = rng.integers(-(10**6), 10**6, size=(20, 5, 5))
    assert [int(x) for x in _batch_det(big)] == [bareiss_det(IntMatrix.from_rows(m.tolist())) for m in big]


def test_trivial_v():
    V = trivial_smith_v(3, 6, 100, random.Random(0))
    assert smith_form(V) == (1, 1, 1)


def test_perturbed_trivial_exponent():
    r = mc_perturbed_det(6, 3, 64, 2, 0, 1000, seed=1)
    assert r.estimate == 1.0 and r.bound == 3.0 and r.passed
    with pytest.raises(ValueError):
        mc_perturbed_det(6, 3, 8, 2, 3, 10)


def test_small_factor_and_gap_runs():
    assert mc_factor_count(2, 4, 20, seed=1).passed
    assert mc_factor_count(10, 1, 20, seed=1, p=2).bound == 4
    assert mc_lif_gap(1, "expected-O1", 3).estimate == 0
    with pytest.raises(ValueError):
        mc_lif_gap(10, "epsilon", 3)
    g = mc_bonus_gap(10, 5, seed=2)
    assert g.kind == "mean" and g.estimate >= 0
