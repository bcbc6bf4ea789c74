import random
from math import lcm

import pytest

from introdet.bigmat import IntMatrix, gen_engineered, gen_random, hadamard_bound, smith_form
from introdet.lif import ceil_log2, lif, lif_config_for, lif_trace, symmetric_entries, LifConfig
from introdet.modfield import PrimeSampler


def test_ceil_log2():
    assert [ceil_log2(x) for x in (1, 2, 3, 4, 5, 1024, 1025)] == [0, 1, 2, 2, 3, 10, 11]


def test_regime_parameters():
    H = 2**100
    assert lif_config_for(H) == LifConfig(2, 100)
    assert lif_config_for(H, "probability-1/3") == LifConfig(2, 206)
    # ceil(log2(100) + 10) = 17
    assert lif_config_for(H, "epsilon", 2**-10) == LifConfig(17, 100)
    assert lif_config_for(2**99 + 1, "epsilon", 0.5).beta % 2 == 0
    with pytest.raises(ValueError):
        lif_config_for(H, "epsilon")
    with pytest.raises(ValueError):
        lif_config_for(H, "nope")
    with pytest.raises(ValueError):
        LifConfig(0, 4)


def test_symmetric_entries_range():
    rng = random.Random(0)
    vals = symmetric_entries(rng, 5000, 7)
    assert set(vals) == set(range(-3, 4))
    assert set(symmetric_entries(rng, 2000, 4)) == {-2, -1, 0, 1}


def test_engineered_largest_factor():
    A = gen_engineered(30, 0)
    sn = smith_form(A).largest(1)
    assert sn == 2329089562800 == lcm(*range(1, 31))
    for seed in range(5):
        est = lif(A, seed=seed, sampler=PrimeSampler(seed=seed))
        assert sn % est == 0


def test_trace_is_monotone_chain():
    A = gen_random(25, 4, 2)
    cfg = lif_config_for(hadamard_bound(A), "epsilon", 2**-8)
    trace = lif_trace(A, cfg, seed=1)
    assert len(trace) == cfg.r
    assert all(b % a == 0 for a, b in zip(trace, trace[1:]))
    assert smith_form(A).largest(1) % trace[-1] == 0


def test_unimodular_and_seed_determinism():
    assert lif(IntMatrix.identity(6)) == 1
    A = gen_engineered(15, 4)
    assert lif(A, seed=3) == lif(A, seed=3)
