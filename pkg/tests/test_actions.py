import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_complex
from oracles import action_id_by_string, sinr_loop
from optlab.drl.actions import (ActionReduction, action_decode, action_encode, best_flip,
                                flip_matrix, flip_spectral_efficiency, reduce_action_space)


def test_documented_example_id():
    diag = [1, 1, -1, -1] * 4
    assert action_encode(diag) == 13108
    assert action_id_by_string(diag) == 13108
    assert np.array_equal(action_decode(13108, 16), diag)


def test_identity_and_all_flipped():
    assert action_encode(np.ones(16)) == 1
    assert action_encode(-np.ones(3)) == 8


def test_decode_range():
    with pytest.raises(ValueError):
        action_decode(0, 4)
    with pytest.raises(ValueError):
        action_decode(17, 4)
    with pytest.raises(ValueError):
        action_encode([1, 0, -1])


@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=20))
def test_round_trip(diag):
    i = action_encode(diag)
    assert i == action_id_by_string(diag)
    assert np.array_equal(action_decode(i, len(diag)), diag)


def test_flip_matrix_rows():
    F = flip_matrix(3)
    assert F.shape == (8, 3)
    for i, row in enumerate(F, 1):
        assert action_encode(row.astype(int)) == i
    with pytest.raises(ValueError):
        flip_matrix(21)


def _rate(phi, G, W, s2):
    return sum(np.log2(1 + sinr_loop(W, phi, G, s2, k)) for k in range(G.shape[0]))


@given(st.integers(0, 10_000))
def test_flip_rates_match_direct_evaluation(seed):
    rng = np.random.default_rng(seed)
    G = random_complex(rng, (2, 3, 2))
    W = random_complex(rng, (2, 2))
    phi = np.exp(1j * rng.uniform(0, 6, 3))
    F = flip_matrix(3)
    got = flip_spectral_efficiency(phi, G, W, 0.3, F)
    want = [_rate(phi * f, G, W, 0.3) for f in F]
    assert np.allclose(got, want, rtol=1e-10)
    b = best_flip(phi, G, W, 0.3, chunk=3)
    assert b == int(np.argmax(want)) + 1


def test_best_flip_ties_go_to_identity():
    G = np.zeros((1, 4, 2), complex)
    assert best_flip(np.ones(4), G, np.ones((2, 1)), 1.0) == 1


def test_best_flip_guard():
    with pytest.raises(ValueError):
        best_flip(np.ones(21), np.zeros((1, 21, 1)), np.ones((1, 1)), 1.0)


def _sampler(seed, N=4):
    def sample(i):
        rng = np.random.default_rng([seed, i])
        G = random_complex(rng, (2, N, 2))
        return np.exp(1j * rng.uniform(0, 6, N)), G, random_complex(rng, (2, 2)), 0.5
    return sample


def test_reduction_full_set_covers_everything():
    red = reduce_action_space(_sampler(0), 40, 16)
    assert sorted(red.actions) == list(range(1, 17))
    assert red.coverage() == 1.0
    assert red.coverage([best_flip(*_sampler(1)(i)) for i in range(20)]) == 1.0


def test_reduction_ranking_and_padding():
    red = reduce_action_space(_sampler(2), 30, 12)
    counts = [red.counts.get(a, 0) for a in red.actions]
    assert counts == sorted(counts, reverse=True)
    assert len(red.actions) == 12 and len(set(red.actions)) == 12
    assert sum(red.counts.values()) == 30
    assert red.ranked()[: len(red.counts)] == red.actions[: len(red.counts)]
    assert red.sorted_actions() == sorted(red.actions)


def test_coverage_nondecreasing_in_size():
    red = reduce_action_space(_sampler(3), 60, 16)
    held = [best_flip(*_sampler(4)(i)) for i in range(30)]
    cov = [red.coverage(held, size=a) for a in range(1, 17)]
    assert all(b >= a for a, b in zip(cov, cov[1:]))
    train = [red.coverage(size=a) for a in range(1, 17)]
    assert all(b >= a for a, b in zip(train, train[1:]))


def test_reduction_argument_checks():
    with pytest.raises(ValueError):
        reduce_action_space(_sampler(0), 0, 3)
    r = ActionReduction(N=2, actions=[1], counts={1: 2, 3: 2}, num_samples=4)
    assert r.coverage() == 0.5
