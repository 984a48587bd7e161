import numpy as np
import pytest

from optlab.drl.contraction import (SyntheticMDP, iterate_distances, projected_bellman,
                                    random_mdp, random_table, verify_contraction)
from optlab.drl.quantile import quantile_projection


def _deterministic_mdp(rng, S=3, A=2):
    nxt = rng.integers(S, size=(S, A))
    P = np.zeros((S, A, S))
    P[np.arange(S)[:, None], np.arange(A)[None, :], nxt] = 1.0
    pi = np.zeros((S, A))
    pi[np.arange(S), rng.integers(A, size=S)] = 1.0
    return SyntheticMDP(P, rng.uniform(0, 1, (S, A, S)), pi, 1.0), nxt


def test_deterministic_mdp_shifts_and_scales(rng):
    mdp, nxt = _deterministic_mdp(rng)
    Z = random_table(rng, mdp, 0.7, 4)
    out = projected_bellman(Z, mdp, 0.7)
    for s in range(3):
        for a in range(2):
            s2 = nxt[s, a]
            a2 = int(np.argmax(mdp.policy[s2]))
            assert np.allclose(out[s, a], mdp.reward[s, a, s2] + 0.7 * Z[s2, a2])


def test_zero_discount_projects_reward_mixture(rng):
    mdp = random_mdp(rng, 4, 2)
    out = projected_bellman(np.zeros((4, 2, 3)), mdp, 0.0)
    for s in range(4):
        for a in range(2):
            want = quantile_projection(mdp.reward[s, a], 3, weights=mdp.transition[s, a])
            assert np.allclose(out[s, a], want)


def test_random_table_bounds(rng):
    mdp = random_mdp(rng)
    Z = random_table(rng, mdp, 0.9, 6)
    assert Z.shape == (8, 4, 6)
    assert Z.min() >= 0 and Z.max() <= 10.0
    assert np.all(np.diff(Z, axis=-1) >= 0)


def test_output_cells_sorted(rng):
    mdp = random_mdp(rng)
    out = projected_bellman(random_table(rng, mdp, 0.9, 5), mdp, 0.9)
    assert np.all(np.diff(out, axis=-1) >= 0)


@pytest.mark.parametrize("Q", [1, 5, 40])
def test_no_violations_small_run(Q):
    rep = verify_contraction(50, 0.9, Q, np.random.default_rng(Q))
    assert rep.trials == 50
    assert rep.violations == 0
    assert rep.worst_margin <= 1e-9
    # identical inputs: only the resolution term remains
    assert rep.lhs[0] <= rep.rhs[0] + 1e-12


def test_iterates_stay_inside_envelope(rng):
    gamma, Q = 0.9, 10
    mdp = random_mdp(rng)
    Z0 = random_table(rng, mdp, gamma, Q)
    d = iterate_distances(Z0, mdp, gamma, 120)
    theta = 2 * mdp.reward_bound / (1 - gamma)
    c = theta / Q
    bound = d[0]
    for t in range(1, d.size):
        bound = gamma * (bound + c)
        assert d[t] <= bound + 1e-9
    assert d[-1] < 1e-3
