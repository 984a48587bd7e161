"""Numerical check that the projected distributional Bellman operator contracts.

For a small random MDP and a fixed policy the operator maps a quantile table
``Z`` to ``Pi T Z``: cell ``(s, a)`` becomes the quantile projection of the
mixture over next states ``s'`` and next actions ``a'`` of
``r(s, a, s') + gamma * Z(s', a')``.  The check compares the largest
per-cell 1-Wasserstein distance before and after one application.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantile import max_wasserstein_d1, quantile_projection


@dataclass
class SyntheticMDP:
    transition: np.ndarray   # P[s, a, s']
    reward: np.ndarray       # r[s, a, s'] in [0, reward_bound]
    policy: np.ndarray       # pi[s', a']
    reward_bound: float

    @property
    def num_states(self):
        return self.transition.shape[0]

    @property
    def num_actions(self):
        return self.transition.shape[1]


def random_mdp(rng, num_states=8, num_actions=4, reward_bound=1.0):
    P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    r = rng.uniform(0.0, reward_bound, size=(num_states, num_actions, num_states))
    pi = rng.dirichlet(np.ones(num_actions), size=num_states)
    return SyntheticMDP(P, r, pi, float(reward_bound))


def projected_bellman(Z, mdp, gamma):
    """Apply ``Pi T`` to a table ``Z`` of shape (S, A, Q)."""
    S, A, Q = Z.shape
    out = np.empty_like(Z, dtype=float)
    # next-cell weights pi(a'|s') / Q, shared by every (s, a)
    for s in range(S):
        for a in range(A):
            atoms = mdp.reward[s, a][:, None, None] + gamma * Z            # (S', A', Q)
            w = mdp.transition[s, a][:, None, None] * mdp.policy[:, :, None] / Q
            w = np.broadcast_to(w, atoms.shape)
            out[s, a] = quantile_projection(atoms.ravel(), Q, weights=w.ravel())
    return out


def random_table(rng, mdp, gamma, Q):
    """Sorted random supports inside the attainable return range."""
    hi = mdp.reward_bound / (1.0 - gamma)
    Z = rng.uniform(0.0, hi, size=(mdp.num_states, mdp.num_actions, Q))
    return np.sort(Z, axis=-1)


@dataclass
class ContractionReport:
    trials: int
    violations: int
    worst_margin: float      # max of lhs - rhs over trials (<= 0 means no violation)
    lhs: np.ndarray
    rhs: np.ndarray


def verify_contraction(num_trials, gamma, Q, rng, num_states=8, num_actions=4,
                       reward_bound=1.0, slack=1e-9):
    """Count trials where
    ``d1(Pi T Z1, Pi T Z2) > gamma * (d1(Z1, Z2) + theta / Q) + slack``.

    ``d1`` is the largest per-cell 1-Wasserstein distance and ``theta`` the
    largest support magnitude of both inputs plus ``reward_bound / (1 - gamma)``.
    Every trial draws a fresh MDP, policy and table pair.
    """
    lhs = np.empty(num_trials)
    rhs = np.empty(num_trials)
    for t in range(num_trials):
        mdp = random_mdp(rng, num_states, num_actions, reward_bound)
        Z1 = random_table(rng, mdp, gamma, Q)
        Z2 = Z1.copy() if t == 0 else random_table(rng, mdp, gamma, Q)
        theta = max(np.abs(Z1).max(), np.abs(Z2).max()) + reward_bound / (1.0 - gamma)
        lhs[t] = max_wasserstein_d1(projected_bellman(Z1, mdp, gamma),
                                    projected_bellman(Z2, mdp, gamma))
        rhs[t] = gamma * (max_wasserstein_d1(Z1, Z2) + theta / Q)
    margin = lhs - rhs
    return ContractionReport(trials=num_trials, violations=int(np.sum(margin > slack)),
                             worst_margin=float(margin.max()), lhs=lhs, rhs=rhs)


def iterate_distances(Z0, mdp, gamma, steps):
    """``d1(Z_t, Z_{t+1})`` along repeated application of ``Pi T``."""
    Z = np.asarray(Z0, dtype=float)
    out = []
    for _ in range(steps):
        nxt = projected_bellman(Z, mdp, gamma)
        out.append(max_wasserstein_d1(Z, nxt))
        Z = nxt
    return np.array(out)
