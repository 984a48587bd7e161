"""Coherence-interval episodes for the online reflection learners.

An episode is one coherence interval of L slots on a prepared drop.  The
precoder and the starting reflection come from the joint optimiser on the
estimated channels and the precoder stays frozen.  In every slot the BS compares
the received samples with their prediction under the estimate, thresholds
the deviations into a state, and the learner picks a phase flip that is
applied to the reflection used in the next slot.  The reward is the slot's
sum spectral efficiency on the true channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng as rngs
from ..estimation import complex_normal, timing_budget
from ..scenario import NetworkConfig
from .actions import flip_matrix
from .tables import QuantileTable, ScalarQTable, compute_state, greedy_action, qlearning_step, qrdrl_step

EXPLORATION_START = 1.0
EXPLORATION_END = 0.05
EXPLORATION_FRACTION = 0.8


def calibrate_threshold(config: NetworkConfig):
    """Deviation threshold in Watts.

    An explicit ``deviation_threshold`` wins; otherwise the 90th percentile
    of the receiver-noise power, ``sigma2 * ln(10)``, so that with perfect
    CSI a UE reports a deviation in about one slot out of ten.
    """
    if config.deviation_threshold is not None:
        return float(config.deviation_threshold)
    return config.sigma2 * math.log(10.0)


def epsilon_schedule(episode, episodes):
    """Linear decay from 1.0 to 0.05 over the first 80% of episodes, then flat."""
    horizon = EXPLORATION_FRACTION * episodes
    if horizon <= 0:
        return EXPLORATION_END
    frac = min(episode / horizon, 1.0)
    return EXPLORATION_START + frac * (EXPLORATION_END - EXPLORATION_START)


def _se(A, sigma2):
    g = np.abs(A) ** 2
    s = np.diag(g)
    return float(np.sum(np.log2(1.0 + s / (g.sum(axis=1) - s + sigma2))))


@dataclass
class IntervalResult:
    rate: float             # time-averaged over the interval, bits/s
    slot_rates: np.ndarray  # per-slot sum-rate, bits/s
    states: list
    actions: list           # action ids applied after each slot


def run_interval(drop, config: NetworkConfig, table=None, learn=False, epsilon=0.0,
                 seed=0, episode=0, E_th=None):
    """Simulate one coherence interval.

    Parameters
    ----------
    drop : PreparedDrop
    config : NetworkConfig
    table : QuantileTable or ScalarQTable, optional
        None keeps the optimiser reflection for the whole interval.
    learn : bool
        Update `table` in place along the trajectory.
    epsilon : float
        Exploration probability.
    seed, episode : int
        Key the symbol, noise and exploration streams.
    E_th : float, optional
        Deviation threshold; calibrated from `config` when omitted.
    """
    G = drop.channels.true_G
    G_hat = drop.channels.est_G
    W = drop.W
    phi = np.array(drop.phi, dtype=complex)
    K = G.shape[0]
    sigma2 = config.sigma2
    scale = 1.0 / math.sqrt(sigma2)      # rates are computed on noise-normalised gains
    E_th = calibrate_threshold(config) if E_th is None else E_th
    timing = timing_budget(config)
    sym_rng = rngs.stream(seed, "symbols", episode)
    noise_rng = rngs.stream(seed, "receiver_noise", episode)
    explore_rng = rngs.stream(seed, "exploration", episode)
    flips = None if table is None else flip_matrix(G.shape[1], table.action_ids)
    step = None
    if table is not None:
        step = qrdrl_step if isinstance(table, QuantileTable) else qlearning_step

    rates, states, actions = [], [], []
    prev_state = prev_action = None
    for _ in range(config.slots_per_interval):
        beta = complex_normal(sym_rng, K)
        z = complex_normal(noise_rng, K, sigma2)
        Heff = np.einsum("n,knm->km", phi, G)
        Hhat = np.einsum("n,knm->km", phi, G_hat)
        tx = W @ beta
        state = compute_state(Heff @ tx + z, Hhat @ tx, E_th).index
        r = _se(scale * (Heff @ W), 1.0)
        rates.append(r)
        states.append(state)
        if table is None:
            continue
        if prev_state is None or not learn:
            act = _act(table, state, epsilon, explore_rng)
        else:
            act = step(table, prev_state, prev_action, r, state, config.discount,
                       epsilon, explore_rng)
        phi = phi * flips[act]
        actions.append(int(table.action_ids[act]))
        prev_state, prev_action = state, act

    se = np.array(rates)
    slot_rates = config.bandwidth * se
    avg = float(np.dot(timing.slot_durations, slot_rates) / timing.interval)
    return IntervalResult(rate=avg, slot_rates=slot_rates, states=states, actions=actions)


def _act(table, state, epsilon, rng):
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(table.num_actions))
    return greedy_action(table, state)


def new_table(kind, config: NetworkConfig, action_ids, learning_rate=0.1):
    S = 2 ** config.num_ues
    if kind == "qrdrl":
        return QuantileTable(S, action_ids, config.num_quantiles)
    if kind == "qlearning":
        return ScalarQTable(S, action_ids, learning_rate)
    raise ValueError(f"unknown learner {kind!r}")


def train(table, drops, config: NetworkConfig, episodes, seed=0, E_th=None):
    """Train `table` in place for `episodes` intervals, cycling through `drops`.

    Returns the per-episode (time-averaged rate, epsilon) pairs.
    """
    if not drops and episodes > 0:
        raise ValueError("at least one drop is needed for training")
    E_th = calibrate_threshold(config) if E_th is None else E_th
    history = []
    for e in range(episodes):
        eps = epsilon_schedule(e, episodes)
        res = run_interval(drops[e % len(drops)], config, table, learn=True, epsilon=eps,
                           seed=seed, episode=e, E_th=E_th)
        history.append((res.rate, eps))
    return history
