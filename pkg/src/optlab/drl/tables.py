"""Deviation states, tabular learners and their update rules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantile import quantile_projection


@dataclass(frozen=True)
class DeviationState:
    bits: tuple
    index: int


def compute_state(y, y_hat, E_th):
    """Threshold the per-UE deviation power ``|y_k - y_hat_k|^2`` against E_th.

    Bit k (UE k, most significant first) is 1 when the deviation power
    exceeds the threshold.
    """
    if not E_th > 0:
        raise ValueError("E_th must be positive")
    e = np.abs(np.asarray(y) - np.asarray(y_hat)) ** 2
    bits = tuple(int(b) for b in (e > E_th))
    index = 0
    for b in bits:
        index = (index << 1) | b
    return DeviationState(bits=bits, index=index)


class QuantileTable:
    """Return distributions ``z[s, a, :]`` (sorted supports) with visit counts.

    Action columns follow ``action_ids`` sorted ascending, so the first
    maximiser of an argmax is the lowest action id.
    """

    def __init__(self, num_states, action_ids, Q):
        self.action_ids = np.array(sorted(int(a) for a in action_ids), dtype=np.int64)
        if self.action_ids.size == 0:
            raise ValueError("action set must be nonempty")
        self.Q = int(Q)
        self.z = np.zeros((int(num_states), self.action_ids.size, self.Q))
        self.visits = np.zeros((int(num_states), self.action_ids.size), dtype=np.int64)

    @property
    def num_states(self):
        return self.z.shape[0]

    @property
    def num_actions(self):
        return self.z.shape[1]

    def expected(self):
        return self.z.mean(axis=2)

    def copy(self):
        t = QuantileTable(self.num_states, self.action_ids, self.Q)
        t.z = self.z.copy()
        t.visits = self.visits.copy()
        return t


class ScalarQTable:
    """Scalar action values ``q[s, a]`` for the Q-learning comparator."""

    def __init__(self, num_states, action_ids, learning_rate=0.1):
        if not 0.0 < learning_rate <= 1.0:
            raise ValueError("learning rate must lie in (0, 1]")
        self.action_ids = np.array(sorted(int(a) for a in action_ids), dtype=np.int64)
        if self.action_ids.size == 0:
            raise ValueError("action set must be nonempty")
        self.q = np.zeros((int(num_states), self.action_ids.size))
        self.visits = np.zeros_like(self.q, dtype=np.int64)
        self.learning_rate = float(learning_rate)

    @property
    def num_states(self):
        return self.q.shape[0]

    @property
    def num_actions(self):
        return self.q.shape[1]

    def expected(self):
        return self.q

    def copy(self):
        t = ScalarQTable(self.num_states, self.action_ids, self.learning_rate)
        t.q = self.q.copy()
        t.visits = self.visits.copy()
        return t


def expected_return(table, state, action):
    """Mean of the supports in one cell (column index `action`)."""
    return float(np.mean(table.z[state, action]))


def greedy_action(table, state, action_set=None):
    """Column index maximising the expected return; lowest action id on ties.

    `action_set` optionally restricts the choice to a subset of column
    indices.
    """
    values = table.expected()[state]
    if action_set is None:
        return int(np.argmax(values))
    cols = np.asarray(sorted(action_set, key=lambda c: table.action_ids[c]))
    if cols.size == 0:
        raise ValueError("action set must be nonempty")
    return int(cols[np.argmax(values[cols])])


def _choose(table, state, epsilon, rng):
    if epsilon > 0 and rng is not None and rng.random() < epsilon:
        return int(rng.integers(table.num_actions))
    return greedy_action(table, state)


def qrdrl_step(table, prev_state, prev_action, reward, cur_state, gamma, epsilon=0.0, rng=None):
    """One distributional update followed by the next action choice.

    The next action is greedy in `cur_state` (uniform with probability
    `epsilon`); the cell ``(prev_state, prev_action)`` is replaced by the
    quantile projection of ``reward + gamma * z(cur_state, next_action)``.

    Returns
    -------
    int
        Column index of the next action.  `table` is updated in place.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    nxt = _choose(table, cur_state, epsilon, rng)
    targets = reward + gamma * table.z[cur_state, nxt]
    table.z[prev_state, prev_action] = quantile_projection(targets, table.Q)
    table.visits[prev_state, prev_action] += 1
    return nxt


def qlearning_step(table, prev_state, prev_action, reward, cur_state, gamma, epsilon=0.0, rng=None):
    """``q(s, a) <- (1 - lr) q(s, a) + lr (r + gamma max_a' q(s', a'))`` then act."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    lr = table.learning_rate
    target = reward + gamma * float(np.max(table.q[cur_state]))
    table.q[prev_state, prev_action] = (1.0 - lr) * table.q[prev_state, prev_action] + lr * target
    table.visits[prev_state, prev_action] += 1
    return _choose(table, cur_state, epsilon, rng)


# ---------------------------------------------------------------------------
# serialisation: a text header followed by one row per (state, action) cell
# ---------------------------------------------------------------------------

def save_table(table, path):
    if isinstance(table, QuantileTable):
        kind, data, Q = "quantile", table.z.reshape(-1, table.Q), table.Q
        extra = ""
    else:
        kind, data, Q = "scalar", table.q.reshape(-1, 1), 1
        extra = f" {table.learning_rate!r}"
    header = (f"{kind} {table.num_states} {table.num_actions} {Q}{extra}\n"
              + " ".join(str(a) for a in table.action_ids))
    np.savetxt(path, data, header=header, fmt="%.17g")


def load_table(path):
    with open(path) as fh:
        meta = fh.readline().lstrip("#").split()
        ids = [int(a) for a in fh.readline().lstrip("#").split()]
    kind, S, A, Q = meta[0], int(meta[1]), int(meta[2]), int(meta[3])
    data = np.loadtxt(path, ndmin=2)
    if data.shape != (S * A, Q) or len(ids) != A:
        raise ValueError(f"{path}: table body does not match its header")
    if kind == "quantile":
        t = QuantileTable(S, ids, Q)
        t.z = data.reshape(S, A, Q)
    elif kind == "scalar":
        t = ScalarQTable(S, ids, float(meta[4]))
        t.q = data.reshape(S, A)
    else:
        raise ValueError(f"{path}: unknown table kind {kind!r}")
    return t
