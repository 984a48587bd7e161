"""Phase-flip actions and data-driven reduction of the action space.

An action multiplies the reflection coefficient elementwise by a vector of
``+1``/``-1`` values.  Its integer id is obtained by mapping ``-1 -> 1`` and
``+1 -> 0``, reading the bits with the first element most significant and
adding one, so the identity (no flip) is id 1 and flipping every element is
id ``2**N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ENUMERABLE_ELEMENTS = 20


def action_encode(diag):
    d = np.asarray(diag)
    if d.ndim != 1 or d.size == 0 or not np.all(np.isin(d, (-1, 1))):
        raise ValueError("diag must be a nonempty vector of +1/-1")
    bits = (d == -1).astype(np.int64)
    return int(bits @ (1 << np.arange(d.size - 1, -1, -1, dtype=np.int64))) + 1


def action_decode(action_id, N):
    action_id = int(action_id)
    if not 1 <= action_id <= 2 ** N:
        raise ValueError(f"action id {action_id} outside [1, {2 ** N}]")
    bits = (action_id - 1) >> np.arange(N - 1, -1, -1)
    return np.where(bits & 1, -1, 1)


def flip_matrix(N, ids=None):
    """Rows are the +1/-1 diagonals of the given ids (all ``2**N`` by default)."""
    if ids is None:
        if N > MAX_ENUMERABLE_ELEMENTS:
            raise ValueError(f"refusing to enumerate 2**{N} actions")
        ids = np.arange(1, 2 ** N + 1)
    ids = np.asarray(ids, dtype=np.int64)
    bits = ((ids[:, None] - 1) >> np.arange(N - 1, -1, -1)[None, :]) & 1
    return np.where(bits == 1, -1.0, 1.0)


def flip_spectral_efficiency(phi, G, W, sigma2, flips):
    """Sum spectral efficiency (bits/s/Hz) after each candidate flip.

    Parameters
    ----------
    phi : ndarray (N,)
    G : ndarray (K, N, M)
    W : ndarray (M, K)
    sigma2 : float
    flips : ndarray (F, N)
        +1/-1 rows.

    Returns
    -------
    ndarray (F,)
    """
    K, N, _ = G.shape
    # C[n, k, i] = phi_n * G_k[n, :] w_i, so the gain matrix is flips @ C
    C = phi[:, None, None] * np.einsum("knm,mi->nki", G, W)
    A = (flips.astype(complex) @ C.reshape(N, K * K)).reshape(-1, K, K)
    g = A.real ** 2 + A.imag ** 2
    s = np.einsum("fkk->fk", g)
    eta = s / (g.sum(axis=2) - s + sigma2)
    return np.sum(np.log2(1.0 + eta), axis=1)


def best_flip(phi, G, W, sigma2, chunk=8192):
    """Id of the flip maximising the next-slot sum-rate (lowest id on ties)."""
    N = G.shape[1]
    if N > MAX_ENUMERABLE_ELEMENTS:
        raise ValueError(f"exhaustive search over 2**{N} flips refused (N > {MAX_ENUMERABLE_ELEMENTS})")
    best_id, best_val = 1, -np.inf
    total = 2 ** N
    for start in range(1, total + 1, chunk):
        ids = np.arange(start, min(start + chunk, total + 1))
        vals = flip_spectral_efficiency(phi, G, W, sigma2, flip_matrix(N, ids))
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_id, best_val = int(ids[j]), float(vals[j])
    return best_id


@dataclass
class ActionReduction:
    """Outcome of the action-space reduction.

    ``actions`` lists the kept ids, most frequently optimal first (ties by
    lower id); ``counts`` maps every id that was ever optimal to its count.
    """

    N: int
    actions: list
    counts: dict
    num_samples: int

    def coverage(self, optimal_ids=None, size=None):
        """Fraction of drops whose optimal flip lies in the top-`size` set.

        Without `optimal_ids` the training drops themselves are used.
        """
        keep = set(self.actions[: size if size is not None else len(self.actions)])
        if optimal_ids is None:
            total = sum(self.counts.values())
            return sum(c for a, c in self.counts.items() if a in keep) / total
        optimal_ids = list(optimal_ids)
        return sum(a in keep for a in optimal_ids) / len(optimal_ids)

    def ranked(self):
        return sorted(self.counts, key=lambda a: (-self.counts[a], a))

    def sorted_actions(self):
        return sorted(self.actions)


def reduce_action_space(sampler, num_samples, A):
    """Keep the `A` flips that are most often optimal over sampled drops.

    Parameters
    ----------
    sampler : callable
        ``sampler(i)`` returns ``(phi, G, W, sigma2)`` for drop ``i``: the
        current reflection, the true channels, the frozen precoder and the
        noise power.
    num_samples : int
    A : int

    Returns
    -------
    ActionReduction
    """
    if num_samples < 1 or A < 1:
        raise ValueError("num_samples and A must be positive")
    counts = {}
    N = None
    for i in range(num_samples):
        phi, G, W, sigma2 = sampler(i)
        N = G.shape[1]
        a = best_flip(np.asarray(phi), np.asarray(G), np.asarray(W), sigma2)
        counts[a] = counts.get(a, 0) + 1
    ranked = sorted(counts, key=lambda a: (-counts[a], a))
    actions = ranked[:A]
    # pad with the lowest unused ids so the set always has A members
    nxt = 1
    while len(actions) < min(A, 2 ** N):
        if nxt not in counts:
            actions.append(nxt)
        nxt += 1
    return ActionReduction(N=N, actions=actions, counts=counts, num_samples=num_samples)
