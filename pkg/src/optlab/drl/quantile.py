"""Quantile representation of return distributions.

A return distribution is stored as ``Q`` equally weighted atoms (supports)
placed at the quantile levels ``w_q = (2q - 1) / (2Q)``, ``q = 1..Q``.
"""

from __future__ import annotations

import numpy as np


def quantile_levels(Q):
    """Midpoint levels ``(2q - 1) / (2Q)`` for ``q = 1..Q``."""
    if int(Q) < 1:
        raise ValueError("Q must be at least 1")
    return (2.0 * np.arange(1, int(Q) + 1) - 1.0) / (2.0 * int(Q))


def quantile_projection(samples, Q, weights=None):
    """Project a (weighted) sample set onto ``Q`` quantile supports.

    Support ``q`` is the lower empirical quantile
    ``inf{x : F(x) >= w_q}`` of the sample distribution, which minimises
    the quantile regression loss of `qr_loss` and the 1-Wasserstein
    distance to the samples among all ``Q``-atom distributions.

    Parameters
    ----------
    samples : array_like
        Atom locations.
    Q : int
        Number of output supports.
    weights : array_like, optional
        Nonnegative atom probabilities; equal weights by default.

    Returns
    -------
    ndarray, shape (Q,)
        Sorted nondecreasing supports.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    levels = quantile_levels(Q)
    order = np.argsort(x, kind="stable")
    x = x[order]
    if weights is None:
        # F(x_(i)) = i / n, so the lower quantile at level t is x_(ceil(n t))
        n = x.size
        idx = np.ceil(n * levels - 1e-12).astype(int) - 1
        return x[np.clip(idx, 0, n - 1)]
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != x.shape or np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be nonnegative, not all zero and match samples")
    cdf = np.cumsum(w[order]) / w.sum()
    idx = np.searchsorted(cdf, levels - 1e-12, side="left")
    return x[np.clip(idx, 0, x.size - 1)]


def qr_loss(samples, supports, Q=None, power=1):
    """Quantile regression loss of a support set against samples.

    ``sum_q mean_z |w_q - 1{z < z_q}| * |z - z_q|**power``.  With
    ``power=1`` (the default) this is the pinball loss whose minimiser is
    the quantile set returned by `quantile_projection`.  ``power=2`` gives
    the asymmetric squared loss, minimised by expectiles instead.
    """
    z = np.asarray(samples, dtype=float).ravel()
    s = np.asarray(supports, dtype=float).ravel()
    if Q is not None and int(Q) != s.size:
        raise ValueError("Q must equal the number of supports")
    if z.size == 0:
        raise ValueError("samples must be nonempty")
    w = quantile_levels(s.size)
    diff = z[None, :] - s[:, None]                   # (Q, n)
    weight = np.abs(w[:, None] - (diff < 0))
    return float(np.sum(np.mean(weight * np.abs(diff) ** power, axis=1)))


def wasserstein_d1(a, b):
    """1-Wasserstein distance between two equal-weight atom sets of equal size."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.shape != b.shape:
        raise ValueError("support sets must have the same size")
    return float(np.mean(np.abs(a - b)))


def max_wasserstein_d1(Z1, Z2):
    """Supremum over table cells of `wasserstein_d1` for (..., Q) arrays."""
    Z1 = np.sort(np.asarray(Z1, dtype=float), axis=-1)
    Z2 = np.sort(np.asarray(Z2, dtype=float), axis=-1)
    if Z1.shape != Z2.shape:
        raise ValueError("tables must have the same shape")
    return float(np.max(np.mean(np.abs(Z1 - Z2), axis=-1)))
