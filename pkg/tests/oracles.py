"""Independent reference computations used by the tests.

These are deliberately naive (explicit loops, grids, plain iterative
minimisers) and share no code with the package.  Do not edit them to make a
failing test pass.
"""

import cmath
import math

import numpy as np


def array_response_loop(azimuth, elevation, V, W):
    out = []
    for v in range(V):
        for w in range(W):
            out.append(cmath.exp(1j * math.pi * (v * math.sin(azimuth) * math.sin(elevation)
                                                 + w * math.cos(elevation))))
    return np.array(out)


def path_loss_hand(d, f_ghz):
    return 32.4 + 21.0 * math.log10(d) + 20.0 * math.log10(f_ghz)


def sinr_loop(W, phi, G, sigma2, k):
    """Explicit double sums for the SINR of UE k."""
    K = G.shape[0]
    N, M = G.shape[1], G.shape[2]

    def gain(kk, i):
        acc = 0j
        for n in range(N):
            for m in range(M):
                acc += phi[n] * G[kk, n, m] * W[m, i]
        return abs(acc) ** 2

    interference = sum(gain(k, i) for i in range(K) if i != k)
    return gain(k, k) / (interference + sigma2)


def grid_phi_matched_filter(G, p_max, sigma2, phases=64, amplitudes=16):
    """Best single-UE rate (bits/s/Hz) over a polar grid for each element of phi,
    with the full-power matched filter as precoder."""
    _, N, M = G.shape
    cands = [a * cmath.exp(2j * math.pi * p / phases)
             for a in ((i + 1) / amplitudes for i in range(amplitudes))
             for p in range(phases)]
    cands = np.array(cands)
    best = 0.0
    if N == 2:
        first = cands[:, None] * G[0, 0][None, :]
        for c in cands:
            h = first + c * G[0, 1][None, :]
            best = max(best, float(np.max(np.sum(np.abs(h) ** 2, axis=1))))
    else:
        raise NotImplementedError
    return math.log2(1.0 + p_max * best / sigma2)


def grid_reflection_quadratic(U, v, phases=64, amplitudes=16):
    """Maximum of -phi U phi^H + 2 Re{phi v} over a polar grid, N = 2."""
    cands = np.array([a * cmath.exp(2j * math.pi * p / phases)
                      for a in [0.0] + [(i + 1) / amplitudes for i in range(amplitudes)]
                      for p in range(phases)])
    best = -np.inf
    for c0 in cands:
        phi = np.stack([np.full(cands.size, c0), cands], axis=1)
        quad = np.einsum("fn,nm,fm->f", phi, U, phi.conj()).real
        lin = 2.0 * (phi @ v).real
        best = max(best, float(np.max(lin - quad)))
    return best


def pinball_gradient_descent(samples, Q, iters=500):
    """Per-support subgradient descent on the pinball loss, starting at the
    sample mean, with a step size shrinking like 1/sqrt(t)."""
    z = np.asarray(samples, float)
    levels = [(2 * q - 1) / (2 * Q) for q in range(1, Q + 1)]
    spread = float(z.max() - z.min()) or 1.0
    out = []
    for w in levels:
        x = float(z.mean())
        best_x, best_val = x, _pinball(z, x, w)
        for t in range(1, iters + 1):
            g = float(np.mean(np.where(z < x, 1.0 - w, -w)))
            x -= spread * 0.5 / math.sqrt(t) * g
            val = _pinball(z, x, w)
            if val < best_val:
                best_x, best_val = x, val
        out.append(best_x)
    return np.array(out)


def _pinball(z, x, w):
    d = z - x
    return float(np.mean(np.abs(w - (d < 0)) * np.abs(d)))


def pinball_total(samples, supports):
    Q = len(supports)
    z = np.asarray(samples, float)
    return sum(_pinball(z, s, (2 * q - 1) / (2 * Q)) for q, s in enumerate(supports, 1))


def asymmetric_square_minimiser(samples, w, iters=2000):
    """Fixed-point iteration for argmin_x mean |w - 1{z < x}| (z - x)^2."""
    z = np.asarray(samples, float)
    x = float(z.mean())
    for _ in range(iters):
        wt = np.where(z < x, 1.0 - w, w)
        x = float(np.sum(wt * z) / np.sum(wt))
    return x


def inverse_cdf_distance(a, b, grid=200000):
    """Midpoint-rule integral of |F_a^-1(u) - F_b^-1(u)| over (0, 1) for two
    equal-weight atom sets (possibly of different sizes)."""
    a = np.sort(np.asarray(a, float))
    b = np.sort(np.asarray(b, float))
    u = (np.arange(grid) + 0.5) / grid
    fa = a[np.minimum((u * a.size).astype(int), a.size - 1)]
    fb = b[np.minimum((u * b.size).astype(int), b.size - 1)]
    return float(np.mean(np.abs(fa - fb)))


def action_id_by_string(diag):
    bits = "".join("1" if d == -1 else "0" for d in diag)
    return int(bits, 2) + 1
