"""Joint precoder / reflection optimisation by alternating fractional programming.

The sum-rate is lifted with the Lagrangian dual transform (auxiliary SINR
targets ``alpha``), the remaining weighted sum of ratios is handled with
the quadratic transform (auxiliaries ``lambda`` for the precoder block and
``delta`` for the reflection block), and the blocks are updated in turn
until the lifted objective settles.

Internally every channel is divided by the noise standard deviation and the
ratio weights are ``1 + alpha`` instead of ``b (1 + alpha)``.  Both scalings
leave the iterates unchanged: the precoder and reflection updates are
invariant to a positive rescaling of the weights and to a common rescaling
of channels and noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .channel import ChannelSet, ShapeError, _as_G

LN2 = math.log(2.0)


class NumericalError(RuntimeError):
    def __init__(self, message, iteration):
        super().__init__(f"{message} (outer iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class FPConfig:
    max_outer_iters: int = 100
    convergence_tol: float = 1e-6
    inner_w_iters: int = 20
    inner_phi_iters: int = 20
    bisection_tol: float = 1e-10
    bcd_tol: float = 1e-10
    bcd_max_sweeps: int = 200

    def __post_init__(self):
        for name in ("convergence_tol", "bisection_tol", "bcd_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class FPResult:
    W: np.ndarray
    phi: np.ndarray
    alpha: np.ndarray
    rate: float                  # sum-rate (bits/s) at the returned point
    objective_trace: list        # lifted objective after every block (bits/s)
    iterations: int
    converged: bool
    kappa: float = 0.0


# ---------------------------------------------------------------------------
# closed-form pieces
# ---------------------------------------------------------------------------

def _cross_gains(Heff, W):
    return Heff @ W      # [k, i] = h_k w_i


def _sinr(A, sigma2):
    g = np.abs(A) ** 2
    s = np.diag(g)
    return s / (g.sum(axis=1) - s + sigma2)


def lagrangian_objective(W, phi, alpha, channels, b, sigma2):
    """Lifted sum-rate in bits/s.

    ``b/ln2 * sum_k [ln(1 + a_k) - a_k + (1 + a_k) eta_k / (1 + eta_k)]``.
    It equals the sum-rate when ``alpha == eta`` and is strictly smaller
    for any other nonnegative ``alpha``.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ValueError("alpha must be nonnegative")
    G = _as_G(channels)
    Heff = np.einsum("n,knm->km", np.asarray(phi), G)
    eta = _sinr(_cross_gains(Heff, np.asarray(W)), sigma2)
    return _lifted(eta, alpha, b)


def _lifted(eta, alpha, b):
    # -alpha + (1 + alpha) eta / (1 + eta) rewritten to avoid cancellation at high SINR
    return float(b / LN2 * np.sum(np.log1p(alpha) + (eta - alpha) / (1.0 + eta)))


def update_alpha(W, phi, channels, sigma2):
    """Optimal auxiliary targets: the current SINRs."""
    G = _as_G(channels)
    Heff = np.einsum("n,knm->km", np.asarray(phi), G)
    return _sinr(_cross_gains(Heff, np.asarray(W)), sigma2)


def _ratio_aux(A, alpha_hat, sigma2):
    denom = np.sum(np.abs(A) ** 2, axis=1) + sigma2
    return np.sqrt(alpha_hat) * np.diag(A) / denom


def update_lambda(W, phi, alpha_hat, channels, sigma2):
    """``lambda_k = sqrt(alpha_hat_k) h_k w_k / (sum_i |h_k w_i|^2 + sigma2)``."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    G = _as_G(channels)
    Heff = np.einsum("n,knm->km", np.asarray(phi), G)
    return _ratio_aux(_cross_gains(Heff, np.asarray(W)), np.asarray(alpha_hat, float), sigma2)


def update_delta(W, phi, alpha_hat, channels, sigma2):
    """Reflection-block auxiliary; the closed form coincides with `update_lambda`."""
    return update_lambda(W, phi, alpha_hat, channels, sigma2)


def quadratic_transform_value(A, aux, alpha_hat, sigma2):
    """``sum_k 2 sqrt(alpha_hat_k) Re{aux_k^* A_kk} - |aux_k|^2 (sum_i |A_ki|^2 + sigma2)``."""
    denom = np.sum(np.abs(A) ** 2, axis=1) + sigma2
    lin = 2.0 * np.sqrt(alpha_hat) * np.real(np.conj(aux) * np.diag(A))
    return float(np.sum(lin - np.abs(aux) ** 2 * denom))


def _precoder_solve(Heff, lam, alpha_hat, p_max, rel_tol):
    """Maximise the lambda-transformed objective over W under the power budget.

    Returns ``(W, kappa)``.
    """
    K, M = Heff.shape
    B = (np.sqrt(alpha_hat) * lam)[None, :] * Heff.conj().T          # M x K
    if not np.any(B):
        return np.zeros((M, K), dtype=complex), 0.0
    Gl = np.abs(lam)[:, None] * Heff
    A = Gl.conj().T @ Gl
    mu, V = np.linalg.eigh(A)
    mu = np.clip(mu, 0.0, None)
    C = V.conj().T @ B
    c2 = np.sum(np.abs(C) ** 2, axis=1)
    live = mu > 1e-12 * max(mu.max(), 1e-300)
    c2 = np.where(live, c2, 0.0)
    C = np.where(live[:, None], C, 0.0)

    c2l, mul = c2[live], mu[live]

    def power(kappa):
        return float(np.sum(c2l / (kappa + mul) ** 2))

    kappa = 0.0
    if not np.any(live) or power(0.0) > p_max:
        # Newton on 1/sqrt(power(kappa)), which is concave and increasing, so
        # iterates from the left increase monotonically to the root.
        target = 1.0 / math.sqrt(p_max)
        lo, hi = 0.0, math.sqrt(c2l.sum() / p_max)
        kappa = 0.0
        for _ in range(200):
            p = power(kappa)
            if abs(p - p_max) <= rel_tol * p_max:
                break
            if p > p_max:
                lo = kappa
            else:
                hi = min(hi, kappa)
            dp = -2.0 * float(np.sum(c2l / (kappa + mul) ** 3))
            s = p ** -0.5
            step = (target - s) / (-0.5 * p ** -1.5 * dp)
            nxt = kappa + step
            if not lo <= nxt <= hi:
                nxt = 0.5 * (lo + hi)
            if nxt == kappa:
                break
            kappa = nxt
        if power(kappa) > p_max * (1.0 + rel_tol):
            kappa = hi
    scale = np.divide(1.0, kappa + mu, out=np.zeros_like(mu), where=live)
    W = V @ (scale[:, None] * C)
    return W, kappa


def update_precoder(lam, alpha_hat, phi, channels, P_max, bisection_tol=1e-10,
                    return_kappa=False):
    """Precoder maximising the lambda-transformed objective for fixed lambda.

    ``w_k = sqrt(alpha_hat_k) lambda_k (kappa I + sum_i |lambda_i|^2 h_i^H h_i)^+ h_k^H``
    with ``h_i = phi G_i`` and ``kappa >= 0`` the smallest value meeting
    ``sum_k ||w_k||^2 <= P_max``.  When the system is singular at kappa = 0
    the minimum-norm (pseudo-inverse) solution is used.
    """
    G = _as_G(channels)
    Heff = np.einsum("n,knm->km", np.asarray(phi), G)
    W, kappa = _precoder_solve(Heff, np.asarray(lam, dtype=complex),
                               np.asarray(alpha_hat, float), P_max, bisection_tol)
    return (W, kappa) if return_kappa else W


def reflection_quadratic_terms(delta, alpha_hat, W, channels, sigma2, exact=False):
    """Terms (U, v, C) of the reflection subproblem
    ``max -phi U phi^H + 2 Re{phi v} - C``.

    Default form::

        U = sum_k |delta_k|^2 sum_{i != k} (G_k w_i)(G_k w_i)^H
        v = sum_k delta_k^* G_k w_k
        C = sigma2 sum_k |delta_k|^2

    With ``exact=True`` the terms are those of the delta-transformed ratio
    objective itself: the self term ``i = k`` is kept in ``U`` and ``v``
    carries the ``sqrt(alpha_hat_k)`` weights.  That surrogate is a tight
    minoriser, so a step on it never decreases the ratio objective, but at
    high SINR it moves very little per step.
    """
    G = _as_G(channels)
    K = G.shape[0]
    delta = np.asarray(delta, dtype=complex)
    alpha_hat = np.asarray(alpha_hat, float)
    GW = np.einsum("knm,mi->kin", G, np.asarray(W))          # [k, i] -> G_k w_i (N,)
    weights = np.abs(delta) ** 2
    scaled = np.sqrt(weights)[:, None, None] * GW
    if not exact:
        scaled = scaled.copy()
        scaled[np.arange(K), np.arange(K)] = 0.0
    flat = scaled.reshape(-1, G.shape[1])
    U = flat.T @ flat.conj()
    coef = np.conj(delta) * (np.sqrt(alpha_hat) if exact else 1.0)
    diag_idx = np.arange(K)
    v = np.einsum("k,kn->n", coef, GW[diag_idx, diag_idx])
    C = float(sigma2 * weights.sum())
    return U, v, C


def reflection_objective(phi, U, v, C=0.0):
    phi = np.asarray(phi)
    return float(-np.real(phi @ U @ phi.conj()) + 2.0 * np.real(phi @ v) - C)


@njit(cache=True)
def _bcd_kernel(U, v, phi, tol, max_sweeps):
    N = phi.shape[0]
    c = U @ np.conj(phi)
    obj = 0.0
    for n in range(N):
        obj += -(phi[n] * c[n]).real + 2.0 * (phi[n] * v[n]).real
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        for n in range(N):
            unn = U[n, n].real
            t = v[n] - (c[n] - U[n, n] * np.conj(phi[n]))
            at = abs(t)
            if unn > 0.0:
                x = np.conj(t) / unn
                ax = abs(x)
                if ax > 1.0:
                    x = x / ax
            elif at > 0.0:
                x = np.conj(t) / at
            else:
                x = phi[n]
            d = np.conj(x) - np.conj(phi[n])
            if d != 0.0:
                for m in range(N):
                    c[m] += U[m, n] * d
                phi[n] = x
        new = 0.0
        scale = 0.0
        for n in range(N):
            lin = 2.0 * (phi[n] * v[n]).real
            new += -(phi[n] * c[n]).real + lin
            scale += abs(lin)
        if abs(new - obj) <= tol * max(abs(new), scale, 1e-300):
            obj = new
            break
        obj = new
    return phi, sweeps


def maximize_reflection_quadratic(U, v, phi_init, tol=1e-10, max_sweeps=2000):
    """Maximise ``-phi U phi^H + 2 Re{phi v}`` over ``|phi_n| <= 1``.

    Block-coordinate ascent: each element is set to the exact maximiser of
    its one-dimensional concave quadratic (unconstrained optimum, projected
    radially onto the unit disc), sweeping until the objective stalls.
    """
    U = np.ascontiguousarray(U, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.complex128)
    phi = np.array(phi_init, dtype=np.complex128)
    mod = np.abs(phi)
    phi = np.where(mod > 1.0, phi / np.where(mod > 0, mod, 1.0), phi)
    phi, _ = _bcd_kernel(U, v, phi, float(tol), int(max_sweeps))
    return phi


def optimize_phi(delta, alpha_hat, W, channels, sigma2, phi_init, tol=1e-10, max_sweeps=2000):
    """Reflection update for fixed delta and W (see `reflection_quadratic_terms`)."""
    U, v, _ = reflection_quadratic_terms(delta, alpha_hat, W, channels, sigma2)
    return maximize_reflection_quadratic(U, v, phi_init, tol, max_sweeps)


# ---------------------------------------------------------------------------
# the alternating algorithm
# ---------------------------------------------------------------------------

def matched_filter_init(Heff, p_max):
    """Equal-power matched filters ``w_k ~ h_k^H`` with total power p_max."""
    K, M = Heff.shape
    W = Heff.conj().T.copy()
    norms = np.linalg.norm(W, axis=0)
    norms[norms == 0] = 1.0
    return W / norms * math.sqrt(p_max / K)


def initial_precoders(Heff, p_max):
    """Deterministic starting precoders: equal-power matched filters and the
    best single-UE matched filter at full power.

    With a rank-one BS-IR link every UE sees the same BS beam and the
    equal-power start is a stationary point where all UEs interfere at SINR
    about 1/(K-1); the single-UE start avoids that trap.  Channels that
    support spatial multiplexing are better served from the equal-power
    start, so both are tried.
    """
    K, M = Heff.shape
    starts = [matched_filter_init(Heff, p_max)]
    if K > 1:
        k = int(np.argmax(np.linalg.norm(Heff, axis=1)))
        W = np.zeros((M, K), dtype=complex)
        if np.linalg.norm(Heff[k]) > 0:
            W[:, k] = Heff[k].conj() / np.linalg.norm(Heff[k]) * math.sqrt(p_max)
            starts.append(W)
    return starts


def joint_optimize(channels, p_max, sigma2, b, fp_config: FPConfig = None,
                   W0=None, phi0=None, optimize_reflection=True) -> FPResult:
    """Alternate the SINR-target, precoder and reflection updates.

    Parameters
    ----------
    channels : ChannelSet or ndarray (K, N, M)
        The channels the optimiser believes in (pass an estimate for
        imperfect CSI).
    p_max, sigma2 : float
        Power budget and receiver noise power, Watts.
    b : float
        Bandwidth in Hz; only scales the reported rates.
    fp_config : FPConfig, optional
    W0, phi0 : ndarray, optional
        Starting point.  The default reflection is all ones; without `W0`
        the algorithm is run from every start of `initial_precoders` and the
        run with the highest final rate is returned.
    optimize_reflection : bool
        False keeps ``phi0`` fixed and only optimises the precoder.

    Returns
    -------
    FPResult
        ``objective_trace`` records the lifted objective after every block
        and is nondecreasing up to round-off.
    """
    G = _as_G(channels)
    K, N, M = G.shape
    phi = np.ones(N, dtype=complex) if phi0 is None else np.array(phi0, dtype=complex)
    if phi.shape != (N,):
        raise ShapeError("phi0 has the wrong length")
    if not np.all(np.isfinite(G)):
        raise NumericalError("non-finite channel coefficients", 0)
    Gn = G / math.sqrt(sigma2)
    if W0 is not None:
        starts = [np.array(W0, dtype=complex)]
    else:
        starts = initial_precoders(np.einsum("n,knm->km", phi, Gn), p_max)
    best = None
    for W in starts:
        res = _run(Gn, p_max, b, fp_config or FPConfig(), W, phi.copy(), optimize_reflection)
        if best is None or res.rate > best.rate:
            best = res
    return best


def _run(Gn, p_max, b, cfg, W, phi, optimize_reflection):
    K, N, M = Gn.shape
    if W.shape != (M, K):
        raise ShapeError("W0 has the wrong shape")
    Heff = np.einsum("n,knm->km", phi, Gn)

    trace = []
    kappa = 0.0
    A = _cross_gains(Heff, W)
    prev = None
    converged = False
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        # 1. SINR targets
        alpha = _sinr(A, 1.0)
        trace.append(_lifted(alpha, alpha, b))
        alpha_hat = 1.0 + alpha

        # 2. precoder block
        f_cur = _ratio_objective(A, alpha_hat)
        for _ in range(cfg.inner_w_iters):
            lam = _ratio_aux(A, alpha_hat, 1.0)
            W_new, kap = _precoder_solve(Heff, lam, alpha_hat, p_max, cfg.bisection_tol)
            A_new = _cross_gains(Heff, W_new)
            f_new = _ratio_objective(A_new, alpha_hat)
            if not np.isfinite(f_new):
                raise NumericalError("non-finite objective in precoder update", it)
            if f_new <= f_cur:
                break
            gain = f_new - f_cur
            W, A, f_cur, kappa = W_new, A_new, f_new, kap
            if gain <= 1e-13 * abs(f_cur):
                break
        trace.append(_lifted(_sinr(A, 1.0), alpha, b))

        # 3. reflection block
        if optimize_reflection:
            for _ in range(cfg.inner_phi_iters):
                delta = _ratio_aux(A, alpha_hat, 1.0)
                step = None
                for exact in (False, True):
                    U, v, _ = reflection_quadratic_terms(delta, alpha_hat, W, Gn, 1.0, exact=exact)
                    phi_new = maximize_reflection_quadratic(U, v, phi, cfg.bcd_tol, cfg.bcd_max_sweeps)
                    Heff_new = np.einsum("n,knm->km", phi_new, Gn)
                    A_new = _cross_gains(Heff_new, W)
                    f_new = _ratio_objective(A_new, alpha_hat)
                    if not np.isfinite(f_new):
                        raise NumericalError("non-finite objective in reflection update", it)
                    if f_new > f_cur:
                        step = (phi_new, Heff_new, A_new, f_new)
                        break
                if step is None:
                    break
                gain = step[3] - f_cur
                phi, Heff, A, f_cur = step
                if gain <= 1e-13 * abs(f_cur):
                    break
            trace.append(_lifted(_sinr(A, 1.0), alpha, b))

        cur = trace[-1]
        if not math.isfinite(cur):
            raise NumericalError("non-finite lifted objective", it)
        if prev is not None and abs(cur - prev) <= cfg.convergence_tol * max(abs(cur), 1e-300):
            converged = True
            break
        prev = cur

    eta = _sinr(A, 1.0)
    return FPResult(W=W, phi=phi, alpha=eta, rate=float(b * np.sum(np.log2(1.0 + eta))),
                    objective_trace=trace, iterations=it, converged=converged, kappa=kappa)


def _ratio_objective(A, alpha_hat):
    g = np.abs(A) ** 2
    s = np.diag(g)
    return float(np.sum(alpha_hat * s / (g.sum(axis=1) + 1.0)))


def optimize_precoder(rows, p_max, sigma2, b, fp_config: FPConfig = None, W0=None) -> FPResult:
    """Precoder-only optimisation for fixed effective channel rows (K, M)."""
    rows = np.asarray(rows, dtype=complex)
    return joint_optimize(rows[:, None, :], p_max, sigma2, b, fp_config, W0=W0,
                          phi0=np.ones(1, dtype=complex), optimize_reflection=False)
