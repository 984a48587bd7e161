"""ON/OFF uplink pilot training, least-squares estimation and slot timing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, ShapeError
from .scenario import NetworkConfig, TimingError


def complex_normal(rng, size, variance=1.0):
    """Circular complex Gaussian samples with the given per-entry variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


@dataclass(frozen=True)
class TimingBudget:
    slot: float
    pilot_total: float
    processing: float
    transmit_first_slot: float
    interval: float
    effective: float
    slot_durations: tuple

    @property
    def num_slots(self):
        return len(self.slot_durations)


def timing_budget(config: NetworkConfig) -> TimingBudget:
    """Split one coherence interval into pilot, processing and data time.

    The first slot carries the pilot sub-phases and processing; every
    later slot is all data.
    """
    tau = config.slot_duration
    pilots = config.num_ir_elements * config.pilot_subphase
    tau_d = tau - pilots - config.processing_time
    if abs(tau_d) <= 1e-12 * tau:
        tau_d = 0.0
    if tau_d < 0:
        raise TimingError("pilot training and processing exceed one slot")
    L = config.slots_per_interval
    durations = (tau_d,) + (tau,) * (L - 1)
    return TimingBudget(slot=tau, pilot_total=pilots, processing=config.processing_time,
                        transmit_first_slot=tau_d, interval=L * tau,
                        effective=L * tau - pilots - config.processing_time,
                        slot_durations=durations)


@dataclass(frozen=True)
class EstimationReport:
    est_G: np.ndarray
    squared_error: np.ndarray    # ||G_hat_k - G_k||_F^2 per UE
    theoretical_mse: float       # N M sigma_bs^2 / p_c


def run_pilot_phase(channels: ChannelSet, p_c, sigma_bs2, rng, pilots=None) -> EstimationReport:
    """Estimate every cascaded channel row by row.

    In sub-phase n only IR element n reflects, so the BS observes
    ``y_n = sum_k g_{n,k}^H s_k + z`` and recovers row n of ``G_k`` as
    ``(y_n / s_k)^H``.  Pilots are treated as perfectly orthogonal, so each
    UE's row sees its own independent CN(0, sigma_bs2 I) noise vector.

    Parameters
    ----------
    channels : ChannelSet
    p_c : float
        Pilot power |s_k|^2 in Watts.
    sigma_bs2 : float
        BS receiver noise power in Watts (0 gives exact estimates).
    rng : numpy.random.Generator
    pilots : array_like, optional
        Complex pilot symbols (K,).  Defaults to ``sqrt(p_c)`` for every UE.
    """
    if not p_c > 0:
        raise ValueError("pilot power must be positive")
    if sigma_bs2 < 0:
        raise ValueError("noise power must be nonnegative")
    G = channels.true_G
    K, N, M = G.shape
    s = np.full(K, np.sqrt(p_c), dtype=complex) if pilots is None else np.asarray(pilots, dtype=complex)
    if s.shape != (K,):
        raise ShapeError("one pilot symbol per UE is required")
    # received column for (k, n): g_{n,k}^H s_k + z
    y = np.conj(G) * s[:, None, None]
    if sigma_bs2 > 0:
        y = y + complex_normal(rng, (K, N, M), sigma_bs2)
    est = np.conj(y / s[:, None, None])
    err = np.sum(np.abs(est - G) ** 2, axis=(1, 2))
    return EstimationReport(est_G=est, squared_error=err,
                            theoretical_mse=N * M * sigma_bs2 / p_c)


def received_signal(phi, G_k, W, symbols, sigma2, rng):
    """Received sample ``phi G_k W beta + z`` at one UE, with z ~ CN(0, sigma2)."""
    phi = np.asarray(phi)
    G_k = np.asarray(G_k)
    W = np.asarray(W)
    symbols = np.asarray(symbols)
    if G_k.shape != (phi.shape[0], W.shape[0]) or symbols.shape != (W.shape[1],):
        raise ShapeError("inconsistent shapes for phi, G_k, W, symbols")
    noise = complex_normal(rng, (), sigma2) if sigma2 > 0 else 0.0
    return complex(phi @ G_k @ (W @ symbols) + noise)
