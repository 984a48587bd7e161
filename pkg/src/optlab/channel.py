"""Channel synthesis and rate evaluation.

Conventions: the reflection coefficient ``phi`` is a length-N vector used
as a row, cascaded channels are stacked as an array of shape (K, N, M), the
precoder ``W`` is M x K with column k feeding UE k, and the effective
channel of UE k is the row ``phi @ G[k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .scenario import Geometry, NetworkConfig, TimingError

SCHEMES_WITH_FULL_TRAINING = ("ir_optimized", "proposed_fp", "qrdrl", "qlearning", "no_adapt")
SCHEMES_WITH_SINGLE_PILOT = ("fixed_ir", "direct")


class ShapeError(ValueError):
    pass


def array_response(azimuth, elevation, V, W):
    """Uniform planar array response with unit-modulus entries.

    Entry ``v * W + w`` equals
    ``exp(j*pi*(v*sin(azimuth)*sin(elevation) + w*cos(elevation)))``.
    No 1/sqrt(VW) normalisation is applied.
    """
    if V < 1 or W < 1:
        raise ValueError("array dimensions must be >= 1")
    v = np.arange(V)[:, None]
    w = np.arange(W)[None, :]
    phase = v * math.sin(azimuth) * math.sin(elevation) + w * math.cos(elevation)
    return np.exp(1j * np.pi * phase).ravel()


def path_loss_db(d, f, sigma_sf, rng=None):
    """Close-in path loss ``32.4 + 21 log10(d) + 20 log10(f) + xi``.

    Parameters
    ----------
    d : float or array
        Link distance in meters.
    f : float
        Carrier frequency in GHz.
    sigma_sf : float
        Shadow-fading standard deviation in dB.  ``xi`` is real Gaussian
        N(0, sigma_sf**2), one draw per distance value.
    rng : numpy.random.Generator, optional
        Required when ``sigma_sf > 0``.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or not f > 0:
        raise ValueError("distance and frequency must be positive")
    pl = 32.4 + 21.0 * np.log10(d) + 20.0 * np.log10(f)
    if sigma_sf > 0:
        if rng is None:
            raise ValueError("rng is required for nonzero shadow fading")
        pl = pl + rng.normal(0.0, sigma_sf, size=d.shape)
    return pl if pl.ndim else float(pl)


def _side(n):
    return math.isqrt(n)


def build_bs_ir_channel(geometry: Geometry, M, N):
    """Rank-one BS->IR matrix ``a_r a_t^H`` of shape (N, M)."""
    a_r = array_response(*geometry.ir_arrival, _side(N), _side(N))
    a_t = array_response(*geometry.bs_departure, _side(M), _side(M))
    return np.outer(a_r, a_t.conj())


@dataclass
class ChannelSet:
    """Per-UE cascaded channels plus the metadata used to build them.

    ``true_G`` has shape (K, N, M).  ``est_G`` (same shape) is filled in by
    the pilot phase.  ``direct`` (K, M) holds BS->UE rows for the
    direct-transmission baseline when they were generated.
    """

    true_G: np.ndarray
    path_loss: np.ndarray
    distance: np.ndarray
    wavelength: float
    est_G: Optional[np.ndarray] = None
    direct: Optional[np.ndarray] = None
    direct_path_loss: Optional[np.ndarray] = None

    def __post_init__(self):
        self.true_G = np.asarray(self.true_G, dtype=complex)
        if self.true_G.ndim != 3:
            raise ShapeError("true_G must have shape (K, N, M)")
        if np.any(np.asarray(self.path_loss) <= 0):
            raise ValueError("path loss must be positive")
        if self.est_G is not None and np.shape(self.est_G) != self.true_G.shape:
            raise ShapeError("est_G must match true_G")

    @property
    def num_ues(self):
        return self.true_G.shape[0]

    @property
    def N(self):
        return self.true_G.shape[1]

    @property
    def M(self):
        return self.true_G.shape[2]

    def with_estimate(self, est_G):
        return ChannelSet(self.true_G, self.path_loss, self.distance, self.wavelength,
                          est_G=np.asarray(est_G, dtype=complex), direct=self.direct,
                          direct_path_loss=self.direct_path_loss)

    def estimated(self):
        """A ChannelSet whose true_G is this set's estimate (what the BS believes)."""
        if self.est_G is None:
            raise ValueError("no estimate available")
        return ChannelSet(self.est_G, self.path_loss, self.distance, self.wavelength)


def build_cascaded_channels(geometry: Geometry, config: NetworkConfig, rng,
                            path_loss_override_db=None) -> ChannelSet:
    """Cascaded BS-IR-UE channels
    ``G_k = exp(-j 2 pi d_k / lambda) / sqrt(PL_k) * diag(h_k) H``.

    ``d_k`` is the summed BS->IR and IR->UE length and ``PL_k`` uses the LOS
    shadowing deviation.  ``path_loss_override_db`` (scalar or length K)
    replaces the random path loss, which is handy for unit tests.
    """
    M, N, K = config.num_bs_antennas, config.num_ir_elements, geometry.num_ues
    H = build_bs_ir_channel(geometry, M, N)
    d = geometry.cascaded_distance
    if path_loss_override_db is None:
        pl_db = path_loss_db(d, config.carrier_freq / 1e9, config.sigma_sf_los, rng)
    else:
        pl_db = np.broadcast_to(np.asarray(path_loss_override_db, dtype=float), (K,)).copy()
    pl = 10.0 ** (np.asarray(pl_db) / 10.0)
    lam = config.wavelength
    G = np.empty((K, N, M), dtype=complex)
    side = _side(N)
    for k in range(K):
        h_k = array_response(*geometry.ue_departure[k], side, side)
        scale = np.exp(-2j * np.pi * d[k] / lam) / math.sqrt(pl[k])
        G[k] = scale * h_k[:, None] * H
    return ChannelSet(true_G=G, path_loss=pl, distance=np.asarray(d), wavelength=lam)


def build_direct_channels(geometry: Geometry, config: NetworkConfig, rng):
    """Single-path NLOS BS->UE rows, shape (K, M), and their linear path loss."""
    M = config.num_bs_antennas
    side = _side(M)
    d = geometry.direct_distance
    pl = 10.0 ** (np.asarray(path_loss_db(d, config.carrier_freq / 1e9,
                                          config.sigma_sf_nlos, rng)) / 10.0)
    rows = np.empty((geometry.num_ues, M), dtype=complex)
    for k in range(geometry.num_ues):
        a = array_response(*geometry.direct_departure[k], side, side)
        rows[k] = np.exp(-2j * np.pi * d[k] / config.wavelength) / math.sqrt(pl[k]) * a.conj()
    return rows, pl


def _as_G(channels):
    if isinstance(channels, ChannelSet):
        return channels.true_G
    G = np.asarray(channels)
    if G.ndim != 3:
        raise ShapeError("channels must be a ChannelSet or a (K, N, M) array")
    return G


def effective_channels(phi, channels):
    """Rows ``phi @ G_k`` stacked into a (K, M) array."""
    G = _as_G(channels)
    phi = np.asarray(phi)
    if phi.shape != (G.shape[1],):
        raise ShapeError(f"phi has shape {phi.shape}, expected ({G.shape[1]},)")
    return np.einsum("n,knm->km", phi, G)


def sinr_from_effective(Heff, W, sigma2):
    """SINR of every UE given effective rows ``Heff`` (K, M) and precoder W (M, K)."""
    Heff = np.asarray(Heff)
    W = np.asarray(W)
    if W.shape != (Heff.shape[1], Heff.shape[0]):
        raise ShapeError(f"W has shape {W.shape}, expected {(Heff.shape[1], Heff.shape[0])}")
    gains = np.abs(Heff @ W) ** 2          # gains[k, i] = |h_k w_i|^2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + sigma2)


def sinr(W, phi, channels, sigma2, k=None):
    """Downlink SINR of UE `k` (or all UEs when `k` is None)."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    eta = sinr_from_effective(effective_channels(phi, channels), W, sigma2)
    return eta if k is None else float(eta[k])


def rate_from_sinr(eta, b):
    return float(b * np.sum(np.log2(1.0 + np.asarray(eta))))


def sum_rate(W, phi, channels, b, sigma2):
    """Sum over UEs of ``b * log2(1 + SINR_k)`` in bits/s."""
    return rate_from_sinr(sinr(W, phi, channels, sigma2), b)


def time_avg_rate(r, scheme, config: NetworkConfig):
    """Scale an instantaneous rate by the fraction of the interval left for data.

    Schemes that optimise the IR pay for N pilot sub-phases; the fixed-IR
    and direct baselines pay for a single one.
    """
    if scheme in SCHEMES_WITH_FULL_TRAINING:
        overhead = config.num_ir_elements * config.pilot_subphase + config.processing_time
    elif scheme in SCHEMES_WITH_SINGLE_PILOT:
        overhead = config.pilot_subphase + config.processing_time
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    T = config.interval
    if not overhead < T:
        raise TimingError(f"overhead {overhead:g} s is not below the interval {T:g} s")
    return (1.0 - overhead / T) * r


# ---------------------------------------------------------------------------
# plain-text matrix dump: one row per line, entries "re,im" separated by spaces
# ---------------------------------------------------------------------------

def dump_matrix(matrix, path_or_file, header=None):
    A = np.atleast_2d(np.asarray(matrix, dtype=complex))
    lines = []
    if header:
        lines.append(f"# {header}")
    lines.append(f"# shape {A.shape[0]} {A.shape[1]}")
    for row in A:
        lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def load_matrix(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([complex(*map(float, tok.split(","))) for tok in line.split()])
    return np.array(rows, dtype=complex)
