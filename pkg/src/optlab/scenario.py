"""Network configuration, geometry and random UE placement."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import units


class ConfigError(ValueError):
    """Raised for an invalid `NetworkConfig` or config file."""


class TimingError(ValueError):
    """Raised when pilot training and processing do not fit the slot/interval."""


class GeometryError(ValueError):
    """Raised for coincident link endpoints."""


def _is_square(n):
    r = math.isqrt(n)
    return r * r == n


@dataclass(frozen=True)
class NetworkConfig:
    """Static parameters of one simulated deployment.

    Powers are stored the way they are quoted (dBm, dBm/Hz); the linear
    properties (`sigma2`, `sigma_bs2`, `p_max`, `p_pilot`) are what the
    numerical code consumes.  `deviation_threshold` is in Watts; ``None``
    means "calibrate from receiver noise" (see
    :func:`optlab.drl.env.calibrate_threshold`).
    """

    num_bs_antennas: int = 16
    num_ir_elements: int = 16
    num_ues: int = 4
    bandwidth: float = 2e6
    carrier_freq: float = 30e9
    noise_psd_ue: float = -174.0
    noise_psd_bs: float = -170.0
    bs_power_max: float = 40.0
    ue_pilot_power: float = 10.0
    slot_duration: float = 0.1
    slots_per_interval: int = 10
    pilot_subphase: float = 0.001
    processing_time: float = 0.0
    discount: float = 0.9
    num_quantiles: int = 40
    deviation_threshold: Optional[float] = None
    reduced_action_count: int = 60
    bs_position: tuple = (0.0, 0.0, 25.0)
    ir_position: tuple = (0.0, 20.0, 30.0)
    ue_mean: tuple = (0.0, 20.0)
    ue_variance: float = 5.0
    sigma_sf_los: float = 3.762
    sigma_sf_nlos: float = 8.092

    def __post_init__(self):
        object.__setattr__(self, "bs_position", tuple(float(v) for v in self.bs_position))
        object.__setattr__(self, "ir_position", tuple(float(v) for v in self.ir_position))
        object.__setattr__(self, "ue_mean", tuple(float(v) for v in self.ue_mean))
        self.validate()

    def validate(self):
        for name in ("num_bs_antennas", "num_ir_elements", "num_ues",
                     "slots_per_interval", "num_quantiles", "reduced_action_count"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not _is_square(self.num_bs_antennas):
            raise ConfigError("num_bs_antennas must be a square number")
        if not _is_square(self.num_ir_elements):
            raise ConfigError("num_ir_elements must be a square number")
        if not 0.0 < self.discount < 1.0:
            raise ConfigError("discount must lie in (0, 1)")
        for name in ("bandwidth", "carrier_freq", "slot_duration"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.pilot_subphase < 0 or self.processing_time < 0:
            raise ConfigError("pilot_subphase and processing_time must be nonnegative")
        if self.deviation_threshold is not None and not self.deviation_threshold > 0:
            raise ConfigError("deviation_threshold must be positive")
        overhead = self.num_ir_elements * self.pilot_subphase + self.processing_time
        # equality is allowed: the first slot may be spent entirely on training
        if overhead > self.slot_duration * (1.0 + 1e-12):
            raise TimingError(
                f"pilot training + processing ({overhead:g} s) must fit inside "
                f"one slot ({self.slot_duration:g} s)")

    # linear quantities
    @property
    def sigma2(self):
        return units.noise_power(self.noise_psd_ue, self.bandwidth)

    @property
    def sigma_bs2(self):
        return units.noise_power(self.noise_psd_bs, self.bandwidth)

    @property
    def p_max(self):
        return float(units.dbm_to_watt(self.bs_power_max))

    @property
    def p_pilot(self):
        return float(units.dbm_to_watt(self.ue_pilot_power))

    @property
    def wavelength(self):
        return units.wavelength(self.carrier_freq)

    @property
    def interval(self):
        return self.slots_per_interval * self.slot_duration

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    def digest(self):
        """Short stable hash identifying this configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]


_TUPLE_FIELDS = {"bs_position", "ir_position", "ue_mean"}


def _parse_value(name, text, ftype):
    text = text.strip()
    if name in _TUPLE_FIELDS:
        parts = text.strip("()[]").replace(",", " ").split()
        return tuple(float(p) for p in parts)
    if text.lower() in ("none", "null", ""):
        return None
    if "int" in str(ftype) and "Optional" not in str(ftype):
        return int(float(text))
    return float(text)


def load_config(path) -> NetworkConfig:
    """Read a flat ``key = value`` config file (``#`` starts a comment).

    Keys are `NetworkConfig` field names; vector fields take comma- or
    space-separated numbers.  Unknown keys are an error.
    """
    fields = {f.name: f.type for f in dataclasses.fields(NetworkConfig)}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = line.split("=", 1)
        elif ":" in line:
            key, val = line.split(":", 1)
        else:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip()
        if key not in fields:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, val, fields[key])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return NetworkConfig(**values)


def dump_config(config: NetworkConfig, path):
    lines = []
    for key, val in config.to_dict().items():
        if isinstance(val, (tuple, list)):
            val = ", ".join(repr(float(v)) for v in val)
        lines.append(f"{key} = {val}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def sample_ue_positions(rng_seed, K, mean=(0.0, 20.0), variance=5.0):
    """Draw `K` UE positions at zero height.

    The horizontal coordinates are i.i.d. Gaussian with the given `mean`
    and covariance ``variance * I``.  `rng_seed` may be an integer or a
    ``numpy.random.Generator``.

    Returns
    -------
    ndarray, shape (K, 3)
    """
    if int(K) < 1:
        raise ValueError("K must be at least 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    xy = rng.normal(loc=mean, scale=math.sqrt(variance), size=(int(K), 2))
    return np.column_stack([xy, np.zeros(int(K))])


def direction_angles(vec):
    """(azimuth, elevation) of a direction; azimuth from +x in the x-y plane,
    elevation measured from +z."""
    vec = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(vec, axis=-1)
    azimuth = np.arctan2(vec[..., 1], vec[..., 0])
    elevation = np.arccos(np.clip(vec[..., 2] / norm, -1.0, 1.0))
    return azimuth, elevation


@dataclass(frozen=True)
class Geometry:
    """Positions and the angle pairs derived from them.

    Angles of departure point along the propagation direction; the angle
    of arrival at the IR points back towards the BS.  With that convention
    the array-response product reproduces the exact path-length
    phase of each BS-element-UE route under the far-field approximation.
    """

    bs_position: np.ndarray
    ir_position: np.ndarray
    ue_positions: np.ndarray
    bs_departure: tuple          # (azimuth, elevation) BS -> IR
    ir_arrival: tuple            # (azimuth, elevation) IR -> BS
    ue_departure: np.ndarray     # (K, 2) IR -> UE_k
    direct_departure: np.ndarray  # (K, 2) BS -> UE_k
    bs_ir_distance: float
    ir_ue_distance: np.ndarray
    direct_distance: np.ndarray

    @property
    def num_ues(self):
        return len(self.ue_positions)

    @property
    def cascaded_distance(self):
        """Length of the connected BS-IR-UE route per UE."""
        return self.bs_ir_distance + self.ir_ue_distance


def derive_geometry(bs_position, ir_position, ue_positions) -> Geometry:
    bs = np.asarray(bs_position, dtype=float)
    ir = np.asarray(ir_position, dtype=float)
    ues = np.atleast_2d(np.asarray(ue_positions, dtype=float))

    bs_ir = ir - bs
    d_bi = float(np.linalg.norm(bs_ir))
    if d_bi == 0.0:
        raise GeometryError("BS and IR positions coincide")
    ir_ue = ues - ir
    d_iu = np.linalg.norm(ir_ue, axis=1)
    if np.any(d_iu == 0.0):
        raise GeometryError("a UE coincides with the IR")
    bs_ue = ues - bs
    d_bu = np.linalg.norm(bs_ue, axis=1)
    if np.any(d_bu == 0.0):
        raise GeometryError("a UE coincides with the BS")

    return Geometry(
        bs_position=bs,
        ir_position=ir,
        ue_positions=ues,
        bs_departure=tuple(float(a) for a in direction_angles(bs_ir)),
        ir_arrival=tuple(float(a) for a in direction_angles(-bs_ir)),
        ue_departure=np.column_stack(direction_angles(ir_ue)),
        direct_departure=np.column_stack(direction_angles(bs_ue)),
        bs_ir_distance=d_bi,
        ir_ue_distance=d_iu,
        direct_distance=d_bu,
    )


def sample_geometry(config: NetworkConfig, rng) -> Geometry:
    ues = sample_ue_positions(rng, config.num_ues, config.ue_mean, config.ue_variance)
    return derive_geometry(config.bs_position, config.ir_position, ues)
