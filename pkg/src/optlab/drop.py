"""One random drop: placement, channels, pilot estimation and joint optimiser output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngs
from .channel import ChannelSet, build_cascaded_channels
from .estimation import run_pilot_phase
from .fp import FPConfig, FPResult, joint_optimize
from .scenario import Geometry, NetworkConfig, sample_geometry


@dataclass
class PreparedDrop:
    seed: int
    geometry: Geometry
    channels: ChannelSet      # true_G and est_G
    solution: FPResult        # optimised on the estimate

    @property
    def W(self):
        return self.solution.W

    @property
    def phi(self):
        return self.solution.phi


def drop_geometry(config: NetworkConfig, seed):
    return sample_geometry(config, rngs.stream(seed, "placement"))


def drop_channels(config: NetworkConfig, seed, geometry=None):
    geometry = drop_geometry(config, seed) if geometry is None else geometry
    return geometry, build_cascaded_channels(geometry, config, rngs.stream(seed, "shadowing"))


def prepare_drop(config: NetworkConfig, seed, fp_config: FPConfig = None) -> PreparedDrop:
    """Sample a drop, estimate its cascaded channels and optimise on the estimate."""
    geometry, channels = drop_channels(config, seed)
    report = run_pilot_phase(channels, config.p_pilot, config.sigma_bs2,
                             rngs.stream(seed, "pilot_noise"))
    channels = channels.with_estimate(report.est_G)
    solution = joint_optimize(report.est_G, config.p_max, config.sigma2, config.bandwidth, fp_config)
    return PreparedDrop(seed=int(seed), geometry=geometry, channels=channels, solution=solution)
