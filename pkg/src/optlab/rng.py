"""Named random substreams keyed by (master seed, stream name).

Every consumer of randomness asks for its own stream, so two schemes run on
the same drop see identical channels and adding a seed to a sweep never
perturbs the draws of another seed.
"""

import zlib

import numpy as np

STREAMS = ("placement", "shadowing", "shadowing_direct", "pilot_noise",
           "symbols", "receiver_noise", "exploration", "calibration",
           "actions")


def stream(seed, name, *extra):
    """Return a Generator for substream `name` of master `seed`.

    `extra` integers (episode index, drop index, ...) further key the stream.
    """
    key = (zlib.crc32(name.encode()),) + tuple(int(e) for e in extra)
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(seed), spawn_key=key)))
