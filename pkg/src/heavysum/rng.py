"""Counter-based uniform streams.

Every random number is addressed by ``(seed, block, position)``: the Philox
key is the master seed and the top counter word is the block index, so blocks
never overlap and any block can be regenerated without touching the others.
Monte Carlo code hands out one block per chunk of replicates, which makes the
result independent of how chunks are distributed over workers.
"""

import numpy as np

__all__ = ["CHUNK", "stream", "uniforms", "open_uniforms"]

#: Replicates per block used by the simulators. Changing it changes results.
CHUNK = 1 << 14


def stream(seed, block=0):
    """Return a Generator positioned at the start of ``block`` for ``seed``."""
    if seed < 0 or block < 0:
        raise ValueError("seed and block must be non-negative")
    bitgen = np.random.Philox(key=int(seed), counter=[0, 0, 0, int(block)])
    return np.random.Generator(bitgen)


def uniforms(seed, block, size):
    """Uniform draws on [0, 1) from the given block."""
    return stream(seed, block).random(size)


def open_uniforms(seed, block, size):
    """Uniform draws on the open interval (0, 1).

    Zero is mapped to the smallest positive double spacing so inverse-CDF
    transforms never see an endpoint.
    """
    u = uniforms(seed, block, size)
    return np.where(u == 0.0, 2.0**-54, u)
