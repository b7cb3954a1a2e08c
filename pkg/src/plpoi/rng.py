"""Seeded random streams.

Every random draw in the package comes from a stream keyed by
``(seed, *key)``: a numpy ``SeedSequence`` whose spawn key is ``key`` feeds a
Philox4x64-10 counter-based generator. Identical keys give identical draws
regardless of worker count or evaluation order.
"""

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox(4x64-10) <- SeedSequence(entropy=seed, spawn_key=key)"

# first spawn-key component, one per kind of draw
BITS = 0
CHANNEL = 1
NOISE = 2
ECHO = 3


def stream(seed, *key):
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def complex_normal(rng, size, variance=1.0):
    """Circularly-symmetric complex Gaussian samples with ``E|w|^2 = variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
