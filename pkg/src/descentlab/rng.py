"""Seeded random streams.

Every random draw in descentlab goes through :func:`stream`, which builds a
``numpy.random.Generator`` over the PCG64 bit generator from a
``SeedSequence`` keyed by ``(seed, *keys)``.  Distinct key tuples give
statistically independent streams, so a row, a neuron or a sweep point can
be regenerated without replaying anything drawn before it.
"""

import zlib

import numpy as np

PRNG_NAME = "numpy-PCG64/SeedSequence"
PRNG_VERSION = 1

_MASK64 = (1 << 64) - 1


def _key(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    k = int(k)
    if k < 0:
        raise ValueError(f"stream keys must be non-negative, got {k}")
    return k


def stream(seed, *keys):
    """Return an independent generator for ``(seed, *keys)``."""
    entropy = [int(seed) & _MASK64, PRNG_VERSION, *(_key(k) for k in keys)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed, *keys):
    """Hash ``(seed, *keys)`` into a new 64-bit seed."""
    entropy = [int(seed) & _MASK64, PRNG_VERSION, *(_key(k) for k in keys)]
    lo, hi = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)
