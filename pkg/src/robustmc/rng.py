"""Seeded random streams.

Every random quantity in the package comes from a Philox4x64-10 counter-based
generator whose 64-bit key is derived by hashing a base seed together with a
purpose tag and any coordinates (grid cell, trial index, ...) through
SplitMix64. Streams for different purposes or cells therefore never share a
key, and results do not depend on the order in which tasks are executed.

Gaussian variates are produced by Box-Muller from the uniform stream, two
uniforms per pair of normals, so the consumption order is fixed and simple to
reproduce elsewhere.
"""

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x):
    """One SplitMix64 output step for the 64-bit state ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _word(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value) & MASK64
    if isinstance(value, (float, np.floating)):
        return struct.unpack("<Q", struct.pack("<d", float(value)))[0]
    if isinstance(value, str):
        digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"cannot mix value of type {type(value).__name__}")


def derive_seed(base_seed, *words):
    """Hash ``base_seed`` and any ints/floats/strings into a 64-bit seed."""
    h = splitmix64(_word(base_seed))
    for w in words:
        h = splitmix64(h ^ _word(w))
    return h


def stream(base_seed, *words):
    """Independent generator for the purpose identified by ``words``."""
    key = derive_seed(base_seed, *words)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(gen, size):
    """``size`` doubles in [0, 1) with 53 random bits each."""
    return gen.random(size)


def gaussians(gen, size):
    """``size`` standard normals via Box-Muller.

    Consumes ``2 * ceil(size / 2)`` uniforms; the pair (u1, u2) gives
    (r cos 2 pi u2, r sin 2 pi u2) with r = sqrt(-2 log(1 - u1)).
    """
    pairs = (size + 1) // 2
    u = uniforms(gen, 2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = np.empty((pairs, 2))
    z[:, 0] = radius * np.cos(angle)
    z[:, 1] = radius * np.sin(angle)
    return z.ravel()[:size]
