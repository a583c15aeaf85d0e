"""Seed derivation and stateless hashing.

Every random stream is derived from ``(seed, purpose tag, index)`` so that
results do not depend on worker count or scheduling order.
"""
import zlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)


def mix64(x):
    """splitmix64 finalizer, vectorized over uint64 arrays (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)


def tag_id(tag):
    return zlib.crc32(tag.encode("utf-8"))


def seed_sequence(seed, tag, index=0):
    if seed is None:
        raise ValueError("a seed is required for stochastic computations")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(tag_id(tag), int(index)))


def generator(seed, tag, index=0):
    """Counter-based Philox stream keyed by (seed, tag, index)."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, tag, index)))


def seed_word(seed, tag, index=0):
    """A single 64-bit integer derived from (seed, tag, index), for hashing."""
    state = seed_sequence(seed, tag, index).generate_state(2, dtype=np.uint64)
    return np.uint64(mix64(state[0] ^ mix64(state[1])))


def unit_interval(h):
    """Map 64-bit hashes to [0, 1) at 53-bit resolution."""
    return (np.asarray(h, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
