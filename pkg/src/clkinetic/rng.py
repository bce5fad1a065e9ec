"""Counter-based random streams (Philox4x32-10) usable inside numba kernels.

Every random draw in the transport hot loop is a pure function of
``(master_seed, particle_index, collision_count, attempt, block)``, so the
trajectory of a particle never depends on how particles are split across
workers or in which order they are processed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_TWO_M53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds. All arguments are uint64 holding 32-bit words."""
    for r in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        n0 = (hi1 ^ c1 ^ k0) & _MASK32
        n2 = (hi0 ^ c3 ^ k1) & _MASK32
        c0 = n0
        c1 = lo1
        c2 = n2
        c3 = lo0
        if r < 9:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True)
def _split_key(seed):
    s = np.uint64(seed)
    return s & _MASK32, (s >> _SHIFT32) & _MASK32


@nb.njit(cache=True, nogil=True)
def stream_block(seed, index, counter, tag):
    """Two uniforms in (0, 1) with 53-bit resolution.

    ``tag`` packs the attempt number and block number of one event; it must
    stay below 2**32.
    """
    k0, k1 = _split_key(seed)
    idx = np.uint64(index)
    cnt = np.uint64(counter)
    y0, y1, y2, y3 = philox4x32(
        idx & _MASK32, (idx >> _SHIFT32) & _MASK32, cnt & _MASK32, np.uint64(tag) & _MASK32, k0, k1
    )
    a = ((y0 << np.uint64(21)) ^ y1) & np.uint64(0x1FFFFFFFFFFFFF)
    b = ((y2 << np.uint64(21)) ^ y3) & np.uint64(0x1FFFFFFFFFFFFF)
    return (float(a) + 0.5) * _TWO_M53, (float(b) + 0.5) * _TWO_M53


@nb.njit(cache=True, nogil=True)
def stream_normals(seed, index, counter, tag):
    """Two independent standard normals (Box-Muller on one Philox block)."""
    u1, u2 = stream_block(seed, index, counter, tag)
    r = np.sqrt(-2.0 * np.log(u1))
    phi = 2.0 * np.pi * u2
    return r * np.cos(phi), r * np.sin(phi)


@nb.njit(cache=True)
def _uniform_table(seed, index, counters, tags):
    out = np.empty((counters.size, 2))
    for i in range(counters.size):
        a, b = stream_block(seed, index, counters[i], tags[i])
        out[i, 0] = a
        out[i, 1] = b
    return out


@dataclass(frozen=True)
class ParticleStream:
    """Handle on the random stream owned by one particle.

    The stream is addressed by the collision counter of the particle, so two
    handles with the same ``(master_seed, index)`` always produce the same
    draws for the same event.
    """

    master_seed: int
    index: int

    def uniforms(self, counter: int, tag: int = 0) -> tuple[float, float]:
        t = _uniform_table(
            np.uint64(self.master_seed),
            np.uint64(self.index),
            np.array([counter], dtype=np.uint64),
            np.array([tag], dtype=np.uint64),
        )
        return float(t[0, 0]), float(t[0, 1])


def philox_words(counter, key):
    """Raw Philox4x32-10 output for a 4-word counter and 2-word key (test helper)."""
    c = [np.uint64(w) for w in counter]
    k = [np.uint64(w) for w in key]
    return tuple(int(w) for w in philox4x32(c[0], c[1], c[2], c[3], k[0], k[1]))
