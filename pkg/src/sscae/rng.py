"""Deterministic counter-based random number generator.

The repo's reproducibility contract pins a single fixed algorithm:
SplitMix64.  Draw ``i`` (zero-based) under seed ``s`` is produced by mixing
the 64-bit counter ``s + (i+1)*GAMMA``::

    z = (s + (i+1) * 0x9E3779B97F4A7C15)  mod 2^64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

All arithmetic is modulo 2^64, so the stream is bit-identical on every
platform.  Uniform doubles in [0, 1) take the top 53 bits: ``(z >> 11) *
2**-53``.  Library or platform default generators are deliberately not used
anywhere in the package.
"""

import numpy as np

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 2.0 ** -53


class Rng:
    """SplitMix64 stream addressed by (seed, counter).

    The counter advances by the number of values drawn, so a generator can
    be reconstructed from ``(seed, counter)`` alone.
    """

    def __init__(self, seed, counter=0):
        self.seed = int(seed) & _MASK
        self.counter = int(counter)

    def _next_words(self, n):
        """Return the next ``n`` raw 64-bit words and advance the counter."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + idx * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        return z

    def uniform01(self, n):
        """n i.i.d. doubles uniform on [0, 1)."""
        return (self._next_words(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform(self, n, low, high):
        """n i.i.d. doubles uniform on [low, high)."""
        return low + (high - low) * self.uniform01(n)

    def integers(self, n, upper):
        """n i.i.d. integers uniform on {0, ..., upper-1} (rejection-free scaling)."""
        if upper <= 0:
            raise ValueError("upper must be positive")
        return np.minimum((self.uniform01(n) * upper).astype(np.int64), upper - 1)

    def permutation(self, n):
        """A uniformly random permutation of range(n), stable under ties."""
        keys = self._next_words(n)
        return np.argsort(keys, kind="stable")

    def split(self):
        """Derive an independent child generator from the next raw word."""
        return Rng(int(self._next_words(1)[0]))


def splitmix64_reference(seed, index):
    """Pure-int reference for draw ``index`` under ``seed``; used by tests."""
    z = (seed + (index + 1) * _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    z = z ^ (z >> 31)
    return z
