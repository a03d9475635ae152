"""SplitMix64 generator for reproducible initial noise.

The constants are the published SplitMix64 ones::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

all modulo 2**64.  A uniform double in ``[0, 1)`` is ``(z >> 11) * 2**-53``.
Being integer-exact, the stream is identical on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, size: int) -> np.ndarray:
        """``size`` doubles in ``[0, 1)``."""
        return np.array([(self.next_u64() >> 11) * 2.0**-53 for _ in range(size)])

    def symmetric(self, size: int, amplitude: float) -> np.ndarray:
        """``size`` doubles uniform in ``[-amplitude, amplitude)``."""
        return amplitude * (2.0 * self.uniform(size) - 1.0)
