"""Portable pseudo-random streams.

Masks and measurement noise are drawn from xoshiro256** seeded through
splitmix64 so that golden vectors can be regenerated bit-for-bit in any
language.  Gaussian variates use the Box-Muller transform.
"""

import math

MASK64 = (1 << 64) - 1

# purpose tags used to split a single root seed into independent streams
PURPOSES = {"mask": 1, "init": 2, "shuffle": 3, "noise": 4, "phantom": 5}


def splitmix64(state):
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(root, purpose):
    """Sub-seed for ``purpose``: first splitmix64 output of ``root + tag * 2**32``."""
    tag = PURPOSES[purpose] if isinstance(purpose, str) else int(purpose)
    _, out = splitmix64((int(root) + (tag << 32)) & MASK64)
    return out


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator; state filled from four splitmix64 outputs."""

    def __init__(self, seed=0, state=None):
        if state is not None:
            self.s = [int(v) & MASK64 for v in state]
        else:
            sm = int(seed) & MASK64
            self.s = []
            for _ in range(4):
                sm, out = splitmix64(sm)
                self.s.append(out)
        self._spare = None

    def next_u64(self):
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self):
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def normal(self):
        """Standard normal variate; Box-Muller pairs, second value cached."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.random()  # (0, 1], keeps log finite
        u2 = self.random()
        rad = math.sqrt(-2.0 * math.log(u1))
        self._spare = rad * math.sin(2.0 * math.pi * u2)
        return rad * math.cos(2.0 * math.pi * u2)

    def normals(self, n):
        return [self.normal() for _ in range(n)]
