"""xoshiro256** seeded through SplitMix64.

Both generators are fully specified by their published reference code, so
any language can reproduce a simulation stream bit for bit.  The jitted
functions drive the simulator; :class:`Xoshiro256` is a slow pure-Python
twin used to pin reference outputs.
"""
import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_U53 = 1.0 / 9007199254740992.0  # 2**-53


def splitmix64(state: int):
    """One SplitMix64 step: returns ``(new_state, output)``."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """Reference xoshiro256** in plain Python integers."""

    def __init__(self, seed: int):
        sm = seed & MASK64
        self.s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            self.s.append(out)

    @classmethod
    def from_state(cls, state):
        g = cls.__new__(cls)
        g.s = [int(v) & MASK64 for v in state]
        return g

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _U53


def seed_state(seed: int) -> np.ndarray:
    """The four-word xoshiro256** state for a 64-bit seed."""
    return np.array(Xoshiro256(seed).s, dtype=np.uint64)


@njit(inline="always")
def _rotl_u64(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(inline="always")
def next_u64(s):
    result = _rotl_u64(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl_u64(s[3], 45)
    return result


@njit(inline="always")
def next_double(s):
    return np.float64(next_u64(s) >> np.uint64(11)) * _U53


@njit(cache=True)
def draw_u64(s, n):
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        out[i] = next_u64(s)
    return out
