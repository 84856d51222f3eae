"""Small portable 64-bit PRNG for block sampling.

The generator is xorshift64* seeded through one round of splitmix64::

    seed:   s = splitmix64(seed)            (s forced nonzero)
    next:   s ^= s >> 12; s ^= s << 25; s ^= s >> 27
            out = (s * 0x2545F4914F6CDD1D) mod 2**64
    below(n) = (out * n) >> 64

All arithmetic is on unsigned 64-bit integers, so sequences are identical on
every platform and easy to reproduce in other languages.
"""

MASK64 = (1 << 64) - 1


def splitmix64(state):
    """One splitmix64 output for ``state`` (the increment is applied first)."""
    z = (state + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    __slots__ = ("state",)

    def __init__(self, seed=0):
        s = splitmix64(int(seed) & MASK64)
        self.state = s if s else 0x9E3779B97F4A7C15

    def next_u64(self):
        s = self.state
        s ^= s >> 12
        s ^= (s << 25) & MASK64
        s ^= s >> 27
        self.state = s
        return (s * 0x2545F4914F6CDD1D) & MASK64

    def below(self, n):
        """Uniform integer in ``[0, n)``."""
        return (self.next_u64() * n) >> 64

    def random(self):
        """Uniform float in ``[0, 1)`` with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def copy(self):
        other = XorShift64Star.__new__(XorShift64Star)
        other.state = self.state
        return other
