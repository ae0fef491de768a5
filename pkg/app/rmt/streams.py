"""
Reproducible random streams.

A stream is addressed by a 64-bit master seed and a 64-bit stream id (the
realization index). Both are pushed through the splitmix64 finalizer and used
as the two-word key of a Philox-4x64 counter generator, so every
(seed, stream_id) pair owns an independent counter sequence and the output is
identical on every platform numpy supports. Gaussian variates are produced by
the Box-Muller transform on top of the uniform doubles, never by numpy's
ziggurat sampler.

Key derivation:

    k0 = mix64(seed)
    k1 = mix64(stream_id)
    for tag in path: k1 = mix64(k1 ^ mix64(tag))

`path` is empty for a top-level stream and grows by one tag for each
`substream` call.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """splitmix64 finalizer on a Python integer, reduced to 64 bits."""
    z = (int(value) + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RandomStream:
    seed: int
    stream_id: int
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        for name in ('seed', 'stream_id'):
            value = getattr(self, name)
            if not 0 <= int(value) <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")

    @property
    def key(self) -> Tuple[int, int]:
        k1 = mix64(self.stream_id)
        for tag in self.path:
            k1 = mix64(k1 ^ mix64(tag))
        return mix64(self.seed), k1

    def substream(self, tag: int) -> 'RandomStream':
        """Derives an independent child stream for a secondary draw."""
        return RandomStream(self.seed, self.stream_id, self.path + (int(tag) & _MASK64,))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at counter zero of this stream."""
        key = np.array(self.key, dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def uniforms(self, count: int) -> np.ndarray:
        return self.generator().random(count)

    def normals(self, count: int) -> np.ndarray:
        """First `count` standard normal variates of the stream (Box-Muller)."""
        if count <= 0:
            return np.zeros(0)
        pairs = (count + 1) // 2
        u = self.generator().random(2 * pairs)
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:count]


__all__ = ['RandomStream', 'mix64']
