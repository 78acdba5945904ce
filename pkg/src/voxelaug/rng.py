"""Deterministic random streams.

Every randomized transform draws from an :class:`RngStream`, a thin wrapper
around a counter-based generator keyed by a ``(seed, substream)`` pair.  The
same pair yields the same draw sequence on every platform and run, which is
what makes pipeline outputs reproducible from ``(config, sample_id, epoch)``
alone.

Substreams are derived with a splitmix64 chain so that distinct
``(sample_id, epoch, position)`` triples land on statistically independent
streams without any cross-coupling.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One step of the splitmix64 sequence: returns the output for state ``x``.

    Matches the reference finalizer, so ``splitmix64(0)`` is the well-known
    first output 0xE220A8397B1DCDAF.
    """
    x = (int(x) + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_substream(*fields: int) -> int:
    """Hash an ordered tuple of integers into a 64-bit substream id.

    The chain ``h = splitmix64(h XOR field)`` makes the result sensitive to
    both the values and their order, so (1, 2) and (2, 1) differ.
    """
    h = 0
    for f in fields:
        h = splitmix64(h ^ (int(f) & _MASK64))
    return h


class RngStream:
    """A reproducible random source identified by ``(seed, substream)``.

    Wraps a Philox counter-based generator: the identity of the stream is the
    key, not hidden global state, so streams are cheap to create and safe to
    use concurrently on distinct samples.
    """

    __slots__ = ("seed", "substream", "_gen")

    def __init__(self, seed: int, substream: int = 0) -> None:
        self.seed = int(seed) & _MASK64
        self.substream = int(substream) & _MASK64
        key = np.array([self.seed, self.substream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"RngStream(seed={self.seed:#x}, substream={self.substream:#x})"

    # -- draws ------------------------------------------------------------

    def random(self) -> float:
        """One double in [0, 1); used for Bernoulli gates."""
        return float(self._gen.random())

    def uniform(self, lo: float, hi: float) -> float:
        return float(self._gen.uniform(lo, hi))

    def normal(self, loc: float = 0.0, scale: float = 1.0) -> float:
        return float(self._gen.normal(loc, scale))

    def standard_normal(self, shape, dtype=np.float32) -> np.ndarray:
        return self._gen.standard_normal(shape, dtype=dtype)

    def integers(self, n: int) -> int:
        """One integer uniform on [0, n)."""
        return int(self._gen.integers(0, n))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
