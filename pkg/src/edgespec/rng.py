"""Deterministic seeded randomness for simulations.

Everything downstream of a 64-bit seed must be reproducible, including under
parallel execution.  Two primitives cover all needs:

* ``Stream`` -- a sequential generator (splitmix64) owned by exactly one
  consumer, e.g. one verification position or one tree node.
* ``derive`` -- keyed substream derivation.  Worker order never matters
  because every consumer builds its own stream from ``derive(seed, *keys)``.

The native kernel extension re-implements the same integer recurrence for its
internal weight generation; both sides must produce bit-identical values, so
the constants below are the single source of truth.
"""

from __future__ import annotations

import functools

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**-53: maps the top 53 bits of a u64 onto [0, 1).
_TO_UNIT = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """Finalizing bijection of splitmix64 (avalanching, invertible)."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _MIX1) & MASK64
    z ^= z >> 27
    z = (z * _MIX2) & MASK64
    return z ^ (z >> 31)


@functools.cache
def fnv1a64(name: str) -> int:
    """Stable 64-bit string hash (never use the salted builtin ``hash``)."""
    h = 0xCBF29CE484222325
    for b in name.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def derive(seed: int, *keys: int | str) -> int:
    """Derive a child seed from ``seed`` and a key path.

    Each step is ``mix64(state ^ key)``; mix64 is a bijection, so two
    distinct keys under the same parent can never collide.  String keys are
    hashed with FNV-1a so call sites can use readable labels.
    """
    s = seed & MASK64
    for k in keys:
        if isinstance(k, str):
            k = fnv1a64(k)
        s = mix64(s ^ (k & MASK64))
    return s


class Stream:
    """Sequential splitmix64 stream; one owner, consumed in program order."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        s = (self.state + GOLDEN) & MASK64
        self.state = s
        return mix64(s)

    def uniform(self) -> float:
        """Uniform double in [0, 1), 53 significant bits."""
        return (self.next_u64() >> 11) * _TO_UNIT

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n).  Modulo bias is ~n/2**64: negligible
        for vocabulary-sized n and irrelevant to any tested property."""
        if n <= 0:
            raise ValueError("randint requires n >= 1")
        return self.next_u64() % n

    def spawn(self, *keys: int | str) -> "Stream":
        """Child stream keyed off the *initial* state is not recoverable, so
        spawn simply derives from the current state; prefer ``derive`` with
        explicit seeds when order independence matters."""
        return Stream(derive(self.state, *keys))
