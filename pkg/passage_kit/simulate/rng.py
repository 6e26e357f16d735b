"""
Counter-style random streams.

A stream is addressed by ``(seed, stream_id)`` and maps to an independent PCG64
generator through ``SeedSequence(seed, spawn_key=(stream_id,))``, so the samples
of stream ``k`` never depend on which worker ran it or in which order.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np

from passage_kit.exceptions import ValidationError

MAX_UINT64 = 2 ** 64 - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            if not 0 <= int(value) <= MAX_UINT64:
                raise ValidationError(f"{name} must fit in 64 unsigned bits, got {value}")
            object.__setattr__(self, name, int(value))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(sequence))


RandomSource = Union[RngStream, np.random.Generator]


def as_generator(rng: RandomSource) -> np.random.Generator:
    """Accept either a stream address or a live generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ValidationError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def derive_seed(seed: int, salt: int) -> int:
    """An independent 63-bit seed for a named sub-experiment of ``seed``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(2 ** 32 + int(salt),))
    return int(sequence.generate_state(1, np.uint64)[0] >> np.uint64(1))
