"""Splittable, counter-based random streams.

Every stream is addressed by a master seed plus a path of ``(role, index)``
pairs, e.g. ``(("replicate", 3), ("uniforms", 0))``.  The path is hashed into
a :class:`numpy.random.SeedSequence` spawn key that drives a Philox
generator, so a stream depends only on its address and never on the order in
which streams are created or on how work is scheduled across threads.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


def _role_code(role: str) -> int:
    return zlib.crc32(role.encode("utf-8"))


@dataclass(frozen=True)
class SeedContext:
    master_seed: int
    stream_path: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        for role, index in self.stream_path:
            if index < 0:
                raise ValueError(f"stream index for {role!r} must be nonnegative")

    def child(self, role: str, index: int = 0) -> "SeedContext":
        return SeedContext(self.master_seed, self.stream_path + ((role, int(index)),))

    def seed_sequence(self) -> np.random.SeedSequence:
        key: list[int] = []
        for role, index in self.stream_path:
            key.extend((_role_code(role), index))
        return np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=tuple(key))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence()))


def as_seed(seed: "SeedContext | int | None") -> SeedContext:
    """Coerce an integer (or ``None`` meaning 0) into a root :class:`SeedContext`."""
    if isinstance(seed, SeedContext):
        return seed
    return SeedContext(0 if seed is None else int(seed))


def open_uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform variates on the open interval (0, 1)."""
    u = rng.random(size)
    # generator output lies in [0, 1); only the exact zero needs moving
    u[u == 0.0] = 2.0**-54
    return u
