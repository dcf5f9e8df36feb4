"""Splittable random streams keyed by integer paths.

A :class:`Stream` is a value: the generator it yields depends only on the
root seed and the key path, never on the order in which streams are
created or on which process creates them.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

SEED_ENV = "OUAC_SEED"


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple = ()

    def child(self, *key: int) -> "Stream":
        return Stream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.key)))


def default_seed(fallback: int = 0) -> int:
    """Seed from the ``OUAC_SEED`` environment variable, else ``fallback``."""
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else fallback
