"""Hierarchical random substreams.

Every draw in a simulation comes from a generator keyed by
``(master_seed, iteration, purpose, run, unit)``. A run consumes its streams
stop by stop, so the values a run sees do not depend on how events from
different runs interleave, and a policy that never acts reproduces the
uncontrolled simulation draw for draw.
"""

from __future__ import annotations

import numpy as np

LINE = 0
CRUISE = 1
ALIGHT = 2
BOARD_ARRIVAL = 3

# unit codes shared with the engine
AGGREGATE = 0
LEADING = 1
TRAILING = 2


def substream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=key)))


class SubstreamRNG:
    """Draw source for one simulation iteration."""

    def __init__(self, master_seed: int = 0, iteration: int = 0):
        self.master_seed = master_seed
        self.iteration = iteration
        self._streams: dict[tuple[int, int, int], np.random.Generator] = {}

    def _get(self, purpose: int, run: int, unit: int) -> np.random.Generator:
        key = (purpose, run, unit)
        gen = self._streams.get(key)
        if gen is None:
            gen = substream(self.master_seed, self.iteration, purpose, run, unit)
            self._streams[key] = gen
        return gen

    def line(self) -> np.random.Generator:
        return substream(self.master_seed, self.iteration, LINE)

    def gamma(self, run: int, unit: int, shape: float, scale: float) -> float:
        return float(self._get(CRUISE, run, unit).gamma(shape, scale))

    def binomial(self, run: int, unit: int, n: int, p: float) -> int:
        return int(self._get(ALIGHT, run, unit).binomial(n, p))

    def poisson(self, run: int, unit: int, mean: float) -> int:
        return int(self._get(BOARD_ARRIVAL, run, unit).poisson(mean))
