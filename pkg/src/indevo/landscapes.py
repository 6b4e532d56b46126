"""Benchmark fitness landscapes and environment schedules.

Landscapes score whole populations at once: ``evaluate`` takes an ``(n, L)``
matrix of symbol indices and returns ``n`` non-negative floats.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .epu import Genome


class LandscapeError(ValueError):
    pass


class Landscape(ABC):
    n_loci: int

    @property
    @abstractmethod
    def optimum(self) -> float: ...

    @abstractmethod
    def evaluate(self, codes: np.ndarray) -> np.ndarray: ...

    def __call__(self, genome: Genome) -> float:
        codes = np.array([[genome.alphabet.index(c) for c in genome.sequence]], dtype=np.uint8)
        return float(self.evaluate(codes)[0])

    def _check(self, codes: np.ndarray) -> None:
        if codes.shape[1] != self.n_loci:
            raise LandscapeError(f"expected {self.n_loci} loci, got {codes.shape[1]}")


class OneMax(Landscape):
    def __init__(self, n: int):
        self.n_loci = int(n)

    @property
    def optimum(self) -> float:
        return float(self.n_loci)

    def evaluate(self, codes):
        self._check(codes)
        return codes.sum(axis=1, dtype=np.int64).astype(float)


class MatchTarget(Landscape):
    """Number of loci equal to a fixed target string."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=np.uint8)
        self.n_loci = int(self.target.size)

    @property
    def optimum(self) -> float:
        return float(self.n_loci)

    def evaluate(self, codes):
        self._check(codes)
        return (codes == self.target).sum(axis=1, dtype=np.int64).astype(float)


class KTrap(Landscape):
    """``1 + bonus`` when every trap locus is 1, else ``1`` (minus ``deception`` per partial hit).

    Loci outside the trap are neutral, so the task rewards only the
    simultaneous presence of all ``k`` specific mutations.
    """

    def __init__(self, n: int, trap_loci=(0, 1, 2), bonus: float = 1.0, deception: float = 0.0):
        self.n_loci = int(n)
        self.trap_loci = np.asarray(trap_loci, dtype=np.int64)
        if self.trap_loci.size == 0 or self.trap_loci.min() < 0 or self.trap_loci.max() >= n:
            raise LandscapeError("trap loci must be a non-empty subset of the genome")
        if bonus <= 0 or not 0 <= deception < 1:
            raise LandscapeError("bonus must be > 0 and deception in [0, 1)")
        self.bonus = float(bonus)
        self.deception = float(deception)

    @property
    def optimum(self) -> float:
        return 1.0 + self.bonus

    def evaluate(self, codes):
        self._check(codes)
        hits = (codes[:, self.trap_loci] == 1).sum(axis=1)
        k = self.trap_loci.size
        partial = 1.0 - self.deception * hits / k
        return np.where(hits == k, 1.0 + self.bonus, partial)


class Neutral(Landscape):
    def __init__(self, n: int):
        self.n_loci = int(n)

    @property
    def optimum(self) -> float:
        return 1.0

    def evaluate(self, codes):
        self._check(codes)
        return np.ones(codes.shape[0])


@dataclass(frozen=True)
class Environment:
    """Labelled landscapes plus a switch schedule ``((generation, label), ...)``.

    The first entry must be at generation 0; generations strictly increase.
    ``lesion_rate`` is the per-locus probability of a damage flag at each switch.
    """

    variants: Mapping
    schedule: tuple
    lesion_rate: float = 0.05
    _starts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variants", MappingProxyType(dict(self.variants)))
        sched = tuple((int(g), str(v)) for g, v in self.schedule)
        if not sched or sched[0][0] != 0:
            raise LandscapeError("schedule must start at generation 0")
        gens = [g for g, _ in sched]
        if any(b <= a for a, b in zip(gens, gens[1:])):
            raise LandscapeError("schedule generations must strictly increase")
        missing = {v for _, v in sched} - set(self.variants)
        if missing:
            raise LandscapeError(f"schedule names unknown variants {sorted(missing)}")
        sizes = {l.n_loci for l in self.variants.values()}
        if len(sizes) != 1:
            raise LandscapeError("all variants must share one genome length")
        if not 0.0 <= self.lesion_rate <= 1.0:
            raise LandscapeError("lesion_rate must lie in [0, 1]")
        object.__setattr__(self, "schedule", sched)
        object.__setattr__(self, "_starts", tuple(gens))

    @property
    def n_loci(self) -> int:
        return next(iter(self.variants.values())).n_loci

    def variant_at(self, generation: int) -> str:
        k = int(np.searchsorted(self._starts, generation, side="right")) - 1
        return self.schedule[k][1]

    def landscape(self, label: str) -> Landscape:
        return self.variants[label]

    def switch_generations(self, budget: Optional[int] = None) -> list:
        """Generations > 0 where the variant changes."""
        out = []
        prev = self.schedule[0][1]
        for g, v in self.schedule[1:]:
            if budget is not None and g > budget:
                break
            if v != prev:
                out.append(g)
            prev = v
        return out

    def fitness(self, genome: Genome, generation: int = 0) -> float:
        return self.landscape(self.variant_at(generation))(genome)


def static(landscape: Landscape, label: str = "A", lesion_rate: float = 0.05) -> Environment:
    return Environment({label: landscape}, ((0, label),), lesion_rate)


def oscillating(
    n: int,
    period: int,
    horizon: int,
    rng: np.random.Generator,
    distance: Optional[int] = None,
    lesion_rate: float = 0.05,
) -> Environment:
    """Two match-target variants A and B alternating every ``period`` generations up to ``horizon``.

    A is uniformly random; B flips ``distance`` loci of A (all of them by default).
    """
    if period < 1:
        raise LandscapeError("period must be >= 1")
    distance = n if distance is None else int(distance)
    if not 0 < distance <= n:
        raise LandscapeError("distance must lie in 1..n")
    a = rng.integers(0, 2, size=n).astype(np.uint8)
    b = a.copy()
    flip = np.sort(rng.choice(n, size=distance, replace=False))
    b[flip] ^= 1
    schedule = tuple((g, "AB"[k % 2]) for k, g in enumerate(range(0, max(horizon, 0) + 1, period)))
    return Environment({"A": MatchTarget(a), "B": MatchTarget(b)}, schedule, lesion_rate)
