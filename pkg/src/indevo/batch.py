"""Vectorised genome populations and mutation events.

A :class:`GenomeBatch` stores ``n`` genomes that share one epu layout (same
alphabet, epu lengths and non-coding slots) as an ``(n, L)`` symbol-index
matrix. Variation operators never touch codes directly: they propose
:class:`MutationEvents`, which mismatch repair may filter, and which are then
applied in order by the compiled kernel.

Event kinds: 0 = substitution (value is an offset in ``1..k-1``, so the new
symbol always differs), 1 = insertion, 2 = deletion. Indels are frameshifts
confined to the epu holding the locus: an insertion shifts the rest of the
epu right and drops its last symbol; a deletion shifts it left and fills the
freed last position with ``value``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .epu import Epu, EpuError, Expression, Genome, Interaction, RatePolicy, Replication, Variation

SUB, INS, DEL = 0, 1, 2


@dataclass(frozen=True, eq=False)
class Layout:
    alphabet: tuple
    lengths: tuple  # loci per epu
    signals: tuple  # regulator signal per epu
    thresholds: tuple
    fidelity: tuple
    links: tuple  # per epu: ((is_local, target, affinity), ...)
    multipliers: np.ndarray  # (L,)
    hotspots: np.ndarray  # (L,) bool
    species: str = ""

    @property
    def n_loci(self) -> int:
        return int(sum(self.lengths))

    @property
    def k(self) -> int:
        return len(self.alphabet)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.lengths)[:-1]]).astype(np.int64)

    @property
    def seg_end(self) -> np.ndarray:
        ends = np.cumsum(self.lengths).astype(np.int64)
        return np.repeat(ends, self.lengths)

    @property
    def epu_of_locus(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.lengths)), self.lengths)

    def locus_rates(self, policy: RatePolicy) -> np.ndarray:
        """Per-locus mutation probability before per-row multipliers (unclipped)."""
        rep = self.epu_of_locus
        if policy.base_rate is None:
            base = 1.0 - np.asarray(self.fidelity, dtype=float)[rep]
        else:
            base = np.full(self.n_loci, policy.base_rate)
        active = np.array(
            [policy.signals.get(s, 0.0) >= t for s, t in zip(self.signals, self.thresholds)], dtype=bool
        )[rep]
        mult = np.where(active, self.multipliers, 1.0)
        return base * mult * policy.multiplier

    def with_tags(self, hotspots=None, multipliers=None) -> "Layout":
        return replace(
            self,
            hotspots=self.hotspots if hotspots is None else np.asarray(hotspots, dtype=bool),
            multipliers=self.multipliers if multipliers is None else np.asarray(multipliers, dtype=float),
        )

    def same_as(self, other: "Layout") -> bool:
        return (
            self.alphabet == other.alphabet
            and self.lengths == other.lengths
            and self.signals == other.signals
            and self.thresholds == other.thresholds
            and self.fidelity == other.fidelity
            and self.links == other.links
            and self.species == other.species
            and np.array_equal(self.multipliers, other.multipliers)
            and np.array_equal(self.hotspots, other.hotspots)
        )

    @classmethod
    def of(cls, genome: Genome) -> "Layout":
        index = {e.id: k for k, e in enumerate(genome.epus)}
        links = tuple(
            tuple((t in index, index.get(t, t), a) for t, a in e.interaction.links) for e in genome.epus
        )
        return cls(
            alphabet=genome.alphabet,
            lengths=tuple(len(e) for e in genome.epus),
            signals=tuple(e.expression.signal for e in genome.epus),
            thresholds=tuple(e.expression.threshold for e in genome.epus),
            fidelity=tuple(e.replication.fidelity for e in genome.epus),
            links=links,
            multipliers=np.array([m for e in genome.epus for m in e.variation.multipliers], dtype=float),
            hotspots=np.array([h for e in genome.epus for h in e.variation.hotspots], dtype=bool),
            species=genome.species,
        )

    @classmethod
    def binary(cls, n_loci: int, epu_size: int, species: str = "") -> "Layout":
        lengths = tuple(min(epu_size, n_loci - s) for s in range(0, n_loci, epu_size))
        E = len(lengths)
        return cls(
            alphabet=("0", "1"),
            lengths=lengths,
            signals=("stress",) * E,
            thresholds=(0.0,) * E,
            fidelity=(1.0,) * E,
            links=((),) * E,
            multipliers=np.ones(n_loci),
            hotspots=np.zeros(n_loci, dtype=bool),
            species=species,
        )


@dataclass
class MutationEvents:
    rows: np.ndarray
    loci: np.ndarray
    kinds: np.ndarray
    values: np.ndarray
    exposed: np.ndarray

    @classmethod
    def empty(cls) -> "MutationEvents":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, np.zeros(0, dtype=bool))

    def __len__(self) -> int:
        return int(self.rows.size)

    def subset(self, keep: np.ndarray) -> "MutationEvents":
        return MutationEvents(self.rows[keep], self.loci[keep], self.kinds[keep], self.values[keep], self.exposed[keep])

    @staticmethod
    def concat(parts: Sequence["MutationEvents"]) -> "MutationEvents":
        parts = [p for p in parts if len(p)]
        if not parts:
            return MutationEvents.empty()
        return MutationEvents(
            *(np.concatenate([getattr(p, f) for p in parts]) for f in ("rows", "loci", "kinds", "values", "exposed"))
        )


@dataclass(frozen=True)
class Mutation:
    """One proposed change to a single genome (see module docstring for kinds)."""

    locus: int
    kind: str
    value: int
    exposed: bool


_KIND_NAMES = {SUB: "substitution", INS: "insertion", DEL: "deletion"}
_KIND_CODES = {v: k for k, v in _KIND_NAMES.items()}


def events_to_mutations(events: MutationEvents) -> list:
    return [
        Mutation(int(l), _KIND_NAMES[int(k)], int(v), bool(x))
        for l, k, v, x in zip(events.loci, events.kinds, events.values, events.exposed)
    ]


def mutations_to_events(mutations: Sequence[Mutation], row: int = 0) -> MutationEvents:
    if not mutations:
        return MutationEvents.empty()
    n = len(mutations)
    return MutationEvents(
        np.full(n, row, dtype=np.int64),
        np.array([m.locus for m in mutations], dtype=np.int64),
        np.array([_KIND_CODES[m.kind] for m in mutations], dtype=np.int64),
        np.array([m.value for m in mutations], dtype=np.int64),
        np.array([m.exposed for m in mutations], dtype=bool),
    )


@dataclass
class GenomeBatch:
    codes: np.ndarray  # (n, L) uint8 symbol indices
    mutator: np.ndarray  # (n,) bool
    ids: np.ndarray  # (n, E) int64
    layout: Layout

    @property
    def n(self) -> int:
        return int(self.codes.shape[0])

    @classmethod
    def from_genomes(cls, genomes: Sequence[Genome]) -> "GenomeBatch":
        layout = Layout.of(genomes[0])
        for g in genomes[1:]:
            if not Layout.of(g).same_as(layout):
                raise EpuError("genomes in a batch must share one epu layout")
        lookup = {s: i for i, s in enumerate(layout.alphabet)}
        codes = np.array([[lookup[c] for c in g.sequence] for g in genomes], dtype=np.uint8)
        return cls(
            codes=codes.reshape(len(genomes), layout.n_loci),
            mutator=np.array([g.mutator for g in genomes], dtype=bool),
            ids=np.array([[e.id for e in g.epus] for g in genomes], dtype=np.int64),
            layout=layout,
        )

    def genome(self, i: int) -> Genome:
        lay = self.layout
        seq = "".join(lay.alphabet[c] for c in self.codes[i])
        ids = self.ids[i]
        epus = []
        pos = 0
        for k, n in enumerate(lay.lengths):
            links = tuple((int(ids[t]) if local else t, a) for local, t, a in lay.links[k])
            epus.append(
                Epu(
                    int(ids[k]),
                    Expression(seq[pos : pos + n], lay.signals[k], lay.thresholds[k]),
                    Replication(lay.fidelity[k]),
                    Interaction(links),
                    Variation(tuple(lay.multipliers[pos : pos + n]), tuple(lay.hotspots[pos : pos + n])),
                )
            )
            pos += n
        return Genome(tuple(epus), bool(self.mutator[i]), lay.species, lay.alphabet)

    def take(self, rows) -> "GenomeBatch":
        rows = np.asarray(rows, dtype=np.int64)
        return GenomeBatch(self.codes[rows].copy(), self.mutator[rows].copy(), self.ids[rows].copy(), self.layout)

    def copy(self) -> "GenomeBatch":
        return GenomeBatch(self.codes.copy(), self.mutator.copy(), self.ids.copy(), self.layout)

    def apply(self, events: MutationEvents) -> None:
        """Apply ``events`` in order, in place."""
        if not len(events):
            return
        _kernels.apply_events(
            self.codes,
            np.ascontiguousarray(events.rows, dtype=np.int64),
            np.ascontiguousarray(events.loci, dtype=np.int64),
            np.ascontiguousarray(events.kinds, dtype=np.int64),
            np.ascontiguousarray(events.values, dtype=np.int64),
            self.layout.seg_end,
            self.layout.k,
        )

    def applied(self, events: MutationEvents) -> "GenomeBatch":
        out = self.copy()
        out.apply(events)
        return out


def propose_substitutions(
    batch: GenomeBatch,
    locus_rates: np.ndarray,
    row_multipliers: np.ndarray,
    rng: np.random.Generator,
    exposed: bool = True,
) -> MutationEvents:
    """Independent per-locus substitutions with probability ``rate x row multiplier`` (clipped to 1)."""
    p = np.clip(np.asarray(row_multipliers, dtype=float)[:, None] * locus_rates[None, :], 0.0, 1.0)
    hit = rng.random(p.shape) < p
    rows, loci = np.nonzero(hit)
    k = batch.layout.k
    values = rng.integers(1, k, size=rows.size) if k > 1 else np.zeros(rows.size, dtype=np.int64)
    return MutationEvents(
        rows.astype(np.int64),
        loci.astype(np.int64),
        np.zeros(rows.size, dtype=np.int64),
        values.astype(np.int64),
        np.full(rows.size, exposed, dtype=bool),
    )


def propose_mixed(
    batch: GenomeBatch,
    probs: np.ndarray,
    indel_fraction: float,
    rng: np.random.Generator,
    exposed: bool,
) -> MutationEvents:
    """Per-cell events with probabilities ``probs`` ((n, L)); a share ``indel_fraction`` are indels."""
    hit = rng.random(probs.shape) < np.clip(probs, 0.0, 1.0)
    rows, loci = np.nonzero(hit)
    m = rows.size
    k = batch.layout.k
    u = rng.random(m)
    kinds = np.where(u < indel_fraction, np.where(u < indel_fraction / 2, INS, DEL), SUB).astype(np.int64)
    offsets = rng.integers(1, k, size=m) if k > 1 else np.zeros(m, dtype=np.int64)
    symbols = rng.integers(0, k, size=m)
    values = np.where(kinds == SUB, offsets, symbols).astype(np.int64)
    return MutationEvents(rows.astype(np.int64), loci.astype(np.int64), kinds, values, np.full(m, exposed, dtype=bool))


def pairwise_divergence(codes: np.ndarray) -> np.ndarray:
    """Per-locus mismatch fraction for every pair of equal-length rows."""
    L = codes.shape[1]
    if L == 0:
        return np.zeros((codes.shape[0], codes.shape[0]))
    diff = codes[:, None, :] != codes[None, :, :]
    return diff.sum(axis=2) / L


def row_divergence(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Mismatch fraction between paired rows of two equal-shape code matrices."""
    return (a != b).mean(axis=1) if a.shape[1] else np.zeros(a.shape[0])

