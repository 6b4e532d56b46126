"""Evolutionary processable units, genomes and the epuon memory graph.

An :class:`Epu` always carries exactly four function slots:

* ``expression`` -- the coding sequence plus a regulator (signal, threshold);
* ``replication`` -- copy fidelity;
* ``interaction`` -- weighted links to other epus by id;
* ``variation`` -- per-locus mutation-rate multipliers and hotspot flags.

Genomes are immutable ordered epu sequences. Variation operators work on a
vectorised :class:`GenomeBatch` (see :mod:`indevo.batch`); the per-genome
functions here are thin wrappers over one-row batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

import numpy as np

from .tm.codec import CODE_ALPHABET, decode_machine
from .tm.machine import RunResult, run

BINARY = ("0", "1")
SCHEMA_VERSION = 1


class EpuError(ValueError):
    pass


def _unit(name: str, x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise EpuError(f"{name} must lie in [0, 1], got {x}")
    return x


@dataclass(frozen=True)
class Expression:
    sequence: str
    signal: str = "stress"
    threshold: float = 0.0

    def __post_init__(self):
        _unit("regulator threshold", self.threshold)

    def active(self, signals: Mapping) -> bool:
        return signals.get(self.signal, 0.0) >= self.threshold


@dataclass(frozen=True)
class Replication:
    fidelity: float = 1.0

    def __post_init__(self):
        _unit("fidelity", self.fidelity)


@dataclass(frozen=True)
class Interaction:
    links: tuple = ()

    def __post_init__(self):
        links = tuple((int(t), _unit("affinity", a)) for t, a in self.links)
        object.__setattr__(self, "links", links)


@dataclass(frozen=True)
class Variation:
    multipliers: tuple
    hotspots: tuple

    def __post_init__(self):
        mult = tuple(float(m) for m in self.multipliers)
        if any(m < 0 for m in mult):
            raise EpuError("rate multipliers must be >= 0")
        hot = tuple(bool(h) for h in self.hotspots)
        if len(mult) != len(hot):
            raise EpuError("multipliers and hotspots differ in length")
        object.__setattr__(self, "multipliers", mult)
        object.__setattr__(self, "hotspots", hot)

    @classmethod
    def uniform(cls, n: int) -> "Variation":
        return cls((1.0,) * n, (False,) * n)


@dataclass(frozen=True)
class Epu:
    id: int
    expression: Expression
    replication: Replication
    interaction: Interaction
    variation: Variation

    def __post_init__(self):
        slots = (
            ("expression", Expression),
            ("replication", Replication),
            ("interaction", Interaction),
            ("variation", Variation),
        )
        for name, kind in slots:
            if not isinstance(getattr(self, name), kind):
                raise EpuError(f"epu {self.id}: slot {name!r} missing or not a {kind.__name__}")
        if len(self.variation.multipliers) != len(self.expression.sequence):
            raise EpuError(f"epu {self.id}: variation profile does not cover the coding sequence")

    @property
    def sequence(self) -> str:
        return self.expression.sequence

    def __len__(self) -> int:
        return len(self.expression.sequence)


class IdCounter:
    """Monotone 64-bit id source; seed it for reproducible ids."""

    def __init__(self, start: int = 0):
        self.next = int(start)

    @classmethod
    def from_rng(cls, rng: np.random.Generator) -> "IdCounter":
        return cls(int(rng.integers(1 << 62)))

    def take(self, n: int = 1) -> np.ndarray:
        out = np.arange(self.next, self.next + n, dtype=np.int64)
        self.next += n
        return out


@dataclass(frozen=True)
class Genome:
    epus: tuple
    mutator: bool = False
    species: str = ""
    alphabet: tuple = BINARY

    def __post_init__(self):
        object.__setattr__(self, "epus", tuple(self.epus))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if not self.epus:
            raise EpuError("a genome needs at least one epu")
        ids = [e.id for e in self.epus]
        if len(set(ids)) != len(ids):
            raise EpuError("epu ids must be unique within a genome")
        allowed = set(self.alphabet)
        for e in self.epus:
            bad = set(e.sequence) - allowed
            if bad:
                raise EpuError(f"epu {e.id} uses symbols {sorted(bad)} outside the genome alphabet")

    @property
    def sequence(self) -> str:
        return "".join(e.sequence for e in self.epus)

    def __len__(self) -> int:
        return sum(len(e) for e in self.epus)

    @classmethod
    def from_sequence(
        cls,
        sequence: str,
        epu_size: Optional[int] = None,
        alphabet: tuple = BINARY,
        ids: Optional[IdCounter] = None,
        **tags,
    ) -> "Genome":
        """Split ``sequence`` into epus of ``epu_size`` loci with default slots."""
        size = epu_size or len(sequence)
        ids = ids or IdCounter()
        chunks = [sequence[i : i + size] for i in range(0, len(sequence), size)]
        new_ids = ids.take(len(chunks))
        epus = tuple(
            Epu(int(i), Expression(c), Replication(), Interaction(), Variation.uniform(len(c)))
            for i, c in zip(new_ids, chunks)
        )
        return cls(epus, alphabet=alphabet, **tags)

    def with_sequence(self, sequence: str, ids: Optional[np.ndarray] = None) -> "Genome":
        """Same epu layout and slots, new coding symbols (and optionally new ids)."""
        if len(sequence) != len(self):
            raise EpuError("sequence length does not match the epu layout")
        if ids is None:
            ids = [e.id for e in self.epus]
        remap = {e.id: int(n) for e, n in zip(self.epus, ids)}
        epus = []
        pos = 0
        for e, new_id in zip(self.epus, ids):
            n = len(e)
            links = tuple((remap.get(t, t), a) for t, a in e.interaction.links)
            epus.append(
                replace(
                    e,
                    id=int(new_id),
                    expression=replace(e.expression, sequence=sequence[pos : pos + n]),
                    interaction=Interaction(links),
                )
            )
            pos += n
        return replace(self, epus=tuple(epus))

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "mutator": self.mutator,
            "species": self.species,
            "alphabet": list(self.alphabet),
            "epus": [
                {
                    "id": e.id,
                    "coding": e.sequence,
                    "fidelity": e.replication.fidelity,
                    "regulator": {"signal": e.expression.signal, "threshold": e.expression.threshold},
                    "interactions": [[t, a] for t, a in e.interaction.links],
                    "variation": {
                        "multipliers": list(e.variation.multipliers),
                        "hotspots": list(e.variation.hotspots),
                    },
                }
                for e in self.epus
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Genome":
        if rec.get("schema_version") != SCHEMA_VERSION:
            raise EpuError(f"unsupported genome schema version {rec.get('schema_version')!r}")
        epus = tuple(
            Epu(
                int(e["id"]),
                Expression(e["coding"], e["regulator"]["signal"], e["regulator"]["threshold"]),
                Replication(e["fidelity"]),
                Interaction(tuple(tuple(x) for x in e["interactions"])),
                Variation(tuple(e["variation"]["multipliers"]), tuple(e["variation"]["hotspots"])),
            )
            for e in rec["epus"]
        )
        return cls(epus, rec["mutator"], rec["species"], tuple(rec["alphabet"]))


def divergence(a: Genome, b: Genome) -> float:
    """Mismatch fraction: Hamming over the common prefix plus the length gap, over the longer length."""
    sa, sb = a.sequence, b.sequence
    longest = max(len(sa), len(sb))
    if longest == 0:
        return 0.0
    common = min(len(sa), len(sb))
    mismatches = sum(x != y for x, y in zip(sa[:common], sb[:common]))
    return (mismatches + longest - common) / longest


@dataclass(frozen=True)
class RatePolicy:
    """Effective per-locus probability: base x active epu multipliers x ``multiplier``.

    With ``base_rate=None`` each epu's own error rate ``1 - fidelity`` is the base.
    """

    base_rate: Optional[float] = None
    multiplier: float = 1.0
    signals: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.base_rate is not None:
            _unit("base rate", self.base_rate)
        if self.multiplier < 0:
            raise EpuError("policy multiplier must be >= 0")


def replicate(genome: Genome, rng: np.random.Generator, rate_policy: RatePolicy = RatePolicy(), ids: Optional[IdCounter] = None) -> Genome:
    """Copy with independent per-locus substitutions; the copy gets fresh epu ids."""
    from .batch import GenomeBatch, propose_substitutions

    batch = GenomeBatch.from_genomes([genome])
    events = propose_substitutions(batch, batch.layout.locus_rates(rate_policy), np.ones(1), rng)
    child = batch.applied(events)
    ids = ids or IdCounter.from_rng(rng)
    child.ids[:] = ids.take(child.ids.size).reshape(child.ids.shape)
    return child.genome(0)


def epuize(code: str, ids: Optional[IdCounter] = None) -> Epu:
    """Wrap a machine code word as an epu whose coding sequence is that word."""
    decode_machine(code)
    new_id = int((ids or IdCounter()).take(1)[0])
    return Epu(new_id, Expression(code), Replication(), Interaction(), Variation.uniform(len(code)))


def epuized_genome(code: str, ids: Optional[IdCounter] = None) -> Genome:
    return Genome((epuize(code, ids),), alphabet=tuple(CODE_ALPHABET))


def evaluate_epu(epu: Epu, word: str, fuel: int = 100_000) -> RunResult:
    """Run the machine an epu encodes, directly from its coding sequence."""
    return run(decode_machine(epu.sequence), word, fuel)


class Epuon:
    """Structured memory: a directed graph of epus.

    Edges come from the epus' interaction links, or, when ``generator`` is
    a machine code word, from running that machine on ``"<src>|<dst>"`` for
    every ordered pair of node ids (an edge wherever it halts with output
    ``"1"`` within ``fuel``). Stored adaptive solutions are kept as labelled
    epu-id paths through the graph.
    """

    def __init__(self, epus: Iterable[Epu] = (), generator: Optional[str] = None, fuel: int = 10_000):
        self.nodes: dict = {}
        self.generator = generator
        self.fuel = fuel
        self._generator_machine = decode_machine(generator) if generator else None
        self._edges: dict = {}
        self.solutions: dict = {}
        for e in epus:
            self.add(e)

    def __contains__(self, epu_id) -> bool:
        return epu_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def add(self, epu: Epu) -> None:
        if epu.id in self.nodes:
            raise EpuError(f"epu {epu.id} already stored")
        self.nodes[epu.id] = epu
        if self._generator_machine is not None:
            self._edges = self.generate_edges()
        else:
            self._edges[epu.id] = [(t, a) for t, a in epu.interaction.links]

    def generate_edges(self) -> dict:
        edges = {i: [] for i in self.nodes}
        for a in self.nodes:
            for b in self.nodes:
                if a == b:
                    continue
                res = run(self._generator_machine, f"{a}|{b}", self.fuel)
                if getattr(res, "output", None) == "1":
                    edges[a].append((b, 1.0))
        return edges

    def edges(self) -> list:
        out = []
        for src, targets in self._edges.items():
            for dst, affinity in targets:
                if dst not in self.nodes:
                    continue  # links may point at epus this memory never stored
                out.append((src, dst, affinity))
        return out

    def consistent(self) -> bool:
        if self._generator_machine is None:
            return True
        return self._edges == self.generate_edges()

    def evaluate(self, epu_id: int, word: str, fuel: int = 100_000) -> RunResult:
        return evaluate_epu(self.nodes[epu_id], word, fuel)

    def store_solution(self, label: str, genome: Genome, fitness: float, ids: IdCounter) -> None:
        """Keep ``genome`` under ``label`` as a fresh chain of epus."""
        fresh = genome.with_sequence(genome.sequence, ids.take(len(genome.epus)))
        chain = list(fresh.epus)
        linked = []
        for k, e in enumerate(chain):
            links = e.interaction.links
            if k + 1 < len(chain):
                links = links + ((chain[k + 1].id, 1.0),)
            linked.append(replace(e, interaction=Interaction(links)))
        old = self.solutions.get(label)
        if old is not None:
            for i in old[0]:
                self.nodes.pop(i, None)
                self._edges.pop(i, None)
        for e in linked:
            self.add(e)
        self.solutions[label] = (tuple(e.id for e in linked), float(fitness), genome.mutator, genome.species, genome.alphabet)

    def recall(self, label: str) -> Optional[tuple]:
        """``(genome, fitness)`` stored under ``label``, or ``None``."""
        entry = self.solutions.get(label)
        if entry is None:
            return None
        ids, fitness, mutator, species, alphabet = entry
        genome = Genome(tuple(self.nodes[i] for i in ids), mutator, species, alphabet)
        return genome, fitness
