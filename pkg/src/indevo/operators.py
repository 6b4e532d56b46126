"""Stress-driven variation and repair operators.

Each operator exists at two levels: a per-genome function with the public
signature, and a vectorised ``*_events`` / batch form the engine calls on a
whole population slice. The per-genome functions wrap one-row batches, so
both levels share a single implementation.

All randomness comes from the ``numpy.random.Generator`` passed in; equal
inputs and equal generator state give equal outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .batch import (
    GenomeBatch,
    Mutation,
    MutationEvents,
    events_to_mutations,
    mutations_to_events,
    propose_mixed,
    propose_substitutions,
)
from .epu import Genome, IdCounter, RatePolicy, divergence, replicate

NER, TLS = "NER", "TLS"
DEFAULT_BASE_RATE = 0.01
HOTSPOT_BOOST = 50.0


class OperatorError(ValueError):
    pass


@dataclass(frozen=True)
class SosState:
    """LexA pool and derived SOS tiers.

    ``lexa_pool = 1 - stress``; a tier is active once stress reaches its
    threshold, so tiers with lower thresholds (weaker LexA boxes) come on
    first. NER must precede TLS.
    """

    lexa_pool: float = 1.0
    tier_thresholds: tuple = ((NER, 0.2), (TLS, 0.6))
    active_tiers: frozenset = frozenset()
    targeted_multiplier: float = 10.0
    untargeted_multiplier: float = 50.0
    targeted_indel_fraction: float = 0.1
    untargeted_indel_fraction: float = 0.7
    ner_efficiency: float = 0.5

    def __post_init__(self):
        th = dict(self.tier_thresholds)
        if NER not in th or TLS not in th:
            raise OperatorError("tier thresholds must define NER and TLS")
        values = [t for _, t in self.tier_thresholds]
        if any(not 0.0 < t <= 1.0 for t in values):
            raise OperatorError("tier thresholds must lie in (0, 1]")
        if values != sorted(values) or not th[NER] < th[TLS]:
            raise OperatorError("tiers must be ordered by threshold with NER strictly before TLS")
        if self.targeted_multiplier < 1 or self.untargeted_multiplier < 1:
            raise OperatorError("TLS multipliers must be >= 1")
        for name in ("lexa_pool", "targeted_indel_fraction", "untargeted_indel_fraction", "ner_efficiency"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise OperatorError(f"{name} must lie in [0, 1]")

    @property
    def stress(self) -> float:
        return 1.0 - self.lexa_pool

    @property
    def tls_active(self) -> bool:
        return TLS in self.active_tiers

    @property
    def ner_active(self) -> bool:
        return NER in self.active_tiers

    def threshold(self, tier: str) -> float:
        return dict(self.tier_thresholds)[tier]


def sos_update(stress: float, state: SosState) -> SosState:
    if not 0.0 <= stress <= 1.0:
        raise OperatorError(f"stress must lie in [0, 1], got {stress}")
    active = frozenset(name for name, t in state.tier_thresholds if t <= stress)
    return replace(state, lexa_pool=1.0 - stress, active_tiers=active)


@dataclass(frozen=True)
class MrsState:
    enabled: bool = True
    p_repair: float = 0.5
    short_patch: Mapping = field(default_factory=dict)
    barrier_threshold: float = 0.10

    def __post_init__(self):
        for name in ("p_repair", "barrier_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise OperatorError(f"{name} must lie in [0, 1]")
        sp = {int(k): float(v) for k, v in dict(self.short_patch).items()}
        if any(not 0.0 <= v <= 1.0 for v in sp.values()):
            raise OperatorError("short-patch repair probabilities must lie in [0, 1]")
        object.__setattr__(self, "short_patch", MappingProxyType(sp))


@dataclass(frozen=True)
class LesionMap:
    loci: frozenset = frozenset()

    def check(self, n_loci: int) -> None:
        if any(not 0 <= i < n_loci for i in self.loci):
            raise OperatorError("lesion outside genome bounds")


# -- NER / TLS --------------------------------------------------------------

def ner_repair(lesions: np.ndarray, state: SosState, rng: np.random.Generator) -> np.ndarray:
    """Clear each lesion flag with probability ``ner_efficiency``; no mutation."""
    if not state.ner_active or not lesions.any():
        return lesions
    fixed = rng.random(lesions.shape) < state.ner_efficiency
    return lesions & ~fixed


def tls_targeted_events(
    batch: GenomeBatch,
    lesions: np.ndarray,
    locus_rates: np.ndarray,
    state: SosState,
    rng: np.random.Generator,
) -> MutationEvents:
    """Lesion-restricted mutagenesis; these events are not MRS-exposed."""
    p = np.where(lesions, np.clip(locus_rates * state.targeted_multiplier, 0.0, 1.0)[None, :], 0.0)
    return propose_mixed(batch, p, state.targeted_indel_fraction, rng, exposed=False)


def tls_untargeted_events(
    batch: GenomeBatch,
    locus_rates: np.ndarray,
    row_multipliers: np.ndarray,
    state: SosState,
    rng: np.random.Generator,
) -> MutationEvents:
    """Indel-biased mutagenesis at arbitrary loci; every event is MRS-exposed."""
    p = np.asarray(row_multipliers, dtype=float)[:, None] * locus_rates[None, :] * state.untargeted_multiplier
    return propose_mixed(batch, p, state.untargeted_indel_fraction, rng, exposed=True)


def tls_mutate(
    genome: Genome,
    lesions: LesionMap,
    mode: str,
    state: SosState,
    rng: np.random.Generator,
    base_rate: float = DEFAULT_BASE_RATE,
) -> tuple:
    """Translesion synthesis on one genome.

    Returns ``(mutated_genome, proposals)``. ``mutated_genome`` has every
    proposal applied and no lesions left; pass ``proposals`` through
    :func:`mrs_filter` and :func:`apply_mutations` for the repaired outcome.
    """
    if not state.tls_active:
        raise OperatorError("TLS tier is not active")
    if mode not in ("targeted", "untargeted"):
        raise OperatorError(f"unknown TLS mode {mode!r}")
    batch = GenomeBatch.from_genomes([genome])
    lesions.check(batch.layout.n_loci)
    rates = batch.layout.locus_rates(RatePolicy(base_rate))
    if mode == "targeted":
        if not lesions.loci:
            raise OperatorError("targeted TLS needs at least one lesion")
        mask = np.zeros((1, batch.layout.n_loci), dtype=bool)
        mask[0, sorted(lesions.loci)] = True
        events = tls_targeted_events(batch, mask, rates, state, rng)
    else:
        events = tls_untargeted_events(batch, rates, np.ones(1), state, rng)
    return batch.applied(events).genome(0), events_to_mutations(events)


def apply_mutations(genome: Genome, mutations: Sequence[Mutation]) -> Genome:
    batch = GenomeBatch.from_genomes([genome])
    return batch.applied(mutations_to_events(mutations)).genome(0)


# -- mismatch repair and the recombination barrier --------------------------

def mrs_filter_events(events: MutationEvents, state: MrsState, rng: np.random.Generator) -> MutationEvents:
    if not state.enabled or not len(events):
        return events
    p = np.full(len(events), state.p_repair)
    for locus, q in state.short_patch.items():
        p[events.loci == locus] = q
    repaired = events.exposed & (rng.random(len(events)) < p)
    return events.subset(~repaired)


def mrs_filter(proposals: Sequence[Mutation], state: MrsState, rng: np.random.Generator) -> list:
    """Drop each MRS-exposed proposal with its repair probability; pass everything when disabled."""
    kept = mrs_filter_events(mutations_to_events(list(proposals)), state, rng)
    return events_to_mutations(kept)


def gate_open(div, mrs: MrsState, sos: SosState):
    """Barrier rule on divergence values (scalar or array)."""
    lifted = (not mrs.enabled) and sos.tls_active
    return np.logical_or(np.asarray(div) <= mrs.barrier_threshold, lifted)


def recombination_gate(a: Genome, b: Genome, mrs: MrsState, sos: SosState) -> bool:
    return bool(gate_open(divergence(a, b), mrs, sos))


def crossover_weights(hotspots: np.ndarray, boost: float = HOTSPOT_BOOST) -> np.ndarray:
    """Weights over cut points 1..L-1; a cut at ``c`` switches parent before locus ``c``."""
    w = 1.0 + boost * np.asarray(hotspots[1:], dtype=float)
    return w / w.sum()


def crossover_codes(
    a: np.ndarray,
    b: np.ndarray,
    hotspots: np.ndarray,
    rng: np.random.Generator,
    boost: float = HOTSPOT_BOOST,
) -> tuple:
    """Single-cut mosaics of paired rows; the starting parent is a fair coin.

    Returns ``(children, cuts, starts_with_a)``.
    """
    n, L = a.shape
    if L < 2:
        return a.copy(), np.zeros(n, dtype=np.int64), np.ones(n, dtype=bool)
    cuts = rng.choice(np.arange(1, L), size=n, p=crossover_weights(hotspots, boost))
    start_a = rng.random(n) < 0.5
    first = np.where(start_a[:, None], a, b)
    second = np.where(start_a[:, None], b, a)
    before = np.arange(L)[None, :] < cuts[:, None]
    return np.where(before, first, second), cuts.astype(np.int64), start_a


def recombine(
    a: Genome,
    b: Genome,
    rng: np.random.Generator,
    boost: float = HOTSPOT_BOOST,
    ids: Optional[IdCounter] = None,
) -> Genome:
    """Mosaic offspring of two genomes with the same epu layout.

    Cut points favour loci flagged as hotspots in either parent; lineage
    tags follow the parent that supplies locus 0.
    """
    pair = GenomeBatch.from_genomes([a, b]) if _same_layout(a, b) else None
    if pair is None:
        raise OperatorError("recombination needs parents with the same epu layout")
    hot = np.array([h for e in a.epus for h in e.variation.hotspots]) | np.array(
        [h for e in b.epus for h in e.variation.hotspots]
    )
    child, _, start_a = crossover_codes(pair.codes[:1], pair.codes[1:], hot, rng, boost)
    out = pair.take([0 if start_a[0] else 1])
    out.codes[:] = child
    out.ids[:] = (ids or IdCounter.from_rng(rng)).take(out.ids.size).reshape(out.ids.shape)
    return out.genome(0)


def _same_layout(a: Genome, b: Genome) -> bool:
    from .batch import Layout

    la, lb = Layout.of(a), Layout.of(b)
    return la.lengths == lb.lengths and la.alphabet == lb.alphabet


# -- mutators and contingency loci -------------------------------------------

def mutator_apply(
    genome: Genome,
    multiplier: float,
    rng: np.random.Generator,
    rate_policy: RatePolicy = RatePolicy(DEFAULT_BASE_RATE),
    ids: Optional[IdCounter] = None,
) -> Genome:
    """Replicate a mutator-tagged genome with every per-locus rate scaled by ``multiplier``."""
    if multiplier < 1:
        raise OperatorError("mutator multiplier must be >= 1")
    if not genome.mutator:
        raise OperatorError("genome does not carry the mutator allele")
    policy = replace(rate_policy, multiplier=rate_policy.multiplier * multiplier)
    return replicate(genome, rng, policy, ids)


def hypermutation_rates(n_loci: int, loci: Iterable[int], rate: float, base_rate: float = 0.0) -> np.ndarray:
    loci = list(loci)
    if any(not 0 <= i < n_loci for i in loci):
        raise OperatorError("contingency locus outside genome bounds")
    if not 0.0 <= rate <= 1.0 or not 0.0 <= base_rate <= 1.0:
        raise OperatorError("rates must lie in [0, 1]")
    rates = np.full(n_loci, base_rate)
    rates[loci] = rate
    return rates


def hypermutate(
    genome: Genome,
    contingency_loci: Iterable[int],
    rate: float,
    rng: np.random.Generator,
    base_rate: float = 0.0,
    ids: Optional[IdCounter] = None,
) -> Genome:
    """Copy with ``rate`` at the contingency loci and ``base_rate`` everywhere else."""
    batch = GenomeBatch.from_genomes([genome])
    rates = hypermutation_rates(batch.layout.n_loci, contingency_loci, rate, base_rate)
    events = propose_substitutions(batch, rates, np.ones(1), rng)
    child = batch.applied(events)
    child.ids[:] = (ids or IdCounter.from_rng(rng)).take(child.ids.size).reshape(child.ids.shape)
    return child.genome(0)
