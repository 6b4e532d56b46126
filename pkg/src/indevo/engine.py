"""Anytime evolutionary engine with an imitative and an innovative subsystem.

The imitative step (``c_ima_step``) is plain replicative adaptation:
tournament selection, copying at base rates with mismatch repair, elitism
and reinjection of remembered solutions. The innovative step
(``c_ina_step``) runs the same core and then, gated by environmental
stress, the SOS cascade (NER, targeted and untargeted TLS), barrier-gated
recombination, hypermutation of contingency loci, contingency tagging in
the specializing phase, and storage of stabilized bests in the epuon
memory.

Every stress-gated operator draws nothing from the generator while it is
inactive, so with stress pinned at 0 both subsystems consume identical
random streams and produce identical populations.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .batch import GenomeBatch, Layout, MutationEvents, propose_substitutions, row_divergence
from .epu import Epuon, Genome, IdCounter, RatePolicy
from .landscapes import Environment
from .operators import (
    NER,
    TLS,
    MrsState,
    SosState,
    crossover_codes,
    gate_open,
    hypermutation_rates,
    mrs_filter_events,
    ner_repair,
    sos_update,
    tls_targeted_events,
    tls_untargeted_events,
)

MODES = ("ina", "ima")
PHASES = ("inducible", "proactive", "specializing")
METRIC_COLUMNS = (
    "generation",
    "best_fitness",
    "mean_fitness",
    "diversity",
    "stress",
    "realized_mutation_rate",
    "sos_tiers_active",
    "mutator_frequency",
    "recombination_events",
    "phase",
)
DEFAULT_WINDOW = 100


class EngineError(ValueError):
    pass


def _unit(errors, name, x):
    if not 0.0 <= x <= 1.0:
        errors.append(f"{name} must lie in [0, 1], got {x}")


@dataclass(frozen=True)
class OperatorConfig:
    ner_threshold: float = 0.2
    tls_threshold: float = 0.6
    targeted_multiplier: float = 10.0
    untargeted_multiplier: float = 50.0
    targeted_indel_fraction: float = 0.1
    untargeted_indel_fraction: float = 0.7
    ner_efficiency: float = 0.5
    mrs_enabled: bool = True
    p_repair: float = 0.5
    short_patch: tuple = ()  # ((locus, probability), ...)
    barrier_threshold: float = 0.10
    mrs_deficient_under_sos: bool = True

    def errors(self) -> list:
        errs = []
        for name in ("ner_threshold", "tls_threshold", "targeted_indel_fraction",
                     "untargeted_indel_fraction", "ner_efficiency", "p_repair", "barrier_threshold"):
            _unit(errs, name, getattr(self, name))
        if not self.ner_threshold < self.tls_threshold:
            errs.append("ner_threshold must be below tls_threshold")
        for name in ("targeted_multiplier", "untargeted_multiplier"):
            if getattr(self, name) < 1:
                errs.append(f"{name} must be >= 1")
        for locus, p in self.short_patch:
            _unit(errs, f"short_patch[{locus}]", p)
        return errs

    def sos_state(self) -> SosState:
        return SosState(
            tier_thresholds=((NER, self.ner_threshold), (TLS, self.tls_threshold)),
            targeted_multiplier=self.targeted_multiplier,
            untargeted_multiplier=self.untargeted_multiplier,
            targeted_indel_fraction=self.targeted_indel_fraction,
            untargeted_indel_fraction=self.untargeted_indel_fraction,
            ner_efficiency=self.ner_efficiency,
        )

    def mrs_state(self) -> MrsState:
        return MrsState(self.mrs_enabled, self.p_repair, dict(self.short_patch), self.barrier_threshold)


@dataclass(frozen=True)
class EngineConfig:
    mode: str = "ina"
    population: int = 200
    epu_size: int = 8
    base_rate: Optional[float] = None  # None: 1 / genome length
    tournament_size: int = 2
    elitism: int = 1
    init: str = "random"  # or "zeros"
    mutator_frequency: float = 0.0
    mutator_multiplier: float = 100.0
    target_fraction: float = 0.9
    pin_stress: Optional[float] = None
    recombination_rate: float = 0.3
    hotspot_boost: float = 50.0
    hypermutation_rate: float = 0.1
    contingency_weight: float = 1.0  # tag hits before a locus counts as contingency
    memory_window: int = 20
    phase_improvements: int = 2
    phase_window: int = 50
    diversity_sample: int = 32
    operators: OperatorConfig = field(default_factory=OperatorConfig)

    def errors(self) -> list:
        errs = []
        if self.mode not in MODES:
            errs.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.init not in ("random", "zeros"):
            errs.append(f"init must be 'random' or 'zeros', got {self.init!r}")
        for name, lo in (("population", 2), ("epu_size", 1), ("tournament_size", 1), ("elitism", 0),
                         ("memory_window", 1), ("phase_improvements", 1), ("phase_window", 1),
                         ("diversity_sample", 2)):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < lo:
                errs.append(f"{name} must be an integer >= {lo}, got {v!r}")
        if isinstance(self.elitism, int) and isinstance(self.population, int) and self.elitism >= self.population:
            errs.append("elitism must be smaller than population")
        if self.base_rate is not None:
            _unit(errs, "base_rate", self.base_rate)
        if self.pin_stress is not None:
            _unit(errs, "pin_stress", self.pin_stress)
        for name in ("mutator_frequency", "recombination_rate", "hypermutation_rate"):
            _unit(errs, name, getattr(self, name))
        if not 0.0 < self.target_fraction <= 1.0:
            errs.append(f"target_fraction must lie in (0, 1], got {self.target_fraction}")
        for name in ("mutator_multiplier",):
            if getattr(self, name) < 1:
                errs.append(f"{name} must be >= 1")
        for name in ("hotspot_boost", "contingency_weight"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be >= 0")
        errs += [f"operators.{e}" for e in self.operators.errors()]
        return errs

    def validate(self) -> "EngineConfig":
        errs = self.errors()
        if errs:
            raise EngineError("; ".join(errs))
        return self

    def rate(self, n_loci: int) -> float:
        return 1.0 / n_loci if self.base_rate is None else self.base_rate

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "operators"}
        ops = {f.name: getattr(self.operators, f.name) for f in fields(self.operators)}
        ops["short_patch"] = {str(k): v for k, v in self.operators.short_patch}
        out["operators"] = ops
        return out


@dataclass(frozen=True)
class TraceEntry:
    generation: int
    codes: np.ndarray = field(repr=False)
    fitness: float
    variant: str
    layout: Layout = field(repr=False, compare=False)

    @property
    def word(self) -> str:
        return "".join(self.layout.alphabet[c] for c in self.codes)

    def genome(self) -> Genome:
        ids = np.arange(len(self.layout.lengths), dtype=np.int64)
        return GenomeBatch(self.codes[None, :].copy(), np.zeros(1, dtype=bool), ids[None, :], self.layout).genome(0)


@dataclass
class EngineState:
    config: EngineConfig
    batch: GenomeBatch
    fitness: np.ndarray
    lesions: np.ndarray
    generation: int
    variant: str
    sos: SosState
    mrs: MrsState
    stress: float = 0.0
    phase: str = "inducible"
    best_trace: list = field(default_factory=list)
    epoch_start: int = 0
    epoch_best: float = -np.inf
    improvements: list = field(default_factory=list)
    memory: Epuon = field(default_factory=Epuon)
    ids: IdCounter = field(default_factory=IdCounter)
    tag_weights: Optional[np.ndarray] = None
    previous_epoch_best: Optional[np.ndarray] = None
    stored_generation: int = -1
    realized_rate: float = 0.0
    recombination_events: int = 0

    def copy(self) -> "EngineState":
        new = copy.copy(self)
        new.batch = self.batch.copy()
        new.fitness = self.fitness.copy()
        new.lesions = self.lesions.copy()
        new.best_trace = list(self.best_trace)
        new.improvements = list(self.improvements)
        new.memory = copy.deepcopy(self.memory)
        new.ids = IdCounter(self.ids.next)
        new.tag_weights = self.tag_weights.copy()
        return new

    @property
    def n_loci(self) -> int:
        return self.batch.layout.n_loci

    @property
    def contingency_loci(self) -> np.ndarray:
        floor = max(self.config.contingency_weight, 1e-12)
        return np.flatnonzero(self.tag_weights >= floor)

    @property
    def best(self) -> TraceEntry:
        return self.best_trace[-1]

    def best_genome(self) -> Genome:
        return self.best.genome()


# -- construction -------------------------------------------------------------

def initial_state(config: EngineConfig, env: Environment, rng: np.random.Generator) -> EngineState:
    config.validate()
    n, L = config.population, env.n_loci
    layout = Layout.binary(L, config.epu_size)
    if config.init == "zeros":
        codes = np.zeros((n, L), dtype=np.uint8)
    else:
        codes = rng.integers(0, 2, size=(n, L), dtype=np.uint8)
    mutator = np.zeros(n, dtype=bool)
    mutator[rng.permutation(n)[: int(round(config.mutator_frequency * n))]] = True
    ids = IdCounter.from_rng(rng)
    E = len(layout.lengths)
    batch = GenomeBatch(codes, mutator, ids.take(n * E).reshape(n, E), layout)
    variant = env.variant_at(0)
    state = EngineState(
        config=config,
        batch=batch,
        fitness=env.landscape(variant).evaluate(codes),
        lesions=np.zeros((n, L), dtype=bool),
        generation=0,
        variant=variant,
        sos=config.operators.sos_state(),
        mrs=config.operators.mrs_state(),
        ids=ids,
        tag_weights=np.zeros(L),
    )
    state.stress = _stress(state, env, switched=False)
    _record_best(state)
    return state


# -- stress -----------------------------------------------------------------------

def stress_level(mean_fitness: float, optimum: float, target_fraction: float) -> float:
    """Linear map: 0 at or above ``target_fraction * optimum``, 1 at zero fitness."""
    target = target_fraction * optimum
    if target <= 0:
        return 0.0
    return float(np.clip(1.0 - mean_fitness / target, 0.0, 1.0))


def stress_signal(state: EngineState, env: Environment) -> float:
    if state.fitness.size == 0:
        raise EngineError("population is empty")
    return stress_level(float(state.fitness.mean()), env.landscape(state.variant).optimum, state.config.target_fraction)


def _stress(state: EngineState, env: Environment, switched: bool) -> float:
    if state.config.pin_stress is not None:
        return float(state.config.pin_stress)
    return 1.0 if switched else stress_signal(state, env)


# -- one generation ---------------------------------------------------------------

def _tournament(fitness: np.ndarray, count: int, size: int, rng: np.random.Generator) -> np.ndarray:
    entrants = rng.integers(0, fitness.size, size=(count, size))
    winners = np.argmax(fitness[entrants], axis=1)  # first maximum wins ties
    return entrants[np.arange(count), winners]


def _enter_generation(state: EngineState, env: Environment, rng: np.random.Generator) -> bool:
    g = state.generation + 1
    variant = env.variant_at(g)
    switched = variant != state.variant
    if switched:
        state.variant = variant
        state.fitness = env.landscape(variant).evaluate(state.batch.codes)
        if env.lesion_rate > 0:
            state.lesions |= rng.random(state.lesions.shape) < env.lesion_rate
        state.epoch_start = g
        state.epoch_best = -np.inf
        state.improvements = []
        state.phase = "inducible"
        state.stored_generation = -1
        state.previous_epoch_best = state.best_trace[-1].codes
    state.stress = _stress(state, env, switched)
    return switched


def _generation(state: EngineState, env: Environment, rng: np.random.Generator, innovative: bool) -> None:
    cfg = state.config
    switched = _enter_generation(state, env, rng)
    g = state.generation + 1
    batch, layout = state.batch, state.batch.layout
    n, L = batch.n, layout.n_loci
    n_children = n - cfg.elitism

    if innovative:
        state.sos = sos_update(state.stress, state.sos)
    sos = state.sos if innovative else replace(state.sos, lexa_pool=1.0, active_tiers=frozenset())
    mrs = state.mrs
    if innovative and sos.tls_active and cfg.operators.mrs_deficient_under_sos:
        mrs = replace(mrs, enabled=False)

    # imitative core: selection and replication at base rates
    parents = _tournament(state.fitness, n_children, cfg.tournament_size, rng)
    children = batch.take(parents)
    lesions = state.lesions[parents]
    rates = layout.locus_rates(RatePolicy(cfg.rate(L), signals={"stress": state.stress}))
    row_mult = np.where(children.mutator, cfg.mutator_multiplier, 1.0)
    parts = [mrs_filter_events(propose_substitutions(children, rates, row_mult, rng), mrs, rng)]

    recombinations = 0
    if innovative:
        if sos.ner_active:
            lesions = ner_repair(lesions, sos, rng)
        if sos.tls_active:
            if lesions.any():
                parts.append(tls_targeted_events(children, lesions, rates, sos, rng))
            lesions = np.zeros_like(lesions)
            parts.append(mrs_filter_events(tls_untargeted_events(children, rates, row_mult, sos, rng), mrs, rng))
        contingency = state.contingency_loci
        if state.stress > 0 and contingency.size and cfg.hypermutation_rate > 0:
            hyper = hypermutation_rates(L, contingency, cfg.hypermutation_rate)
            parts.append(propose_substitutions(children, hyper, np.ones(n_children), rng, exposed=False))

    events = MutationEvents.concat(parts)
    children.apply(events)

    if innovative:
        p_rec = cfg.recombination_rate * state.stress
        if p_rec > 0:
            chosen = np.flatnonzero(rng.random(n_children) < p_rec)
            if chosen.size:
                partners = rng.integers(0, n, size=chosen.size)
                a = children.codes[chosen]
                b = batch.codes[partners]
                ok = gate_open(row_divergence(a, b), mrs, sos)
                if ok.any():
                    rows = chosen[ok]
                    mosaic, _, _ = crossover_codes(a[ok], b[ok], layout.hotspots, rng, cfg.hotspot_boost)
                    children.codes[rows] = mosaic
                    recombinations = int(rows.size)

    children.ids[:] = state.ids.take(children.ids.size).reshape(children.ids.shape)
    landscape = env.landscape(state.variant)
    child_fit = landscape.evaluate(children.codes)

    elite = np.argsort(-state.fitness, kind="stable")[: cfg.elitism]
    new = GenomeBatch(
        np.concatenate([batch.codes[elite], children.codes]),
        np.concatenate([batch.mutator[elite], children.mutator]),
        np.concatenate([batch.ids[elite], children.ids]),
        layout,
    )
    state.batch = new
    state.fitness = np.concatenate([state.fitness[elite], child_fit])
    state.lesions = np.concatenate([state.lesions[elite], lesions])
    state.generation = g
    state.realized_rate = len(events) / (n_children * L) if n_children else 0.0
    state.recombination_events = recombinations

    _reinject(state, landscape)
    _record_best(state, switched)
    if innovative:
        _update_phase(state)
        _store_stable_best(state)


def _reinject(state: EngineState, landscape) -> None:
    stored = state.memory.recall(state.variant)
    if stored is None:
        return
    genome, _ = stored
    lookup = {s: i for i, s in enumerate(state.batch.layout.alphabet)}
    codes = np.array([lookup[c] for c in genome.sequence], dtype=np.uint8)
    if codes.size != state.n_loci:
        return
    fit = float(landscape.evaluate(codes[None, :])[0])
    if fit <= state.fitness.max():
        return
    worst = int(np.argmin(state.fitness[state.config.elitism:])) + state.config.elitism
    state.batch.codes[worst] = codes
    state.batch.mutator[worst] = genome.mutator
    state.fitness[worst] = fit
    state.lesions[worst] = False


def _record_best(state: EngineState, switched: bool = False) -> None:
    i = int(np.argmax(state.fitness))
    f = float(state.fitness[i])
    if f > state.epoch_best or switched or not state.best_trace:
        if state.best_trace and f > state.epoch_best and not switched:
            state.improvements.append(state.generation)
            _tag_contingency(state, state.batch.codes[i])
        state.epoch_best = f
        state.best_trace.append(TraceEntry(state.generation, state.batch.codes[i].copy(), f, state.variant, state.batch.layout))


def _tag_contingency(state: EngineState, codes: np.ndarray) -> None:
    """Tag loci this improvement changed that also separate it from the previous epoch's best."""
    if state.phase != "specializing" or state.previous_epoch_best is None:
        return
    moved = (codes != state.best_trace[-1].codes) & (codes != state.previous_epoch_best)
    if not moved.any():
        return
    state.tag_weights[moved] += 1.0
    hot = np.zeros(state.n_loci, dtype=bool)
    hot[state.contingency_loci] = True
    if not np.array_equal(hot, state.batch.layout.hotspots):
        state.batch.layout = state.batch.layout.with_tags(hotspots=hot)


def _update_phase(state: EngineState) -> None:
    cfg = state.config
    if state.phase == "inducible" and state.stress > state.sos.threshold(NER):
        state.phase = "proactive"
    elif state.phase == "proactive":
        recent = [g for g in state.improvements if g > state.generation - cfg.phase_window]
        if len(recent) >= cfg.phase_improvements:
            state.phase = "specializing"


def _store_stable_best(state: EngineState) -> None:
    last = state.best_trace[-1]
    if state.generation - last.generation < state.config.memory_window or state.stored_generation == last.generation:
        return
    prev = state.memory.recall(state.variant)
    if prev is None or prev[1] < last.fitness:
        state.memory.store_solution(state.variant, last.genome(), last.fitness, state.ids)
    state.stored_generation = last.generation


def c_ima_step(state: EngineState, env: Environment, rng: np.random.Generator) -> EngineState:
    new = state.copy()
    _generation(new, env, rng, innovative=False)
    return new


def c_ina_step(state: EngineState, env: Environment, rng: np.random.Generator) -> EngineState:
    new = state.copy()
    _generation(new, env, rng, innovative=True)
    return new


# -- anytime driver ---------------------------------------------------------------

@dataclass
class AnytimeReport:
    best_trace: list
    stabilized: bool
    metrics: list
    budget: int
    window: int
    switches: list
    env: Environment = field(repr=False)
    final_state: EngineState = field(repr=False)

    @property
    def final(self) -> TraceEntry:
        return self.best_trace[-1]

    def column(self, name: str) -> np.ndarray:
        k = METRIC_COLUMNS.index(name)
        return np.array([row[k] for row in self.metrics])

    def recovery_times(self, fraction: float = 0.95) -> list:
        """Generations from each switch until the epoch best reaches ``fraction`` of the epoch optimum.

        Epochs that never get there count their full length.
        """
        best = self.column("best_fitness")
        bounds = list(self.switches) + [self.budget + 1]
        out = []
        for s, end in zip(bounds, bounds[1:]):
            target = fraction * self.env.landscape(self.env.variant_at(s)).optimum
            hit = np.flatnonzero(best[s:end] >= target)
            out.append(int(hit[0]) if hit.size else end - s)
        return out

    def to_record(self) -> dict:
        f = self.final
        return {
            "budget": self.budget,
            "window": self.window,
            "stabilized": self.stabilized,
            "final": {"generation": f.generation, "fitness": f.fitness, "variant": f.variant, "word": f.word},
            "best_trace": [
                {"generation": e.generation, "fitness": e.fitness, "variant": e.variant, "word": e.word}
                for e in self.best_trace
            ],
            "switches": list(self.switches),
            "contingency_loci": [int(i) for i in self.final_state.contingency_loci],
        }


def run_anytime(
    config: EngineConfig,
    env: Environment,
    budget: int,
    window: int = DEFAULT_WINDOW,
    seed: int = 0,
    streams: Optional[dict] = None,
) -> AnytimeReport:
    """Run exactly ``budget`` generations and report the best-so-far trace.

    The stabilized flag is set when the designated best has not changed in
    the last ``window`` generations.
    """
    if not isinstance(budget, int) or not isinstance(window, int) or window < 1 or budget < 0:
        raise EngineError("budget must be >= 0 and window >= 1")
    if budget and budget < window:
        raise EngineError(f"budget ({budget}) must be >= window ({window})")
    config.validate()
    streams = streams or rng_streams(seed)
    state = initial_state(config, env, streams["init"])
    evolve, metrics_rng = streams["evolve"], streams["metrics"]
    innovative = config.mode == "ina"
    rows = [metrics_row(state, metrics_rng)]
    for _ in range(budget):
        _generation(state, env, evolve, innovative)
        rows.append(metrics_row(state, metrics_rng))
    last_change = state.best_trace[-1].generation
    stabilized = budget > 0 and budget - last_change >= window
    return AnytimeReport(
        best_trace=state.best_trace,
        stabilized=bool(stabilized),
        metrics=rows,
        budget=budget,
        window=window,
        switches=env.switch_generations(budget),
        env=env,
        final_state=state,
    )


def rng_streams(seed: int) -> dict:
    """Independent generators per component, split from one seed."""
    names = ("init", "evolve", "metrics", "env")
    children = np.random.SeedSequence(int(seed)).spawn(len(names))
    return {name: np.random.default_rng(s) for name, s in zip(names, children)}


def metrics_row(state: EngineState, rng: np.random.Generator) -> tuple:
    codes = state.batch.codes
    k = min(state.config.diversity_sample, codes.shape[0])
    sample = codes[rng.choice(codes.shape[0], size=k, replace=False)]
    diff = (sample[:, None, :] != sample[None, :, :]).mean(axis=2)
    diversity = float(diff.sum() / (k * (k - 1))) if k > 1 else 0.0
    tiers = "+".join(t for t, _ in state.sos.tier_thresholds if t in state.sos.active_tiers) or "none"
    if state.config.mode == "ima":
        tiers = "none"
    return (
        state.generation,
        float(state.epoch_best),
        float(state.fitness.mean()),
        diversity,
        float(state.stress),
        float(state.realized_rate),
        tiers,
        float(state.batch.mutator.mean()),
        int(state.recombination_events),
        state.phase,
    )
