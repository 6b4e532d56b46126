"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly
(``python3 tests/test_acceptance.py``) for the summary lines alone.
"""

import contextlib
import functools
import io
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import FAMILY_2x2, HALTING_2x2_WITHIN_200, increment_binary, mean_band, naive_run  # noqa: E402

from indevo.cli import main as cli_main  # noqa: E402
from indevo.engine import EngineConfig, initial_state, c_ima_step, rng_streams, run_anytime  # noqa: E402
from indevo.epu import Genome, RatePolicy, epuize, replicate  # noqa: E402
from indevo.inductive import (  # noqa: E402
    SosMonitor,
    TapeInductiveMachine,
    as_inductive,
    compose,
    identity_copier,
    reduce_to_recursive,
    run_observed,
)
from indevo.landscapes import KTrap, MatchTarget, Neutral, oscillating, static  # noqa: E402
from indevo.operators import (  # noqa: E402
    NER,
    TLS,
    LesionMap,
    MrsState,
    SosState,
    hypermutate,
    mrs_filter,
    mutator_apply,
    recombination_gate,
    sos_update,
    tls_mutate,
)
from indevo.batch import Mutation  # noqa: E402
from indevo.tm import (  # noqa: E402
    Halted,
    decode_machine,
    encode_machine,
    enumerate_family,
    parse_machine,
    random_machine,
    random_word,
    run,
    trace,
)

MACHINES = Path(__file__).resolve().parents[1] / "src" / "indevo" / "machines"
SEED = 20240611


VERDICTS: list = []


def verdict(n: int, ok: bool, detail: str) -> bool:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS.append(line)
    print(line)
    return ok


# -- 1. halting monitor vs direct simulation ---------------------------------------

def oracle_table(m):
    return {(q, r[0]): (nxt, w[0], mv[0]) for (q, r), (nxt, w, mv) in m.transitions.items()}


def criterion_1():
    window, long_fuel = 100, 50_000
    machines = list(enumerate_family(2, 2))
    halting = bad = 0
    for m in machines:
        halted, h = naive_run(oracle_table(m), m.blank, m.start_state, "", 200, m.final_states)
        if halted:
            halting += 1
            obs = run_observed(SosMonitor(m, ""), "", 10 * h + window, window)
            bad += not (obs.tag == "stabilized" and obs.word == "1")
        else:
            obs = run_observed(SosMonitor(m, ""), "", long_fuel, window)
            bad += not (obs.word == "0" and [w for _, w in obs.trace] == ["0"])
    ok = bad == 0 and len(machines) == FAMILY_2x2 and halting == HALTING_2x2_WITHIN_200
    return verdict(1, ok, f"{len(machines)} machines, {halting} halting, {bad} mismatches")


# -- 2. recursive reduction -------------------------------------------------------

def final_reachable(m) -> bool:
    seen, todo = {m.start_state}, [m.start_state]
    while todo:
        q = todo.pop()
        for (src, _), (nxt, _, _) in m.transitions.items():
            if src == q and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return bool(seen & m.final_states)


def criterion_2():
    rng = np.random.default_rng(SEED + 2)
    fuel, window = 500, 50
    checked = bad = 0
    while checked < 1000:
        tapes = int(rng.integers(1, 3))
        m = random_machine(rng, n_states=4, tapes=tapes, n_final=1, read_only_input=tapes > 1)
        if not final_reachable(m):
            continue
        checked += 1
        u = random_word(rng, m)
        direct = run(m, u, fuel)
        direct_word = direct.output if isinstance(direct, Halted) else direct.config.word(m.output_tape, m.blank)
        observed = run_observed(TapeInductiveMachine(m), u, fuel, window)
        bad += observed.word != direct_word or reduce_to_recursive(TapeInductiveMachine(m), u, fuel) != direct
    return verdict(2, bad == 0, f"{checked} machines with reachable final states, {bad} mismatches")


# -- 3. codec roundtrip ---------------------------------------------------------------

def criterion_3():
    rng = np.random.default_rng(SEED + 3)
    bad = 0
    for _ in range(1000):
        m = random_machine(rng, n_states=int(rng.integers(1, 6)), n_symbols=int(rng.integers(1, 4)),
                           tapes=int(rng.integers(1, 3)), n_final=int(rng.integers(0, 2)))
        u = random_word(rng, m)
        back = decode_machine(encode_machine(m))
        bad += back != m or trace(back, u, 100) != trace(m, u, 100)
    return verdict(3, bad == 0, f"1000 machines, {bad} mismatches")


# -- 4. composition identity law ------------------------------------------------------

def criterion_4():
    rng = np.random.default_rng(SEED + 4)
    fuel, window = 300, 40
    bad = 0
    for _ in range(50):
        m = random_machine(rng, n_states=4, tapes=2, p_missing=0.05, read_only_input=True)
        u = random_word(rng, m, 5)
        bare = run_observed(m, u, fuel, window)
        comp = compose(identity_copier(m.alphabet, m.blank), as_inductive(m))
        wrapped = run_observed(comp, u, fuel + max(len(u), 1) - 1, window)
        bad += (bare.tag, bare.word) != (wrapped.tag, wrapped.word)
    return verdict(4, bad == 0, f"50 machines, {bad} mismatches")


# -- 5. SOS nesting ---------------------------------------------------------------------

def criterion_5():
    prev, entered, nested = frozenset(), {}, True
    for k in range(101):
        s = sos_update(k / 100, SosState())
        nested &= prev <= s.active_tiers
        for t in s.active_tiers - prev:
            entered[t] = k
        prev = s.active_tiers
    ok = nested and entered.get(NER, 999) < entered.get(TLS, -1)
    return verdict(5, ok, f"nested={nested}, NER enters at {entered.get(NER)}, TLS at {entered.get(TLS)}")


# -- 6. recombination barrier --------------------------------------------------------------

def criterion_6():
    a = Genome.from_sequence("0" * 100)
    close, far = Genome.from_sequence("1" * 5 + "0" * 95), Genome.from_sequence("1" * 40 + "0" * 60)
    bad = 0
    for diverged in (False, True):
        for mrs_on in (False, True):
            for tls_on in (False, True):
                sos = sos_update(1.0 if tls_on else 0.0, SosState())
                got = recombination_gate(a, far if diverged else close, MrsState(enabled=mrs_on), sos)
                bad += got != ((not diverged) or (not mrs_on and tls_on))
    return verdict(6, bad == 0, f"8 combinations, {bad} mismatches")


# -- 7. rate statistics ---------------------------------------------------------------------

def criterion_7():
    rng = np.random.default_rng(SEED + 7)
    trials = 1000
    results = {}

    props = [Mutation(i % 100, "substitution", 1, True) for i in range(10_000)]
    results["mrs_filter"] = (np.mean([len(mrs_filter(props, MrsState(p_repair=0.99), rng)) for _ in range(trials)]),
                             mean_band(10_000, 0.01, trials))

    plain = Genome.from_sequence("0" * 10_000)
    results["replicate"] = (np.mean([replicate(plain, rng, RatePolicy(0.01)).sequence.count("1") for _ in range(trials)]),
                            mean_band(10_000, 0.01, trials))

    tagged = Genome.from_sequence("0" * 10_000, mutator=True)
    results["mutator_apply"] = (
        np.mean([mutator_apply(tagged, 100, rng, RatePolicy(1e-4)).sequence.count("1") for _ in range(trials)]),
        mean_band(10_000, 0.01, trials))

    small = Genome.from_sequence("0" * 30)
    hits = np.zeros(30)
    for _ in range(trials):
        hits += np.array([c == "1" for c in hypermutate(small, [1, 2, 3], 0.5, rng).sequence])
    per_locus = hits[[1, 2, 3]] / trials
    results["hypermutate"] = (per_locus.mean(), mean_band(1, 0.5, 3 * trials))
    confined = not hits[[i for i in range(30) if i not in (1, 2, 3)]].any()

    ok = confined
    parts = []
    for name, (value, (lo, hi)) in results.items():
        inside = lo <= value <= hi
        ok &= inside
        parts.append(f"{name} {value:.3f} in [{lo:.3f}, {hi:.3f}]" if inside else f"{name} {value:.3f} OUTSIDE [{lo:.3f}, {hi:.3f}]")
    return verdict(7, bool(ok), "; ".join(parts) + f"; hypermutation confined={confined}")


# -- 8. targeting soundness -------------------------------------------------------------------

def criterion_8():
    rng = np.random.default_rng(SEED + 8)
    genome = Genome.from_sequence("01" * 20, epu_size=8)
    sos = sos_update(1.0, SosState())
    violations = events = 0
    for _ in range(10_000):
        k = int(rng.integers(1, 6))
        lesions = frozenset(int(i) for i in rng.choice(40, size=k, replace=False))
        _, proposals = tls_mutate(genome, LesionMap(lesions), "targeted", sos, rng)
        events += len(proposals)
        violations += sum(p.locus not in lesions for p in proposals)
    return verdict(8, violations == 0, f"10000 applications, {events} events, {violations} off-lesion events")


# -- 9 and 11. dynamic re-adaptation and the anytime contract --------------------------------------

OSC_N, OSC_PERIOD, OSC_SWITCHES, OSC_BUDGET, OSC_WINDOW, OSC_SEEDS = 64, 200, 10, 2200, 100, 30


@functools.lru_cache(maxsize=1)
def oscillation_runs():
    pairs = []
    for seed in range(OSC_SEEDS):
        env = oscillating(OSC_N, OSC_PERIOD, OSC_PERIOD * OSC_SWITCHES, rng_streams(seed)["env"])
        pair = tuple(run_anytime(EngineConfig(mode=mode, population=200), env, OSC_BUDGET, OSC_WINDOW, seed=seed)
                     for mode in ("ina", "ima"))
        pairs.append(pair)
    return pairs


def criterion_9():
    wins, totals = 0, []
    for ina, ima in oscillation_runs():
        a, b = sum(ina.recovery_times()), sum(ima.recovery_times())
        totals.append((a, b))
        wins += a < b
    rate = wins / OSC_SEEDS
    med = np.median(np.array(totals), axis=0)
    return verdict(9, rate >= 0.8, f"SOS faster in {wins}/{OSC_SEEDS} pairs ({rate:.0%}); "
                                  f"median total recovery {med[0]:.0f} vs {med[1]:.0f} generations")


def criterion_11():
    violations = 0
    for pair in oscillation_runs():
        for r in pair:
            gens = r.column("generation")
            violations += len(gens) != OSC_BUDGET + 1 or gens[-1] != OSC_BUDGET or r.final_state.generation != OSC_BUDGET
            violations += len(r.switches) != OSC_SWITCHES
            best = r.column("best_fitness")
            bounds = [0] + r.switches + [OSC_BUDGET + 1]
            for lo, hi in zip(bounds, bounds[1:]):
                violations += int(np.sum(np.diff(best[lo:hi]) < 0))
    return verdict(11, violations == 0, f"{2 * OSC_SEEDS} runs, {violations} violations")


# -- 10. mutator hitchhiking ------------------------------------------------------------------------

def hitchhiking_frequencies(landscape):
    cfg = EngineConfig(mode="ima", init="zeros", mutator_frequency=0.1, base_rate=0.001, mutator_multiplier=100.0)
    return np.array([run_anytime(cfg, static(landscape), 150, 20, seed=seed).column("mutator_frequency")[-1]
                     for seed in range(30)])


def criterion_10():
    trap = hitchhiking_frequencies(KTrap(32))
    neutral = hitchhiking_frequencies(Neutral(32))
    rose = float(np.mean(trap > 0.1))
    inside = float(np.mean((neutral >= 0.02) & (neutral <= 0.35)))
    ok = rose >= 0.7 and 0.02 <= neutral.mean() <= 0.35
    return verdict(10, ok, f"k-trap frequency > 0.1 in {rose:.0%} of runs; neutral mean {neutral.mean():.3f} "
                           f"({inside:.0%} of runs individually within [0.02, 0.35])")


# -- 12. imitative equivalence ---------------------------------------------------------------------------

def criterion_12():
    increment = parse_machine((MACHINES / "increment.tm").read_text())
    env = static(MatchTarget(np.arange(32) % 2))
    cfg = EngineConfig(mode="ima", population=30, init="zeros", base_rate=0.0)
    state = initial_state(cfg, env, np.random.default_rng(SEED))
    program = epuize(encode_machine(increment), state.ids)
    state.memory.add(program)

    rng = np.random.default_rng(SEED + 12)
    mismatches = 0
    for _ in range(100):
        w = "".join(rng.choice(["0", "1"], size=int(rng.integers(1, 12))))
        through_engine = state.memory.evaluate(program.id, w, 10_000)
        direct = run(increment, w, 10_000)
        mismatches += through_engine != direct or direct.output != increment_binary(w)

    solved = state.copy()
    solved.batch.codes[0] = np.arange(32) % 2
    state.memory.store_solution("A", solved.batch.genome(0), 32.0, state.ids)
    nxt = c_ima_step(state, env, np.random.default_rng(SEED + 13))
    restored = nxt.fitness.max() == 32.0 and nxt.best.fitness == 32.0
    return verdict(12, mismatches == 0 and restored,
                   f"100 inputs, {mismatches} mismatches; stored solution restored after 1 generation: {restored}")


# -- 13. CLI determinism -------------------------------------------------------------------------------------

def criterion_13(tmp: Path):
    config = tmp / "config.json"
    config.write_text(json.dumps({
        "seed": 5, "budget": 60, "window": 10, "engine": {"population": 40},
        "environment": {"benchmark": "oscillating", "params": {"n": 24, "period": 20}},
        "sweep": {"grid": {"engine.mode": ["ina", "ima"]}},
    }))
    commands = [
        ("tm-run", ["tm", "run", "builtin:increment", "--input", "01011"]),
        ("tm-run-fuel", ["tm", "run", "builtin:loop", "--fuel", "300"]),
        ("tm-enumerate", ["tm", "enumerate", "--states", "2", "--symbols", "2", "--fuel", "50", "--out", "{out}/fam.csv"]),
        ("monitor", ["inductive", "monitor", "builtin:increment", "--input", "0111", "--fuel", "500", "--window", "50",
                     "--out", "{out}/obs.json"]),
        ("evolve-run", ["evolve", "run", "--config", str(config), "--out", "{out}"]),
        ("evolve-sweep", ["evolve", "sweep", "--config", str(config), "--replicates", "2", "--out", "{out}"]),
    ]
    differing = []
    for name, argv in commands:
        snapshots = []
        for attempt in ("a", "b"):
            out = tmp / name / attempt
            out.mkdir(parents=True)
            buf = io.StringIO()
            with contextlib.redirect_stdout(buf):
                code = cli_main([a.replace("{out}", str(out)) for a in argv])
            files = {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
            stdout = buf.getvalue().replace(str(out), "<out>")
            snapshots.append((code, stdout, files))
        if snapshots[0] != snapshots[1]:
            differing.append(name)
    return verdict(13, not differing, f"{len(commands)} commands run twice, differing: {differing or 'none'}")


# -- pytest entry points ---------------------------------------------------------------------------------------

def test_criterion_01_halting_monitor():
    assert criterion_1()


def test_criterion_02_recursive_reduction():
    assert criterion_2()


def test_criterion_03_codec_roundtrip():
    assert criterion_3()


def test_criterion_04_identity_law():
    assert criterion_4()


def test_criterion_05_sos_nesting():
    assert criterion_5()


def test_criterion_06_barrier_truth_table():
    assert criterion_6()


def test_criterion_07_rate_statistics():
    assert criterion_7()


def test_criterion_08_targeting_soundness():
    assert criterion_8()


@pytest.mark.slow
def test_criterion_09_dynamic_readaptation():
    assert criterion_9()


@pytest.mark.slow
def test_criterion_10_mutator_hitchhiking():
    assert criterion_10()


@pytest.mark.slow
def test_criterion_11_anytime_contract():
    assert criterion_11()


def test_criterion_12_imitative_equivalence():
    assert criterion_12()


def test_criterion_13_cli_determinism(tmp_path):
    assert criterion_13(tmp_path)


if __name__ == "__main__":
    import tempfile

    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
              criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]
    results = [c() for c in checks]
    with tempfile.TemporaryDirectory() as d:
        results.append(criterion_13(Path(d)))
    sys.exit(0 if all(results) else 1)
