import numpy as np
import pytest

from indevo.inductive import (
    HaltedWithResult,
    InductiveError,
    Provisional,
    Stabilized,
    SosMonitor,
    TapeInductiveMachine,
    as_inductive,
    compose,
    dump_trace,
    identity_copier,
    make_sos_monitor,
    observation_record,
    reduce_to_recursive,
    run_observed,
)
from indevo.tm import Halted, MachineError, encode_machine, parse_machine, random_machine, random_word, run

from conftest import bundled

HEAD = "tapes: 1\nalphabet: 0 1 _\nblank: _\nstart: a\n"


def test_monitor_halting_target_stabilizes_to_one():
    obs = run_observed(SosMonitor(bundled("halt"), ""), "", 1000, 1000)
    assert isinstance(obs, Stabilized) and obs.word == "1" and obs.last_change_step == 0


def test_monitor_looping_target_reads_zero():
    obs = run_observed(SosMonitor(bundled("loop"), ""), "", 5000, 1000)
    assert obs.word == "0"
    assert [w for _, w in obs.trace] == ["0"]


def test_monitor_change_step_tracks_halt_step():
    target = bundled("increment")
    h = run(target, "011", 100).steps
    obs = run_observed(make_sos_monitor(encode_machine(target), "011"), "", h + 50, 50)
    assert isinstance(obs, Stabilized) and obs.word == "1"
    assert obs.last_change_step == h - 1


def test_monitor_fuel_just_enough():
    target = bundled("increment")
    h = run(target, "0111", 100).steps
    w = 20
    assert run_observed(SosMonitor(target, "0111"), "", h + w, w).word == "1"
    assert isinstance(run_observed(SosMonitor(target, "0111"), "", h + w - 2, w), Provisional)


def test_monitor_rejects_runtime_input():
    with pytest.raises(MachineError):
        run_observed(SosMonitor(bundled("loop"), ""), "1", 10, 5)


def test_window_validation():
    with pytest.raises(InductiveError):
        run_observed(bundled("loop"), "", 10, 11)
    with pytest.raises(InductiveError):
        run_observed(bundled("loop"), "", 10, 0)


def test_halted_with_result_on_final_entry():
    obs = run_observed(bundled("increment"), "011", 1000, 10)
    assert isinstance(obs, HaltedWithResult) and obs.word == "100" and obs.halt_step == 7


def test_stuck_machine_without_final_idles_and_stabilizes():
    m = parse_machine(HEAD + "a (_) -> b (1) (R)\n")
    obs = run_observed(m, "", 100, 50)
    assert isinstance(obs, Stabilized) and obs.word == "1" and obs.last_change_step == 0


def test_oscillating_output_stays_provisional():
    m = parse_machine(HEAD + "a (_) -> b (1) (S)\nb (1) -> a (_) (S)\n")
    obs = run_observed(m, "", 1000, 10)
    assert isinstance(obs, Provisional)
    assert len(obs.trace) == 1000


def test_empty_output_never_stabilizes():
    obs = run_observed(bundled("loop"), "", 500, 10)
    assert isinstance(obs, Provisional) and obs.word == ""


def test_trace_records_change_steps():
    m = parse_machine(HEAD + "a (_) -> b (1) (R)\nb (_) -> c (1) (R)\n")
    obs = run_observed(m, "", 100, 10)
    assert [s for s, _ in obs.trace] == [0, 1]
    assert dump_trace(obs.trace) == "0\t1\n1\t11\n"


def test_composition_with_monitor():
    yes_no = as_inductive(bundled("yes_no"))
    halting = compose(SosMonitor(bundled("increment"), "1"), yes_no)
    looping = compose(SosMonitor(bundled("loop"), ""), yes_no)
    assert run_observed(halting, "", 5000, 500).word == "YES"
    assert run_observed(looping, "", 5000, 500).word == "NO"


def test_identity_law_small_corpus(rng):
    for _ in range(40):
        m = random_machine(rng, n_states=4, tapes=2, p_missing=0.05, read_only_input=True)
        u = random_word(rng, m, 5)
        fuel, window = 300, 40
        bare = run_observed(m, u, fuel, window)
        comp = compose(identity_copier(m.alphabet, m.blank), as_inductive(m))
        wrapped = run_observed(comp, u, fuel + max(len(u), 1) - 1, window)
        assert (bare.tag, bare.word) == (wrapped.tag, wrapped.word)


def test_reduce_to_recursive_agrees(rng):
    for _ in range(50):
        tapes = int(rng.integers(1, 3))
        m = random_machine(rng, n_states=4, tapes=tapes, n_final=1, read_only_input=tapes > 1)
        u = random_word(rng, m)
        a = reduce_to_recursive(TapeInductiveMachine(m), u, 500)
        b = run(m, u, 500)
        assert a == b


def test_reduce_requires_final_states():
    with pytest.raises(InductiveError):
        reduce_to_recursive(bundled("loop"), "", 10)


def test_observation_record_fields():
    rec = observation_record(run_observed(SosMonitor(bundled("halt"), ""), "", 100, 10))
    assert rec["tag"] == "stabilized" and rec["word"] == "1" and rec["steps"] == 100


def test_one_tape_inductive_machine_sees_input_as_output():
    m = parse_machine(HEAD + "a (1) -> a (1) (S)\n")
    obs = run_observed(m, "1", 100, 10)
    assert obs.word == "1"
