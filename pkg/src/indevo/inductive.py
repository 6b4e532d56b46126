"""Inductive computation: results read off an output tape that stops changing.

An inductive machine is never required to halt. An observer runs it under a
step budget (``fuel``) and reports one of three outcomes:

* :class:`HaltedWithResult` if the machine entered a state in ``F``;
* :class:`Stabilized` if the output word was the same after each of the
  final ``window`` steps (and the machine has produced a non-empty word);
* :class:`Provisional` otherwise, carrying the full output trace.

Stabilization is observed, not proved: it is a budgeted proxy for the limit
semantics. Trace entries are ``(step_index, word)`` where ``step_index`` is
the zero-based index of the step that produced ``word``; stabilization then
reads ``observed_until - last_change_step >= window``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Union

from . import _kernels
from .tm.codec import decode_machine
from .tm.machine import (
    CompiledMachine,
    Execution,
    MachineDescription,
    MachineError,
    RunResult,
    check_word,
    initial_config,
    run,
)

DEFAULT_FUEL = 1_000_000
DEFAULT_WINDOW = 1_000

# The monitor writes "1" at step max(h, 1) when the target halts after h
# transitions, so fuel >= h + window always certifies the halting case.
MONITOR_DELAY = 1


class InductiveError(ValueError):
    pass


@dataclass(frozen=True)
class Stabilized:
    word: str
    last_change_step: int
    observed_until: int
    trace: tuple = field(default=(), repr=False, compare=False)
    tag = "stabilized"

    @property
    def steps(self) -> int:
        return self.observed_until


@dataclass(frozen=True)
class Provisional:
    word: str
    trace: tuple = field(repr=False, compare=False)
    budget: int = 0
    tag = "provisional"

    @property
    def steps(self) -> int:
        return self.budget


@dataclass(frozen=True)
class HaltedWithResult:
    word: str
    halt_step: int
    trace: tuple = field(default=(), repr=False, compare=False)
    tag = "halted"

    @property
    def steps(self) -> int:
        return self.halt_step


Observation = Union[Stabilized, Provisional, HaltedWithResult]


def observation_record(obs: Observation) -> dict:
    """Tagged record for JSON output."""
    rec = {"tag": obs.tag, "word": obs.word, "steps": obs.steps}
    if isinstance(obs, Stabilized):
        rec["last_change_step"] = obs.last_change_step
        rec["observed_until"] = obs.observed_until
    elif isinstance(obs, HaltedWithResult):
        rec["halt_step"] = obs.halt_step
    rec["trace_length"] = len(obs.trace)
    return rec


def dump_trace(trace) -> str:
    return "".join(f"{step}\t{word}\n" for step, word in trace)


# -- machines and their processes -------------------------------------------

class Process(ABC):
    """A running inductive machine.

    ``advance(limit)`` runs at most ``limit`` steps and returns early right
    after a step that changed ``output``, entered ``F``, or left the process
    ``done``. A done process can no longer change; its further steps idle.
    """

    steps: int
    output: str
    in_final: bool

    @property
    @abstractmethod
    def done(self) -> bool: ...

    @abstractmethod
    def advance(self, limit: int) -> int: ...


class InductiveMachine(ABC):
    input_alphabet: frozenset
    output_alphabet: frozenset
    final_states: frozenset

    @abstractmethod
    def start(self, word: str) -> Process: ...


class _TapeProcess(Process):
    def __init__(self, compiled: CompiledMachine, word: str):
        self.ex = Execution(compiled, initial_config(compiled.machine, word))
        self.out_tape = compiled.machine.output_tape
        self.steps = 0
        self.output = self.ex.word(self.out_tape)
        self.in_final = self.ex.in_final
        self.stuck = not self.in_final and self.ex.halted

    @property
    def done(self) -> bool:
        return self.in_final or self.stuck

    def advance(self, limit: int) -> int:
        if limit <= 0:
            return 0
        if self.done:
            self.steps += limit
            return limit
        taken, status = self.ex.advance(limit, self.out_tape)
        self.steps += taken
        if status == _kernels.WATCH:
            self.output = self.ex.word(self.out_tape)
        elif status == _kernels.HALTED:
            self.in_final = self.ex.in_final
            self.stuck = not self.in_final
        return taken


class TapeInductiveMachine(InductiveMachine):
    """A Turing machine read inductively.

    Tape 0 holds the input, the last tape is the output. With two or more
    tapes the input tape is read-only; with one tape input and output share
    it.
    """

    def __init__(self, machine: MachineDescription):
        if machine.tapes >= 2:
            for (state, read), (_, write, _) in machine.transitions.items():
                if write[0] != read[0]:
                    raise InductiveError(f"transition from {state!r} writes to the read-only input tape")
        self.machine = machine
        self.compiled = CompiledMachine(machine)
        self.input_alphabet = frozenset(machine.alphabet)
        self.output_alphabet = frozenset(machine.alphabet)
        self.final_states = machine.final_states

    def start(self, word: str) -> Process:
        check_word(self.machine, word)
        return _TapeProcess(self.compiled, word)


class _MonitorProcess(Process):
    def __init__(self, compiled: CompiledMachine, u: str):
        self.target = Execution(compiled, initial_config(compiled.machine, u))
        self.steps = 0
        self.output = ""
        self.in_final = False

    @property
    def done(self) -> bool:
        return self.output == "1"

    def advance(self, limit: int) -> int:
        if limit <= 0:
            return 0
        if self.output == "1":
            self.steps += limit
            return limit
        if self.output == "":
            # one simulated transition, then report the target's status
            self.target.advance(1)
            self.steps += 1
            self.output = "1" if self.target.halted else "0"
            return 1
        taken, status = self.target.advance(limit)
        self.steps += taken
        if status == _kernels.HALTED:
            self.output = "1"
        return taken


class SosMonitor(InductiveMachine):
    """Simulates a target on ``u``; writes "0" while it runs and "1" once it halts.

    Its inductive result is therefore "1" exactly when the target halts on
    ``u``. The runtime input is ignored and must be empty.
    """

    def __init__(self, target: MachineDescription, u: str):
        check_word(target, u)
        self.target = target
        self.u = u
        self.compiled = CompiledMachine(target)
        self.input_alphabet = frozenset()
        self.output_alphabet = frozenset("01")
        self.final_states = frozenset()

    def start(self, word: str) -> Process:
        if word:
            raise MachineError("the monitor takes no runtime input")
        return _MonitorProcess(self.compiled, self.u)


def make_sos_monitor(target: str, u: str = "") -> SosMonitor:
    """Build the halting monitor from a target code word."""
    return SosMonitor(decode_machine(target), u)


class _CompositeProcess(Process):
    def __init__(self, first: InductiveMachine, second: InductiveMachine, word: str):
        self.first = first.start(word)
        self.second_machine = second
        self.second: Optional[Process] = None
        self.fed = None
        self.steps = 0
        self.output = ""
        self.in_final = False
        self._maybe_restart()

    @property
    def done(self) -> bool:
        return self.first.done and self.second is not None and self.second.done

    def _maybe_restart(self) -> bool:
        f = self.first
        if self.second is None:
            fresh = bool(f.output) or f.done
        else:
            fresh = f.output != self.fed
        if fresh:
            self.fed = f.output
            self.second = self.second_machine.start(f.output)
            return True
        return False

    def _sync(self):
        if self.second is not None:
            self.output = self.second.output
            self.in_final = self.first.in_final and self.second.in_final

    def advance(self, limit: int) -> int:
        if limit <= 0:
            return 0
        before = self.output
        if self.first.done and self.second is not None:
            taken = self.second.advance(limit)
            self.steps += taken
            self._sync()
            return taken
        if self.second is None or self.second.done:
            taken = self.first.advance(limit)
            if self._maybe_restart():
                self.second.advance(1)
            self.steps += taken
            self._sync()
            return taken
        for i in range(1, limit + 1):
            self.first.advance(1)
            self._maybe_restart()
            self.second.advance(1)
            self.steps += 1
            self._sync()
            if self.output != before or self.in_final:
                return i
            if self.first.done or self.second.done:
                return i
        return limit


class Composite(InductiveMachine):
    """``first`` preprocesses the input of ``second``.

    Each macro-step runs one step of ``first`` then one of ``second``.
    ``second`` is restarted on ``first``'s output word whenever that word
    changes (and once when ``first`` finishes). The composite output is
    ``second``'s output; the composite enters ``F`` only when both have.
    """

    def __init__(self, first: InductiveMachine, second: InductiveMachine):
        extra = first.output_alphabet - second.input_alphabet
        if extra:
            raise InductiveError(f"first machine can output symbols {sorted(extra)} that second cannot read")
        self.first = first
        self.second = second
        self.input_alphabet = first.input_alphabet
        self.output_alphabet = second.output_alphabet
        self.final_states = second.final_states

    def start(self, word: str) -> Process:
        return _CompositeProcess(self.first, self.second, word)


def compose(first: InductiveMachine, second: InductiveMachine) -> Composite:
    return Composite(first, second)


def as_inductive(machine) -> InductiveMachine:
    if isinstance(machine, InductiveMachine):
        return machine
    return TapeInductiveMachine(machine)


# -- observation -------------------------------------------------------------

def run_observed(
    machine,
    word: str = "",
    fuel: int = DEFAULT_FUEL,
    window: int = DEFAULT_WINDOW,
) -> Observation:
    """Observe ``machine`` on ``word`` for at most ``fuel`` steps."""
    if not 1 <= window <= fuel:
        raise InductiveError("need fuel >= window >= 1")
    proc = as_inductive(machine).start(word)
    trace = []
    last = proc.output
    if proc.in_final:
        return HaltedWithResult(last, 0, ())
    while proc.steps < fuel:
        proc.advance(fuel - proc.steps)
        if proc.output != last:
            last = proc.output
            trace.append((proc.steps - 1, last))
        if proc.in_final:
            return HaltedWithResult(last, proc.steps, tuple(trace))
    observed_until = proc.steps
    if trace and last and observed_until - trace[-1][0] >= window:
        return Stabilized(last, trace[-1][0], observed_until, tuple(trace))
    return Provisional(last, tuple(trace), fuel)


def reduce_to_recursive(machine, word: str, fuel: int) -> RunResult:
    """Ordinary halting semantics for an inductive machine with non-empty ``F``."""
    inner = machine.machine if isinstance(machine, TapeInductiveMachine) else machine
    if not isinstance(inner, MachineDescription):
        raise InductiveError("only tape machines reduce to recursive runs")
    if not inner.final_states:
        raise InductiveError("machine has no final states")
    return run(inner, word, fuel)


def identity_copier(alphabet, blank: str) -> TapeInductiveMachine:
    """Two-tape machine copying its input to its output, then entering ``F``."""
    alphabet = tuple(alphabet)
    table = {("copy", (a, blank)): ("copy", (a, a), ("R", "R")) for a in alphabet if a != blank}
    table[("copy", (blank, blank))] = ("done", (blank, blank), ("S", "S"))
    return TapeInductiveMachine(
        MachineDescription(
            states=("copy", "done"),
            alphabet=alphabet,
            blank=blank,
            start_state="copy",
            final_states=frozenset({"done"}),
            transitions=table,
            tapes=2,
        )
    )
