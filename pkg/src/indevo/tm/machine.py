"""Deterministic multi-tape Turing machines.

A machine is plain data (:class:`MachineDescription`); :func:`step` is the
reference single-step semantics over sparse :class:`Configuration` values,
and :func:`run` drives the compiled stepper for anything longer than a few
steps. Tapes are bi-infinite. Input goes on tape 0 starting at cell 0,
every head starts at cell 0, and the output word is read off the last tape.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional, Union

import numpy as np

from .. import _kernels

LEFT, RIGHT, STAY = "L", "R", "S"
MOVES = {LEFT: -1, RIGHT: 1, STAY: 0}

Key = tuple  # (state, (sym_1, ..., sym_N))
Action = tuple  # (next_state, (write_1, ...), (move_1, ...))


class MachineError(ValueError):
    """Invalid machine description or input word."""


class MachineSyntaxError(MachineError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, eq=True)
class MachineDescription:
    states: tuple
    alphabet: tuple
    blank: str
    start_state: str
    final_states: frozenset
    transitions: Mapping = field(hash=False)
    tapes: int = 1

    def __post_init__(self):
        if self.tapes < 1:
            raise MachineError("a machine needs at least one tape")
        states = set(self.states)
        alphabet = set(self.alphabet)
        if len(states) != len(self.states):
            raise MachineError("duplicate state name")
        if len(alphabet) != len(self.alphabet):
            raise MachineError("duplicate alphabet symbol")
        for sym in self.alphabet:
            if not isinstance(sym, str) or len(sym) != 1 or sym.isspace():
                raise MachineError(f"symbols must be single non-space characters, got {sym!r}")
        if self.blank not in alphabet:
            raise MachineError(f"blank {self.blank!r} not in alphabet")
        if self.start_state not in states:
            raise MachineError(f"start state {self.start_state!r} is not a state")
        if not set(self.final_states) <= states:
            raise MachineError("final states must be states")
        table = {}
        for (state, read), (nxt, write, move) in dict(self.transitions).items():
            for s in (state, nxt):
                if s not in states:
                    raise MachineError(f"undefined state {s!r}")
            read, write, move = tuple(read), tuple(write), tuple(move)
            if not (len(read) == len(write) == len(move) == self.tapes):
                raise MachineError(f"transition from {state!r} has wrong tape arity")
            for sym in read + write:
                if sym not in alphabet:
                    raise MachineError(f"symbol {sym!r} outside alphabet")
            for m in move:
                if m not in MOVES:
                    raise MachineError(f"bad move {m!r}")
            table[(state, read)] = (nxt, write, move)
        object.__setattr__(self, "final_states", frozenset(self.final_states))
        object.__setattr__(self, "transitions", MappingProxyType(table))

    def __eq__(self, other):
        if not isinstance(other, MachineDescription):
            return NotImplemented
        return (
            self.states == other.states
            and self.alphabet == other.alphabet
            and self.blank == other.blank
            and self.start_state == other.start_state
            and self.final_states == other.final_states
            and self.tapes == other.tapes
            and dict(self.transitions) == dict(other.transitions)
        )

    def __hash__(self):
        return hash((self.states, self.alphabet, self.blank, self.start_state, self.tapes, len(self.transitions)))

    @property
    def output_tape(self) -> int:
        return self.tapes - 1

    def to_text(self) -> str:
        """Render in the line-oriented source format accepted by :func:`parse_machine`."""
        lines = [
            f"tapes: {self.tapes}",
            "alphabet: " + " ".join(self.alphabet),
            f"blank: {self.blank}",
            "states: " + " ".join(self.states),
            f"start: {self.start_state}",
            "final: " + " ".join(s for s in self.states if s in self.final_states),
        ]
        for (state, read), (nxt, write, move) in self.transitions.items():
            lines.append(f"{state} ({','.join(read)}) -> {nxt} ({','.join(write)}) ({','.join(move)})")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Configuration:
    state: str
    tapes: tuple  # one {cell: symbol} mapping per tape, blanks omitted
    heads: tuple
    step_count: int = 0

    def read(self, blank: str) -> tuple:
        return tuple(tape.get(h, blank) for tape, h in zip(self.tapes, self.heads))

    def word(self, tape: int, blank: str) -> str:
        cells = {i: s for i, s in self.tapes[tape].items() if s != blank}
        if not cells:
            return ""
        lo, hi = min(cells), max(cells)
        return "".join(cells.get(i, blank) for i in range(lo, hi + 1))


@dataclass(frozen=True)
class Continue:
    config: Configuration


@dataclass(frozen=True)
class Halted:
    """Terminal outcome. ``output`` and ``steps`` are only set by :func:`run`."""

    config: Configuration
    output: Optional[str] = None
    steps: Optional[int] = None


@dataclass(frozen=True)
class FuelExhausted:
    config: Configuration


StepOutcome = Union[Continue, Halted]
RunResult = Union[Halted, FuelExhausted]


# -- parsing ---------------------------------------------------------------

_HEADER = re.compile(r"^(tapes|alphabet|blank|start|final|states)\s*:(.*)$")
_TRANSITION = re.compile(
    r"^(?P<state>[^\s()]+)\s*\((?P<read>[^)]*)\)\s*->\s*(?P<next>[^\s()]+)"
    r"\s*\((?P<write>[^)]*)\)\s*\((?P<move>[^)]*)\)\s*$"
)


def _split_tuple(body: str) -> tuple:
    return tuple(part.strip() for part in body.split(","))


def parse_machine(text: str) -> MachineDescription:
    """Parse the line-oriented machine source format (see ``docs/machine-format.md``)."""
    headers: dict = {}
    transitions: dict = {}
    order: list = []
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        line = line.strip()
        m = _HEADER.match(line)
        if m:
            key, value = m.group(1), m.group(2).split()
            if key in headers:
                raise MachineSyntaxError(f"duplicate header {key!r}", lineno, col)
            headers[key] = (value, lineno, col)
            continue
        m = _TRANSITION.match(line)
        if not m:
            raise MachineSyntaxError("expected a header or a transition", lineno, col)
        rows.append((m, lineno, col))

    def header(key, default=None):
        if key not in headers:
            if default is None:
                raise MachineSyntaxError(f"missing header {key!r}", 1, 1)
            return default
        return headers[key]

    tapes_v, ln, c = header("tapes", ([str(1)], 0, 0))
    if len(tapes_v) != 1 or not tapes_v[0].isdigit() or int(tapes_v[0]) < 1:
        raise MachineSyntaxError("tapes must be a positive integer", ln, c)
    tapes = int(tapes_v[0])
    alphabet, ln, c = header("alphabet")
    for sym in alphabet:
        if len(sym) != 1 or sym in "(),#":
            raise MachineSyntaxError(f"bad alphabet symbol {sym!r}", ln, c)
    blank_v, ln, c = header("blank")
    if len(blank_v) != 1:
        raise MachineSyntaxError("blank must be one symbol", ln, c)
    blank = blank_v[0]
    if blank not in alphabet:
        raise MachineSyntaxError(f"blank {blank!r} not in alphabet", ln, c)
    start_v, ln, c = header("start")
    if len(start_v) != 1:
        raise MachineSyntaxError("start must name one state", ln, c)
    final_v, _, _ = header("final", ([], 0, 0))
    declared = headers.get("states")

    def note(state):
        if state not in order:
            order.append(state)

    note(start_v[0])
    for s in final_v:
        note(s)
    for m, lineno, col in rows:
        state, nxt = m.group("state"), m.group("next")
        read = _split_tuple(m.group("read"))
        write = _split_tuple(m.group("write"))
        move = _split_tuple(m.group("move"))
        for part, name in ((read, "read"), (write, "write"), (move, "move")):
            if len(part) != tapes:
                raise MachineSyntaxError(f"{name} tuple needs {tapes} entries", lineno, col)
        for sym in read + write:
            if sym not in alphabet:
                raise MachineSyntaxError(f"symbol {sym!r} outside alphabet", lineno, col)
        for mv in move:
            if mv not in MOVES:
                raise MachineSyntaxError(f"move must be L, R or S, got {mv!r}", lineno, col)
        key = (state, read)
        if key in transitions:
            raise MachineSyntaxError(f"duplicate transition for ({state}, {','.join(read)})", lineno, col)
        transitions[key] = (nxt, write, move)
        note(state)
        note(nxt)

    if declared is not None:
        names, ln, c = declared
        if len(set(names)) != len(names):
            raise MachineSyntaxError("duplicate state in states header", ln, c)
        for s in order:
            if s not in names:
                raise MachineSyntaxError(f"undefined state {s!r}", ln, c)
        states = tuple(names)
    else:
        states = tuple(order)

    return MachineDescription(
        states=states,
        alphabet=tuple(alphabet),
        blank=blank,
        start_state=start_v[0],
        final_states=frozenset(final_v),
        transitions=transitions,
        tapes=tapes,
    )


# -- reference semantics ----------------------------------------------------

def initial_config(machine: MachineDescription, word: str = "") -> Configuration:
    check_word(machine, word)
    tapes = [dict() for _ in range(machine.tapes)]
    tapes[0] = {i: s for i, s in enumerate(word) if s != machine.blank}
    return Configuration(machine.start_state, tuple(tapes), (0,) * machine.tapes, 0)


def check_word(machine: MachineDescription, word: str) -> None:
    alphabet = set(machine.alphabet)
    for i, sym in enumerate(word):
        if sym not in alphabet:
            raise MachineError(f"input symbol {sym!r} at position {i} outside alphabet")


def is_halted(machine: MachineDescription, config: Configuration) -> bool:
    if config.state in machine.final_states:
        return True
    return (config.state, config.read(machine.blank)) not in machine.transitions


def step(machine: MachineDescription, config: Configuration) -> StepOutcome:
    if config.state in machine.final_states:
        return Halted(config)
    action = machine.transitions.get((config.state, config.read(machine.blank)))
    if action is None:
        return Halted(config)
    nxt, write, move = action
    tapes = []
    heads = []
    for tape, head, sym, mv in zip(config.tapes, config.heads, write, move):
        tape = dict(tape)
        if sym == machine.blank:
            tape.pop(head, None)
        else:
            tape[head] = sym
        tapes.append(tape)
        heads.append(head + MOVES[mv])
    return Continue(Configuration(nxt, tuple(tapes), tuple(heads), config.step_count + 1))


# -- compiled execution -----------------------------------------------------

class CompiledMachine:
    """Integer lookup tables for the kernel stepper."""

    def __init__(self, machine: MachineDescription):
        self.machine = machine
        self.state_index = {s: i for i, s in enumerate(machine.states)}
        self.symbol_index = {s: i for i, s in enumerate(machine.alphabet)}
        self.symbols = np.array(machine.alphabet)
        self.blank = self.symbol_index[machine.blank]
        n_sym = len(machine.alphabet)
        T = machine.tapes
        stride = n_sym**T
        size = len(machine.states) * stride
        self.next_state = np.full(size, -1, dtype=np.int64)
        self.writes = np.zeros(size * T, dtype=np.int64)
        self.moves = np.zeros(size * T, dtype=np.int64)
        self.final_mask = np.zeros(len(machine.states), dtype=np.uint8)
        for s in machine.final_states:
            self.final_mask[self.state_index[s]] = 1
        for (state, read), (nxt, write, move) in machine.transitions.items():
            idx = self.state_index[state] * stride
            mul = 1
            for sym in read:
                idx += self.symbol_index[sym] * mul
                mul *= n_sym
            self.next_state[idx] = self.state_index[nxt]
            for t in range(T):
                self.writes[idx * T + t] = self.symbol_index[write[t]]
                self.moves[idx * T + t] = MOVES[move[t]]


class Execution:
    """A live, resumable run of a compiled machine on dense tape buffers."""

    def __init__(self, compiled: CompiledMachine, config: Configuration, capacity: int = 64):
        self.compiled = compiled
        m = compiled.machine
        cells = [i for tape in config.tapes for i in tape] + list(config.heads)
        lo, hi = min(cells), max(cells)
        cap = max(capacity, 2 * (hi - lo + 1) + 8)
        self.origin = cap // 2 - (lo + hi) // 2
        self.tapes = np.full((m.tapes, cap), compiled.blank, dtype=np.int64)
        for t, tape in enumerate(config.tapes):
            for i, sym in tape.items():
                self.tapes[t, i + self.origin] = compiled.symbol_index[sym]
        self.heads = np.array([h + self.origin for h in config.heads], dtype=np.int64)
        self.state = compiled.state_index[config.state]
        self.steps = config.step_count
        self._ensure_margin()

    @classmethod
    def start(cls, machine, word: str = "") -> "Execution":
        compiled = machine if isinstance(machine, CompiledMachine) else CompiledMachine(machine)
        return cls(compiled, initial_config(compiled.machine, word))

    def _ensure_margin(self):
        cap = self.tapes.shape[1]
        if self.heads.min() > 0 and self.heads.max() < cap - 1:
            return
        grown = np.full((self.tapes.shape[0], 2 * cap), self.compiled.blank, dtype=np.int64)
        shift = cap // 2
        grown[:, shift : shift + cap] = self.tapes
        self.tapes = grown
        self.heads += shift
        self.origin += shift

    def advance(self, limit: int, watch: int = -1) -> tuple:
        """Run up to ``limit`` steps; returns ``(steps_taken, status)``.

        Stops early on halting or, when ``watch`` names a tape, right after a
        step that changed a symbol on that tape.
        """
        c = self.compiled
        done = 0
        while True:
            steps, state, status = _kernels.execute(
                c.next_state, c.writes, c.moves, c.final_mask,
                self.tapes, self.heads, self.state, len(c.symbols), limit - done, watch,
            )
            self.state = int(state)
            done += int(steps)
            self.steps += int(steps)
            self._ensure_margin()
            if status != _kernels.EDGE:
                return done, status

    @property
    def halted(self) -> bool:
        """Peek: would the next step halt?"""
        return self.advance(0)[1] == _kernels.HALTED

    @property
    def in_final(self) -> bool:
        return bool(self.compiled.final_mask[self.state])

    def word(self, tape: Optional[int] = None) -> str:
        if tape is None:
            tape = self.compiled.machine.output_tape
        row = self.tapes[tape]
        nz = np.flatnonzero(row != self.compiled.blank)
        if nz.size == 0:
            return ""
        return "".join(self.compiled.symbols[row[nz[0] : nz[-1] + 1]].tolist())

    def config(self) -> Configuration:
        c = self.compiled
        tapes = []
        for row in self.tapes:
            nz = np.flatnonzero(row != c.blank)
            tapes.append({int(i) - self.origin: str(c.symbols[row[i]]) for i in nz})
        heads = tuple(int(h) - self.origin for h in self.heads)
        return Configuration(c.machine.states[self.state], tuple(tapes), heads, self.steps)


def run_from(machine: MachineDescription, config: Configuration, fuel: int) -> RunResult:
    """Continue ``config`` for at most ``fuel`` more steps."""
    if fuel < 0:
        raise MachineError("fuel must be non-negative")
    ex = Execution(CompiledMachine(machine), config)
    _, status = ex.advance(fuel)
    final = ex.config()
    if status == _kernels.HALTED:
        return Halted(final, ex.word(), ex.steps)
    return FuelExhausted(final)


def run(machine: MachineDescription, word: str, fuel: int) -> RunResult:
    """Run on ``word`` for at most ``fuel`` steps.

    ``Halted.output`` is the output-tape span from leftmost to rightmost
    non-blank cell; ``FuelExhausted.config`` can be handed to :func:`run_from`.
    """
    return run_from(machine, initial_config(machine, word), fuel)


def trace(machine: MachineDescription, word: str, steps: int) -> list:
    """Reference trace via :func:`step`: up to ``steps + 1`` configurations."""
    config = initial_config(machine, word)
    out = [config]
    for _ in range(steps):
        outcome = step(machine, config)
        if isinstance(outcome, Halted):
            break
        config = outcome.config
        out.append(config)
    return out
