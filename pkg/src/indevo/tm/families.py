"""Bounded machine families: exhaustive enumeration and seeded sampling."""

from __future__ import annotations

import itertools
from typing import Iterator

import numpy as np

from .machine import MachineDescription, MachineError

ROW_CAP = 2_000_000


def family_size(n_states: int, n_symbols: int) -> int:
    """Number of single-tape tables with ``L``/``R`` moves and optional entries."""
    per_entry = 2 * n_symbols * n_states + 1
    return per_entry ** (n_states * n_symbols)


def family_states(n_states: int) -> tuple:
    return tuple(f"q{i}" for i in range(n_states))


def enumerate_family(n_states: int, n_symbols: int, cap: int = ROW_CAP) -> Iterator[MachineDescription]:
    """Every single-tape machine with ``n_states`` states over ``0..n_symbols-1``.

    Blank is ``0``, the start state is ``q0``, ``F`` is empty, and a missing
    entry halts. Entries are ordered (state, symbol) and each entry cycles
    through "undefined" first, then (write, move, next) lexicographically.
    """
    if n_states < 1 or not 1 <= n_symbols <= 10:
        raise MachineError("need n_states >= 1 and 1 <= n_symbols <= 10")
    size = family_size(n_states, n_symbols)
    if size > cap:
        raise MachineError(f"family has {size} machines, above the cap of {cap}")
    states = family_states(n_states)
    alphabet = tuple(str(i) for i in range(n_symbols))
    keys = [(q, (a,)) for q in states for a in alphabet]
    actions = [None] + [
        (nxt, (w,), (mv,)) for w in alphabet for mv in ("L", "R") for nxt in states
    ]
    for choice in itertools.product(actions, repeat=len(keys)):
        table = {k: a for k, a in zip(keys, choice) if a is not None}
        yield MachineDescription(
            states=states,
            alphabet=alphabet,
            blank="0",
            start_state="q0",
            final_states=frozenset(),
            transitions=table,
            tapes=1,
        )


def random_machine(
    rng: np.random.Generator,
    n_states: int = 4,
    n_symbols: int = 2,
    tapes: int = 1,
    p_missing: float = 0.1,
    n_final: int = 1,
    stay: bool = True,
    read_only_input: bool = False,
) -> MachineDescription:
    """Sample a machine; ``n_final`` of its states form ``F``.

    With ``read_only_input`` every transition writes back the symbol it read
    on tape 0 (needs ``tapes >= 2`` so the output lives elsewhere).
    """
    if read_only_input and tapes < 2:
        raise MachineError("a read-only input tape needs at least two tapes")
    states = family_states(n_states)
    alphabet = tuple("_" if i == 0 else str(i - 1) for i in range(n_symbols + 1))
    moves = ("L", "R", "S") if stay else ("L", "R")
    finals = frozenset(states[n_states - n_final :]) if n_final else frozenset()
    table = {}
    for q in states:
        if q in finals:
            continue
        for read in itertools.product(alphabet, repeat=tapes):
            if rng.random() < p_missing:
                continue
            nxt = states[rng.integers(n_states)]
            write = tuple(alphabet[i] for i in rng.integers(len(alphabet), size=tapes))
            if read_only_input:
                write = (read[0],) + write[1:]
            move = tuple(moves[i] for i in rng.integers(len(moves), size=tapes))
            table[(q, read)] = (nxt, write, move)
    return MachineDescription(
        states=states,
        alphabet=alphabet,
        blank="_",
        start_state=states[0],
        final_states=finals,
        transitions=table,
        tapes=tapes,
    )


def random_word(rng: np.random.Generator, machine: MachineDescription, max_len: int = 8) -> str:
    symbols = [s for s in machine.alphabet if s != machine.blank]
    n = int(rng.integers(max_len + 1))
    return "".join(symbols[i] for i in rng.integers(len(symbols), size=n))
