"""Machines as data: an injective code word over ``0-9`` and ``|``.

Every field is a non-negative integer written as ``<ndigits>|<digits>``, so
a code word is a flat, self-delimiting integer sequence::

    tapes, n_symbols, codepoint*, blank,
    n_states, (name_len, codepoint*)*, start, n_final, final*,
    n_transitions, (state, read*, next, write*, move*)*

Symbols and states are referenced by index into the declared order; moves
use 0=L, 1=R, 2=S. Names are kept so decoding reproduces the description
exactly, not just up to renaming.
"""

from __future__ import annotations

from .machine import MachineDescription, MachineError

CODE_ALPHABET = "0123456789|"
_MOVE_CODE = {"L": 0, "R": 1, "S": 2}
_MOVE_NAME = {v: k for k, v in _MOVE_CODE.items()}


class CodeError(MachineError):
    """Malformed code word."""


def _field(n: int) -> str:
    digits = str(n)
    return f"{len(digits)}|{digits}"


def _text(s: str) -> list:
    return [len(s)] + [ord(ch) for ch in s]


def encode_machine(machine: MachineDescription) -> str:
    sym = {s: i for i, s in enumerate(machine.alphabet)}
    st = {s: i for i, s in enumerate(machine.states)}
    ints = [machine.tapes, len(machine.alphabet)]
    ints += [ord(s) for s in machine.alphabet]
    ints.append(sym[machine.blank])
    ints.append(len(machine.states))
    for name in machine.states:
        ints += _text(name)
    ints.append(st[machine.start_state])
    finals = [s for s in machine.states if s in machine.final_states]
    ints.append(len(finals))
    ints += [st[s] for s in finals]
    ints.append(len(machine.transitions))
    for (state, read), (nxt, write, move) in machine.transitions.items():
        ints.append(st[state])
        ints += [sym[s] for s in read]
        ints.append(st[nxt])
        ints += [sym[s] for s in write]
        ints += [_MOVE_CODE[m] for m in move]
    return "".join(_field(n) for n in ints)


def _read_ints(code: str) -> list:
    if not code:
        raise CodeError("empty code word")
    out = []
    pos = 0
    while pos < len(code):
        bar = code.find("|", pos)
        if bar <= pos or not code[pos:bar].isdigit():
            raise CodeError(f"bad length prefix at offset {pos}")
        width = int(code[pos:bar])
        digits = code[bar + 1 : bar + 1 + width]
        if width == 0 or len(digits) != width or not digits.isdigit():
            raise CodeError(f"truncated field at offset {pos}")
        if width > 1 and digits[0] == "0":
            raise CodeError(f"non-canonical field at offset {pos}")
        out.append(int(digits))
        pos = bar + 1 + width
    return out


def decode_machine(code: str) -> MachineDescription:
    ints = _read_ints(code)
    it = iter(ints)

    def take():
        try:
            return next(it)
        except StopIteration:
            raise CodeError("code word ends early") from None

    def pick(seq, i, what):
        if i >= len(seq):
            raise CodeError(f"{what} index {i} out of range")
        return seq[i]

    try:
        tapes = take()
        alphabet = tuple(chr(take()) for _ in range(take()))
        blank = pick(alphabet, take(), "blank")
        states = []
        for _ in range(take()):
            states.append("".join(chr(take()) for _ in range(take())))
        states = tuple(states)
        start = pick(states, take(), "start state")
        finals = frozenset(pick(states, take(), "final state") for _ in range(take()))
        transitions = {}
        for _ in range(take()):
            state = pick(states, take(), "state")
            read = tuple(pick(alphabet, take(), "symbol") for _ in range(tapes))
            nxt = pick(states, take(), "state")
            write = tuple(pick(alphabet, take(), "symbol") for _ in range(tapes))
            move = tuple(pick(_MOVE_NAME, take(), "move") for _ in range(tapes))
            if (state, read) in transitions:
                raise CodeError("duplicate transition")
            transitions[(state, read)] = (nxt, write, move)
    except (ValueError, OverflowError) as exc:
        if isinstance(exc, CodeError):
            raise
        raise CodeError(str(exc)) from exc
    if next(it, None) is not None:
        raise CodeError("trailing fields after transitions")
    try:
        return MachineDescription(
            states=states,
            alphabet=alphabet,
            blank=blank,
            start_state=start,
            final_states=finals,
            transitions=transitions,
            tapes=tapes,
        )
    except MachineError as exc:
        raise CodeError(str(exc)) from exc
