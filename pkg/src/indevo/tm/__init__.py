from .codec import CODE_ALPHABET, CodeError, decode_machine, encode_machine
from .families import enumerate_family, family_size, random_machine, random_word
from .machine import (
    CompiledMachine,
    Configuration,
    Continue,
    Execution,
    FuelExhausted,
    Halted,
    MachineDescription,
    MachineError,
    MachineSyntaxError,
    initial_config,
    is_halted,
    parse_machine,
    run,
    run_from,
    step,
    trace,
)

__all__ = [
    "CODE_ALPHABET",
    "CodeError",
    "CompiledMachine",
    "Configuration",
    "Continue",
    "Execution",
    "FuelExhausted",
    "Halted",
    "MachineDescription",
    "MachineError",
    "MachineSyntaxError",
    "decode_machine",
    "encode_machine",
    "enumerate_family",
    "family_size",
    "initial_config",
    "is_halted",
    "parse_machine",
    "random_machine",
    "random_word",
    "run",
    "run_from",
    "step",
    "trace",
]
