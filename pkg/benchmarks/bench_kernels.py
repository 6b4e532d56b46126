"""Compare the compiled and pure-Python kernels on the two hot paths.

    python3 benchmarks/bench_kernels.py [--steps N] [--generations G] [--repeat R]

The TM workload is a never-halting binary counter, so its tape grows only
logarithmically and the timing is dominated by stepping. Backends are swapped in place on ``indevo._kernels``, so the measured code
path is the public one (``run`` and ``run_anytime``).
"""

import argparse
import contextlib
import timeit

from indevo import _kernels
from indevo._kernels import _pykernel
from indevo.engine import EngineConfig, run_anytime
from indevo.landscapes import OneMax, static
from indevo.tm import parse_machine, run

COUNTER = """tapes: 1
alphabet: 0 1 _
blank: _
start: inc
inc (1) -> inc (0) (L)
inc (0) -> back (1) (R)
inc (_) -> back (1) (R)
back (0) -> back (0) (R)
back (1) -> back (1) (R)
back (_) -> inc (_) (L)
"""

@contextlib.contextmanager
def backend(module):
    saved = _kernels.execute, _kernels.apply_events
    _kernels.execute, _kernels.apply_events = module.execute, module.apply_events
    try:
        yield
    finally:
        _kernels.execute, _kernels.apply_events = saved


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=2_000_000)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    machine = parse_machine(COUNTER)
    cfg = EngineConfig(population=200)
    env = static(OneMax(64))
    workloads = {
        f"tm run, {args.steps} steps": lambda: run(machine, "", args.steps),
        f"engine, {args.generations} generations": lambda: run_anytime(cfg, env, args.generations, 1, seed=0),
    }
    backends = {"python": _pykernel}
    if _kernels.BACKEND_NAME == "cython":
        backends["cython"] = _kernels._ckernel
    else:
        print("compiled kernel not built; timing the fallback only")

    print(f"{'workload':32s} {'backend':8s} {'best of ' + str(args.repeat):>12s}")
    for name, fn in workloads.items():
        times = {}
        for label, module in backends.items():
            with backend(module):
                times[label] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            print(f"{name:32s} {label:8s} {times[label]:11.4f}s")
        if len(times) == 2:
            print(f"{'':32s} {'speedup':8s} {times['python'] / times['cython']:11.1f}x")


if __name__ == "__main__":
    main()
