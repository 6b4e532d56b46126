"""Command-line front end.

Exit codes: 0 success, 1 usage/parse/config error, 2 budget exhausted
without a result (fuel ran out, or the observation stayed provisional).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, build_environment, parse_config, read_raw, with_override
from .engine import METRIC_COLUMNS, EngineError, rng_streams, run_anytime
from .inductive import InductiveError, Provisional, SosMonitor, run_observed
from .tm import Halted, MachineError, encode_machine, enumerate_family, parse_machine, run
from .tm.families import ROW_CAP, family_size

EXIT_OK, EXIT_ERROR, EXIT_NO_RESULT = 0, 1, 2
BUILTIN_PREFIX = "builtin:"


class CliError(Exception):
    pass


def read_machine(spec: str):
    """Parse a machine file; ``builtin:<name>`` loads one of the bundled machines."""
    if spec.startswith(BUILTIN_PREFIX):
        name = spec[len(BUILTIN_PREFIX):]
        res = resources.files("indevo") / "machines" / f"{name}.tm"
        if not res.is_file():
            raise CliError(f"no bundled machine named {name!r}")
        text = res.read_text(encoding="utf-8")
    else:
        try:
            text = Path(spec).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {spec}: {exc.strerror or exc}") from exc
    try:
        return parse_machine(text)
    except MachineError as exc:
        raise CliError(f"{spec}: {exc}") from exc


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- tm ----------------------------------------------------------------------

def cmd_tm_run(args) -> int:
    machine = read_machine(args.machine)
    try:
        result = run(machine, args.input, args.fuel)
    except MachineError as exc:
        raise CliError(str(exc)) from exc
    if isinstance(result, Halted):
        print(f"status: halted\noutput: {result.output}\nsteps: {result.steps}")
        return EXIT_OK
    print(f"status: fuel-exhausted\noutput: {result.config.word(machine.output_tape, machine.blank)}\nsteps: {args.fuel}")
    return EXIT_NO_RESULT


def enumerate_rows(n_states: int, n_symbols: int, fuel: int):
    for m in enumerate_family(n_states, n_symbols):
        res = run(m, "", fuel)
        halted = isinstance(res, Halted)
        yield encode_machine(m), int(halted), res.steps if halted else fuel


def cmd_tm_enumerate(args) -> int:
    size = family_size(args.states, args.symbols) if args.states >= 1 and args.symbols >= 1 else 0
    if size > ROW_CAP:
        raise CliError(f"family of {args.states} states and {args.symbols} symbols has {size} machines (cap {ROW_CAP})")
    try:
        rows = list(enumerate_rows(args.states, args.symbols, args.fuel))
    except MachineError as exc:
        raise CliError(str(exc)) from exc
    _emit(_write_csv(rows, ("code", "halted", "steps")), args.out)
    return EXIT_OK


# -- inductive ------------------------------------------------------------------

def cmd_monitor(args) -> int:
    machine = read_machine(args.machine)
    if not 1 <= args.window <= args.fuel:
        raise CliError(f"window ({args.window}) must lie in 1..fuel ({args.fuel})")
    try:
        obs = run_observed(SosMonitor(machine, args.input), "", args.fuel, args.window)
    except (MachineError, InductiveError) as exc:
        raise CliError(str(exc)) from exc
    _emit(json.dumps({"tag": obs.tag, "word": obs.word, "steps": obs.steps}, sort_keys=True) + "\n", args.out)
    return EXIT_NO_RESULT if isinstance(obs, Provisional) else EXIT_OK


# -- evolve ------------------------------------------------------------------

def _load(args) -> tuple:
    try:
        raw = read_raw(args.config)
    except OSError as exc:
        raise CliError(f"cannot read {args.config}: {exc.strerror or exc}") from exc
    except ConfigError as exc:
        raise CliError(str(exc)) from exc
    if args.seed is not None and isinstance(raw, dict):
        raw = dict(raw, seed=args.seed)
    try:
        cfg = parse_config(raw)
    except ConfigError as exc:
        raise CliError("invalid config:\n" + "\n".join(f"  {p}" for p in exc.problems)) from exc
    return raw or {}, cfg


def _format(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def execute_experiment(cfg: ExperimentConfig) -> tuple:
    """Run one config; returns ``(metrics_csv, report_dict)``."""
    streams = rng_streams(cfg.seed)
    env = build_environment(cfg, streams["env"])
    report = run_anytime(cfg.engine, env, cfg.budget, cfg.window, streams=streams)
    metrics = _write_csv(([_format(v) for v in row] for row in report.metrics), METRIC_COLUMNS)
    record = report.to_record()
    record["config"] = cfg.to_dict()
    record["version"] = __version__
    record["recovery_times"] = report.recovery_times() if report.switches else []
    return metrics, record


def cmd_evolve_run(args) -> int:
    _, cfg = _load(args)
    out = Path(args.out) if args.out else Path(".")
    try:
        metrics, record = execute_experiment(cfg)
    except (ConfigError, EngineError) as exc:
        raise CliError(str(exc)) from exc
    out.mkdir(parents=True, exist_ok=True)
    (out / cfg.metrics_path).write_text(metrics, encoding="utf-8")
    (out / cfg.report_path).write_text(_dump_json(record), encoding="utf-8")
    f = record["final"]
    print(f"final fitness {f['fitness']} at generation {f['generation']} (stabilized: {str(record['stabilized']).lower()})")
    return EXIT_OK


def replicate_seed(seed: int, replicate: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(replicate)]).generate_state(2, np.uint32).view(np.uint64)[0] >> 1)


def sweep_points(raw: dict, cfg: ExperimentConfig, replicates: int) -> list:
    grid = (cfg.sweep or {}).get("grid", {})
    keys = sorted(grid)
    points = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        for r in range(replicates):
            point = {k: v for k, v in zip(keys, combo)}
            variant = dict(raw)
            variant.pop("sweep", None)
            for k, v in point.items():
                variant = with_override(variant, k, v)
            variant["seed"] = replicate_seed(cfg.seed, r)
            points.append((point, r, variant))
    return points


def _sweep_job(variant: dict) -> tuple:
    cfg = parse_config(variant)
    return execute_experiment(cfg)


def cmd_evolve_sweep(args) -> int:
    raw, cfg = _load(args)
    if args.replicates < 1 or args.jobs < 1:
        raise CliError("--replicates and --jobs must be >= 1")
    try:
        points = sweep_points(raw, cfg, args.replicates)
        for _, _, variant in points:
            parse_config(variant)
    except ConfigError as exc:
        raise CliError("invalid sweep point:\n" + "\n".join(f"  {p}" for p in exc.problems)) from exc
    variants = [v for _, _, v in points]
    if args.jobs == 1:
        results = [_sweep_job(v) for v in variants]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_job, variants))
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    keys = sorted((cfg.sweep or {}).get("grid", {}))
    summary = []
    for k, ((point, r, variant), (metrics, record)) in enumerate(zip(points, results)):
        run_dir = out / f"run_{k:04d}"
        run_dir.mkdir(exist_ok=True)
        (run_dir / cfg.metrics_path).write_text(metrics, encoding="utf-8")
        (run_dir / cfg.report_path).write_text(_dump_json(record), encoding="utf-8")
        f = record["final"]
        summary.append(
            [f"run_{k:04d}", r, variant["seed"]]
            + [point[key] if isinstance(point[key], str) else json.dumps(point[key]) for key in keys]
            + [_format(f["fitness"]), f["generation"], str(record["stabilized"]).lower(), sum(record["recovery_times"])]
        )
    header = ["run", "replicate", "seed"] + keys + ["final_fitness", "final_generation", "stabilized", "total_recovery"]
    (out / "summary.csv").write_text(_write_csv(summary, header), encoding="utf-8")
    print(f"{len(summary)} runs written to {out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indevo", description="Inductive machines and stress-driven evolution experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = p.add_subparsers(dest="group", required=True)

    tm = groups.add_parser("tm", help="Turing machines").add_subparsers(dest="command", required=True)
    r = tm.add_parser("run", help="run a machine file on an input word")
    r.add_argument("machine", help="machine file, or builtin:<name>")
    r.add_argument("--input", default="")
    r.add_argument("--fuel", type=int, default=100_000)
    r.set_defaults(func=cmd_tm_run)
    e = tm.add_parser("enumerate", help="run every machine of a bounded family on blank input")
    e.add_argument("--states", type=int, default=2)
    e.add_argument("--symbols", type=int, default=2)
    e.add_argument("--fuel", type=int, default=200)
    e.add_argument("--out", help="CSV path (default stdout)")
    e.set_defaults(func=cmd_tm_enumerate)

    ind = groups.add_parser("inductive", help="inductive observation").add_subparsers(dest="command", required=True)
    m = ind.add_parser("monitor", help="halting monitor of a target machine")
    m.add_argument("machine", help="target machine file, or builtin:<name>")
    m.add_argument("--input", default="", help="target input word")
    m.add_argument("--fuel", type=int, default=1_000_000)
    m.add_argument("--window", type=int, default=1_000)
    m.add_argument("--out", help="JSON path (default stdout)")
    m.set_defaults(func=cmd_monitor)

    ev = groups.add_parser("evolve", help="evolutionary experiments").add_subparsers(dest="command", required=True)
    er = ev.add_parser("run", help="run one experiment config")
    er.add_argument("--config", required=True)
    er.add_argument("--seed", type=int)
    er.add_argument("--out", help="output directory (default .)")
    er.set_defaults(func=cmd_evolve_run)
    es = ev.add_parser("sweep", help="grid sweep with replicates")
    es.add_argument("--config", required=True)
    es.add_argument("--seed", type=int)
    es.add_argument("--replicates", type=int, default=1)
    es.add_argument("--jobs", type=int, default=1)
    es.add_argument("--out", help="output directory (default .)")
    es.set_defaults(func=cmd_evolve_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
