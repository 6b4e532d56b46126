"""Experiment configuration: loading, validation with key paths, and environment building.

A config is a YAML or JSON mapping::

    seed: 7
    budget: 500
    window: 100
    engine: {mode: ina, population: 200, ...}      # EngineConfig fields
    operators: {ner_threshold: 0.2, ...}           # OperatorConfig fields
    environment:
      benchmark: oscillating                       # onemax | oscillating | ktrap | neutral
      params: {n: 64, period: 200, distance: 16}
      lesion_rate: 0.05
    output: {metrics: metrics.csv, report: report.json}
    sweep: {grid: {engine.mode: [ina, ima]}}       # optional, used by ``evolve sweep``

Unknown keys and out-of-range values are reported together, each prefixed
with its dotted key path.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .engine import DEFAULT_WINDOW, EngineConfig, OperatorConfig
from .landscapes import Environment, KTrap, LandscapeError, Neutral, OneMax, oscillating, static


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


BENCHMARK_PARAMS = {
    "onemax": {"n": 64},
    "neutral": {"n": 64},
    "ktrap": {"n": 32, "trap_loci": [0, 1, 2], "bonus": 1.0, "deception": 0.0},
    "oscillating": {"n": 64, "period": 200, "distance": None},
}
TOP_KEYS = ("seed", "budget", "window", "engine", "operators", "environment", "output", "sweep")
ENV_KEYS = ("benchmark", "params", "lesion_rate")
OUTPUT_KEYS = ("metrics", "report")


@dataclass(frozen=True)
class EnvironmentSpec:
    benchmark: str = "onemax"
    params: dict = field(default_factory=dict)
    lesion_rate: float = 0.05

    def build(self, budget: int, rng: np.random.Generator) -> Environment:
        p = {**BENCHMARK_PARAMS[self.benchmark], **self.params}
        if self.benchmark == "onemax":
            return static(OneMax(p["n"]), lesion_rate=self.lesion_rate)
        if self.benchmark == "neutral":
            return static(Neutral(p["n"]), lesion_rate=self.lesion_rate)
        if self.benchmark == "ktrap":
            land = KTrap(p["n"], tuple(p["trap_loci"]), p["bonus"], p["deception"])
            return static(land, lesion_rate=self.lesion_rate)
        return oscillating(p["n"], p["period"], budget, rng, p["distance"], self.lesion_rate)

    def to_dict(self) -> dict:
        return {"benchmark": self.benchmark, "params": {**BENCHMARK_PARAMS[self.benchmark], **self.params},
                "lesion_rate": self.lesion_rate}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    budget: int = 500
    window: int = DEFAULT_WINDOW
    engine: EngineConfig = field(default_factory=EngineConfig)
    environment: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    metrics_path: str = "metrics.csv"
    report_path: str = "report.json"
    sweep: Optional[dict] = None

    def to_dict(self) -> dict:
        eng = self.engine.to_dict()
        ops = eng.pop("operators")
        out = {
            "seed": self.seed,
            "budget": self.budget,
            "window": self.window,
            "engine": eng,
            "operators": ops,
            "environment": self.environment.to_dict(),
            "output": {"metrics": self.metrics_path, "report": self.report_path},
        }
        if self.sweep is not None:
            out["sweep"] = self.sweep
        return out


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_section(raw, path, allowed, problems) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        problems.append(f"{path}: expected a mapping")
        return {}
    for k in raw:
        if k not in allowed:
            problems.append(f"{path}.{k}: unknown key" if path else f"{k}: unknown key")
    return {k: v for k, v in raw.items() if k in allowed}


def _typed_fields(cls, raw: dict, path: str, problems: list) -> dict:
    """Type-check ``raw`` against the dataclass defaults of ``cls``."""
    out = {}
    for f in fields(cls):
        if f.name not in raw or f.name == "operators":
            continue
        v = raw[f.name]
        default = getattr(cls(), f.name)
        where = f"{path}.{f.name}"
        if f.name == "short_patch":
            if not isinstance(v, dict) or not all(_is_int(_as_int(k)) and _is_num(p) for k, p in v.items()):
                problems.append(f"{where}: expected a mapping of locus to probability")
                continue
            v = tuple(sorted((_as_int(k), float(p)) for k, p in v.items()))
        elif isinstance(default, bool):
            if not isinstance(v, bool):
                problems.append(f"{where}: expected true or false")
                continue
        elif _is_int(default):
            if not _is_int(v):
                problems.append(f"{where}: expected an integer")
                continue
        elif isinstance(default, float) or default is None:
            if v is not None and not _is_num(v):
                problems.append(f"{where}: expected a number")
                continue
            if default is None and v is None:
                pass
            elif default is None or isinstance(default, float):
                v = float(v)
        elif isinstance(default, str):
            if not isinstance(v, str):
                problems.append(f"{where}: expected a string")
                continue
        out[f.name] = v
    return out


def _as_int(k):
    try:
        return int(k)
    except (TypeError, ValueError):
        return None


def parse_config(raw: Any) -> ExperimentConfig:
    """Validate a loaded mapping; every problem is reported with its key path."""
    problems: list = []
    top = _check_section(raw, "", TOP_KEYS, problems)
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a mapping"])

    scalars = {}
    for key, lo in (("seed", 0), ("budget", 0), ("window", 1)):
        if key in top:
            v = top[key]
            if not _is_int(v) or v < lo or v >= 2**64:
                problems.append(f"{key}: expected an integer >= {lo}")
            else:
                scalars[key] = v

    eng_raw = _check_section(top.get("engine"), "engine", [f.name for f in fields(EngineConfig) if f.name != "operators"], problems)
    ops_raw = _check_section(top.get("operators"), "operators", [f.name for f in fields(OperatorConfig)], problems)
    eng_vals = _typed_fields(EngineConfig, eng_raw, "engine", problems)
    ops_vals = _typed_fields(OperatorConfig, ops_raw, "operators", problems)
    ops = OperatorConfig(**ops_vals)
    engine = EngineConfig(**eng_vals, operators=ops)
    for e in engine.errors():
        if e.startswith("operators."):
            problems.append(_path_message("operators", e[len("operators."):]))
        else:
            problems.append(_path_message("engine", e))

    env_raw = _check_section(top.get("environment"), "environment", ENV_KEYS, problems)
    bench = env_raw.get("benchmark", "onemax")
    env = EnvironmentSpec()
    if bench not in BENCHMARK_PARAMS:
        problems.append(f"environment.benchmark: unknown benchmark {bench!r} (expected one of {sorted(BENCHMARK_PARAMS)})")
    else:
        params = _check_section(env_raw.get("params"), "environment.params", BENCHMARK_PARAMS[bench], problems)
        problems += _param_problems(bench, {**BENCHMARK_PARAMS[bench], **params})
        lesion = env_raw.get("lesion_rate", 0.05)
        if not _is_num(lesion) or not 0 <= lesion <= 1:
            problems.append("environment.lesion_rate: must lie in [0, 1]")
            lesion = 0.05
        env = EnvironmentSpec(bench, dict(params), float(lesion))

    out_raw = _check_section(top.get("output"), "output", OUTPUT_KEYS, problems)
    for k, v in out_raw.items():
        if not isinstance(v, str) or not v:
            problems.append(f"output.{k}: expected a non-empty path")

    sweep = top.get("sweep")
    if sweep is not None:
        sw = _check_section(sweep, "sweep", ("grid",), problems)
        grid = sw.get("grid", {})
        if not isinstance(grid, dict) or not all(isinstance(v, list) and v for v in grid.values()):
            problems.append("sweep.grid: expected a mapping of dotted keys to non-empty lists")
        else:
            for key in grid:
                section, _, name = str(key).partition(".")
                if section not in ("engine", "operators", "environment") or not name:
                    problems.append(f"sweep.grid.{key}: expected engine.<key>, operators.<key> or environment.<key>")

    budget = scalars.get("budget", 500)
    window = scalars.get("window", DEFAULT_WINDOW)
    if "budget" in scalars and "window" in scalars and budget and budget < window:
        problems.append(f"window: must not exceed budget ({window} > {budget})")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        seed=scalars.get("seed", 0),
        budget=budget,
        window=window,
        engine=engine,
        environment=env,
        metrics_path=out_raw.get("metrics", "metrics.csv"),
        report_path=out_raw.get("report", "report.json"),
        sweep=copy.deepcopy(sweep),
    )


def _path_message(section: str, err: str) -> str:
    name, _, rest = err.partition(" ")
    return f"{section}.{name}: {rest}" if name.isidentifier() else f"{section}: {err}"


def _param_problems(bench: str, p: dict) -> list:
    out = []
    where = "environment.params"
    if not _is_int(p["n"]) or p["n"] < 1:
        out.append(f"{where}.n: expected an integer >= 1")
        return out
    n = p["n"]
    if bench == "oscillating":
        if not _is_int(p["period"]) or p["period"] < 1:
            out.append(f"{where}.period: expected an integer >= 1")
        d = p["distance"]
        if d is not None and (not _is_int(d) or not 1 <= d <= n):
            out.append(f"{where}.distance: expected an integer in 1..n")
    if bench == "ktrap":
        loci = p["trap_loci"]
        if not isinstance(loci, list) or not loci or not all(_is_int(i) and 0 <= i < n for i in loci):
            out.append(f"{where}.trap_loci: expected a non-empty list of loci in 0..n-1")
        if not _is_num(p["bonus"]) or p["bonus"] <= 0:
            out.append(f"{where}.bonus: must be > 0")
        if not _is_num(p["deception"]) or not 0 <= p["deception"] < 1:
            out.append(f"{where}.deception: must lie in [0, 1)")
    return out


def read_raw(path):
    """Load the mapping from a YAML or JSON file (``.json`` selects the JSON parser)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError([f"<file>: cannot parse {path}: {exc}"]) from exc


def load_config(path) -> ExperimentConfig:
    return parse_config(read_raw(path))


def with_override(raw: dict, dotted: str, value) -> dict:
    """Copy of ``raw`` with ``section.key`` set (``environment.<param>`` goes under params)."""
    out = copy.deepcopy(raw)
    section, _, key = dotted.partition(".")
    node = out.setdefault(section, {})
    if section == "environment" and key not in ENV_KEYS:
        node = node.setdefault("params", {})
    node[key] = value
    return out


def build_environment(cfg: ExperimentConfig, rng: np.random.Generator) -> Environment:
    try:
        return cfg.environment.build(cfg.budget, rng)
    except LandscapeError as exc:
        raise ConfigError([f"environment: {exc}"]) from exc
