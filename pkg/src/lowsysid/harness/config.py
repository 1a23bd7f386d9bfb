"""Experiment configuration: strict nested key-value files (YAML syntax).

Unknown keys are errors, and every diagnostic names the offending field and
its line. A minimal file::

    gen:
      n_x_star: 5
      n: 500
      l: 50
    methods: [nuc, bm, sp]
    solver:
      lambda: 1.0e-3
      time_budget_s: 60
    per_method:
      bm: {momentum: 0.99}
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from ..solvers.params import SolverConfig
from ..system import GenConfig

METHODS = ("nuc", "bm", "sp")
SWEEP_AXES = ("none", "samples", "length")
REPORT_FORMATS = ("csv", "structured-text")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted key path and ``line`` its 1-based line (if known)."""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        self.field = field
        self.line = line
        where = ""
        if field:
            where = f"{field}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)


@dataclass(frozen=True)
class SweepConfig:
    """``axis`` is ``none``, ``samples`` (list of N, first-N prefixes of one dataset) or ``length`` (list of L).

    For the length axis ``fixed_nl`` keeps ``N * L`` equal to the product
    at the first grid point (``N`` rounded to the nearest integer, at least 1).
    """

    axis: str = "none"
    values: tuple = ()
    fixed_nl: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    methods: tuple = METHODS
    solvers: dict = field(default_factory=dict)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    eval_every: int = 10
    output_dir: str = "runs"
    report_format: str = "csv"
    jobs: int = 1
    svg: bool = False

    def solver(self, method: str) -> SolverConfig:
        return self.solvers[method]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Override the data seed and every solver seed."""
        gen = dataclasses.replace(self.gen, seed=seed)
        solvers = {m: s.with_(seed=seed) for m, s in self.solvers.items()}
        return dataclasses.replace(self, gen=gen, solvers=solvers)

    def with_budget(self, budget_s: float) -> "ExperimentConfig":
        solvers = {m: s.with_(time_budget_s=budget_s) for m, s in self.solvers.items()}
        return dataclasses.replace(self, solvers=solvers)


_GEN_KEYS = {f.name for f in dataclasses.fields(GenConfig)}
# config key -> SolverConfig field
_SOLVER_KEYS = {f.name: f.name for f in dataclasses.fields(SolverConfig) if f.name != "lam"}
_SOLVER_KEYS["lambda"] = "lam"
_SOLVER_KEYS.pop("eval_every")
_TOP_KEYS = {"gen", "methods", "solver", "per_method", "sweep", "eval_every", "output_dir",
             "report_format", "jobs", "svg"}
_SWEEP_KEYS = {"axis", "values", "fixed_nl"}


def _line_map(text: str) -> dict:
    """Dotted key path -> 1-based line; raises on duplicate keys."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"unparseable config: {exc}", line=mark.line + 1 if mark else None) from exc
    lines: dict = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                if path in lines:
                    raise ConfigError("duplicate key", path, key.start_mark.line + 1)
                lines[path] = key.start_mark.line + 1
                walk(value, path)

    if root is not None:
        walk(root, "")
    return lines


def _check_keys(section: dict, allowed, prefix: str, lines: dict):
    for key in section:
        if key not in allowed:
            path = f"{prefix}.{key}" if prefix else str(key)
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", path, lines.get(path))


def _section(raw: dict, key: str, lines: dict) -> dict:
    value = raw.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError("expected a mapping", key, lines.get(key))
    return value


def _build(cls, kwargs: dict, prefix: str, lines: dict, rename: Optional[dict] = None):
    rename = rename or {}
    try:
        return cls(**{rename.get(k, k): v for k, v in kwargs.items()})
    except (TypeError, ValueError) as exc:
        # attribute the error to the first key named in the message, else to the section
        path = prefix
        for key in kwargs:
            if key in str(exc) or rename.get(key, key) in str(exc):
                path = f"{prefix}.{key}"
                break
        raise ConfigError(str(exc), path, lines.get(path)) from exc


_SOLVER_FLOATS = ("lambda", "lr", "momentum", "polar_tol", "stat_tol", "a_bound", "rank_tol", "time_budget_s")
_SOLVER_INTS = ("max_iter", "r_init", "r_max", "seed", "grid", "max_total_iter")
_GEN_FLOATS = ("noise_var", "spectral_radius_cap")
_GEN_INTS = ("n_x_star", "n_u", "n_y", "n", "l", "seed")


def _number(value, path: str, lines: dict) -> float:
    # YAML 1.1 reads "1e-3" (no dot) as a string, so accept numeric strings
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", path, lines.get(path))
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", path, lines.get(path)) from None
    return out


def _integer(value, path: str, lines: dict) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path, lines.get(path))
    return value


def _typed(section: dict, floats, ints, prefix: str, lines: dict) -> dict:
    out = {}
    for key, value in section.items():
        path = f"{prefix}.{key}"
        if value is not None and key in floats:
            value = _number(value, path, lines)
        elif value is not None and key in ints:
            value = _integer(value, path, lines)
        out[key] = value
    return out


def _solver_kwargs(section: dict, prefix: str, lines: dict) -> dict:
    _check_keys(section, _SOLVER_KEYS, prefix, lines)
    typed = _typed(section, _SOLVER_FLOATS, _SOLVER_INTS, prefix, lines)
    return {_SOLVER_KEYS[k]: v for k, v in typed.items()}


def parse_config(text: str) -> ExperimentConfig:
    lines = _line_map(text)
    raw = yaml.safe_load(text) or {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    _check_keys(raw, _TOP_KEYS, "", lines)

    gen_raw = _section(raw, "gen", lines)
    _check_keys(gen_raw, _GEN_KEYS, "gen", lines)
    gen = _build(GenConfig, _typed(gen_raw, _GEN_FLOATS, _GEN_INTS, "gen", lines), "gen", lines)

    methods = raw.get("methods", list(METHODS))
    if not isinstance(methods, list) or not methods:
        raise ConfigError("at least one method is required", "methods", lines.get("methods"))
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {METHODS}", "methods", lines.get("methods"))
    if len(set(methods)) != len(methods):
        raise ConfigError("methods listed twice", "methods", lines.get("methods"))

    eval_every = raw.get("eval_every", 10)
    if isinstance(eval_every, bool) or not isinstance(eval_every, int) or eval_every < 1:
        raise ConfigError("must be a positive integer", "eval_every", lines.get("eval_every"))

    shared = _solver_kwargs(_section(raw, "solver", lines), "solver", lines)
    overrides = _section(raw, "per_method", lines)
    _check_keys(overrides, METHODS, "per_method", lines)
    solvers = {}
    for m in methods:
        kw = dict(shared)
        kw.update(_solver_kwargs(_section(overrides, m, lines) if m in overrides else {},
                                 f"per_method.{m}", lines))
        kw["eval_every"] = eval_every
        solvers[m] = _build(SolverConfig, kw, f"per_method.{m}" if m in overrides else "solver", lines)

    sweep_raw = _section(raw, "sweep", lines)
    _check_keys(sweep_raw, _SWEEP_KEYS, "sweep", lines)
    axis = sweep_raw.get("axis", "none")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}", "sweep.axis", lines.get("sweep.axis"))
    values = sweep_raw.get("values", [])
    if axis != "none":
        if not isinstance(values, list) or not values or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in values):
            raise ConfigError("needs a non-empty list of integers", "sweep.values", lines.get("sweep.values"))
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("values must be strictly increasing", "sweep.values", lines.get("sweep.values"))
        low = 1 if axis == "samples" else 0
        if values[0] < low:
            raise ConfigError(f"values must be >= {low}", "sweep.values", lines.get("sweep.values"))
    fixed_nl = sweep_raw.get("fixed_nl", True)
    if not isinstance(fixed_nl, bool):
        raise ConfigError("must be true or false", "sweep.fixed_nl", lines.get("sweep.fixed_nl"))
    sweep = SweepConfig(axis, tuple(values), fixed_nl)

    report_format = raw.get("report_format", "csv")
    if report_format not in REPORT_FORMATS:
        raise ConfigError(f"must be one of {REPORT_FORMATS}", "report_format", lines.get("report_format"))
    jobs = raw.get("jobs", 1)
    if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("must be a positive integer", "jobs", lines.get("jobs"))
    svg = raw.get("svg", False)
    if not isinstance(svg, bool):
        raise ConfigError("must be true or false", "svg", lines.get("svg"))
    output_dir = raw.get("output_dir", "runs")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("must be a path string", "output_dir", lines.get("output_dir"))
    return ExperimentConfig(gen, tuple(methods), solvers, sweep, eval_every, output_dir, report_format, jobs, svg)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize back to the config syntax (every solver field spelled out per method)."""
    gen = dataclasses.asdict(cfg.gen)
    per = {}
    for m in cfg.methods:
        s = dataclasses.asdict(cfg.solvers[m])
        s.pop("eval_every")
        s["lambda"] = s.pop("lam")
        per[m] = s
    doc: dict[str, Any] = {
        "gen": gen,
        "methods": list(cfg.methods),
        "per_method": per,
        "sweep": {"axis": cfg.sweep.axis, "values": list(cfg.sweep.values), "fixed_nl": cfg.sweep.fixed_nl},
        "eval_every": cfg.eval_every,
        "output_dir": cfg.output_dir,
        "report_format": cfg.report_format,
        "jobs": cfg.jobs,
        "svg": cfg.svg,
    }
    return yaml.safe_dump(doc, sort_keys=False)
