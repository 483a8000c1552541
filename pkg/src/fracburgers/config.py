"""Scenario files: flat ``key = value`` text with JSON-literal values.

Blank lines and ``#`` comments are ignored. A value that is not valid JSON is
taken as a bare string, so ``datum.kind = gaussian_bump`` works unquoted.
Save times may be a list or ``{"geomspace": [start, stop, num]}`` (also
``linspace``). Per-check parameters use ``check.<name>.<param>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .grid import Grid, GridError, InitialDatumSpec
from .kernel import DomainError, StabilityParams
from .solver import SolverConfig, SolverConfigError

KNOWN_KEYS = {
    "name", "alpha", "d", "q", "b", "datum.kind", "datum.mass", "datum.width", "datum.gamma",
    "datum.center", "grid.L", "grid.n", "dt", "t_end", "save_times", "dealias", "mode", "checks",
}
REQUIRED = ("alpha", "d", "q", "b", "grid.L", "grid.n", "dt", "t_end")
DEFAULTS = {"name": "scenario", "datum.kind": "gaussian_bump", "datum.mass": 1.0, "datum.width": 1.0,
            "save_times": [], "dealias": True, "mode": "production", "checks": []}


class ConfigError(ValueError):
    """Parse or validation problem; ``problems`` lists every item found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text: str, source: str = "<config>") -> dict:
    """Flat mapping key -> parsed value, with line-numbered diagnostics."""
    out, problems = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            problems.append(f"{source}:{lineno}: empty key")
            continue
        if key in out:
            problems.append(f"{source}:{lineno}: duplicate key {key!r}")
            continue
        if key not in KNOWN_KEYS and not key.startswith("check."):
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        out[key] = _value(val)
    if problems:
        raise ConfigError(problems)
    return out


def dump_text(values: dict) -> str:
    return "".join(f"{k} = {json.dumps(v)}\n" for k, v in values.items())


def expand_times(spec) -> tuple[float, ...]:
    if isinstance(spec, dict):
        if len(spec) != 1:
            raise ConfigError(["save_times: expected exactly one of geomspace/linspace"])
        (kind, args), = spec.items()
        if kind not in ("geomspace", "linspace") or len(args) != 3:
            raise ConfigError([f"save_times: unsupported form {spec!r}"])
        return tuple(float(t) for t in getattr(np, kind)(args[0], args[1], int(args[2])))
    if isinstance(spec, (int, float)):
        return (float(spec),)
    return tuple(float(t) for t in spec)


@dataclass
class Scenario:
    """A parsed scenario: raw flat values plus the derived solver configuration."""

    values: dict
    solver: SolverConfig = field(repr=False)
    checks: list
    check_params: dict

    @property
    def name(self) -> str:
        return str(self.values.get("name", "scenario"))

    def text(self) -> str:
        return dump_text(self.values)


def build(values: dict) -> Scenario:
    problems = [f"missing required key {k!r}" for k in REQUIRED if k not in values]
    if problems:
        raise ConfigError(problems)
    v = {**DEFAULTS, **values}
    try:
        d = int(v["d"])
        params = StabilityParams(float(v["alpha"]), d)
        b = v["b"]
        b = tuple(float(x) for x in b) if isinstance(b, list) else (float(b),) * d
        center = tuple(float(c) for c in v.get("datum.center", []))
        datum = InitialDatumSpec(str(v["datum.kind"]), float(v["datum.mass"]), float(v["datum.width"]),
                                 center, None if v.get("datum.gamma") is None else float(v["datum.gamma"]))
        grid = Grid(d, float(v["grid.L"]), int(v["grid.n"]))
        cfg = SolverConfig(params, float(v["q"]), b, datum, grid, float(v["dt"]), float(v["t_end"]),
                           expand_times(v["save_times"]), bool(v["dealias"]), mode=str(v["mode"]))
    except (DomainError, GridError) as exc:
        raise ConfigError([str(exc)]) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (ConfigError, SolverConfigError)):
            raise
        raise ConfigError([f"bad value: {exc}"]) from exc
    checks = v["checks"]
    checks = [checks] if isinstance(checks, str) else list(checks)
    from .runner import CHECKS
    unknown = [c for c in checks if c not in CHECKS]
    cparams = {}
    for key, val in v.items():
        if key.startswith("check."):
            parts = key.split(".")
            if len(parts) != 3 or parts[1] not in CHECKS:
                unknown.append(key)
                continue
            cparams.setdefault(parts[1], {})[parts[2]] = val
    if unknown:
        raise ConfigError([f"unknown check {c!r}" for c in unknown])
    return Scenario(dict(values), cfg, checks, cparams)


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return build(parse_text(fh.read(), str(path)))


def preset_names() -> list[str]:
    files = resources.files("fracburgers").joinpath("presets")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    f = resources.files("fracburgers").joinpath("presets", f"{name}.cfg")
    if not f.is_file():
        raise ConfigError([f"unknown scenario {name!r}; presets: {', '.join(preset_names())}"])
    return f.read_text(encoding="utf-8")


def preset(name: str) -> Scenario:
    return build(parse_text(preset_text(name), f"preset:{name}"))
