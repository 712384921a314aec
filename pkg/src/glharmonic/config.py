"""YAML scenario files with line-anchored validation errors.

A file holds either a single scenario mapping or ``scenarios: [...]``.  Every
key is remembered with its source line so validation failures can point at
the offending entry.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

KINDS = ("orbit", "pfaff", "pseudolinear", "custom-gl-field-eqs")

# Calibration choices used when a scenario omits a value; reports list which ones applied.
DEFAULT_TOLERANCES: dict[str, dict[str, float]] = {
    "orbit": {
        "residual": 1e-9,
        "functional": 1e-4,
        "strict_gap": 1e-6,
        "bound": 1e-9,
        "agreement": 1e-10,
        "flow": 1e-6,
        "el": 1e-5,
    },
    "pfaff": {"residual": 1e-9, "functional": 1e-8, "strict_gap": 1e-6, "bound": 1e-9, "agreement": 1e-10},
    "pseudolinear": {"residual": 1e-9, "sff": 1e-9, "functional": 1e-8, "bound": 1e-9, "agreement": 1e-10},
    "custom-gl-field-eqs": {"antisymmetry": 1e-12, "collapse": 1e-12},
}

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "orbit": {"psi": {"type": "euclidean"}, "perturbations": 50, "amplitude": 0.05, "seed": 7, "flows": True},
    "pfaff": {"candidates": 10, "amplitude": 0.2, "seed": 11},
    "pseudolinear": {"w": 0.0},
    "custom-gl-field-eqs": {"coupling": 1.0, "margin": 1e-3},
}

DEFAULT_DOMAIN = {
    "orbit": {"lo": [0.0], "hi": [6.283185307179586], "grid": 2000},
    "pfaff": {"lo": [0.0, 0.0], "hi": [1.0, 1.0], "grid": 21},
    "pseudolinear": {"lo": [0.0, 0.0], "hi": [1.0, 1.0], "grid": 21},
}


@dataclass
class ScenarioConfig:
    name: str
    kind: str
    params: dict
    tolerances: dict
    domain: dict | None
    defaults_used: list[str] = field(default_factory=list)
    lines: dict = field(default_factory=dict, repr=False)
    path: tuple = ()

    def line(self, *keys) -> int | None:
        """Source line of ``<keys>`` inside this scenario (or the nearest enclosing entry)."""
        full = self.path + tuple(keys)
        while len(full) >= len(self.path):
            if full in self.lines:
                return self.lines[full]
            if not full:
                break
            full = full[:-1]
        return None

    def require(self, section: str, key: str, types=None):
        container = self.params if section == "params" else getattr(self, section)
        if key not in container:
            raise ConfigError(f"scenario '{self.name}': missing required {section}.{key}", self.line(section))
        value = container[key]
        if types is not None and not isinstance(value, types):
            raise ConfigError(
                f"scenario '{self.name}': {section}.{key} has the wrong type ({type(value).__name__})",
                self.line(section, key),
            )
        return value


def _line_map(node, path: tuple, lines: dict) -> None:
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            sub = path + (key.value,)
            lines[sub] = key.start_mark.line + 1
            _line_map(value, sub, lines)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            sub = path + (i,)
            lines[sub] = item.start_mark.line + 1
            _line_map(item, sub, lines)


def parse_text(text: str) -> tuple[Any, dict]:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from None
    lines: dict = {}
    if root is not None:
        _line_map(root, (), lines)
    return data, lines


def _check_number_list(value, where: str, line) -> list[float]:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"{where} must be a list of numbers", line)
    return [float(v) for v in value]


def _scenario(raw, path: tuple, lines: dict, index: int) -> ScenarioConfig:
    line = lines.get(path, 1)
    if not isinstance(raw, dict):
        raise ConfigError("scenario entry must be a mapping", line)
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("scenario is missing 'kind'", line)
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind '{kind}' (expected one of {', '.join(KINDS)})", lines.get(path + ("kind",)))
    name = str(raw.get("name", f"{kind}-{index}"))
    unknown = set(raw) - {"name", "kind", "domain", "params", "tolerances"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{key}' in scenario '{name}'", lines.get(path + (key,)))

    defaults_used: list[str] = []
    params = raw.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping", lines.get(path + ("params",)))
    params = copy.deepcopy(params)
    for key, value in DEFAULT_PARAMS[kind].items():
        if key not in params:
            params[key] = copy.deepcopy(value)
            defaults_used.append(f"params.{key}")

    tolerances = dict(DEFAULT_TOLERANCES[kind])
    given = raw.get("tolerances", {}) or {}
    if not isinstance(given, dict):
        raise ConfigError("tolerances must be a mapping", lines.get(path + ("tolerances",)))
    for key, value in given.items():
        tline = lines.get(path + ("tolerances", key))
        if key not in tolerances:
            raise ConfigError(f"unknown tolerance '{key}' for kind '{kind}'", tline)
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise ConfigError(f"tolerance '{key}' must be a number", tline) from None
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
            raise ConfigError(f"tolerance '{key}' must be a positive number", tline)
        tolerances[key] = float(value)
    defaults_used += [f"tolerances.{k}" for k in DEFAULT_TOLERANCES[kind] if k not in given]

    domain = None
    if kind in DEFAULT_DOMAIN:
        d = raw.get("domain")
        if d is None:
            domain = copy.deepcopy(DEFAULT_DOMAIN[kind])
            defaults_used.append("domain")
        else:
            dline = lines.get(path + ("domain",))
            if not isinstance(d, dict):
                raise ConfigError("domain must be a mapping", dline)
            for key in ("lo", "hi", "grid"):
                if key not in d:
                    raise ConfigError(f"domain is missing '{key}'", dline)
            lo = _check_number_list(d["lo"], "domain.lo", lines.get(path + ("domain", "lo")))
            hi = _check_number_list(d["hi"], "domain.hi", lines.get(path + ("domain", "hi")))
            if len(lo) != len(hi):
                raise ConfigError("domain.lo and domain.hi differ in length", lines.get(path + ("domain", "hi")))
            if not all(b > a for a, b in zip(lo, hi)):
                raise ConfigError("domain requires hi > lo on every axis", lines.get(path + ("domain", "hi")))
            grid = d["grid"]
            if not isinstance(grid, int) or isinstance(grid, bool) or grid < 3:
                raise ConfigError("domain.grid must be an integer >= 3", lines.get(path + ("domain", "grid")))
            domain = {"lo": lo, "hi": hi, "grid": grid}
        if kind == "orbit" and len(domain["lo"]) != 1:
            raise ConfigError("orbit scenarios need a one-dimensional domain", lines.get(path + ("domain",)))
    return ScenarioConfig(name, kind, params, tolerances, domain, defaults_used, lines, path)


def load_config(source: str | Path, *, text: str | None = None) -> list[ScenarioConfig]:
    """Parse and structurally validate a scenario file."""
    if text is None:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    data, lines = parse_text(text)
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", 1)
    if "scenarios" in data:
        items = data["scenarios"]
        if not isinstance(items, list) or not items:
            raise ConfigError("'scenarios' must be a non-empty list", lines.get(("scenarios",)))
        configs = [_scenario(item, ("scenarios", i), lines, i) for i, item in enumerate(items)]
    else:
        configs = [_scenario(data, (), lines, 0)]
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique")
    return configs


def apply_overrides(cfg: ScenarioConfig, grid: int | None = None, tol: float | None = None) -> ScenarioConfig:
    cfg = copy.deepcopy(cfg)
    if grid is not None:
        if grid < 3:
            raise ConfigError("--grid must be at least 3")
        if cfg.domain is not None:
            cfg.domain["grid"] = grid
    if tol is not None:
        if not tol > 0:
            raise ConfigError("--tol must be positive")
        cfg.tolerances = {k: float(tol) for k in cfg.tolerances}
    return cfg
