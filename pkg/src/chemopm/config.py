"""Scenario configuration: TOML in, normalized TOML out.

The schema is flat sections with scalar or list values.  ``parse``
fills every default, so ``serialize(parse(text))`` is idempotent after
the first normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from .grids import GridSpec
from .solver import ModelParams

_DEFAULTS = {
    "model": {"m": 2.0, "eps": 0.01, "chi": 1.0, "a": 1.0, "b": 1.0},
    "grid": {"dimension": 1, "half_width": 4.0, "cells_per_axis": 128,
             "boundary": "periodic"},
    "initial": {"preset": "random-band-limited", "seed": 0,
                "u_max": 1.0, "v_max": 1.0, "k_max": 3},
    "run": {"horizon": 5.0, "dt0": 0.01, "snapshot_dt": 0.5, "out": ""},
    "diagnostics": {"enabled": True, "kappas": [0.2], "p": 2.0,
                    "ladder_n_max": 7},
}

_SECTION_ORDER = ("model", "grid", "initial", "run", "diagnostics")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: dict
    grid: dict
    initial: dict
    run: dict
    diagnostics: dict

    def model_params(self) -> ModelParams:
        m = self.model
        return ModelParams(m=m["m"], eps=m["eps"], chi=m["chi"], a=m["a"],
                           b=m["b"], dim=self.grid["dimension"])

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(g["dimension"], g["half_width"], g["cells_per_axis"],
                        g["boundary"])

    def sections(self) -> dict:
        return {"model": self.model, "grid": self.grid, "initial": self.initial,
                "run": self.run, "diagnostics": self.diagnostics}


def normalize(raw: dict) -> dict:
    """Fill defaults; reject unknown sections."""
    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    out = {}
    for section, defaults in _DEFAULTS.items():
        merged = dict(defaults)
        merged.update(raw.get(section, {}))
        out[section] = merged
    return out


def parse(text: str) -> RunConfig:
    raw = tomllib.loads(text)
    sections = normalize(raw)
    cfg = RunConfig(**sections)
    cfg.model_params()   # validates coefficient ranges
    cfg.grid_spec()      # validates grid invariants
    return cfg


def load(path) -> RunConfig:
    with open(path, "r") as fh:
        return parse(fh.read())


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize value of type {type(value)!r}")


def serialize(cfg: RunConfig) -> str:
    lines = []
    sections = cfg.sections()
    for section in _SECTION_ORDER:
        lines.append(f"[{section}]")
        body = sections[section]
        for key in sorted(body):
            lines.append(f"{key} = {_format_value(body[key])}")
        lines.append("")
    return "\n".join(lines)


def with_overrides(cfg: RunConfig, *, horizon=None, eps=None, grid_n=None,
                   seed=None, out=None, preset=None) -> RunConfig:
    sections = {k: dict(v) for k, v in cfg.sections().items()}
    if horizon is not None:
        sections["run"]["horizon"] = float(horizon)
    if eps is not None:
        sections["model"]["eps"] = float(eps)
    if grid_n is not None:
        sections["grid"]["cells_per_axis"] = int(grid_n)
    if seed is not None:
        sections["initial"]["seed"] = int(seed)
    if out is not None:
        sections["run"]["out"] = str(out)
    if preset is not None:
        sections["initial"]["preset"] = str(preset)
    new = RunConfig(**sections)
    new.model_params()
    new.grid_spec()
    return new
