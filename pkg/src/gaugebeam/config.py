"""
Run configuration: a flat INI file with one level of sections.

Lists are comma separated.  Every key is typed by ``SCHEMA``; unknown
sections or keys are rejected so typos surface as configuration errors.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

import numpy as np

from .electronic import TrapPotentials
from .errors import ConfigError, ParameterError
from .fields import Grid, PhysicalConstants


def _float(text):
    return float(text)


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _list(conv):
    def parse(text):
        items = [s.strip() for s in text.split(",") if s.strip()]
        if not items:
            raise ValueError("empty list")
        return [conv(s) for s in items]
    return parse


def _str(text):
    return text.strip()


SCHEMA = {
    "constants": {"hbar": _float, "mass": _float, "gamma3": _float},
    "scenario": {"kind": _str, "l": _int, "a": _float, "b": _float, "rho_min": _float,
                 "rho_max": _float, "theta_cut": _float, "oam_beam": _str},
    "traps": {"v1": _float, "v2": _float, "v3": _float, "harmonic": _float},
    "grid": {"kind": _str, "lo": _list(_float), "hi": _list(_float), "counts": _list(_int),
             "z": _float},
    "field": {"form": _str},
    "evolve": {"dt": _float, "steps": _int, "every": _int, "potential": _str,
               "center": _list(_float), "sigma": _float, "velocity": _list(_float),
               "vortex": _int, "jitter": _float, "detect_period": _bool, "snapshots": _bool},
    "design": {"target": _str, "value": _float, "a": _float, "b": _float, "l": _int,
               "boundary_rho": _float, "boundary_cos2alpha": _float, "interval": _list(_float),
               "samples": _int, "strict": _bool},
    "adiabatic": {"point": _list(_float), "direction": _list(_float), "speeds": _list(_float),
                  "omega0": _float},
    "output": {"directory": _str, "formats": _list(_str), "overwrite": _bool},
}

SCENARIO_KEYS = {
    "polynomial": ("a", "b", "l"),
    "bessel": ("a", "b", "l"),
    "disc": ("l", "rho_max"),
    "ring": ("l", "rho_min", "rho_max"),
    "monopole": ("l",),
}
OPTIONAL_SCENARIO_KEYS = {"monopole": ("theta_cut", "oam_beam")}

FORMATS = ("csv", "svg")


@dataclass
class RunConfig:
    constants: PhysicalConstants
    scenario: dict
    grid: Optional[Grid]
    grid_z: float = 0.0
    traps: Optional[dict] = None
    field: dict = dc_field(default_factory=dict)
    evolve: Optional[dict] = None
    design: Optional[dict] = None
    adiabatic: Optional[dict] = None
    output: dict = dc_field(default_factory=dict)

    def trap_potentials(self) -> TrapPotentials:
        t = self.traps or {}
        w = t.get("harmonic", 0.0)
        m = self.constants.mass

        def level(c):
            return lambda p: c + 0.5 * m * w * w * (np.asarray(p)[..., 0] ** 2 + np.asarray(p)[..., 1] ** 2)

        return TrapPotentials(level(t.get("v1", 0.0)), level(t.get("v2", 0.0)),
                              level(t.get("v3", 0.0)))


def _typed_sections(parser):
    out = {}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]; expected one of {sorted(SCHEMA)}")
        typed = {}
        for key, raw in parser.items(name):
            if key not in SCHEMA[name]:
                raise ConfigError(f"[{name}] unknown key {key!r}; expected one of {sorted(SCHEMA[name])}")
            try:
                typed[key] = SCHEMA[name][key](raw)
            except ValueError as exc:
                raise ConfigError(f"[{name}] {key} = {raw!r}: {exc}") from exc
        out[name] = typed
    return out


def _require(section, name, keys):
    for k in keys:
        if k not in section:
            raise ConfigError(f"[{name}] missing required key {k!r}")


def _scenario(sec):
    if "scenario" not in sec:
        raise ConfigError("missing section [scenario]")
    s = sec["scenario"]
    _require(s, "scenario", ("kind",))
    kind = s["kind"]
    if kind not in SCENARIO_KEYS:
        raise ConfigError(f"[scenario] kind {kind!r} not supported; expected one of {sorted(SCENARIO_KEYS)}")
    _require(s, "scenario", SCENARIO_KEYS[kind])
    allowed = set(SCENARIO_KEYS[kind]) | set(OPTIONAL_SCENARIO_KEYS.get(kind, ())) | {"kind"}
    extra = sorted(set(s) - allowed)
    if extra:
        raise ConfigError(f"[scenario] keys {extra} do not apply to kind {kind!r}")
    return dict(s)


def _grid(sec):
    if "grid" not in sec:
        return None, 0.0
    g = sec["grid"]
    _require(g, "grid", ("kind", "lo", "hi", "counts"))
    if not (len(g["lo"]) == len(g["hi"]) == len(g["counts"])):
        raise ConfigError("[grid] lo, hi and counts must have the same length")
    try:
        grid = Grid(g["kind"], tuple(zip(g["lo"], g["hi"])), tuple(g["counts"]))
    except ParameterError as exc:
        raise ConfigError(f"[grid] {exc}") from exc
    return grid, g.get("z", 0.0)


def _check_evolve(e):
    _require(e, "evolve", ("dt", "steps", "center", "sigma"))
    if not e["dt"] > 0:
        raise ConfigError(f"[evolve] dt must be > 0, got {e['dt']}")
    if e["steps"] < 1:
        raise ConfigError("[evolve] steps must be >= 1")
    if e.get("every", 1) < 1:
        raise ConfigError("[evolve] every must be >= 1")
    if not e["sigma"] > 0:
        raise ConfigError("[evolve] sigma must be > 0")
    for key in ("center", "velocity"):
        if key in e and len(e[key]) != 2:
            raise ConfigError(f"[evolve] {key} needs two components")
    if e.get("potential", "v_eff") not in ("v_eff", "phi", "u", "none"):
        raise ConfigError("[evolve] potential must be v_eff, phi, u or none")


def _check_design(d):
    _require(d, "design", ("target", "l", "boundary_rho", "boundary_cos2alpha", "interval"))
    if d["target"] not in ("constant", "zero", "bessel", "scenario"):
        raise ConfigError("[design] target must be constant, zero, bessel or scenario")
    if d["target"] == "constant":
        _require(d, "design", ("value",))
    if d["target"] == "bessel":
        _require(d, "design", ("a", "b"))
    if len(d["interval"]) != 2:
        raise ConfigError("[design] interval needs two values")


def _check_adiabatic(a):
    _require(a, "adiabatic", ("point", "direction", "speeds"))
    for key in ("point", "direction"):
        if len(a[key]) != 3:
            raise ConfigError(f"[adiabatic] {key} needs three components")


REQUIRED_FOR = {"field": ("grid",), "evolve": ("grid", "evolve"), "design": ("design",),
                "adiabatic": ("adiabatic",)}


def parse_config(path, command: Optional[str] = None) -> RunConfig:
    """Read and validate a config file for ``command``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    return parse_config_string(path.read_text(), command)


def parse_config_string(text: str, command: Optional[str] = None) -> RunConfig:
    """Validate INI text for ``command`` (None checks every present section)."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    sec = _typed_sections(parser)
    try:
        constants = PhysicalConstants(**sec.get("constants", {}))
    except ParameterError as exc:
        raise ConfigError(f"[constants] {exc}") from exc
    if command is not None:
        for name in REQUIRED_FOR[command]:
            if name not in sec:
                raise ConfigError(f"'{command}' needs a [{name}] section")
    if command != "design" or "scenario" in sec or sec.get("design", {}).get("target") == "scenario":
        scenario = _scenario(sec)
    else:
        scenario = {}
    grid, z = _grid(sec)
    if "evolve" in sec and command in (None, "evolve"):
        _check_evolve(sec["evolve"])
        if grid is not None and grid.kind != "cartesian-2d":
            raise ConfigError("[grid] evolve needs kind = cartesian-2d")
    if "design" in sec and command in (None, "design"):
        _check_design(sec["design"])
    if "adiabatic" in sec and command in (None, "adiabatic"):
        _check_adiabatic(sec["adiabatic"])
    out = {"directory": "out", "formats": ["csv"], "overwrite": False, **sec.get("output", {})}
    bad = sorted(set(out["formats"]) - set(FORMATS))
    if bad:
        raise ConfigError(f"[output] unknown formats {bad}; expected a subset of {FORMATS}")
    form = sec.get("field", {}).get("form", "closed")
    if form not in ("closed", "generic"):
        raise ConfigError("[field] form must be closed or generic")
    return RunConfig(constants, scenario, grid, z, sec.get("traps"), {"form": form},
                     sec.get("evolve"), sec.get("design"), sec.get("adiabatic"), out)
