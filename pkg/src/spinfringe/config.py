"""Plain-text key/value configuration with defaults, validation, and echo.

The format is one ``group.key = value`` per line, ``#`` comments, no
nesting.  Frequencies may be given as ordinary GHz via ``*_ghz`` keys
and are converted to angular rad/ns exactly once, here.  Parsing errors
carry line and column; validation errors name the violated invariant
and the offending key.  A parsed configuration echoes back to text that
re-parses to an identical configuration, including which values were
defaulted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .constants import TWO_PI, ghz_to_rad_per_ns
from .errors import ConfigParseError, ConfigValidationError
from .params import (
    HoleNuclearParams,
    Lattice,
    MeanFieldParams,
    ModelParams,
    SweepSchedule,
)

__all__ = ["RunConfig", "OracleConfig", "OutputConfig", "MapConfig",
           "parse_config", "config_to_text", "RATIO_UNIT_FACTORS"]

# Interpretations of the bare decay-to-walk ratio kappa/alpha.  The
# internal value is always ns^2/rad^2 (omega in rad/ns, time in ns):
#   ns2   ratio already in ns^2/rad^2
#   ghz2  modeler used ordinary GHz frequencies, ns time: factor (2 pi)^-2
#   ps2   modeler used rad/ps and ps time: factor 1e-6
RATIO_UNIT_FACTORS = {"ns2": 1.0, "ghz2": 1.0 / (TWO_PI * TWO_PI), "ps2": 1e-6}


@dataclass(frozen=True)
class OracleConfig:
    """Driver settings for the density-oracle subcommand."""

    tau: float = 0.17
    t_end: float = 0.0          # 0 -> 10 / d_bath
    method: str = "auto"        # auto | grid | langevin
    n_traj: int = 10000
    dt: float = 0.0             # 0 -> auto
    n_outputs: int = 40
    m_min: float = 0.0          # m_min == m_max -> auto-sized grid
    m_max: float = 0.0
    n_cells: int = 640
    init_mean: float = 0.0
    init_width: float = 0.0     # 0 -> auto
    cfl: float = 0.8

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("oracle.tau >= 0 required")
        if self.method not in ("auto", "grid", "langevin"):
            raise ValueError("oracle.method must be auto|grid|langevin")
        if self.n_traj < 100:
            raise ValueError("oracle.n_traj >= 100 required")
        if self.n_outputs < 1:
            raise ValueError("oracle.n_outputs >= 1 required")


@dataclass(frozen=True)
class OutputConfig:
    format: str = "csv"         # csv | ndjson (oracle series only)
    precision: int = 12

    def __post_init__(self):
        if self.format not in ("csv", "ndjson"):
            raise ValueError("output.format must be csv|ndjson")
        if not 3 <= self.precision <= 17:
            raise ValueError("output.precision must be in [3, 17]")


@dataclass(frozen=True)
class MapConfig:
    """Grid sizes for the fringe-map subcommand (ranges come from
    meanfield.omega_bracket and the sweep tau window)."""

    n_omega: int = 241
    n_tau: int = 301

    def __post_init__(self):
        if self.n_omega < 2 or self.n_tau < 2:
            raise ValueError("map grids need at least 2 points")


@dataclass(frozen=True)
class RunConfig:
    """Fully validated effective configuration for one run.

    ``effective`` maps every schema key to its effective raw value
    (user-set or default, with derived defaults resolved); ``defaulted``
    lists the keys the user did not set.  Both are provenance metadata
    and excluded from equality.
    """

    model: ModelParams
    meanfield: MeanFieldParams
    sweep: SweepSchedule
    lattice: Lattice
    hole: HoleNuclearParams
    oracle: OracleConfig
    output: OutputConfig
    map: MapConfig
    seed: int
    ratio: float
    ratio_units: str
    defaulted: tuple[str, ...] = field(default=(), compare=False)
    effective: tuple[tuple[str, Any], ...] = field(default=(), compare=False)


# Schema: key -> (kind, default). Defaults marked DERIVED are resolved in
# _finalize against other effective values.
_DERIVED = object()

_SCHEMA: dict[str, tuple[str, Any]] = {
    "model.omega0_ghz": ("float", 10.0),
    "model.sigma_ghz": ("float", 1.6),
    "model.T": ("float", 26.0),
    "model.beta0": ("float", _DERIVED),        # 3 / T
    "model.s_p": ("float", 0.5),
    "model.t_rep": ("float", 143.0),
    "meanfield.ratio": ("float", 1.0e4),
    "meanfield.ratio_units": ("enum:ns2,ghz2,ps2", "ps2"),
    "meanfield.kappa": ("float", 1.0e-3),
    "meanfield.omega_bracket": ("float", _DERIVED),  # 6 sigma
    "meanfield.fd_step": ("float", 0.02),
    "meanfield.relax_tol": ("float", 1.0e-6),
    "meanfield.relax_t_max": ("float", 1.0e4),
    "sweep.tau_start": ("float", 0.05),
    "sweep.tau_end": ("float", 1.5),
    "sweep.tau_step": ("float", 0.002),
    "sweep.direction": ("enum:forward,backward,round-trip", "round-trip"),
    "sweep.omega_init": ("float", 0.0),
    "sweep.reset_omega_every": ("int", 0),
    "lattice.n": ("int", 1),
    "lattice.a_peak": ("float", 1.0),
    "lattice.gamma_peak": ("float", _DERIVED),  # kappa / (ratio_internal * a_peak^2)
    "lattice.envelope_width": ("float", 0.0),   # 0 -> n/4 sites
    "lattice.d": ("float", 1.0e-3),
    "lattice.f": ("float", 1.0e-4),
    "lattice.d_bath": ("float", _DERIVED),      # kappa
    "hole.b0": ("float", 4.0),
    "hole.g_h": ("float", 0.5),
    "hole.gamma_ghz": ("float", 0.1),
    "hole.inv_r3_avg": ("float", 1.3),
    "oracle.tau": ("float", 0.17),
    "oracle.t_end": ("float", 0.0),
    "oracle.method": ("enum:auto,grid,langevin", "auto"),
    "oracle.n_traj": ("int", 10000),
    "oracle.dt": ("float", 0.0),
    "oracle.n_outputs": ("int", 40),
    "oracle.m_min": ("float", 0.0),
    "oracle.m_max": ("float", 0.0),
    "oracle.n_cells": ("int", 640),
    "oracle.init_mean": ("float", 0.0),
    "oracle.init_width": ("float", 0.0),
    "oracle.cfl": ("float", 0.8),
    "output.format": ("enum:csv,ndjson", "csv"),
    "output.precision": ("int", 12),
    "map.n_omega": ("int", 241),
    "map.n_tau": ("int", 301),
    "seed": ("int", 12345),
}


def _parse_value(kind: str, text: str, key: str, line: int) -> Any:
    if kind == "float":
        try:
            v = float(text)
        except ValueError:
            raise ConfigParseError(f"expected a number for '{key}', got {text!r}", line)
        if math.isnan(v) or math.isinf(v):
            raise ConfigValidationError(f"'{key}' must be finite", key=key, line=line)
        return v
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigParseError(f"expected an integer for '{key}', got {text!r}", line)
    if kind.startswith("enum:"):
        choices = kind[5:].split(",")
        if text not in choices:
            raise ConfigValidationError(
                f"'{key}' must be one of {'|'.join(choices)}, got {text!r}",
                key=key, line=line)
        return text
    raise AssertionError(kind)


def _parse_lines(lines: list[tuple[int, str]]) -> tuple[dict[str, Any], dict[str, int]]:
    """key -> value and key -> line number from (lineno, text) pairs."""
    raw: dict[str, Any] = {}
    where: dict[str, int] = {}
    for lineno, line in lines:
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError("expected 'key = value'", lineno,
                                   column=len(line) - len(line.lstrip()) + 1)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or any(c not in
                          "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                          "0123456789_." for c in key):
            raise ConfigParseError(f"malformed key {key!r}", lineno)
        if key not in _SCHEMA:
            raise ConfigValidationError(f"unknown key {key!r}", key=key, line=lineno)
        if key in raw:
            raise ConfigValidationError(f"duplicate key {key!r}", key=key, line=lineno)
        if not value:
            raise ConfigParseError(f"missing value for '{key}'", lineno,
                                   column=line.index("=") + 2)
        raw[key] = _parse_value(_SCHEMA[key][0], value, key, lineno)
        where[key] = lineno
    return raw, where


def _build(raw: dict[str, Any], where: dict[str, int]) -> RunConfig:
    def get(key: str) -> Any:
        if key in raw:
            return raw[key]
        default = _SCHEMA[key][1]
        return default

    defaulted = tuple(sorted(k for k in _SCHEMA if k not in raw))

    # Model (GHz -> rad/ns here and nowhere else).
    t_pump = get("model.T")
    beta0 = raw.get("model.beta0", 3.0 / t_pump if t_pump > 0 else 0.0)
    sigma = ghz_to_rad_per_ns(get("model.sigma_ghz"))
    try:
        model = ModelParams(
            omega0=ghz_to_rad_per_ns(get("model.omega0_ghz")),
            T=t_pump, beta0=beta0, sigma=sigma,
            s_p=get("model.s_p"), t_rep=get("model.t_rep"))
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="model",
                                    line=where.get("model.T"))

    ratio = get("meanfield.ratio")
    ratio_units = get("meanfield.ratio_units")
    if ratio <= 0:
        raise ConfigValidationError("meanfield.ratio > 0 required",
                                    key="meanfield.ratio",
                                    line=where.get("meanfield.ratio"))
    ratio_internal = ratio * RATIO_UNIT_FACTORS[ratio_units]
    kappa = get("meanfield.kappa")
    omega_bracket = raw.get("meanfield.omega_bracket", 6.0 * sigma)
    try:
        meanfield = MeanFieldParams(
            kappa=kappa, alpha=kappa / ratio_internal,
            omega_bracket=omega_bracket,
            fd_step=get("meanfield.fd_step"),
            relax_tol=get("meanfield.relax_tol"),
            relax_t_max=get("meanfield.relax_t_max"))
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="meanfield",
                                    line=where.get("meanfield.kappa"))
    if omega_bracket < 4.0 * sigma:
        raise ConfigValidationError(
            "meanfield.omega_bracket >= 4 sigma required",
            key="meanfield.omega_bracket", line=where.get("meanfield.omega_bracket"))

    try:
        sweep = SweepSchedule(
            tau_start=get("sweep.tau_start"), tau_end=get("sweep.tau_end"),
            tau_step=get("sweep.tau_step"), direction=get("sweep.direction"),
            omega_init=get("sweep.omega_init"),
            reset_omega_every=get("sweep.reset_omega_every"))
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="sweep",
                                    line=where.get("sweep.tau_start"))
    if not meanfield.fd_step < TWO_PI / (10.0 * sweep.tau_end):
        raise ConfigValidationError(
            "meanfield.fd_step must stay below the fringe scale "
            "2 pi / (10 * sweep.tau_end)",
            key="meanfield.fd_step", line=where.get("meanfield.fd_step"))

    a_peak = get("lattice.a_peak")
    gamma_peak = raw.get("lattice.gamma_peak",
                         kappa / (ratio_internal * a_peak * a_peak) if a_peak else 0.0)
    envelope = raw.get("lattice.envelope_width", 0.0)
    try:
        lattice = Lattice.chain(
            n=get("lattice.n"), a_peak=a_peak, gamma_peak=gamma_peak,
            d=get("lattice.d"), f=get("lattice.f"),
            d_bath=raw.get("lattice.d_bath", kappa),
            envelope_width=envelope if envelope > 0 else None)
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="lattice",
                                    line=where.get("lattice.n"))

    try:
        hole = HoleNuclearParams(
            b0=get("hole.b0"), g_h=get("hole.g_h"),
            gamma_rad=ghz_to_rad_per_ns(get("hole.gamma_ghz")),
            inv_r3_avg=get("hole.inv_r3_avg"))
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="hole", line=where.get("hole.b0"))

    try:
        oracle = OracleConfig(
            tau=get("oracle.tau"), t_end=get("oracle.t_end"),
            method=get("oracle.method"), n_traj=get("oracle.n_traj"),
            dt=get("oracle.dt"), n_outputs=get("oracle.n_outputs"),
            m_min=get("oracle.m_min"), m_max=get("oracle.m_max"),
            n_cells=get("oracle.n_cells"), init_mean=get("oracle.init_mean"),
            init_width=get("oracle.init_width"), cfl=get("oracle.cfl"))
        output = OutputConfig(format=get("output.format"),
                              precision=get("output.precision"))
        map_cfg = MapConfig(n_omega=get("map.n_omega"), n_tau=get("map.n_tau"))
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="oracle/output/map")

    resolved = {
        "model.beta0": beta0,
        "meanfield.omega_bracket": omega_bracket,
        "lattice.gamma_peak": gamma_peak,
        "lattice.d_bath": lattice.d_bath,
    }
    effective = tuple(
        (key, raw.get(key, resolved.get(key, _SCHEMA[key][1])))
        for key in _SCHEMA)
    return RunConfig(model=model, meanfield=meanfield, sweep=sweep,
                     lattice=lattice, hole=hole, oracle=oracle, output=output,
                     map=map_cfg, seed=get("seed"), ratio=ratio,
                     ratio_units=ratio_units, defaulted=defaulted,
                     effective=effective)


def parse_config(text: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse a configuration document, apply ``key=value`` overrides.

    Overrides use the same syntax as file lines and are reported with
    pseudo line numbers beyond the document when they fail.
    """
    lines = [(i + 1, line) for i, line in enumerate(text.splitlines())]
    raw, where = _parse_lines(lines)
    if overrides:
        o_lines = [(len(lines) + i + 1, line) for i, line in enumerate(overrides)]
        o_raw, o_where = _parse_lines(o_lines)
        raw.update(o_raw)
        where.update(o_where)
    return _build(raw, where)


def config_to_text(cfg: RunConfig, mark_defaults: bool = False) -> str:
    """Canonical text form; re-parsing yields an equivalent RunConfig.

    With mark_defaults, keys that were not explicitly set carry a
    trailing ``# default`` marker (the echo block format).
    """
    out = []
    for key, value in cfg.effective:
        text = repr(value) if isinstance(value, float) else str(value)
        line = f"{key} = {text}"
        if mark_defaults and key in cfg.defaulted:
            line += "  # default"
        out.append(line)
    return "\n".join(out) + "\n"
