"""Run configuration files.

Plain ``key = value`` text with ``[section]`` headers::

    [run]
    model = classical
    t_final = 40
    dt = 0.04
    interpolation = pfc

    [grid]
    x_min = -50
    x_max = 50
    n_x = 256
    v_max = 2
    n_v = 256

    [species.f]
    x_halfwidth = 2
    v_halfwidth = 0.5

    [species.g]
    x_halfwidth = 3
    v_halfwidth = 0.75

Missing keys take the defaults below; unknown keys are rejected.
"""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import DEFAULT_RADIUS
from .integrator import DEFAULT_SUPPORT_TOL, INTERPOLATIONS, StepParams, default_dt
from .phase_space import Bump, ModelKind, PhaseGrid, SystemState, TwoBumpParams, init_two_bump

OUTPUT_DIR_ENV = "VP1D_OUTPUT_DIR"


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where = f"{key}"
            if line is not None:
                where += f" (line {line})"
            where += ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class OracleConfig:
    n: int = 100_000
    t_final: float = 10.0
    tolerance: float = 0.10
    # optional binning grid; must repeat [grid] if given
    x_min: float | None = None
    x_max: float | None = None
    n_x: int | None = None


@dataclass(frozen=True)
class RunConfig:
    grid: PhaseGrid
    f: Bump
    g: Bump
    model: ModelKind = ModelKind.CLASSICAL
    mass_g: float = 1.0
    t_final: float = 1.0
    dt: float | None = None
    cfl: float = 0.25
    interpolation: str = "linear"
    cadence: int = 1
    radius: float = DEFAULT_RADIUS
    output_dir: str = "out"
    seed: int = 0
    support_tol: float = DEFAULT_SUPPORT_TOL
    snapshot_every: int = 0
    oracle: OracleConfig | None = None
    source: str | None = field(default=None, compare=False)

    def initial_state(self) -> SystemState:
        return init_two_bump(
            self.grid, TwoBumpParams(f=self.f, g=self.g, mass_g=self.mass_g, model=self.model)
        )

    def step_params(self, state: SystemState | None = None) -> StepParams:
        dt = self.dt
        if dt is None:
            dt = default_dt(state if state is not None else self.initial_state(), self.cfl)
        return StepParams(dt, self.interpolation, self.support_tol)

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output_dir)


_RUN_KEYS = {
    "model": str,
    "mass_g": float,
    "t_final": float,
    "dt": float,
    "cfl": float,
    "interpolation": str,
    "cadence": int,
    "radius": float,
    "output_dir": str,
    "seed": int,
    "support_tol": float,
    "snapshot_every": int,
}
_GRID_KEYS = {"x_min": float, "x_max": float, "n_x": int, "v_max": float, "n_v": int}
_BUMP_KEYS = {
    "x_center": float,
    "x_halfwidth": float,
    "v_center": float,
    "v_halfwidth": float,
    "amplitude": float,
}
_ORACLE_KEYS = {
    "n": int,
    "t_final": float,
    "tolerance": float,
    "x_min": float,
    "x_max": float,
    "n_x": int,
}
_SECTIONS = {
    "run": _RUN_KEYS,
    "grid": _GRID_KEYS,
    "species.f": _BUMP_KEYS,
    "species.g": _BUMP_KEYS,
    "oracle": _ORACLE_KEYS,
}


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """Map (section, key) to its 1-based line number."""
    index = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"([^=:#;]+?)\s*[=:]", s)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = no
    return index


def _convert(raw, kind, name, line):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind.__name__}", name, line) from None
    return raw.strip()


def parse_config(text: str, source: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], "syntax", line) from None
    lines = _line_index(text)

    values: dict[str, dict] = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError("unknown section", f"[{section}]")
        known = _SECTIONS[section]
        values[section] = {}
        for key, raw in cp.items(section):
            name = f"{section}.{key}"
            line = lines.get((section, key))
            if key not in known:
                raise ConfigError("unknown key", name, line)
            values[section][key] = _convert(raw, known[key], name, line)

    def where(section, key):
        return f"{section}.{key}", lines.get((section, key))

    if "grid" not in values:
        raise ConfigError("missing [grid] section", "grid")
    for key in _GRID_KEYS:
        if key not in values["grid"]:
            raise ConfigError("required key missing", f"grid.{key}")
    try:
        grid = PhaseGrid(**values["grid"])
    except ValueError as exc:
        raise ConfigError(str(exc), "grid") from None

    bumps = {}
    for name in ("f", "g"):
        section = f"species.{name}"
        try:
            bumps[name] = Bump(**values.get(section, {}))
        except ValueError as exc:
            raise ConfigError(str(exc), section) from None

    run = dict(values.get("run", {}))
    if "model" in run:
        try:
            run["model"] = ModelKind(run["model"].lower())
        except ValueError:
            raise ConfigError(
                f"expected one of {[m.value for m in ModelKind]}", *where("run", "model")
            ) from None
    checks = [
        ("mass_g", lambda v: v > 0, "must be positive"),
        ("t_final", lambda v: v >= 0, "must be non-negative"),
        ("dt", lambda v: v > 0, "must be positive"),
        ("cfl", lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        ("interpolation", lambda v: v in INTERPOLATIONS, f"expected one of {list(INTERPOLATIONS)}"),
        ("cadence", lambda v: v >= 1, "must be at least 1"),
        ("radius", lambda v: v > 0, "must be positive"),
        ("support_tol", lambda v: 0 < v < 1, "must lie in (0, 1)"),
        ("snapshot_every", lambda v: v >= 0, "must be non-negative"),
    ]
    for key, ok, message in checks:
        if key in run and not ok(run[key]):
            raise ConfigError(message, *where("run", key))

    oracle = None
    if "oracle" in values:
        o = values["oracle"]
        oracle = OracleConfig(**o)
        if oracle.n < 1:
            raise ConfigError("must be at least 1", *where("oracle", "n"))
        if not oracle.tolerance > 0:
            raise ConfigError("must be positive", *where("oracle", "tolerance"))
        for key in ("x_min", "x_max", "n_x"):
            given = getattr(oracle, key)
            if given is not None and given != getattr(grid, key):
                raise ConfigError(
                    f"oracle binning grid ({given}) differs from [grid] ({getattr(grid, key)})",
                    *where("oracle", key),
                )

    return RunConfig(grid=grid, f=bumps["f"], g=bumps["g"], oracle=oracle, source=source, **run)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, source=str(path))
