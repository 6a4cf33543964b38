"""Phase-space grid, species containers and initial data.

Both coordinates are cell-centred: ``x_i = x_min + (i + 1/2) dx`` and
``v_j = -v_max + (j + 1/2) dv``, so the momentum nodes come in ``+/-``
pairs and every integral is a plain midpoint sum.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

TOL_NEUTRAL = 1e-10


class ParameterError(ValueError):
    """Invalid physical or numerical parameter."""


class ConfigurationError(ValueError):
    """Initial data or grid setup that cannot be represented."""


class ModelKind(str, enum.Enum):
    CLASSICAL = "classical"
    RELATIVISTIC = "relativistic"


@dataclass(frozen=True)
class PhaseGrid:
    x_min: float
    x_max: float
    n_x: int
    v_max: float
    n_v: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_v < 1:
            raise ParameterError("grid needs at least one cell per direction")
        if not self.x_max > self.x_min:
            raise ParameterError("x_max must exceed x_min")
        if not self.v_max > 0:
            raise ParameterError("v_max must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_v

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    @property
    def v(self) -> np.ndarray:
        # built symmetrically so that v[::-1] == -v holds bit for bit
        half = (np.arange(self.n_v) - 0.5 * (self.n_v - 1)) * self.dv
        return half

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_v)


@dataclass(frozen=True)
class SpeciesState:
    """Gridded density of one species, indexed ``values[i_x, j_v]``."""

    values: np.ndarray
    mass: float = 1.0
    charge_sign: int = 1

    def __post_init__(self):
        if self.mass <= 0:
            raise ParameterError(f"species mass must be positive, got {self.mass}")
        if self.charge_sign not in (1, -1):
            raise ParameterError("charge_sign must be +1 or -1")

    def with_values(self, values: np.ndarray) -> "SpeciesState":
        return replace(self, values=values)


@dataclass(frozen=True)
class SystemState:
    f: SpeciesState
    g: SpeciesState
    grid: PhaseGrid
    t: float = 0.0
    model: ModelKind = ModelKind.CLASSICAL

    def __post_init__(self):
        if self.f.charge_sign != 1 or self.g.charge_sign != -1:
            raise ParameterError("f must carry charge +1 and g charge -1")
        for s in (self.f, self.g):
            if s.values.shape != self.grid.shape:
                raise ParameterError(
                    f"species array shape {s.values.shape} does not match grid {self.grid.shape}"
                )

    def species(self):
        return (self.f, self.g)

    def evolve(self, f_values, g_values, dt):
        return replace(
            self,
            f=self.f.with_values(f_values),
            g=self.g.with_values(g_values),
            t=self.t + dt,
        )

    def is_neutral(self, tol: float = TOL_NEUTRAL) -> bool:
        mf = species_mass(self.f, self.grid)
        mg = species_mass(self.g, self.grid)
        return abs(mf - mg) <= tol * mf


def transport_speed(v, model: ModelKind | str, mass: float):
    """Particle velocity as a function of momentum ``v``.

    Classical: ``v / mass``.  Relativistic: ``v / sqrt(mass**2 + v**2)``,
    always below one in magnitude.
    """
    if not mass > 0:
        raise ParameterError(f"mass must be positive, got {mass}")
    model = ModelKind(model)
    v = np.asarray(v, dtype=float)
    if model is ModelKind.CLASSICAL:
        return v / mass
    return v / np.sqrt(mass * mass + v * v)


def kinetic_energy(v, model: ModelKind | str, mass: float):
    """Kinetic energy per particle of momentum ``v``."""
    model = ModelKind(model)
    v = np.asarray(v, dtype=float)
    if model is ModelKind.CLASSICAL:
        return 0.5 * v * v / mass
    # sqrt(m^2+v^2) - m without cancellation for small v
    return v * v / (np.sqrt(mass * mass + v * v) + mass)


def species_mass(s: SpeciesState, grid: PhaseGrid) -> float:
    return float(s.values.sum() * grid.dx * grid.dv)


@dataclass(frozen=True)
class Bump:
    """Squared-cosine bump ``amplitude * c(x) * c(v)``.

    ``c(y) = cos(pi (y - center) / (2 halfwidth))**2`` inside the half-width
    and zero outside; the profile is C1 and exactly compactly supported.
    """

    x_center: float = 0.0
    x_halfwidth: float = 1.0
    v_center: float = 0.0
    v_halfwidth: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.x_halfwidth <= 0 or self.v_halfwidth <= 0:
            raise ParameterError("bump half-widths must be positive")
        if self.amplitude <= 0:
            raise ParameterError("bump amplitude must be positive")

    def exact_mass(self) -> float:
        # each cos^2 factor integrates to its half-width
        return self.amplitude * self.x_halfwidth * self.v_halfwidth

    def evaluate(self, grid: PhaseGrid) -> np.ndarray:
        cx = _cos2(grid.x, self.x_center, self.x_halfwidth)
        cv = _cos2(grid.v, self.v_center, self.v_halfwidth)
        return self.amplitude * np.outer(cx, cv)


def _cos2(y, center, halfwidth):
    s = (y - center) / halfwidth
    out = np.cos(0.5 * np.pi * s) ** 2
    out[np.abs(s) >= 1.0] = 0.0
    return out


@dataclass(frozen=True)
class TwoBumpParams:
    f: Bump = field(default_factory=Bump)
    g: Bump = field(default_factory=Bump)
    mass_g: float = 1.0
    model: ModelKind = ModelKind.CLASSICAL


def init_two_bump(grid: PhaseGrid, params: TwoBumpParams) -> SystemState:
    """Build ``f`` and ``g`` from their bumps and rescale ``g`` to neutrality.

    Raises
    ------
    ConfigurationError
        If a bump's support reaches the edge of the grid.
    """
    lo_x, hi_x = grid.x_min, grid.x_max
    for name, b in (("f", params.f), ("g", params.g)):
        if b.x_center - b.x_halfwidth <= lo_x or b.x_center + b.x_halfwidth >= hi_x:
            raise ConfigurationError(
                f"species {name}: x-support [{b.x_center - b.x_halfwidth}, "
                f"{b.x_center + b.x_halfwidth}] touches the grid edge [{lo_x}, {hi_x}]"
            )
        if b.v_center - b.v_halfwidth <= -grid.v_max or b.v_center + b.v_halfwidth >= grid.v_max:
            raise ConfigurationError(
                f"species {name}: v-support touches the momentum cutoff +/-{grid.v_max}"
            )

    fv = params.f.evaluate(grid)
    gv = params.g.evaluate(grid)
    if not fv.any() or not gv.any():
        raise ConfigurationError("a bump is narrower than one cell and vanishes on the grid")
    gv = gv * (fv.sum() / gv.sum())
    return SystemState(
        f=SpeciesState(fv, mass=1.0, charge_sign=1),
        g=SpeciesState(gv, mass=params.mass_g, charge_sign=-1),
        grid=grid,
        t=0.0,
        model=ModelKind(params.model),
    )
