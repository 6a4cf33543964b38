"""Macro-particle reference solver.

In one dimension the field of a set of point charges is known exactly:
a particle feels half the difference between the signed charge strictly
to its left and strictly to its right.  No mesh is involved, which makes
this an independent check on the grid solver.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .phase_space import ModelKind, PhaseGrid, SystemState, kinetic_energy, species_mass, transport_speed


class EmptySpeciesError(ValueError):
    pass


@dataclass(frozen=True)
class Species:
    x: np.ndarray
    v: np.ndarray
    weight: float
    mass: float
    charge_sign: int

    @property
    def total_weight(self) -> float:
        return self.weight * self.x.size


@dataclass(frozen=True)
class ParticleEnsemble:
    f: Species
    g: Species
    t: float = 0.0
    model: ModelKind = ModelKind.CLASSICAL

    def species(self):
        return (self.f, self.g)


def _sample_species(values, grid: PhaseGrid, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    # cells ordered x-major, so the particle count left of any cell edge is exact to +-1
    flat = values.ravel()
    cdf = np.cumsum(flat)
    cdf /= cdf[-1]
    u = (np.arange(n) + rng.random(n)) / n
    cell = np.minimum(np.searchsorted(cdf, u, side="right"), flat.size - 1)
    ix, iv = np.divmod(cell, grid.n_v)
    x = grid.x_min + (ix + rng.random(n)) * grid.dx
    v = -grid.v_max + (iv + rng.random(n)) * grid.dv
    return x, v


def sample(state: SystemState, N: int, seed: int = 0) -> ParticleEnsemble:
    """Stratified sample of ``N`` particles per species.

    Both species get equal per-particle weight ``mass_f / N`` so the
    ensemble is exactly neutral.
    """
    if N < 1:
        raise ValueError("need at least one particle per species")
    grid = state.grid
    rng = np.random.default_rng(seed)
    mass_f = species_mass(state.f, grid)
    out = []
    for name, s in (("f", state.f), ("g", state.g)):
        if not (s.values > 0).any():
            raise EmptySpeciesError(f"species {name} is empty")
        x, v = _sample_species(s.values, grid, N, rng)
        out.append(Species(x, v, mass_f / N, s.mass, s.charge_sign))
    return ParticleEnsemble(out[0], out[1], t=state.t, model=state.model)


def _sorted_charges(ens: ParticleEnsemble):
    x = np.concatenate([s.x for s in ens.species()])
    q = np.concatenate([np.full(s.x.size, s.charge_sign * s.weight) for s in ens.species()])
    order = np.argsort(x, kind="stable")
    return x[order], q[order], order


def field_at_particles(ens: ParticleEnsemble) -> np.ndarray:
    """Exact field at every particle, ``f`` particles first then ``g``.

    Particles at the same position neither see themselves nor each other
    (their contributions split evenly left and right and cancel).
    """
    xs, qs, order = _sorted_charges(ens)
    if xs.size == 0:
        return np.zeros(0)
    total = qs.sum()
    # group coincident positions
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    group_q = np.add.reduceat(qs, starts)
    left = np.cumsum(group_q) - group_q
    right = total - left - group_q
    E_group = 0.5 * (left - right)
    sizes = np.diff(np.r_[starts, xs.size])
    E_sorted = np.repeat(E_group, sizes)
    E = np.empty_like(E_sorted)
    E[order] = E_sorted
    return E


def field_at(ens: ParticleEnsemble, x) -> np.ndarray:
    """Field of the point charges at arbitrary probe positions."""
    xs, qs, _ = _sorted_charges(ens)
    x = np.asarray(x, dtype=float)
    c = np.r_[0.0, np.cumsum(qs)]
    total = c[-1]
    lo = c[np.searchsorted(xs, x, side="left")]
    hi = c[np.searchsorted(xs, x, side="right")]
    # charges sitting exactly at a probe count half left, half right
    left = 0.5 * (lo + hi)
    return left - 0.5 * total


def _kick(ens: ParticleEnsemble, E, dt) -> ParticleEnsemble:
    n_f = ens.f.x.size
    f = replace(ens.f, v=ens.f.v + ens.f.charge_sign * E[:n_f] * dt)
    g = replace(ens.g, v=ens.g.v + ens.g.charge_sign * E[n_f:] * dt)
    return replace(ens, f=f, g=g)


def _drift(ens: ParticleEnsemble, dt) -> ParticleEnsemble:
    f, g = (
        replace(s, x=s.x + transport_speed(s.v, ens.model, s.mass) * dt) for s in ens.species()
    )
    return replace(ens, f=f, g=g)


def pic_step(ens: ParticleEnsemble, dt: float, model=None) -> ParticleEnsemble:
    """Kick-drift-kick leapfrog along the characteristics."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if model is not None:
        ens = replace(ens, model=ModelKind(model))
    ens = _kick(ens, field_at_particles(ens), 0.5 * dt)
    ens = _drift(ens, dt)
    ens = _kick(ens, field_at_particles(ens), 0.5 * dt)
    return replace(ens, t=ens.t + dt)


def total_momentum(ens: ParticleEnsemble) -> float:
    return float(sum(s.weight * s.v.sum() for s in ens.species()))


def field_energy(ens: ParticleEnsemble) -> float:
    """``1/2 int E^2 dx`` of the piecewise-constant particle field."""
    xs, qs, _ = _sorted_charges(ens)
    if xs.size < 2:
        return 0.0
    c = np.cumsum(qs)
    E_gap = c[:-1] - 0.5 * c[-1]
    return 0.5 * float((E_gap**2 * np.diff(xs)).sum())


def energy_total(ens: ParticleEnsemble) -> float:
    kinetic = sum(float(s.weight * kinetic_energy(s.v, ens.model, s.mass).sum()) for s in ens.species())
    return kinetic + field_energy(ens)


def bin_density(ens: ParticleEnsemble, grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """Spatial densities ``F`` and ``G`` by nearest-cell counting."""
    edges = grid.x_min + np.arange(grid.n_x + 1) * grid.dx
    out = []
    for s in ens.species():
        counts, _ = np.histogram(s.x, bins=edges)
        out.append(counts * s.weight / grid.dx)
    return out[0], out[1]


def binned_Q(ens: ParticleEnsemble, grid: PhaseGrid) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """``int E^2 (F + G) dx`` with binned densities and the exact field at cell centres."""
    F, G = bin_density(ens, grid)
    E = field_at(ens, grid.x)
    return float((E * E * (F + G)).sum() * grid.dx), F, G, E
