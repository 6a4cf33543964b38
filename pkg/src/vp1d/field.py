"""Velocity moments, charge and current densities, and the free-space field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import PhaseGrid, SystemState, transport_speed


@dataclass(frozen=True)
class MomentProfile:
    """Per-cell velocity moments of both species.

    ``first_moment_*`` and ``second_moment_*`` are moments in momentum
    ``v``; ``flux_*`` is the particle flux ``int u(v) s dv`` with the
    species transport speed ``u``.
    """

    F: np.ndarray
    G: np.ndarray
    first_moment_f: np.ndarray
    first_moment_g: np.ndarray
    second_moment_f: np.ndarray
    second_moment_g: np.ndarray
    flux_f: np.ndarray
    flux_g: np.ndarray
    # int v u(v) s dv; reduces to second_moment / mass in classical mode
    vu_moment_f: np.ndarray
    vu_moment_g: np.ndarray
    abs_first_moment: np.ndarray

    @property
    def e(self) -> np.ndarray:
        """Kinetic-energy density ``int v^2 (f + g) dv``."""
        return self.second_moment_f + self.second_moment_g


@dataclass(frozen=True)
class FieldState:
    rho: np.ndarray
    E: np.ndarray
    j: np.ndarray


def compute_moments(state: SystemState) -> MomentProfile:
    grid = state.grid
    v, dv = grid.v, grid.dv
    uf = transport_speed(v, state.model, state.f.mass)
    ug = transport_speed(v, state.model, state.g.mass)
    f, g = state.f.values, state.g.values
    return MomentProfile(
        F=f.sum(axis=1) * dv,
        G=g.sum(axis=1) * dv,
        first_moment_f=f @ v * dv,
        first_moment_g=g @ v * dv,
        second_moment_f=f @ (v * v) * dv,
        second_moment_g=g @ (v * v) * dv,
        flux_f=f @ uf * dv,
        flux_g=g @ ug * dv,
        vu_moment_f=f @ (v * uf) * dv,
        vu_moment_g=g @ (v * ug) * dv,
        abs_first_moment=(f + g) @ np.abs(v) * dv,
    )


def compute_rho(m: MomentProfile) -> np.ndarray:
    if m.F.shape != m.G.shape:
        raise ValueError(f"moment length mismatch: {m.F.shape} vs {m.G.shape}")
    return m.F - m.G


def cumulative_from_left(density: np.ndarray, dx: float) -> np.ndarray:
    """Midpoint integral of ``density`` from ``-inf`` to each cell centre.

    Cells to the left count fully, the cell itself by half.  With this
    convention consecutive values differ by the interface average
    ``(a[i] + a[i+1]) dx / 2``.
    """
    density = np.asarray(density, dtype=float)
    c = np.cumsum(density) * dx
    return c - 0.5 * density * dx


def compute_E(rho: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Symmetric free-space field ``(charge left - charge right) / 2`` at cell centres.

    The total charge enters explicitly, so non-neutral input is fine.
    """
    rho = np.asarray(rho, dtype=float)
    left = cumulative_from_left(rho, grid.dx)
    total = rho.sum() * grid.dx
    return left - 0.5 * total


def compute_current(state: SystemState, m: MomentProfile | None = None) -> np.ndarray:
    """Charge current ``int u_f f dv - int u_g g dv``."""
    if m is None:
        m = compute_moments(state)
    return m.flux_f - m.flux_g


def compute_field(state: SystemState, m: MomentProfile | None = None) -> FieldState:
    if m is None:
        m = compute_moments(state)
    rho = compute_rho(m)
    return FieldState(rho=rho, E=compute_E(rho, state.grid), j=compute_current(state, m))


def gauss_law_mismatch(E: np.ndarray, rho: np.ndarray, dx: float) -> float:
    """Largest deviation of ``dE/dx`` from the interface-averaged charge.

    Normalised by ``max |rho|``; returns 0 for a vanishing charge density.
    """
    scale = np.abs(rho).max() if rho.size else 0.0
    if scale == 0.0:
        return float(np.abs(E).max()) if E.size else 0.0
    lhs = np.diff(E) / dx
    rhs = 0.5 * (rho[1:] + rho[:-1])
    return float(np.abs(lhs - rhs).max() / scale) if lhs.size else 0.0
