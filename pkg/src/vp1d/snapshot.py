"""Flat binary phase-space snapshots.

Layout (little endian): a 64-byte header followed by ``f`` and ``g`` as
float64 arrays of shape ``(n_x, n_v)`` in row-major order.

=======  =====  ==========================================
offset   type   content
=======  =====  ==========================================
0        4s     magic ``b"VP1D"``
4        u2     format version (1)
6        u1     model (0 classical, 1 relativistic)
7        u1     reserved
8        u4     n_x
12       u4     n_v
16       f8     x_min
24       f8     v_max
32       f8     dx
40       f8     dv
48       f8     t
56       f8     mass of g
=======  =====  ==========================================
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .phase_space import ModelKind, PhaseGrid, SpeciesState, SystemState

MAGIC = b"VP1D"
VERSION = 1
HEADER = struct.Struct("<4sHBxIIdddddd")
assert HEADER.size == 64

_MODELS = [ModelKind.CLASSICAL, ModelKind.RELATIVISTIC]


class SnapshotError(ValueError):
    pass


def write_snapshot(path, state: SystemState) -> None:
    grid = state.grid
    header = HEADER.pack(
        MAGIC,
        VERSION,
        _MODELS.index(state.model),
        grid.n_x,
        grid.n_v,
        grid.x_min,
        grid.v_max,
        grid.dx,
        grid.dv,
        state.t,
        state.g.mass,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.f.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.g.values, dtype="<f8").tobytes())


def read_snapshot(path) -> SystemState:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise SnapshotError(f"{path}: file shorter than the 64-byte header")
    magic, version, model, n_x, n_v, x_min, v_max, dx, dv, t, mass_g = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported version {version}")
    if model >= len(_MODELS):
        raise SnapshotError(f"{path}: unknown model code {model}")
    count = n_x * n_v
    if len(raw) != HEADER.size + 16 * count:
        raise SnapshotError(f"{path}: expected {2 * count} values after the header")
    grid = PhaseGrid(x_min, x_min + n_x * dx, n_x, v_max, n_v)
    body = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(2, n_x, n_v)
    return SystemState(
        f=SpeciesState(body[0].astype(float), mass=1.0, charge_sign=1),
        g=SpeciesState(body[1].astype(float), mass=mass_g, charge_sign=-1),
        grid=grid,
        t=t,
        model=_MODELS[model],
    )
