"""Time loop shared by the command line and the test suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import DEFAULT_RADIUS, DiagnosticsRecord, TimeIntegrals, accumulate, audit_virial, record
from .integrator import StepParams, step
from .phase_space import ModelKind, SystemState

COLUMNS = [
    "t",
    "Q",
    "E_inf",
    "E_inf3",
    "3Q",
    "L4",
    "L74",
    "local_charge_F",
    "local_charge_G",
    "kdefect_f",
    "kdefect_g",
    "mass_f",
    "mass_g",
    "energy_total",
    "dQdt_formula",
    "dQdt_fd",
    "int_Q",
    "int_L4",
    "int_Einf3",
    "virial_residual",
]


class NumericalError(RuntimeError):
    def __init__(self, step_index, t):
        self.step_index = step_index
        self.t = t
        super().__init__(f"non-finite phase-space value after step {step_index} (t={t:.6g})")


def plan_steps(t_final: float, dt: float) -> tuple[int, float]:
    """Number of steps and the (possibly shortened) step landing exactly on ``t_final``."""
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if t_final == 0:
        return 0, dt
    n = max(1, math.ceil(t_final / dt - 1e-9))
    return n, t_final / n


def fd_derivative(values, k, dt):
    """Centred difference of a sampled series, second-order one-sided at the ends."""
    n = len(values)
    if n < 2:
        return float("nan")
    if n == 2:
        return (values[1] - values[0]) / dt
    if k == 0:
        return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
    if k == n - 1:
        return (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dt)
    return (values[k + 1] - values[k - 1]) / (2.0 * dt)


@dataclass
class RunResult:
    rows: list[dict] = field(default_factory=list)
    final: SystemState | None = None
    dt: float = 0.0
    n_steps: int = 0
    integrals: TimeIntegrals = field(default_factory=TimeIntegrals)


def make_row(rec: DiagnosticsRecord, ti: TimeIntegrals | None = None, fd=math.nan, residual=math.nan) -> dict:
    """CSV row for one record; history-dependent columns default to NaN."""
    nan = math.nan
    return {
        "t": rec.t,
        "Q": rec.Q,
        "E_inf": rec.E_inf,
        "E_inf3": rec.E_inf**3,
        "3Q": rec.E_inf_cubed_bound,
        "L4": rec.L4,
        "L74": rec.L74,
        "local_charge_F": rec.local_charge_F,
        "local_charge_G": rec.local_charge_G,
        "kdefect_f": rec.kdefect_f,
        "kdefect_g": rec.kdefect_g,
        "mass_f": rec.mass_f,
        "mass_g": rec.mass_g,
        "energy_total": rec.energy_total,
        "dQdt_formula": rec.dQdt,
        "dQdt_fd": fd,
        "int_Q": ti.int_Q if ti is not None else nan,
        "int_L4": ti.int_L4 if ti is not None else nan,
        "int_Einf3": ti.int_Einf3 if ti is not None else nan,
        "virial_residual": residual,
    }


def simulate(
    state: SystemState,
    params: StepParams,
    t_final: float,
    R: float = DEFAULT_RADIUS,
    cadence: int = 1,
    observer=None,
    on_row=None,
) -> RunResult:
    """Advance ``state`` to ``t_final`` and collect one row every ``cadence`` steps.

    ``observer(k, state, record, ledger)`` is called after every step
    (``ledger`` is ``None`` at ``k == 0`` and in relativistic mode);
    ``on_row(row)`` receives each emitted row as soon as it is complete.
    Rows are emitted one step late because ``dQdt_fd`` is centred.
    """
    if cadence < 1:
        raise ValueError("cadence must be a positive integer")
    n_steps, dt = plan_steps(t_final, params.dt)
    if n_steps:
        params = StepParams(dt, params.interpolation, params.support_tol)
    classical = state.model is ModelKind.CLASSICAL

    result = RunResult(dt=dt, n_steps=n_steps)
    Qs: list[float] = []
    pending: dict[int, tuple] = {}

    def flush(k):
        rec, ti, residual = pending.pop(k)
        # Qs holds every step; the derivative only looks at neighbours
        row = make_row(rec, ti, fd_derivative(Qs, k, dt), residual)
        result.rows.append(row)
        if on_row is not None:
            on_row(row)

    ti = TimeIntegrals()
    rec = record(state, R)
    ti = accumulate(ti, rec, dt)
    Qs.append(rec.Q)
    if observer is not None:
        observer(0, state, rec, None)
    pending[0] = (rec, ti, float("nan"))

    t0 = state.t
    for k in range(1, n_steps + 1):
        new = step(state, params)
        # avoid round-off creep in t; the last row lands on t_final exactly
        new = replace(new, t=t_final + t0 if k == n_steps else t0 + k * dt)
        if not (np.isfinite(new.f.values).all() and np.isfinite(new.g.values).all()):
            raise NumericalError(k, new.t)
        ledger = audit_virial(state, new, dt) if classical else None
        rec = record(new, R)
        ti = accumulate(ti, rec, dt)
        Qs.append(rec.Q)
        if observer is not None:
            observer(k, new, rec, ledger)
        if k % cadence == 0 or k == n_steps:
            pending[k] = (rec, ti, ledger.residual if ledger is not None else float("nan"))
        # interior rows need step j+1; row 0 waits for two neighbours
        for j in sorted(pending):
            if j <= k - 1 and (j > 0 or k >= 2):
                flush(j)
        state = new

    for j in sorted(pending):
        flush(j)
    result.final = state
    result.integrals = ti
    return result
