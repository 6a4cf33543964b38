"""Two-species Vlasov-Poisson in one space and one momentum dimension."""
from .phase_space import (
    Bump,
    ModelKind,
    PhaseGrid,
    SpeciesState,
    SystemState,
    TwoBumpParams,
    init_two_bump,
    species_mass,
    transport_speed,
)
from .field import MomentProfile, FieldState, compute_E, compute_current, compute_moments, compute_rho
from .integrator import StepParams, SupportEscapeError, advect_v, advect_x, step, support_escape
from .diagnostics import (
    DiagnosticsRecord,
    TimeIntegrals,
    VirialLedger,
    accumulate,
    audit_virial,
    kdefect_bruteforce,
    moment_interpolation_check,
    record,
)

__version__ = "0.1.0"
