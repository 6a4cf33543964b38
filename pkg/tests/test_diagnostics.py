import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vp1d.diagnostics import (
    DiagnosticsRecord,
    TimeIntegrals,
    UnsupportedModelError,
    accumulate,
    audit_virial,
    kdefect_bruteforce,
    moment_interpolation_check,
    record,
    virial_terms,
)
from vp1d.field import compute_moments
from vp1d.integrator import StepParams
from vp1d.phase_space import (
    Bump,
    ModelKind,
    PhaseGrid,
    SpeciesState,
    SystemState,
    TwoBumpParams,
    init_two_bump,
)
from vp1d.simulation import simulate


def state_of(grid, f, g, model=ModelKind.CLASSICAL, mass_g=1.0):
    return SystemState(SpeciesState(f, 1.0, 1), SpeciesState(g, mass_g, -1), grid, model=model)


def indicator_state():
    grid = PhaseGrid(-1.0, 1.0, 1, 2.0, 40)
    f = (np.abs(grid.v) <= 1.0).astype(float)[None, :]
    return state_of(grid, f, np.zeros_like(f))


def random_neutral_state(rng, n_x=None, n_v=None):
    n_x = n_x or int(rng.integers(4, 40))
    n_v = n_v or int(rng.integers(4, 64))
    grid = PhaseGrid(-3.0, 3.0, n_x, 2.0, n_v)
    f = rng.random((n_x, n_v)) * (rng.random((n_x, n_v)) < 0.7)
    g = rng.random((n_x, n_v)) * (rng.random((n_x, n_v)) < 0.7)
    f[0] = f[-1] = g[0] = g[-1] = 0.0
    f[1, 1] += 1.0
    g[2, 2] += 1.0
    g *= f.sum() / g.sum()
    return state_of(grid, f, g)


def test_neutral_cancelling_state_has_no_field(small_grid):
    b = Bump(0.0, 2.0, 0.3, 1.0, 1.0)
    s = init_two_bump(small_grid, TwoBumpParams(f=b, g=b))
    r = record(s)
    assert r.Q == 0.0 and r.E_inf == 0.0 and r.dQdt == 0.0


def test_indicator_kdefect_and_bruteforce():
    s = indicator_state()
    r = record(s)
    dv, dx = s.grid.dv, s.grid.dx
    cell_value = r.kdefect_f / dx
    # F * int v^2 f - (int v f)^2 = 2 * 2/3 - 0, and half the double integral over [-1,1]^2
    assert abs(cell_value - 4.0 / 3.0) <= 2 * dv**2
    assert abs(cell_value - 0.5 * 8.0 / 3.0) <= 2 * dv**2
    brute = kdefect_bruteforce(s.f, s.grid)
    assert brute == pytest.approx(r.kdefect_f, rel=1e-10)
    assert r.kdefect_g == 0.0


def test_bruteforce_trivial_cases():
    grid = PhaseGrid(0, 1, 3, 1, 8)
    z = np.zeros(grid.shape)
    assert kdefect_bruteforce(SpeciesState(z), grid) == 0.0
    z[1, 4] = 2.5
    assert kdefect_bruteforce(SpeciesState(z), grid) == 0.0


def test_kdefect_matches_bruteforce_on_random_states(rng):
    for _ in range(20):
        s = random_neutral_state(rng)
        r = record(s)
        assert kdefect_bruteforce(s.f, s.grid) == pytest.approx(r.kdefect_f, rel=1e-10)
        assert kdefect_bruteforce(s.g, s.grid) == pytest.approx(r.kdefect_g, rel=1e-10)


def test_local_charge_covers_full_support(small_state):
    r = record(small_state, R=50.0)
    assert r.local_charge_F == pytest.approx(r.mass_f, rel=1e-14)
    assert r.local_charge_G == pytest.approx(r.mass_g, rel=1e-14)
    r2 = record(small_state, R=0.5)
    assert 0 < r2.local_charge_F < r.local_charge_F


def test_radius_must_be_positive(small_state):
    with pytest.raises(ValueError):
        record(small_state, R=0.0)


def test_record_invariants_on_random_states(rng):
    for _ in range(50):
        s = random_neutral_state(rng)
        r = record(s)
        assert r.Q >= 0 and r.L4 >= 0 and r.L74 >= 0
        assert r.kdefect_f >= -1e-12 and r.kdefect_g >= -1e-12
        assert r.local_charge_F >= 0 and r.local_charge_G >= 0
        assert r.cubic_bound_holds()
        assert r.E_inf <= 0.5 * (r.mass_f + r.mass_g)


# nonzero entries stay well above the subnormal range so the neutral rescale cannot overflow
density = st.one_of(st.just(0.0), st.floats(1e-3, 50))


@settings(max_examples=200)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 6)), elements=density),
    st.data(),
    st.floats(0.05, 10.0),
)
def test_cubic_field_bound_on_neutral_states(f, data, length):
    g = data.draw(arrays(np.float64, f.shape, elements=density))
    if not f.any() or not g.any():
        return
    g = g * (f.sum() / g.sum())
    grid = PhaseGrid(0.0, length, f.shape[0], 1.0, f.shape[1])
    assert record(state_of(grid, f, g)).cubic_bound_holds()


def test_dQdt_formula_matches_finite_difference():
    # agreement improves under refinement (O(dt^2) + O(h))
    errors = []
    for n, dt in ((64, 0.05), (128, 0.025)):
        grid = PhaseGrid(-12, 12, n, 4, n)
        s = init_two_bump(grid, TwoBumpParams(f=Bump(-0.5, 2, 0, 1, 1), g=Bump(0.5, 3, 0, 1.5, 1)))
        res = simulate(s, StepParams(dt, "pfc"), 2.0)
        fd = np.array([r["dQdt_fd"] for r in res.rows])
        fo = np.array([r["dQdt_formula"] for r in res.rows])
        errors.append(np.abs(fd - fo).max() / np.abs(fo).max())
    assert errors[0] < 0.2
    assert errors[1] < errors[0]


def test_dQdt_formula_relativistic_consistent():
    grid = PhaseGrid(-12, 12, 128, 4, 128)
    s = init_two_bump(
        grid,
        TwoBumpParams(f=Bump(-0.5, 2, 0, 1, 1), g=Bump(0.5, 3, 0, 1.5, 1), mass_g=2.0, model="relativistic"),
    )
    res = simulate(s, StepParams(0.025, "pfc"), 2.0)
    fd = np.array([r["dQdt_fd"] for r in res.rows])
    fo = np.array([r["dQdt_formula"] for r in res.rows])
    assert np.abs(fd - fo).max() <= 0.1 * np.abs(fo).max()


# --- virial ledger ---------------------------------------------------------------


def test_virial_rejects_relativistic(small_state):
    from dataclasses import replace

    rel = replace(small_state, model=ModelKind.RELATIVISTIC)
    with pytest.raises(UnsupportedModelError):
        audit_virial(rel, rel, 0.1)


def free_stream_state(grid, bump, t):
    X = grid.x[:, None] - grid.v[None, :] * t
    sx = (X - bump.x_center) / bump.x_halfwidth
    sv = (grid.v - bump.v_center) / bump.v_halfwidth
    cx = np.where(np.abs(sx) < 1, np.cos(0.5 * np.pi * sx) ** 2, 0.0)
    cv = np.where(np.abs(sv) < 1, np.cos(0.5 * np.pi * sv) ** 2, 0.0)
    vals = bump.amplitude * cx * cv[None, :]
    return state_of(grid, vals, vals.copy())


def test_virial_free_streaming_closed_form():
    # f = g, symmetric in v: no field, M(0) = A(0) = 0 and dM/dt(0) = B_f + B_g
    grid = PhaseGrid(-8, 8, 800, 2, 400)
    bump = Bump(0.0, 2.0, 0.0, 1.0, 1.0)
    t0 = virial_terms(free_stream_state(grid, bump, 0.0))
    assert abs(t0.M) < 1e-14 and abs(t0.A_f) < 1e-14 and t0.L == 0.0
    # B = int F int v^2 f: A^2 wv * wv^3 (1/3 - 2/pi^2) * (3/4) wx for the cos^2 bump
    a, wx, wv = bump.amplitude, bump.x_halfwidth, bump.v_halfwidth
    B_exact = a * a * wv * wv**3 * (1 / 3 - 2 / np.pi**2) * 0.75 * wx
    assert t0.B_f == pytest.approx(B_exact, rel=1e-3)
    tau = 0.01
    led = audit_virial(free_stream_state(grid, bump, -tau), free_stream_state(grid, bump, tau), 2 * tau)
    assert led.dMdt == pytest.approx(2 * B_exact, rel=1e-3)
    assert led.L == 0.0
    assert abs(led.residual) <= 1e-3 * led.B_f


def test_virial_signs_on_random_states(rng):
    for _ in range(30):
        a = random_neutral_state(rng, 16, 24)
        b = random_neutral_state(rng, 16, 24)
        led = audit_virial(a, b, 0.1)
        assert led.signs_ok()
        assert led.L <= 0 and led.A_f <= led.B_f and led.A_g <= led.B_g


def test_virial_residual_small_along_a_run():
    grid = PhaseGrid(-12, 12, 128, 4, 128)
    s = init_two_bump(grid, TwoBumpParams(f=Bump(-0.5, 2, 0, 1, 1), g=Bump(0.5, 3, 0, 1.5, 1)))
    ledgers = []
    simulate(s, StepParams(0.025, "pfc"), 1.0, observer=lambda k, st, rec, led: led and ledgers.append(led))
    scale = max(max(abs(l.B_f), abs(l.B_g), abs(l.L)) for l in ledgers)
    assert max(abs(l.residual) for l in ledgers) < 0.02 * scale
    assert all(l.signs_ok() for l in ledgers)


def test_virial_mass_g_enters_through_transport_speed():
    grid = PhaseGrid(-8, 8, 200, 3, 120)
    bump = Bump(0.0, 2.0, 0.0, 1.0, 1.0)
    s = init_two_bump(grid, TwoBumpParams(f=bump, g=bump, mass_g=3.0))
    t = virial_terms(s)
    assert t.B_g == pytest.approx(t.B_f / 3.0, rel=1e-12)


# --- moment interpolation ------------------------------------------------------------


def test_interpolation_check_empty_state(small_grid):
    z = np.zeros(small_grid.shape)
    rep = moment_interpolation_check(compute_moments(state_of(small_grid, z, z)))
    assert rep.empty and rep.max_F_ratio == 0.0


def test_interpolation_check_indicator():
    s = indicator_state()
    rep = moment_interpolation_check(compute_moments(s))
    assert rep.n_cells == 1
    assert rep.max_F_ratio == pytest.approx(2.0 / (2.0 / 3.0) ** (1 / 3), rel=5e-3)
    assert rep.max_F_ratio == pytest.approx(2.289, abs=1e-2)
    # int |v| over [-1, 1] is 1
    assert rep.max_abs_first_ratio == pytest.approx(1.0 / (2.0 / 3.0) ** (2 / 3), rel=5e-3)


# --- time integrals ---------------------------------------------------------------------


def _rec(t, Q=0.0, E_inf=0.0, L4=0.0, L74=0.0):
    return DiagnosticsRecord(t, Q, E_inf, 3 * Q, L4, L74, 0, 0, 0, 0, 0, 0, 0, 0)


def test_accumulate_zero_record():
    ti = TimeIntegrals()
    for k in range(5):
        ti = accumulate(ti, _rec(0.1 * k), 0.1)
    assert (ti.int_Q, ti.int_L4, ti.int_L74, ti.int_Einf3) == (0.0, 0.0, 0.0, 0.0)


def test_accumulate_constant_is_exact():
    ti = TimeIntegrals()
    for k in range(11):
        ti = accumulate(ti, _rec(0.1 * k, Q=1.0, E_inf=2.0), 0.1)
    assert ti.int_Q == pytest.approx(1.0, rel=1e-15)
    assert ti.int_Einf3 == pytest.approx(8.0, rel=1e-15)


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=30), st.floats(1e-6, 10))
def test_accumulate_is_monotone(values, dt):
    ti = TimeIntegrals()
    prev = 0.0
    for k, q in enumerate(values):
        ti = accumulate(ti, _rec(k * dt, Q=q, E_inf=q ** (1 / 3), L4=q, L74=q), dt)
        assert ti.int_Q >= prev
        prev = ti.int_Q


def test_accumulate_rejects_bad_dt():
    with pytest.raises(ValueError):
        accumulate(TimeIntegrals(), _rec(0.0), 0.0)
