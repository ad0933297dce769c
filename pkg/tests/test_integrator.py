import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twofilm.basis import SpectralBasis
from twofilm.config import initial_state, reference_config
from twofilm.diagnostics import energy
from twofilm.integrator import (
    IntegratorControls,
    ScalarTestSystem,
    StiffnessAbort,
    adapt_dt,
    integrate,
    step,
)
from twofilm.rhs import GalerkinState, NumericError, SystemParams

# recorded by this implementation: reference scenario, final energy at T = 0.1
REFERENCE_ENERGY_T = {1e-8: 0.0522906152061722, 1e-10: 0.05229061520755366}


def test_adapt_dt_examples():
    assert adapt_dt(1.0, 0.01) == pytest.approx(0.009, rel=1e-15)
    assert adapt_dt(1e-10, 0.01) == pytest.approx(0.05, rel=1e-15)
    assert adapt_dt(1e6, 0.01) == pytest.approx(0.002, rel=1e-15)
    assert adapt_dt(0.0, 0.01) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        adapt_dt(-1.0, 0.01)


@given(err=st.floats(0, 1e12), dt=st.floats(1e-12, 10))
def test_adapt_dt_clamped(err, dt):
    out = adapt_dt(err, dt)
    assert 0.2 * dt * (1 - 1e-15) <= out <= 5.0 * dt * (1 + 1e-15)


def test_controls_validation():
    with pytest.raises(ValueError):
        IntegratorControls(t_final=1.0, dt_init=1e-16)
    with pytest.raises(ValueError):
        IntegratorControls(t_final=1.0, rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorControls(t_final=-1.0)
    with pytest.raises(ValueError):
        IntegratorControls(t_final=1.0, method="euler")
    c = IntegratorControls(t_final=1.0)
    assert c.slack_for(0.5) == 1e-10 and c.slack_for(30.0) == pytest.approx(3e-9)


@pytest.mark.parametrize("method", ["dopri5", "limex"])
def test_scalar_hook_single_step(method):
    # the defaults for the explicit pair; the extrapolated one has a larger estimate
    c = IntegratorControls(t_final=1.0) if method == "dopri5" else IntegratorControls(t_final=1.0, rel_tol=1e-6)
    res = step(np.array([1.0]), 0.1, None, None, c, system=ScalarTestSystem(), method=method)
    assert res.accepted
    assert res.state[0] == pytest.approx(math.exp(-0.1), abs=1e-9)
    if method == "dopri5":
        assert res.state[0] == pytest.approx(0.9048374180359595, abs=1e-9)
        assert res.err_abs <= c.rel_tol
        assert res.err_est <= 1.0


def _global_error(method, steps):
    c = IntegratorControls(t_final=1.0, rel_tol=1.0, abs_tol=1.0)
    y = np.array([1.0])
    for _ in range(steps):
        y = step(y, 1.0 / steps, None, None, c, system=ScalarTestSystem(), method=method).state
    return abs(y[0] - math.exp(-1.0))


@pytest.mark.parametrize("method", ["dopri5", "limex"])
def test_scalar_hook_order(method):
    e1, e2 = _global_error(method, 5), _global_error(method, 10)
    assert math.log2(e1 / e2) >= 4.5


def test_energy_rejection():
    system = ScalarTestSystem(rate=1.0, energy=lambda y: -float(y[0] ** 2))
    dt = 0.05
    rise = -math.exp(-2 * dt) + 1.0
    c = IntegratorControls(t_final=1.0, energy_slack=rise / 2)
    res = step(np.array([1.0]), dt, None, None, c, system=system)
    assert not res.accepted
    assert res.reason == "energy increase"
    assert res.dt_next < dt
    assert res.state[0] == 1.0


def test_flat_step_is_identity():
    b = SpectralBasis.build(1.0, 8)
    p = SystemParams(1, 1, 1.0, 0.01)
    s = GalerkinState.flat(0.4, 0.6, 8, 1.0)
    for method in ("dopri5", "limex"):
        res = step(s, 0.3, p, b, IntegratorControls(t_final=1.0), method=method)
        assert res.accepted
        assert np.max(np.abs(res.state.F - s.F)) <= 1e-15
        assert np.max(np.abs(res.state.G - s.G)) <= 1e-15


def test_step_keeps_masses_bit_exact():
    cfg = reference_config()
    b = cfg.basis()
    s = initial_state(cfg, b)
    res = step(s, 1e-7, cfg.params, b, cfg.controls)
    assert res.accepted
    assert res.state.F[0] == s.F[0] and res.state.G[0] == s.G[0]
    assert res.energy_after <= energy(s, cfg.params)


def test_zero_horizon():
    cfg = reference_config(t_final=0.0)
    b = cfg.basis()
    s = initial_state(cfg, b)
    rec = integrate(s, cfg.params, b, cfg.controls)
    assert rec.accepted == 0 and len(rec.snapshots) == 1 and len(rec.rows) == 1
    assert rec.final_state is s


def test_flat_trajectory_constant():
    b = SpectralBasis.build(1.0, 8)
    p = SystemParams(1, 1, 1.0, 0.01)
    s = GalerkinState.flat(0.4, 0.6, 8, 1.0)
    rec = integrate(s, p, b, IntegratorControls(t_final=1.0))
    assert rec.status == "completed"
    assert rec.final_state.t == 1.0
    assert np.max(np.abs(rec.final_state.F - s.F)) <= 1e-14
    assert np.max(np.abs(rec.final_state.G - s.G)) <= 1e-14


def test_observers_and_snapshots():
    cfg = reference_config(t_final=0.02, snapshot_every=0.005)
    b = cfg.basis()
    seen = []
    rec = integrate(initial_state(cfg, b), cfg.params, b, cfg.controls, [lambda e, s, r: seen.append((e, s.t))])
    steps = [t for e, t in seen if e == "step"]
    snaps = [t for e, t in seen if e == "snapshot"]
    assert len(steps) == rec.accepted
    assert snaps[0] == 0.0 and snaps[-1] == 0.02
    assert len(snaps) == len(rec.snapshots) >= 5
    assert np.all(np.diff(snaps) > 0)


def test_reference_tolerance_refinement():
    cfg = reference_config()
    b = cfg.basis()
    s = initial_state(cfg, b)
    finals = {}
    for tol in (1e-8, 1e-10):
        c = cfg.controls.__class__(**{**cfg.controls.__dict__, "rel_tol": tol, "abs_tol": tol * 1e-2})
        rec = integrate(s, cfg.params, b, c)
        finals[tol] = rec
        assert energy(rec.final_state, cfg.params) == pytest.approx(REFERENCE_ENERGY_T[tol], rel=1e-10)
    a, c = finals[1e-8].final_state, finals[1e-10].final_state
    assert max(np.max(np.abs(a.F - c.F)), np.max(np.abs(a.G - c.G))) <= 1e-6


def test_determinism():
    cfg = reference_config(t_final=0.01)
    b = cfg.basis()
    s = initial_state(cfg, b)
    r1 = integrate(s, cfg.params, b, cfg.controls)
    r2 = integrate(s, cfg.params, b, cfg.controls)
    assert np.array_equal(r1.final_state.F, r2.final_state.F)
    assert [r.values() for r in r1.rows] == [r.values() for r in r2.rows]


def test_explicit_method_runs():
    cfg = reference_config(n=4, t_final=1e-3, method="dopri5")
    b = cfg.basis()
    rec = integrate(initial_state(cfg, b), cfg.params, b, cfg.controls)
    assert rec.status == "completed"
    E = rec.step_energies
    assert np.all(np.diff(E) <= cfg.controls.slack_for(E[0]))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_stiffness_abort_keeps_partial_record():
    cfg = reference_config(t_final=0.1, method="dopri5", max_steps=50)
    b = cfg.basis()
    s = initial_state(cfg, b)
    with pytest.raises(StiffnessAbort) as exc:
        integrate(s, cfg.params, b, cfg.controls)
    rec = exc.value.record
    assert rec.status == "stiffness-abort"
    assert rec.accepted + rec.rejected == 50
    assert exc.value.state.t == rec.rows[-1].t < 0.1
    with pytest.raises(StiffnessAbort):
        integrate(s, cfg.params, b, IntegratorControls(t_final=0.1, dt_init=0.02, dt_min=0.01))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_error_surfaces():
    class Exploding(ScalarTestSystem):
        def rhs(self, y):
            return np.full_like(y, np.inf)

    with pytest.raises(NumericError):
        step(np.array([1.0]), 0.1, None, None, IntegratorControls(t_final=1), system=Exploding())
