"""Adaptive time stepping for the Galerkin ODE system.

Two embedded steppers share one controller and one acceptance rule:

* ``"dopri5"``: the explicit Dormand-Prince 5(4) pair.
* ``"limex"``: linearly implicit Euler with the analytic Jacobian and
  Aitken-Neville extrapolation over the substep sequence 1, 2, 3, 4, 5.  The
  propagated value has order 5, the error estimate order 4.  This is the
  default because the explicit pair is limited to dt ~ (L / n pi)^4.

A step is accepted only if the scaled error norm is <= 1 *and* the discrete
energy did not grow by more than ``energy_slack``.  The zeroth coefficients
(the masses) are never part of the stepped vector, so they stay bit-identical.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .diagnostics import diagnostics_row
from .regularization import default_mollifier
from .rhs import GalerkinState, GalerkinSystem, NumericError

__all__ = [
    "IntegratorControls",
    "ScalarTestSystem",
    "StepResult",
    "StiffnessAbort",
    "TrajectoryRecord",
    "adapt_dt",
    "integrate",
    "step",
]

log = logging.getLogger(__name__)

SAFETY = 0.9
SHRINK_LIMIT = 0.2
GROWTH_LIMIT = 5.0
EXPONENT = 1.0 / 5.0
LIMEX_SEQUENCE = (1, 2, 3, 4, 5)
METHODS = ("limex", "dopri5")


@dataclass(frozen=True)
class IntegratorControls:
    t_final: float
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    dt_init: float = 1e-6
    dt_min: float = 1e-14
    dt_max: float | None = None
    energy_slack: float | None = None  # None: 1e-10 * max(1, E(0))
    snapshot_every: float | None = None
    method: str = "limex"
    max_steps: int = 2_000_000
    keep_steps: bool = True

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init):
            raise ValueError(f"need 0 < dt_min <= dt_init, got {self.dt_min}, {self.dt_init}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.t_final < 0:
            raise ValueError(f"t_final must be non-negative, got {self.t_final}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")

    def slack_for(self, energy0):
        if self.energy_slack is not None:
            return self.energy_slack
        return 1e-10 * max(1.0, energy0)


@dataclass(frozen=True)
class StepResult:
    accepted: bool
    state: object
    dt_used: float
    dt_next: float
    err_est: float
    energy_after: float | None
    reason: str = ""
    err_abs: float = 0.0  # unscaled max |y_high - y_low|


class StiffnessAbort(RuntimeError):
    """The controller pushed dt below dt_min; carries the last accepted state."""

    def __init__(self, message, state, record=None):
        super().__init__(message)
        self.state = state
        self.record = record


def adapt_dt(err_est, dt, controls=None):
    """dt * clamp(0.9 err^(-1/5), 0.2, 5)."""
    if err_est < 0:
        raise ValueError(f"error estimate must be non-negative, got {err_est}")
    if err_est == 0.0:
        factor = GROWTH_LIMIT
    else:
        factor = min(GROWTH_LIMIT, max(SHRINK_LIMIT, SAFETY * err_est ** (-EXPONENT)))
    return dt * factor


# Dormand-Prince 5(4)
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _dopri5(system, y, h):
    k = np.empty((7, y.shape[0]))
    k[0] = system.rhs(y)
    for i in range(1, 7):
        k[i] = system.rhs(y + h * (np.asarray(_A[i]) @ k[:i]))
    y5 = y + h * (_B5 @ k)
    y4 = y + h * (_B4 @ k)
    return y5, y5 - y4


def _limex(system, y, h):
    J = np.atleast_2d(system.jac(y))
    eye = np.eye(y.shape[0])
    f0 = system.rhs(y)
    table = []
    for j in LIMEX_SEQUENCE:
        hj = h / j
        lu = lu_factor(eye - hj * J, check_finite=True)
        z = y + lu_solve(lu, hj * f0)
        for _ in range(j - 1):
            z = z + lu_solve(lu, hj * system.rhs(z))
        row = [z]
        prev = table[-1] if table else None
        for l in range(1, len(table) + 1):
            ratio = j / LIMEX_SEQUENCE[len(table) - l]
            row.append(row[l - 1] + (row[l - 1] - prev[l - 1]) / (ratio - 1.0))
        table.append(row)
    best = table[-1][-1]
    return best, best - table[-1][-2]


_STEPPERS = {"dopri5": _dopri5, "limex": _limex}


class ScalarTestSystem:
    """Stand-in vector field y' = -rate * y used to validate the steppers."""

    def __init__(self, rate=1.0, energy=None):
        self.rate = float(rate)
        self._energy = energy

    def rhs(self, y):
        return -self.rate * y

    def jac(self, y):
        return -self.rate * np.eye(np.size(y))

    def energy(self, y):
        return None if self._energy is None else self._energy(y)

    def state(self, y, t=0.0):
        return y


def _err_norm(err, y, controls):
    scale = controls.abs_tol + controls.rel_tol * np.abs(y)
    return float(np.max(np.abs(err) / scale)) if err.size else 0.0


class _Trial(NamedTuple):
    ok: bool
    y: np.ndarray
    dt_next: float
    err: float
    energy: float | None
    why: str
    err_vec: np.ndarray


def _advance(system, y, dt, controls, energy_before, slack, method):
    if dt <= 0:
        raise ValueError(f"step size must be positive, got {dt}")
    y_new, err_vec = _STEPPERS[method](system, y, dt)
    bad = np.flatnonzero(~np.isfinite(y_new))
    if bad.size:
        raise NumericError("y_new", bad[0], f"non-finite coefficient at index {bad[0]} after step")
    err = _err_norm(err_vec, y, controls)
    dt_next = adapt_dt(err, dt, controls)
    e_after = system.energy(y_new)
    if err > 1.0:
        return _Trial(False, y_new, dt_next, err, e_after, "local error", err_vec)
    if e_after is not None and energy_before is not None and e_after > energy_before + slack:
        return _Trial(False, y_new, min(dt_next, 0.5 * dt), err, e_after, "energy increase", err_vec)
    return _Trial(True, y_new, dt_next, err, e_after, "", err_vec)


def step(state, dt, params, basis, controls, *, system=None, method="dopri5"):
    """One embedded step of size ``dt``.

    By default this is the explicit Dormand-Prince pair on the Galerkin field.
    Pass ``system`` (anything with ``rhs``, ``jac``, ``energy``, ``state``) to
    step another vector field, e.g. :class:`ScalarTestSystem`, in which case
    ``state`` is a plain array.
    """
    if system is None:
        system = GalerkinSystem.for_state(state, params, basis)
        y = state.reduced()
        t = state.t
    else:
        y = np.atleast_1d(np.asarray(state, dtype=float))
        t = 0.0
    e0 = system.energy(y)
    slack = controls.slack_for(e0 if e0 is not None else 0.0)
    tr = _advance(system, y, dt, controls, e0, slack, method)
    new_state = system.state(tr.y, t + dt) if tr.ok else state
    err_abs = float(np.max(np.abs(tr.err_vec))) if y.size else 0.0
    return StepResult(tr.ok, new_state, dt, tr.dt_next, tr.err, tr.energy, tr.why, err_abs)


@dataclass
class TrajectoryRecord:
    """Snapshots and per-step diagnostics of one integration."""

    params: object
    n: int
    snapshots: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    step_states: list = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    status: str = "running"
    reason: str = ""
    dt_next: float | None = None

    @property
    def final_state(self):
        return self.snapshots[-1] if self.snapshots else None

    @property
    def step_times(self):
        return np.array([r.t for r in self.rows])

    @property
    def step_energies(self):
        return np.array([r.energy for r in self.rows])

    @property
    def step_dissipations(self):
        return np.array([r.dissipation for r in self.rows])


Observer = Callable[[str, GalerkinState, "TrajectoryRecord"], None]


def integrate(state0, params, basis, controls, observers: Sequence[Observer] = ()):
    """Advance ``state0`` to ``controls.t_final``.

    Observers are called as ``obs(event, state, record)`` with event
    ``"step"`` after every accepted step and ``"snapshot"`` at each snapshot.
    Steps are shortened where needed so that they end exactly on each multiple
    of ``snapshot_every`` and on ``t_final``; a snapshot is taken at each of
    those times and at the start.  The shortening does not feed back into
    the step-size controller.
    """
    system = GalerkinSystem.for_state(state0, params, basis)
    mollifier = default_mollifier()
    record = TrajectoryRecord(params=params, n=basis.n)
    y = state0.reduced()
    t = float(state0.t)
    t_end = float(controls.t_final)
    e_prev = system.energy(y)
    slack = controls.slack_for(e_prev)
    dt = controls.dt_init

    def emit(event, st):
        for obs in observers:
            obs(event, st, record)

    def accept_row(st):
        record.rows.append(diagnostics_row(st, params, basis, mollifier))
        if controls.keep_steps:
            record.step_states.append(st)

    current = state0
    accept_row(current)
    record.snapshots.append(current)
    emit("snapshot", current)
    every = controls.snapshot_every
    # snapshot times are the multiples of ``every``, so a resumed run sees the same grid
    k_snap = math.floor(t / every) + 1 if every else None
    while k_snap is not None and k_snap * every <= t:
        k_snap += 1
    try:
        while t < t_end:
            if record.accepted + record.rejected >= controls.max_steps:
                raise StiffnessAbort(
                    f"step budget of {controls.max_steps} exhausted at t={t}", current, record
                )
            target = t_end if k_snap is None else min(t_end, k_snap * every)
            h_free = dt if controls.dt_max is None else min(dt, controls.dt_max)
            h = min(h_free, target - t)
            ok, y_new, dt_next, err, e_new, why, _ = _advance(
                system, y, h, controls, e_prev, slack, controls.method
            )
            if not ok:
                record.rejected += 1
                dt = dt_next
                if dt < controls.dt_min:
                    raise StiffnessAbort(
                        f"dt={dt:.3e} fell below dt_min={controls.dt_min:.3e} at t={t} ({why})",
                        current,
                        record,
                    )
                continue
            landed = h < h_free
            t = target if h == target - t else t + h
            y, e_prev = y_new, e_new
            record.accepted += 1
            # a step shortened to hit an output time says nothing about the step size wanted
            if not landed:
                dt = dt_next
            record.dt_next = dt
            current = system.state(y, t)
            accept_row(current)
            emit("step", current)
            if k_snap is not None and t >= k_snap * every and t < t_end:
                record.snapshots.append(current)
                emit("snapshot", current)
                while k_snap * every <= t:
                    k_snap += 1
        if record.snapshots[-1] is not current:
            record.snapshots.append(current)
            emit("snapshot", current)
        record.status = "completed"
    except StiffnessAbort as exc:
        record.status = "stiffness-abort"
        record.reason = str(exc)
        record.dt_next = dt
        if record.snapshots[-1] is not current:
            record.snapshots.append(current)
        exc.record = record
        log.warning("integration aborted: %s", exc)
        raise
    except NumericError as exc:
        record.status = "numeric-error"
        record.reason = str(exc)
        exc.record = record
        raise
    record.dt_next = dt
    return record


def resume_controls(controls, dt_next):
    """Controls that continue with a checkpointed step-size proposal."""
    return replace(controls, dt_init=max(dt_next, controls.dt_min))
