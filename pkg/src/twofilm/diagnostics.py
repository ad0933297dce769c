"""Functionals of a Galerkin state or trajectory.

Energy is evaluated in closed form from the coefficients (the derivatives
phi_k' are orthogonal with norms lambda_k); everything else goes through the
quadrature grid of the basis.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy import integrate

from .basis import synthesize
from .regularization import default_mollifier
from .rhs import assemble_psi, dissipation_fluxes, flux_f, flux_g

__all__ = [
    "CSV_COLUMNS",
    "DiagnosticsRow",
    "diagnostics_row",
    "dissipation",
    "energy",
    "energy_balance",
    "energy_gradient",
    "energy_quadrature",
    "masses",
    "negative_part",
    "positivity_sets",
    "weak_residual",
]

RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    mass_f: float
    mass_g: float
    energy: float
    dissipation: float
    min_f: float
    min_g: float
    chi_f: float
    chi_g: float
    dE_dt_residual: float

    def values(self):
        return [getattr(self, f.name) for f in fields(self)]


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRow))


def _eigen(state, L):
    k = np.arange(state.F.shape[0])
    return (k * np.pi / L) ** 2


def energy(state, params):
    """1/2 int |f'|^2 + R |(f+g)'|^2 from the coefficients."""
    lam = _eigen(state, params.L)
    F, G = state.F, state.G
    return 0.5 * float(np.sum(lam * (F * F + params.R * (F + G) ** 2)))


def energy_gradient(state, params):
    """(dE/dF, dE/dG); the mode-0 entries are zero."""
    lam = _eigen(state, params.L)
    F, G = state.F, state.G
    dG = params.R * lam * (F + G)
    return lam * F + dG, dG


def energy_quadrature(state, params, basis):
    """Same energy integrated on the grid; agrees with :func:`energy` by Parseval."""
    fx = synthesize(state.F, basis, 1)
    gx = synthesize(state.G, basis, 1)
    return 0.5 * float(basis.quad.integrate(fx * fx + params.R * (fx + gx) ** 2))


def dissipation(state, params, basis):
    """mu R^2 int j_g^2 + 3R^2/4 int j_fg^2 + int j_f^2  (>= 0)."""
    j_f, j_g, j_fg = dissipation_fluxes(state, params, basis)
    R = params.R
    w = basis.weights
    return float(
        params.mu * R * R * (w @ (j_g * j_g)) + 0.75 * R * R * (w @ (j_fg * j_fg)) + w @ (j_f * j_f)
    )


def chain_rule_defect(state, params, basis, psi=None):
    """<grad E, Psi> + D, which vanishes along the Galerkin flow."""
    if psi is None:
        psi = assemble_psi(state, params, basis)
    gF, gG = energy_gradient(state, params)
    return float(gF @ psi.dF + gG @ psi.dG) + dissipation(state, params, basis)


def masses(state, params):
    root = np.sqrt(params.L)
    return root * float(state.F[0]), root * float(state.G[0])


def _with_endpoints(coeffs, basis):
    nodal = synthesize(coeffs, basis, 0)
    ends = basis.evaluate(coeffs, np.array([0.0, basis.L]))
    return nodal, ends


def negative_part(state, delta, mollifier, basis):
    """(int chi_delta(f) dx, int chi_delta(g) dx) by quadrature."""
    mollifier = mollifier or default_mollifier()
    f = synthesize(state.F, basis, 0)
    g = synthesize(state.G, basis, 0)
    cf = float(basis.quad.integrate(mollifier(delta, f)))
    cg = float(basis.quad.integrate(mollifier(delta, g)))
    return cf, cg


def positivity_sets(state, threshold, output_grid, L=None):
    """Boolean masks of {f > threshold} and {g > threshold} on ``output_grid``.

    ``output_grid`` is either an array of positions (needs ``L``) or a basis,
    in which case its quadrature nodes are used.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    if hasattr(output_grid, "tables"):
        f = synthesize(state.F, output_grid, 0)
        g = synthesize(state.G, output_grid, 0)
    else:
        x = np.asarray(output_grid, dtype=float)
        if L is None:
            raise ValueError("L is required when masks are taken on a position grid")
        k = np.arange(state.n + 1)
        amp = np.where(k == 0, np.sqrt(1.0 / L), np.sqrt(2.0 / L))
        table = amp[None, :] * np.cos(k[None, :] * np.pi * x[:, None] / L)
        f = table @ state.F
        g = table @ state.G
    return f > threshold, g > threshold


def diagnostics_row(state, params, basis, mollifier=None):
    mollifier = mollifier or default_mollifier()
    psi = assemble_psi(state, params, basis)
    D = dissipation(state, params, basis)
    gF, gG = energy_gradient(state, params)
    dE = float(gF @ psi.dF + gG @ psi.dG)
    f_nodes, f_ends = _with_endpoints(state.F, basis)
    g_nodes, g_ends = _with_endpoints(state.G, basis)
    chi_f, chi_g = negative_part(state, np.sqrt(params.eps), mollifier, basis)
    mf, mg = masses(state, params)
    return DiagnosticsRow(
        t=float(state.t),
        mass_f=mf,
        mass_g=mg,
        energy=energy(state, params),
        dissipation=D,
        min_f=float(min(f_nodes.min(), f_ends.min())),
        min_g=float(min(g_nodes.min(), g_ends.min())),
        chi_f=chi_f,
        chi_g=chi_g,
        dE_dt_residual=abs(dE + D) / max(D, RESIDUAL_FLOOR),
    )


def _time_integral(t, values, rule):
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.size < 2:
        return 0.0
    if rule == "simpson":
        return float(integrate.simpson(values, x=t))
    if rule == "trapezoid":
        return float(integrate.trapezoid(values, x=t))
    raise ValueError(f"unknown time rule {rule!r}")


def energy_balance(trajectory, rule="simpson"):
    """E(T) + int_0^T D dt - E(0) over the accepted steps of ``trajectory``."""
    t, E, D = trajectory.step_times, trajectory.step_energies, trajectory.step_dissipations
    return float(E[-1] + _time_integral(t, D, rule) - E[0])


def weak_residual(trajectory, j, params, basis, rule="simpson"):
    """Residuals of F_j(T) - F_j(0) = int_0^T int H_f phi_j' dx dt (and for g).

    The test function is phi_j, constant in time.  Uses every accepted step
    stored on the trajectory.
    """
    if not 0 <= j <= basis.n:
        raise ValueError(f"mode index {j} outside 0..{basis.n}")
    states = trajectory.step_states
    if len(states) < 2:
        raise ValueError("need at least two stored states")
    if j == 0:
        # phi_0' = 0 and F_0, G_0 never move
        return abs(states[-1].F[0] - states[0].F[0]), abs(states[-1].G[0] - states[0].G[0])
    dphi = basis.tables[1][:, j] * basis.weights
    rates_f = np.array([flux_f(s, params, basis) @ dphi for s in states])
    rates_g = np.array([flux_g(s, params, basis) @ dphi for s in states])
    t = np.array([s.t for s in states])
    res_f = (states[-1].F[j] - states[0].F[j]) - _time_integral(t, rates_f, rule)
    res_g = (states[-1].G[j] - states[0].G[j]) - _time_integral(t, rates_g, rule)
    return abs(float(res_f)), abs(float(res_g))
