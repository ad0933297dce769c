"""Galerkin vector field of the regularized two-layer thin-film system.

With A = a_eps(f), B = a_eps(g), u = f''' and s = (f + g)''' the two fluxes are

    H_f = A^3 u + R/2 (2 A^3 + 3 A^2 B) s
    H_g = 3/2 A^2 B u + R/2 (2 mu B^3 + 3 A^2 B + 6 A B^2) s

and, testing with phi_j, dF_j/dt = int H_f phi_j', dG_j/dt = int H_g phi_j'.
Both fluxes are formed once per quadrature node and then projected onto every
phi_j' in a single mat-vec, so a call costs O(nodes * modes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


__all__ = [
    "GalerkinState",
    "GalerkinSystem",
    "NodalFields",
    "NumericError",
    "RhsOutput",
    "SystemParams",
    "assemble_psi",
    "dissipation_fluxes",
    "flux_f",
    "flux_g",
    "flux_g_factored",
    "jacobian",
    "nodal_fields",
]


class NumericError(FloatingPointError):
    """A non-finite value showed up in a coefficient vector or nodal field."""

    def __init__(self, field_name, index, message=None):
        self.field = field_name
        self.index = int(index)
        super().__init__(message or f"non-finite value in {field_name}[{self.index}]")


@dataclass(frozen=True)
class SystemParams:
    R: float
    mu: float
    L: float
    eps: float

    def __post_init__(self):
        for name in ("R", "mu", "L"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not (0.0 < self.eps <= 1.0):
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")

    def replace(self, **changes):
        return SystemParams(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class GalerkinState:
    """Coefficients of f and g in the cosine basis at time ``t``."""

    F: np.ndarray
    G: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        G = np.array(self.G, dtype=float)
        if F.ndim != 1 or F.shape != G.shape:
            raise ValueError(f"F and G must be 1-d of equal length, got {F.shape}, {G.shape}")
        F.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)

    @property
    def n(self):
        return self.F.shape[0] - 1

    @classmethod
    def flat(cls, mass_f, mass_g, n, L, t=0.0):
        """Constant layers with the given total masses."""
        F = np.zeros(n + 1)
        G = np.zeros(n + 1)
        F[0] = mass_f / np.sqrt(L)
        G[0] = mass_g / np.sqrt(L)
        return cls(F, G, t)

    def reduced(self):
        """The 2n-vector (F_1..F_n, G_1..G_n) evolved by the ODE."""
        return np.concatenate([self.F[1:], self.G[1:]])

    def with_reduced(self, y, t):
        n = self.n
        F = np.empty(n + 1)
        G = np.empty(n + 1)
        F[0] = self.F[0]
        G[0] = self.G[0]
        F[1:] = y[:n]
        G[1:] = y[n:]
        return GalerkinState(F, G, t)

    def padded(self, n):
        """Embed into a larger span by zero padding (or truncate to a smaller one)."""
        F = np.zeros(n + 1)
        G = np.zeros(n + 1)
        m = min(n, self.n) + 1
        F[:m] = self.F[:m]
        G[:m] = self.G[:m]
        return GalerkinState(F, G, self.t)

    def reflected(self):
        """Coefficients of f(L - x), g(L - x)."""
        sign = (-1.0) ** np.arange(self.n + 1)
        return GalerkinState(sign * self.F, sign * self.G, self.t)


@dataclass(frozen=True)
class RhsOutput:
    dF: np.ndarray
    dG: np.ndarray

    def reduced(self):
        return np.concatenate([self.dF[1:], self.dG[1:]])


def _check_finite(name, values):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NumericError(name, bad[0])


def _check_dims(state, basis):
    if state.F.shape[0] != basis.size:
        raise ValueError(
            f"state has {state.F.shape[0]} modes per field, basis has {basis.size}"
        )


@dataclass(frozen=True)
class NodalFields:
    """Everything the fluxes need, evaluated once per quadrature node."""

    f: np.ndarray
    g: np.ndarray
    A: np.ndarray
    B: np.ndarray
    u: np.ndarray  # f'''
    s: np.ndarray  # (f + g)'''
    params: SystemParams = field(repr=False)


def nodal_fields(state, params, basis):
    _check_dims(state, basis)
    _check_finite("F", state.F)
    _check_finite("G", state.G)
    T0, T3 = basis.tables[0], basis.tables[3]
    f = T0 @ state.F
    g = T0 @ state.G
    u = T3 @ state.F
    s = u + T3 @ state.G
    eps = params.eps
    A = eps + np.maximum(0.0, f)
    B = eps + np.maximum(0.0, g)
    for name, arr in (("f", f), ("g", g), ("f'''", u), ("(f+g)'''", s)):
        _check_finite(name, arr)
    return NodalFields(f, g, A, B, u, s, params)


def _hf(nf):
    A, B, R = nf.A, nf.B, nf.params.R
    A2 = A * A
    A3 = A2 * A
    return A3 * nf.u + 0.5 * R * (2.0 * A3 + 3.0 * A2 * B) * nf.s


def _hg(nf):
    A, B, R, mu = nf.A, nf.B, nf.params.R, nf.params.mu
    A2B = A * A * B
    AB2 = A * B * B
    B3 = B * B * B
    return 1.5 * A2B * nf.u + 0.5 * R * (2.0 * mu * B3 + 3.0 * A2B + 6.0 * AB2) * nf.s


def flux_f(state, params, basis):
    """Nodal values of H_f."""
    out = _hf(nodal_fields(state, params, basis))
    _check_finite("H_f", out)
    return out


def flux_g(state, params, basis):
    """Nodal values of H_g in unfactored form."""
    out = _hg(nodal_fields(state, params, basis))
    _check_finite("H_g", out)
    return out


def _j_factors(nf):
    A, B, R = nf.A, nf.B, nf.params.R
    sqA = np.sqrt(A)
    j_g = B * np.sqrt(B) * nf.s
    j_fg = sqA * B * nf.s
    j_f = sqA * (A * nf.u + 0.5 * R * (2.0 * A + 3.0 * B) * nf.s)
    return j_f, j_g, j_fg


def flux_g_factored(state, params, basis):
    """H_g rebuilt from the weighted third-derivative factors.

    mu R B^{3/2} j_g + 3R/4 A^{1/2} B j_fg + 3/2 A^{1/2} B j_f
    """
    nf = nodal_fields(state, params, basis)
    j_f, j_g, j_fg = _j_factors(nf)
    A, B, R, mu = nf.A, nf.B, params.R, params.mu
    sqA = np.sqrt(A)
    return mu * R * B * np.sqrt(B) * j_g + 0.75 * R * sqA * B * j_fg + 1.5 * sqA * B * j_f


def dissipation_fluxes(state, params, basis):
    """(j_f, j_g, j_fg) factor fields at the quadrature nodes.

    j_f  = A^{1/2} (A f''' + R/2 (2A + 3B)(f+g)''')
    j_g  = B^{3/2} (f+g)'''
    j_fg = A^{1/2} B (f+g)'''
    """
    return _j_factors(nodal_fields(state, params, basis))


def assemble_psi(state, params, basis):
    """Time derivative of the coefficient vectors; mode 0 is pinned to zero."""
    nf = nodal_fields(state, params, basis)
    hf = _hf(nf)
    hg = _hg(nf)
    _check_finite("H_f", hf)
    _check_finite("H_g", hg)
    P = basis.tables[1] * basis.weights[:, None]
    dF = hf @ P
    dG = hg @ P
    # phi_0' vanishes identically; pin it so mass is conserved bit for bit
    dF[0] = 0.0
    dG[0] = 0.0
    return RhsOutput(dF, dG)


def jacobian(state, params, basis):
    """d(Psi_reduced)/d(reduced state), a (2n, 2n) matrix.

    a_eps is differentiated as the indicator of {s > 0}; at a kink this picks
    the one-sided derivative, which the linearly implicit stepper tolerates.
    """
    nf = nodal_fields(state, params, basis)
    A, B, u, s, R, mu = nf.A, nf.B, nf.u, nf.s, params.R, params.mu
    ind_f = (nf.f > 0.0).astype(float)
    ind_g = (nf.g > 0.0).astype(float)
    A2, B2 = A * A, B * B

    # partials of H_f, H_g with respect to (A, B, u, s)
    hf_A = 3.0 * A2 * u + R * (3.0 * A2 + 3.0 * A * B) * s
    hf_B = 1.5 * R * A2 * s
    hf_u = A2 * A
    hf_s = 0.5 * R * (2.0 * A2 * A + 3.0 * A2 * B)
    hg_A = 3.0 * A * B * u + R * (3.0 * A * B + 3.0 * B2) * s
    hg_B = 1.5 * A2 * u + R * (3.0 * mu * B2 + 1.5 * A2 + 6.0 * A * B) * s
    hg_u = 1.5 * A2 * B
    hg_s = 0.5 * R * (2.0 * mu * B2 * B + 3.0 * A2 * B + 6.0 * A * B2)

    T0 = basis.tables[0][:, 1:]
    T3 = basis.tables[3][:, 1:]
    P = (basis.tables[1][:, 1:] * basis.weights[:, None]).T

    def block(d_A_or_B, ind, d_direct):
        return P @ ((d_A_or_B * ind)[:, None] * T0 + d_direct[:, None] * T3)

    J_ff = block(hf_A, ind_f, hf_u + hf_s)
    J_fg = block(hf_B, ind_g, hf_s)
    J_gf = block(hg_A, ind_f, hg_u + hg_s)
    J_gg = block(hg_B, ind_g, hg_s)
    return np.block([[J_ff, J_fg], [J_gf, J_gg]])


class GalerkinSystem:
    """The reduced ODE y' = Psi(y) for fixed masses, as seen by the steppers."""

    def __init__(self, params, basis, F0, G0):
        self.params = params
        self.basis = basis
        self.F0 = float(F0)
        self.G0 = float(G0)
        self.n = basis.n

    @classmethod
    def for_state(cls, state, params, basis):
        _check_dims(state, basis)
        return cls(params, basis, state.F[0], state.G[0])

    def state(self, y, t=0.0):
        n = self.n
        F = np.empty(n + 1)
        G = np.empty(n + 1)
        F[0], G[0] = self.F0, self.G0
        F[1:], G[1:] = y[:n], y[n:]
        return GalerkinState(F, G, t)

    def rhs(self, y):
        return assemble_psi(self.state(y), self.params, self.basis).reduced()

    def jac(self, y):
        return jacobian(self.state(y), self.params, self.basis)

    def energy(self, y):
        n = self.n
        lam = self.basis.eigenvalues[1:]
        p, q = y[:n], y[n:]
        return 0.5 * float(np.sum(lam * (p * p + self.params.R * (p + q) ** 2)))
