"""Neumann cosine eigenbasis on (0, L) with composite Gauss-Legendre quadrature.

The basis functions are

    phi_0 = sqrt(1/L),    phi_k = sqrt(2/L) cos(k pi x / L),  k >= 1,

which are orthonormal in L2(0, L) and satisfy phi_k' = phi_k''' = 0 at both
endpoints.  All derivatives are evaluated from closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuadratureGrid",
    "SpectralBasis",
    "basis_value",
    "basis_deriv",
    "make_grid",
    "synthesize",
    "project",
    "uniform_grid",
]

GAUSS_POINTS = 4


@dataclass(frozen=True)
class QuadratureGrid:
    """Composite Gauss-Legendre rule on ``cells`` uniform subintervals of (0, L)."""

    cells: int
    nodes: np.ndarray
    weights: np.ndarray
    points_per_cell: int = GAUSS_POINTS

    def integrate(self, values):
        """Quadrature of nodal ``values`` (last axis runs over the nodes)."""
        return np.asarray(values) @ self.weights


def make_grid(L, cells, points_per_cell=GAUSS_POINTS):
    if L <= 0:
        raise ValueError(f"interval length must be positive, got {L}")
    if cells < 1:
        raise ValueError(f"need at least one quadrature cell, got {cells}")
    xi, wi = np.polynomial.legendre.leggauss(points_per_cell)
    h = L / cells
    left = h * np.arange(cells)
    nodes = (left[:, None] + 0.5 * h * (xi[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * wi, cells)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureGrid(cells, nodes, weights, points_per_cell)


def _check_order(order, allowed=(0, 1, 2, 3)):
    if order not in allowed:
        raise ValueError(f"derivative order must be one of {allowed}, got {order!r}")


def _mode_table(k, x, L, order):
    """Closed-form ``order``-th derivative of phi_k at x (broadcasting)."""
    k = np.asarray(k)
    x = np.asarray(x, dtype=float)
    w = k * np.pi / L
    amp = np.where(k == 0, np.sqrt(1.0 / L), np.sqrt(2.0 / L))
    theta = w * x
    # d^m/dx^m cos(w x) cycles through cos, -sin, -cos, sin
    if order == 0:
        return amp * np.cos(theta)
    if order == 1:
        return -amp * w * np.sin(theta)
    if order == 2:
        return -amp * w**2 * np.cos(theta)
    return amp * w**3 * np.sin(theta)


def _check_domain(x, L):
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0.0) | (xa > L)) or np.any(~np.isfinite(xa)):
        raise ValueError(f"position outside [0, {L}]")


def basis_value(k, x, L):
    """phi_k(x) on [0, L]."""
    if k < 0:
        raise ValueError(f"mode index must be >= 0, got {k}")
    _check_domain(x, L)
    out = _mode_table(k, x, L, 0)
    return float(out) if np.ndim(out) == 0 else out


def basis_deriv(k, x, L, order):
    """Closed-form first, second or third derivative of phi_k at x."""
    _check_order(order, (1, 2, 3))
    if k < 0:
        raise ValueError(f"mode index must be >= 0, got {k}")
    _check_domain(x, L)
    out = _mode_table(k, x, L, order)
    # sin(0) and sin(k pi) must come out as literal zeros at the endpoints
    if order in (1, 3):
        out = np.where((np.asarray(x) == 0.0) | (np.asarray(x) == L), 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SpectralBasis:
    """Modes phi_0..phi_n tabulated on a quadrature grid.

    ``tables[m]`` is the (nodes, n+1) matrix of m-th derivatives, so nodal
    synthesis is a single mat-vec.
    """

    L: float
    n: int
    quad: QuadratureGrid
    eigenvalues: np.ndarray = field(init=False, repr=False)
    tables: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"highest mode index must be >= 0, got {self.n}")
        k = np.arange(self.n + 1)
        lam = (k * np.pi / self.L) ** 2
        lam.setflags(write=False)
        tabs = []
        for order in range(4):
            t = _mode_table(k[None, :], self.quad.nodes[:, None], self.L, order)
            t.setflags(write=False)
            tabs.append(t)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "tables", tuple(tabs))

    @classmethod
    def build(cls, L, n, cells=None):
        """Basis with the default grid of 8(n+1) cells unless ``cells`` is given."""
        if cells is None:
            cells = 8 * (n + 1)
        return cls(float(L), int(n), make_grid(float(L), int(cells)))

    @property
    def size(self):
        return self.n + 1

    @property
    def nodes(self):
        return self.quad.nodes

    @property
    def weights(self):
        return self.quad.weights

    def refined(self, factor=2):
        return SpectralBasis.build(self.L, self.n, self.quad.cells * factor)

    def with_modes(self, n):
        return SpectralBasis.build(self.L, n, 8 * (n + 1))

    def evaluate(self, coeffs, x, order=0):
        """Synthesize at arbitrary points in [0, L] (used for output grids)."""
        _check_order(order)
        coeffs = _as_coeffs(coeffs, self.size)
        _check_domain(x, self.L)
        x = np.asarray(x, dtype=float)
        k = np.arange(self.size)
        return _mode_table(k[None, :], x[:, None], self.L, order) @ coeffs


def _as_coeffs(coeffs, size):
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.shape[0] != size:
        raise ValueError(f"expected {size} coefficients, got shape {c.shape}")
    return c


def synthesize(coeffs, basis, order=0):
    """Nodal values of the ``order``-th derivative of sum_k coeffs_k phi_k."""
    _check_order(order)
    c = _as_coeffs(coeffs, basis.size)
    return basis.tables[order] @ c


def project(samples, basis):
    """L2 projection of nodal samples onto span{phi_0..phi_n} by quadrature."""
    s = np.asarray(samples, dtype=float)
    if s.shape != basis.nodes.shape:
        raise ValueError(
            f"expected {basis.nodes.shape[0]} nodal samples, got shape {s.shape}"
        )
    return (basis.weights * s) @ basis.tables[0]


def uniform_grid(L, points=256):
    """Output grid for user-facing snapshots (endpoints included)."""
    return np.linspace(0.0, L, points)
