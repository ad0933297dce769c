"""Mobility regularizer a_eps and the smooth negative-part family chi_delta.

``a_eps(s) = eps + max(0, s)`` keeps every mobility bounded below by eps.

chi_delta is built from a C-infinity bump supported in [-1, 0]::

    chi_1(x) = -int_0^x int_s^inf bump(t) dt ds,     chi_delta(x) = delta chi_1(x / delta)

It vanishes on [0, inf), equals -x - 1 + chi_1(-1) below -1, and approximates
max(-x, 0) to within delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "ALLOWED_POWERS",
    "MollifierFamily",
    "a_eps",
    "a_eps_pow",
    "bump",
    "bump_prime",
    "chi",
    "default_mollifier",
]

ALLOWED_POWERS = (0.5, 1.0, 1.5, 2.0, 3.0)


def _check_eps(eps):
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"regularization parameter must lie in (0, 1], got {eps}")


def a_eps(eps, s):
    """eps + max(0, s); works on scalars and arrays."""
    _check_eps(eps)
    out = eps + np.maximum(0.0, s)
    return float(out) if np.ndim(out) == 0 else out


def a_eps_pow(eps, s, p):
    """a_eps(s)**p, taking the power of the clamped value (never of s)."""
    if float(p) not in ALLOWED_POWERS:
        raise ValueError(f"power must be one of {ALLOWED_POWERS}, got {p}")
    a = a_eps(eps, s)
    p = float(p)
    if p == 0.5:
        out = np.sqrt(a)
    elif p == 1.5:
        out = a * np.sqrt(a)
    elif p == 1.0:
        out = a
    elif p == 2.0:
        out = a * a
    else:
        out = a * a * a
    return float(out) if np.ndim(out) == 0 else out


def _raw_bump(x):
    x = np.asarray(x, dtype=float)
    inside = (x > -1.0) & (x < 0.0)
    d = np.where(inside, -x * (x + 1.0), 1.0)
    return np.where(inside, np.exp(-1.0 / d), 0.0)


def _raw_bump_prime(x):
    # d/dx exp(-1/d) with d = -x(x+1), d' = -(2x+1)
    x = np.asarray(x, dtype=float)
    inside = (x > -1.0) & (x < 0.0)
    d = np.where(inside, -x * (x + 1.0), 1.0)
    return np.where(inside, np.exp(-1.0 / d) * (-(2.0 * x + 1.0)) / d**2, 0.0)


@lru_cache(maxsize=1)
def bump_normalization():
    """Constant C with int C exp(-1/(-x(x+1))) dx = 1 over (-1, 0)."""
    mass, _ = integrate.quad(
        lambda t: float(_raw_bump(t)), -1.0, 0.0, epsabs=1e-15, epsrel=1e-14, limit=200
    )
    return 1.0 / mass


def bump(x):
    """Unit-mass C-infinity bump supported in [-1, 0]."""
    return bump_normalization() * _raw_bump(x)


def bump_prime(x):
    return bump_normalization() * _raw_bump_prime(x)


def _sup_abs(fun, samples=20001):
    # dense sampling, then a bounded local refinement around the best sample
    x = np.linspace(-1.0, 0.0, samples)
    v = np.abs(fun(x))
    i = int(np.argmax(v))
    h = x[1] - x[0]
    lo, hi = max(-1.0, x[i] - h), min(0.0, x[i] + h)
    res = optimize.minimize_scalar(
        lambda t: -abs(float(fun(t))), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-13},
    )
    return max(float(v[i]), -float(res.fun))


TABLE_POINTS = 4096
TABLE_RANGE = (-1.5, 0.5)
FLUSH_BELOW = 1e-30


def _tails_from_zero(grid, gauss=8):
    """Phi(x) = int_x^0 bump and chi_1(x) = int_x^0 Phi on ``grid`` (increasing, contains 0).

    Both are accumulated leftwards from 0 as sums of non-negative cell
    contributions, so the tabulated values are monotone with no cancellation:
    on a cell [a, b], int_a^b Phi = (b - a) Phi(b) + int_a^b (s - a) bump(s) ds.
    """
    xi, wi = np.polynomial.legendre.leggauss(gauss)
    a, b = grid[:-1], grid[1:]
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * xi[None, :]
    vals = bump(pts) * wi[None, :]
    cell_phi = vals.sum(axis=1) * half
    cell_first = (vals * (pts - a[:, None])).sum(axis=1) * half
    phi = np.zeros_like(grid)
    chi1 = np.zeros_like(grid)
    for i in range(int(np.flatnonzero(grid == 0.0)[0]) - 1, -1, -1):
        phi[i] = phi[i + 1] + cell_phi[i]
        chi1[i] = chi1[i + 1] + (b[i] - a[i]) * phi[i + 1] + cell_first[i]
    return phi, chi1


def _flush(values):
    # Next to 0 the bump is flatter than any cubic on this grid can follow and the
    # interpolant wobbles around zero at the 1e-45 level; the exact values there
    # are below FLUSH_BELOW, so they are set to zero, which keeps chi_1 monotone.
    return np.where(values < FLUSH_BELOW, 0.0, values)


@dataclass(frozen=True)
class MollifierFamily:
    """chi_delta and its first three derivatives for a fixed bump.

    chi_1 and chi_1' = -Phi (Phi(x) = int_x^inf bump) come from a dense Hermite
    table on [-1.5, 0.5]; chi_1'' = bump and chi_1''' = bump' are exact.
    """

    points: int = TABLE_POINTS
    normalization: float = field(init=False)
    sup_bump: float = field(init=False)
    sup_bump_prime: float = field(init=False)
    tail_offset: float = field(init=False)
    _chi1: CubicHermiteSpline = field(init=False, repr=False)
    _tail: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        lo, hi = TABLE_RANGE
        grid = np.linspace(lo, hi, self.points)
        # snap the grid point nearest zero onto zero so the anchor is exact
        grid[np.argmin(np.abs(grid))] = 0.0
        tail, chi1 = _tails_from_zero(grid)
        s = object.__setattr__
        s(self, "normalization", bump_normalization())
        s(self, "_tail", CubicHermiteSpline(grid, tail, -bump(grid)))
        s(self, "_chi1", CubicHermiteSpline(grid, chi1, -tail))
        s(self, "tail_offset", float(self._chi1(-1.0)))
        s(self, "sup_bump", _sup_abs(bump))
        s(self, "sup_bump_prime", _sup_abs(bump_prime))

    def chi1(self, x, order=0):
        """chi_1 and its derivatives, exact closed forms outside [-1, 0]."""
        x = np.asarray(x, dtype=float)
        if order == 0:
            inner = _flush(self._chi1(np.clip(x, -1.0, 0.0)))
            out = np.where(x <= -1.0, self.tail_offset - 1.0 - x, inner)
        elif order == 1:
            inner = -_flush(self._tail(np.clip(x, -1.0, 0.0)))
            out = np.where(x <= -1.0, -1.0, inner)
        elif order == 2:
            out = bump(x)
        elif order == 3:
            out = bump_prime(x)
        else:
            raise ValueError(f"order must be 0..3, got {order!r}")
        return np.where(x >= 0.0, 0.0, out)

    def __call__(self, delta, x, order=0):
        """Evaluate chi_delta^(order) at x."""
        if not delta > 0.0:
            raise ValueError(f"mollifier scale must be positive, got {delta}")
        y = np.asarray(x, dtype=float) / delta
        out = self.chi1(y, order) * delta ** (1 - order)
        return float(out) if np.ndim(out) == 0 else out

    def bounds(self, delta):
        """Sup-norm bounds on chi_delta', chi_delta'', chi_delta'''."""
        return 1.0, self.sup_bump / delta, self.sup_bump_prime / delta**2


@lru_cache(maxsize=1)
def default_mollifier():
    return MollifierFamily()


def chi(delta, x, order=0):
    """chi_delta^(order)(x) using the cached default family."""
    return default_mollifier()(delta, x, order)
