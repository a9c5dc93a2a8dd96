"""Cone indices and the separated action of the Hodge Laplacian on C(N).

On the cone dr^2 + r^2 g^N a form beta = g(r) phi + f(r) dr ^ psi, with phi an
i-form and psi an (i-1)-form on the link, is mapped by the Laplacian to

    (-g'' - (m-2i) g'/r + mu_phi g/r^2) phi  - 2 g/r^3 dr ^ (delta phi)
  + (-f'' - (m-2i+2) f'/r + (m-2i+2) f/r^2 + mu_psi f/r^2) dr ^ psi
  - 2 f/r (d psi).

The zeroth-order coefficient (m-2i+2) f/r^2 is checked against a brute-force
symbolic computation in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConeIndices:
    m: int
    degree: int
    mu: float
    alpha: float
    nu: float
    a_plus: float
    a_minus: float

    @property
    def weight_power(self) -> int:
        """p in the radial measure r^p dr, p = m - 2i."""
        return self.m - 2 * self.degree


def cone_indices(m: int, i: int, mu: float) -> ConeIndices:
    """alpha = (1+2i-m)/2, nu = sqrt(mu + alpha^2), a_pm = alpha +- nu.

    sqrt is correctly rounded, so perfect squares (integer spectra) give exact nu.
    """
    if not 0 <= i <= m:
        raise ValueError(f"degree {i} outside [0, {m}]")
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    alpha = (1 + 2 * i - m) / 2
    nu = math.sqrt(mu + alpha * alpha)
    return ConeIndices(m, i, float(mu), alpha, nu, alpha + nu, alpha - nu)


@dataclass(frozen=True)
class SeparatedForm:
    r: np.ndarray
    g: np.ndarray
    f: np.ndarray
    degree: int
    mu_phi: float
    mu_psi: float

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or np.any(np.diff(r) <= 0) or r[0] <= 0 or r[-1] > 1.0 + 1e-15:
            raise ValueError("grid must be strictly increasing inside (0, 1]")


@dataclass(frozen=True)
class SeparatedLaplacian:
    """Radial coefficients of Delta beta, split by component.

    ``tangential`` multiplies phi, ``normal`` multiplies dr ^ psi; the cross terms
    multiply dr ^ (delta phi) and d psi respectively.
    """
    r: np.ndarray
    tangential: np.ndarray
    normal: np.ndarray
    cross_delta_phi: np.ndarray
    cross_d_psi: np.ndarray


def _derivatives(r: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Second-order first and second derivatives on a nonuniform grid."""
    if len(r) < 4:
        raise ValueError("need at least 4 grid points for one-sided stencils")
    d1 = np.gradient(y, r, edge_order=2)
    d2 = np.empty_like(y)
    h0 = r[1:-1] - r[:-2]
    h1 = r[2:] - r[1:-1]
    d2[1:-1] = 2.0 * (h0 * y[2:] - (h0 + h1) * y[1:-1] + h1 * y[:-2]) / (h0 * h1 * (h0 + h1))
    d2[0] = _one_sided_d2(r[:4], y[:4], 0)
    d2[-1] = _one_sided_d2(r[-4:], y[-4:], 3)
    return d1, d2


def _one_sided_d2(r: np.ndarray, y: np.ndarray, at: int) -> float:
    # second derivative of the cubic through four points, evaluated at r[at]
    coef = np.polyfit(r - r[at], y, 3)
    return 2.0 * coef[1]


def separated_laplacian(form: SeparatedForm, m: int) -> SeparatedLaplacian:
    """Finite-difference evaluation of the separated Laplacian on ``form``."""
    r = np.asarray(form.r, dtype=float)
    i = form.degree
    g1, g2 = _derivatives(r, np.asarray(form.g, dtype=float))
    f = np.asarray(form.f, dtype=float)
    f1, f2 = _derivatives(r, f)
    tangential = -g2 - (m - 2 * i) * g1 / r + form.mu_phi * np.asarray(form.g) / r**2
    c = m - 2 * i + 2
    normal = -f2 - c * f1 / r + c * f / r**2 + form.mu_psi * f / r**2
    return SeparatedLaplacian(r, tangential, normal,
                              -2.0 * np.asarray(form.g) / r**3, -2.0 * f / r)


def radial_operator(ind: ConeIndices, y: np.ndarray, dy: np.ndarray, d2y: np.ndarray,
                    r: np.ndarray) -> np.ndarray:
    """Tangential radial operator L y = -y'' - (m-2i) y'/r + mu y/r^2 from exact derivatives."""
    return -d2y - ind.weight_power * dy / r + ind.mu * y / r**2


def homogeneous_solutions(ind: ConeIndices):
    """Pairs (name, callable r -> (y, y', y'')) spanning ker L.

    r^{a+} and r^{a-} for nu > 0; 1-type r^alpha and r^alpha log r when nu = 0.
    """
    def power(a):
        return lambda r: (r**a, a * r**(a - 1), a * (a - 1) * r**(a - 2))

    if ind.nu > 0:
        return [("r^a+", power(ind.a_plus)), ("r^a-", power(ind.a_minus))]
    a = ind.alpha

    def log_sol(r):
        lr = np.log(r)
        y = r**a * lr
        dy = a * r**(a - 1) * lr + r**(a - 1)
        d2y = a * (a - 1) * r**(a - 2) * lr + (2 * a - 1) * r**(a - 2)
        return y, dy, d2y

    return [("r^alpha", power(a)), ("r^alpha log r", log_sol)]


def radial_harmonic_check(ind: ConeIndices, r) -> float:
    """Max |L y| over the grid for each homogeneous solution, relative to the term scale."""
    r = np.asarray(r, dtype=float)
    worst = 0.0
    for _, sol in homogeneous_solutions(ind):
        y, dy, d2y = sol(r)
        res = radial_operator(ind, y, dy, d2y, r)
        scale = np.abs(d2y) + np.abs(ind.weight_power * dy / r) + np.abs(ind.mu * y / r**2) + 1.0
        worst = max(worst, float(np.max(np.abs(res) / scale)))
    return worst
