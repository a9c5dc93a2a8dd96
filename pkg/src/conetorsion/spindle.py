"""Flat spindle: two flat cones C_(0,u](S^1/Z_k) doubled along r = u.

Functions on the double split into reflection-even and reflection-odd parts,
which are Neumann and Dirichlet eigenfunctions on one cone.  Two independent
routes produce the spectra per form degree:

* conical: link spectrum of S^1/Z_k, cone indices per link family, radial
  eigenfunctions J_nu(sqrt(lambda) r) with zeros located by a sign-change scan
  and bracketed Newton refinement.  Top-degree forms f(r) dr ^ psi use the
  normal separated operator, solved by f = r J_nu;
* orbifold: the doubled disk of radius u with all Fourier orders n, tabulated
  Bessel zeros, and the dimension of Z_k-invariants in each eigenspace from
  character averaging.

Degree 1 is the union of the nonzero degree 0 and degree 2 spectra (exact and
coexact parts on a closed surface).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .cone_calculus import cone_indices
from .link_spectrum import circle_quotient_spectrum

SCAN_STEP = 0.25
ZERO_TOL = 1e-12


class EigenSolverError(RuntimeError):
    """Root bracketing or refinement failure."""


@dataclass(frozen=True)
class SpindleSpectrum:
    """Eigenvalues (with multiplicity) per degree 0..2, zero modes included."""
    k: int
    radius: float
    cutoff: float
    route: str
    degrees: dict

    def pairs(self, degree: int) -> list[tuple[float, int]]:
        lam, mult = self.degrees[degree]
        return list(zip(lam.tolist(), mult.tolist()))

    def kernel_dims(self) -> tuple[int, ...]:
        return tuple(int(np.sum(m[lam < ZERO_TOL])) for lam, m in
                     (self.degrees[i] for i in range(3)))


def _dbessel(nu, x, derivative):
    """J_nu, J_nu' or J_nu'' at x."""
    if derivative == 0:
        return special.jv(nu, x)
    if derivative == 1:
        return 0.5 * (special.jv(nu - 1, x) - special.jv(nu + 1, x))
    return -_dbessel(nu, x, 1) / x - (1.0 - nu * nu / (x * x)) * special.jv(nu, x)


@lru_cache(maxsize=4096)
def _cached_roots(nu: float, x_max: float, derivative: int) -> np.ndarray:
    out = bessel_roots(nu, x_max, derivative)
    out.flags.writeable = False
    return out


def bessel_roots(nu: float, x_max: float, derivative: int = 0, step: float = SCAN_STEP) -> np.ndarray:
    """Positive zeros of J_nu (derivative=0) or J_nu' (derivative=1) in (0, x_max].

    Every positive zero exceeds nu, so the scan starts there.  Brackets from sign
    changes are narrowed by bisection and finished by Newton steps kept inside
    the bracket.
    """
    start = max(nu, 1e-3)
    if x_max <= start:
        return np.empty(0)
    n = int(math.ceil((x_max - start) / step)) + 1
    x = np.linspace(start, x_max, n)
    y = _dbessel(nu, x, derivative)
    exact = x[y == 0.0]
    sign = np.sign(y)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    lo, hi = x[idx].copy(), x[idx + 1].copy()
    flo = y[idx].copy()
    for _ in range(8):
        mid = 0.5 * (lo + hi)
        fm = _dbessel(nu, mid, derivative)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    root = 0.5 * (lo + hi)
    for _ in range(5):
        f = _dbessel(nu, root, derivative)
        df = _dbessel(nu, root, derivative + 1)
        new = root - f / df
        root = np.where((new > lo) & (new < hi), new, root)
    if not np.all(np.isfinite(root)):
        raise EigenSolverError(f"non-finite Bessel root for nu={nu}")
    out = np.sort(np.concatenate([root, exact]))
    return out[out <= x_max]


def _merge(lams: list[np.ndarray], mults: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    if not lams:
        return np.empty(0), np.empty(0, int)
    lam = np.concatenate(lams)
    mult = np.concatenate(mults).astype(int)
    order = np.argsort(lam, kind="stable")
    return lam[order], mult[order]


def _radial_family(nu: float, mult: int, radius: float, cutoff: float, with_zero: bool):
    x_max = radius * math.sqrt(cutoff)
    roots = np.concatenate([_cached_roots(nu, x_max, 0), _cached_roots(nu, x_max, 1)])
    lam = (roots / radius) ** 2
    if with_zero:
        lam = np.concatenate([[0.0], lam])
    return lam, np.full(lam.shape, mult, int)


def _union_nonzero(a, b):
    (la, ma), (lb, mb) = a, b
    return _merge([la[la > ZERO_TOL], lb[lb > ZERO_TOL]], [ma[la > ZERO_TOL], mb[lb > ZERO_TOL]])


def conical_spectrum(k: int, radius: float = 1.0, cutoff: float = 1e4) -> SpindleSpectrum:
    """Spectra of the doubled cone from the link spectrum of S^1/Z_k."""
    _check(k, radius, cutoff)
    link = circle_quotient_spectrum(k, cutoff * radius**2)
    degrees = {}
    # degree 0: g(r) phi with phi a link function
    lams, mults = [], []
    for mu, mult in link.eigenvalues(0):
        ind = cone_indices(1, 0, mu)
        lam, mm = _radial_family(ind.nu, mult, radius, cutoff, with_zero=ind.nu == 0)
        lams.append(lam)
        mults.append(mm)
    degrees[0] = _merge(lams, mults)
    # degree 2: f(r) dr ^ psi with psi a link 1-form; f = r J_nu, nu^2 = mu_psi
    lams, mults = [], []
    for mu, mult in link.eigenvalues(1):
        nu = math.sqrt(mu)
        lam, mm = _radial_family(nu, mult, radius, cutoff, with_zero=nu == 0)
        lams.append(lam)
        mults.append(mm)
    degrees[2] = _merge(lams, mults)
    degrees[1] = _union_nonzero(degrees[0], degrees[2])
    return SpindleSpectrum(k, radius, cutoff, "conical", degrees)


def invariant_dimension(n: int, k: int) -> int:
    """dim of Z_k-invariants in span{e^{i n theta}, e^{-i n theta}} (n >= 1) or constants (n = 0)."""
    if n == 0:
        return 1
    chars = [2.0 * math.cos(2.0 * math.pi * n * j / k) for j in range(k)]
    return int(round(sum(chars) / k))


def orbifold_spectrum(k: int, radius: float = 1.0, cutoff: float = 1e4) -> SpindleSpectrum:
    """Z_k-invariant spectra of the doubled disk of radius u (Hodge star is rotation invariant)."""
    _check(k, radius, cutoff)
    x_max = radius * math.sqrt(cutoff)
    lams, mults = [np.array([0.0])], [np.array([1])]
    n = 0
    while n <= x_max:
        dim = invariant_dimension(n, k)
        if dim:
            for table in (special.jn_zeros, special.jnp_zeros):
                count = int(x_max / math.pi) + 3
                z = table(n, count)
                if n == 0 and table is special.jnp_zeros:
                    z = z[z > 0]
                z = z[z <= x_max]
                lams.append((z / radius) ** 2)
                mults.append(np.full(z.shape, dim, int))
        n += 1
    deg0 = _merge(lams, mults)
    degrees = {0: deg0, 2: (deg0[0].copy(), deg0[1].copy())}
    degrees[1] = _union_nonzero(degrees[0], degrees[2])
    return SpindleSpectrum(k, radius, cutoff, "orbifold", degrees)


def _check(k, radius, cutoff):
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if not radius > 0 or not cutoff > 0:
        raise ValueError("radius and cutoff must be positive")


def heat_constant(k: int) -> float:
    """Constant heat coefficient of functions on the doubled cone, zero mode included.

    Each copy of the Neumann and Dirichlet problems contributes the boundary
    curvature term 1/(6k) and the cone-tip term (k - 1/k)/12.
    """
    return (k + 1.0 / k) / 6.0


def doubled_area(k: int, radius: float = 1.0) -> float:
    return 2.0 * math.pi * radius**2 / k
