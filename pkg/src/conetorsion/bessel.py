"""Modified Bessel function of the first kind, exponentially scaled.

``ive(nu, z) = exp(-z) * I_nu(z)`` for real ``nu >= 0`` and ``z >= 0``.

Two regimes are used:

* the power series, whose terms are all positive, so it is accurate for any
  argument; it is used while ``sqrt(nu**2 + z**2)`` is below ``CROSSOVER``;
* the Debye uniform expansion in ``1/sqrt(nu**2 + z**2)``, which covers large
  order and large argument together (for ``nu = 0`` it reduces to the Hankel
  expansion).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import gammaln

CROSSOVER = 60.0
DEBYE_TERMS = 14


@lru_cache(maxsize=None)
def _debye_polynomials(n_terms: int) -> tuple[np.ndarray, ...]:
    """Coefficient arrays of u_k(p) divided by p**k, k = 0..n_terms-1.

    Recurrence: u_{k+1} = p^2 (1 - p^2) u_k' / 2 + (1/8) int_0^p (1 - 5 t^2) u_k dt.
    """
    polys = [np.array([1.0])]
    for _ in range(n_terms - 1):
        u = polys[-1]
        du = P.polyder(u) if len(u) > 1 else np.array([0.0])
        term1 = P.polymul(P.polymul([0.0, 0.0, 1.0], [1.0, 0.0, -1.0]), du) / 2.0
        term2 = P.polyint(P.polymul([1.0, 0.0, -5.0], u)) / 8.0
        polys.append(P.polyadd(term1, term2))
    reduced = []
    for k, u in enumerate(polys):
        u = np.asarray(u, dtype=float)
        # u_k has only powers p^k, p^{k+2}, ...
        reduced.append(u[k:] if len(u) > k else np.array([0.0]))
    return tuple(reduced)


def _ive_series(nu: float, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    pos = z > 0
    if not np.any(pos):
        out[:] = 1.0 if nu == 0 else 0.0
        return out
    zp = z[pos]
    half = np.log(zp / 2.0)
    kmax = int(np.max(zp) / 2.0 + 12.0 * np.sqrt(np.max(zp) + 1.0) + 30)
    k = np.arange(kmax + 1, dtype=float)[:, None]
    logt = (2.0 * k + nu) * half[None, :] - gammaln(k + 1.0) - gammaln(k + nu + 1.0)
    peak = np.max(logt, axis=0)
    s = np.sum(np.exp(logt - peak[None, :]), axis=0)
    out[pos] = np.exp(peak - zp) * s
    if nu == 0:
        out[~pos] = 1.0
    return out


def _ive_debye(nu: float, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    pos = z > 0
    zp = z[pos]
    eta = np.sqrt(nu * nu + zp * zp)
    pd = nu / eta
    q = 1.0 / eta
    total = np.zeros_like(zp)
    qk = np.ones_like(zp)
    # u_k(pd) / nu^k == q^k * (u_k(pd) / pd^k), finite at nu = 0
    for c in _debye_polynomials(DEBYE_TERMS):
        total += qk * P.polyval(pd, c)
        qk = qk * q
    log_ratio = nu * np.log(zp / (nu + eta)) if nu > 0 else 0.0
    out[pos] = np.exp(eta + log_ratio - zp) * total / np.sqrt(2.0 * np.pi * eta)
    return out


def ive(nu, z):
    """exp(-z) I_nu(z), elementwise over broadcast ``nu`` and ``z``."""
    nu_arr, z_arr = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(z, dtype=float))
    if np.any(nu_arr < 0) or np.any(z_arr < 0):
        raise ValueError("ive requires nu >= 0 and z >= 0")
    out = np.empty(nu_arr.shape, dtype=float)
    flat_nu = nu_arr.ravel()
    flat_z = z_arr.ravel()
    flat_out = out.reshape(-1)
    for v in np.unique(flat_nu):
        sel = flat_nu == v
        zz = flat_z[sel]
        res = np.empty_like(zz)
        big = np.hypot(v, zz) >= CROSSOVER
        if np.any(big):
            res[big] = _ive_debye(float(v), zz[big])
        if np.any(~big):
            res[~big] = _ive_series(float(v), zz[~big])
        flat_out[sel] = res
    return out


def iv(nu, z):
    """I_nu(z); overflows for large z, prefer :func:`ive`."""
    z = np.asarray(z, dtype=float)
    return ive(nu, z) * np.exp(z)
