"""Radial Green kernels on the bounded cone C_(0,1](N) and their mode sums.

Each kernel h(r1, r2) of one link mode is stored as two lists of terms, one per
branch (r1 <= r2 and r1 >= r2).  A term ``(c, p1, p2, log1, log2)`` stands for
c * r1^p1 * r2^p2, multiplied by log r1 / log r2 when the flags are set.  This
keeps values and derivatives analytic, which the boundary, jump and ODE
checks need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cone_calculus import ConeIndices, cone_indices
from .link_spectrum import LinkSpectrum

FLAVORS = ("model", "absolute", "relative")

Term = tuple[float, float, float, bool, bool]


@dataclass(frozen=True)
class RadialKernel:
    indices: ConeIndices
    flavor: str
    lower: tuple[Term, ...]   # r1 <= r2
    upper: tuple[Term, ...]   # r1 >= r2
    # value of L_{r1} h away from the diagonal: 0, or minus the harmonic projection
    offdiagonal_source: float = 0.0

    def __call__(self, r1, r2):
        return self.evaluate(r1, r2)

    def evaluate(self, r1, r2, d1: int = 0, d2: int = 0):
        """Value or partial derivative (orders d1 in r1, d2 in r2, each <= 2)."""
        r1 = np.asarray(r1, dtype=float)
        r2 = np.asarray(r2, dtype=float)
        _check_radii(r1, r2)
        lo = _eval_terms(self.lower, r1, r2, d1, d2)
        hi = _eval_terms(self.upper, r1, r2, d1, d2)
        out = np.where(r1 <= r2, lo, hi)
        return out[()] if out.ndim == 0 else out

    def branch(self, which: str, r1, r2, d1: int = 0, d2: int = 0):
        terms = self.lower if which == "lower" else self.upper
        return _eval_terms(terms, np.asarray(r1, float), np.asarray(r2, float), d1, d2)


def _check_radii(r1, r2):
    if np.any(r1 <= 0) or np.any(r1 > 1) or np.any(r2 <= 0) or np.any(r2 > 1):
        raise ValueError("radii must lie in (0, 1]")


def _power_log(r, p, has_log, d):
    """d-th derivative of r^p (times log r if has_log)."""
    if not has_log:
        coef = 1.0
        for j in range(d):
            coef *= p - j
        return coef * r ** (p - d)
    lr = np.log(r)
    if d == 0:
        return r**p * lr
    if d == 1:
        return p * r ** (p - 1) * lr + r ** (p - 1)
    if d == 2:
        return p * (p - 1) * r ** (p - 2) * lr + (2 * p - 1) * r ** (p - 2)
    raise ValueError("derivatives above order 2 not supported")


def _eval_terms(terms, r1, r2, d1, d2):
    out = np.zeros(np.broadcast(r1, r2).shape)
    for c, p1, p2, l1, l2 in terms:
        out = out + c * _power_log(r1, p1, l1, d1) * _power_log(r2, p2, l2, d2)
    return out


def _model_terms(ind: ConeIndices) -> tuple[list[Term], list[Term]]:
    if ind.nu > 0:
        c = 1.0 / (2.0 * ind.nu)
        return [(c, ind.a_plus, ind.a_minus, False, False)], [(c, ind.a_minus, ind.a_plus, False, False)]
    # nu = 0 forces alpha = 0: h = -log max(r1, r2)
    return [(-1.0, 0.0, 0.0, False, True)], [(-1.0, 0.0, 0.0, True, False)]


def model_kernel(ind: ConeIndices) -> RadialKernel:
    lo, hi = _model_terms(ind)
    return RadialKernel(ind, "model", tuple(lo), tuple(hi))


def harmonic_split_constant(m: int) -> float:
    """(1+m)^2/((1-m)(3+m)), the constant of the degree-0, mu = 0 absolute correction."""
    if m == 1:
        raise ValueError("constant (1+m)^2/((1-m)(3+m)) is singular at m = 1")
    return (1 + m) ** 2 / ((1 - m) * (3 + m))


def absolute_kernel(ind: ConeIndices) -> RadialKernel:
    """Model kernel corrected so that d/dr2 vanishes at r2 = 1.

    nu > 0, a+ != 0: subtract a-/(2 nu a+) (r1 r2)^{a+}.
    mu = 0 with a+ = 0 (i = 0, m > 1): add (r1^2 + r2^2)/2 + (1+m)^2/((1-m)(3+m)).
    nu = 0 (m = 1, i = 0): add (r1^2 + r2^2)/2 - 3/4.
    The last two split off the harmonic mode, so L h = -(m+1) off the diagonal.
    """
    lo, hi = _model_terms(ind)
    source = 0.0
    if ind.nu > 0 and abs(ind.a_plus) > 1e-14:
        c = -ind.a_minus / (2.0 * ind.nu * ind.a_plus)
        extra = [(c, ind.a_plus, ind.a_plus, False, False)]
    else:
        m = ind.m
        if ind.degree != 0:
            raise ValueError("harmonic split-off correction is defined for degree 0 only")
        if ind.nu > 0:
            const = harmonic_split_constant(m)
        else:
            const = -0.75
        extra = [(0.5, 2.0, 0.0, False, False), (0.5, 0.0, 2.0, False, False),
                 (const, 0.0, 0.0, False, False)]
        source = -(m + 1.0)
    return RadialKernel(ind, "absolute", tuple(lo + extra), tuple(hi + extra), source)


def relative_kernel(ind: ConeIndices) -> RadialKernel:
    """Model kernel minus (r1 r2)^{a+}/(2 nu), vanishing at r2 = 1; unchanged when nu = 0."""
    lo, hi = _model_terms(ind)
    if ind.nu > 0:
        extra = [(-1.0 / (2.0 * ind.nu), ind.a_plus, ind.a_plus, False, False)]
        lo, hi = lo + extra, hi + extra
    return RadialKernel(ind, "relative", tuple(lo), tuple(hi))


_BUILDERS = {"model": model_kernel, "absolute": absolute_kernel, "relative": relative_kernel}


def radial_kernel(ind: ConeIndices, flavor: str) -> RadialKernel:
    if flavor not in _BUILDERS:
        raise ValueError(f"unknown flavor {flavor!r}; expected one of {FLAVORS}")
    return _BUILDERS[flavor](ind)


def model_h(ind: ConeIndices, r1, r2):
    return model_kernel(ind)(r1, r2)


def absolute_h(ind: ConeIndices, r1, r2):
    return absolute_kernel(ind)(r1, r2)


def relative_h(ind: ConeIndices, r1, r2):
    return relative_kernel(ind)(r1, r2)


# ---------------------------------------------------------------------------
# per-mode checks

def jump_condition_check(ind: ConeIndices, flavor: str, r: float) -> float:
    """|h_r1(r+, r) - h_r1(r-, r) + r^{2i-m}| relative to r^{2i-m}."""
    if not 0 < r < 1:
        raise ValueError("interior point required")
    ker = radial_kernel(ind, flavor)
    jump = float(ker.branch("upper", r, r, d1=1) - ker.branch("lower", r, r, d1=1))
    target = -r ** (2 * ind.degree - ind.m)
    return abs(jump - target) / abs(target)


def boundary_residual(ind: ConeIndices, flavor: str, r1) -> float:
    """max |d/dr2 h(r1, 1)| for absolute, max |h(r1, 1)| for relative (r1 < 1)."""
    ker = radial_kernel(ind, flavor)
    r1 = np.asarray(r1, dtype=float)
    if flavor == "absolute":
        vals = ker.branch("lower", r1, 1.0, d2=1)
    elif flavor == "relative":
        vals = ker.branch("lower", r1, 1.0)
    else:
        raise ValueError("boundary condition only for absolute/relative flavors")
    return float(np.max(np.abs(vals)))


def ode_residual(ind: ConeIndices, flavor: str, r1, r2) -> float:
    """Max relative residual of L h = source off the diagonal, in both variables."""
    ker = radial_kernel(ind, flavor)
    r1, r2 = np.meshgrid(np.asarray(r1, float), np.asarray(r2, float), indexing="ij")
    off = np.abs(r1 - r2) > 1e-12
    r1, r2 = r1[off], r2[off]
    p, mu = ind.weight_power, ind.mu
    worst = 0.0
    for axis in (1, 2):
        r = r1 if axis == 1 else r2
        d = {"d1": 0, "d2": 0}
        parts = []
        for order in (0, 1, 2):
            d = {"d1": order, "d2": 0} if axis == 1 else {"d1": 0, "d2": order}
            parts.append(ker.evaluate(r1, r2, **d))
        y, dy, d2y = parts
        lhs = -d2y - p * dy / r + mu * y / r**2
        scale = np.abs(d2y) + np.abs(p * dy / r) + np.abs(mu * y / r**2) + abs(ker.offdiagonal_source) + 1.0
        worst = max(worst, float(np.max(np.abs(lhs - ker.offdiagonal_source) / scale)))
    return worst


def symmetry_residual(ind: ConeIndices, flavor: str, r) -> float:
    ker = radial_kernel(ind, flavor)
    a, b = np.meshgrid(np.asarray(r, float), np.asarray(r, float), indexing="ij")
    return float(np.max(np.abs(ker(a, b) - ker(b, a))))


# ---------------------------------------------------------------------------
# mode sums on the circle quotients (m = 1)

@dataclass(frozen=True)
class GreenEvaluation:
    k: int
    degree: int
    flavor: str
    truncation: float
    x1: tuple[float, float]
    x2: tuple[float, float]
    value: float
    tail_bound: float
    n_modes: int


def _pairing(k: int, n: int, dtheta: float) -> float:
    """Sum of phi(y1) phi(y2) over the orthonormal real eigenfunctions of S^1/Z_k at |index| n."""
    if n == 0:
        return k / (2.0 * math.pi)
    return (k / math.pi) * math.cos(k * n * dtheta)


def default_truncation(r1: float, r2: float, k: int, cap_modes: int = 10**6) -> float:
    """Smallest cutoff with (r</r>)^{sqrt(cutoff)} < 1e-12, capped at ``cap_modes`` modes."""
    q = min(r1, r2) / max(r1, r2)
    if q >= 1.0:
        nu_max = k * cap_modes
    else:
        nu_max = min(math.log(1e-12) / math.log(q), k * cap_modes)
    return float(math.ceil(nu_max)) ** 2


def coexact_green_eval(spectrum: LinkSpectrum, i: int, flavor: str,
                       x1: tuple[float, float], x2: tuple[float, float],
                       truncation: float | None = None) -> GreenEvaluation:
    """Partial mode sum of the coexact Green operator on C_(0,1](S^1/Z_k).

    ``x = (r, theta)``.  Degree 0 sums over all link functions; degree 1 has
    only the harmonic form d theta.
    """
    if spectrum.m != 1:
        raise ValueError("pointwise evaluation is implemented for circle links only")
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}")
    (r1, t1), (r2, t2) = x1, x2
    if r1 == r2 and math.isclose(math.remainder(t1 - t2, 2 * math.pi / spectrum.group_order), 0.0,
                                 abs_tol=1e-15):
        raise ValueError("coincident points")
    k = spectrum.group_order
    if truncation is None:
        truncation = default_truncation(r1, r2, k)
    dtheta = t1 - t2
    if i == 1:
        ind = cone_indices(1, 1, 0.0)
        val = radial_kernel(ind, flavor)(r1, r2) * k / (2.0 * math.pi)
        return GreenEvaluation(k, i, flavor, truncation, x1, x2, float(val), 0.0, 1)
    if i != 0:
        raise ValueError("degree must be 0 or 1 on a circle link")
    n_max = int(math.floor(math.sqrt(truncation) / k + 1e-9))
    n = np.arange(1, n_max + 1)
    nu = (k * n).astype(float)
    lo, hi = min(r1, r2), max(r1, r2)
    # nu > 0 modes of the three flavors, written out in the alpha = 0 form
    terms = (lo / hi) ** nu / (2 * nu)
    if flavor == "absolute":
        terms = terms + (r1 * r2) ** nu / (2 * nu)
    elif flavor == "relative":
        terms = terms - (r1 * r2) ** nu / (2 * nu)
    weights = (k / math.pi) * np.cos(nu * dtheta)
    total = math.fsum(terms * weights)
    total += float(radial_kernel(cone_indices(1, 0, 0.0), flavor)(r1, r2)) * k / (2 * math.pi)
    q = lo / hi
    nn = n_max + 1
    tail = (k / math.pi) * q ** (k * nn) / (k * nn * (1 - q**k)) if q < 1 else math.inf
    return GreenEvaluation(k, i, flavor, truncation, x1, x2, total, tail, n_max + 1)


def coexact_green_resummed(k: int, flavor: str, r1, r2, dtheta):
    """Closed-form resummation of the degree-0 mode sum on C_(0,1](S^1/Z_k).

    Uses sum_n q^n cos(n psi)/n = -log(1 - 2 q cos psi + q^2)/2.
    """
    r1 = np.asarray(r1, float)
    r2 = np.asarray(r2, float)
    psi = k * np.asarray(dtheta, float)
    lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)

    def logsum(q):
        return -0.25 / math.pi * np.log1p(q * q - 2.0 * q * np.cos(psi))

    zero_mode = float(k) / (2 * math.pi) * radial_kernel(cone_indices(1, 0, 0.0), flavor)(r1, r2)
    out = zero_mode + logsum((lo / hi) ** k)
    if flavor == "absolute":
        out = out + logsum((r1 * r2) ** k)
    elif flavor == "relative":
        out = out - logsum((r1 * r2) ** k)
    return out


def cone_distance(k: int, r1, t1, r2, t2):
    """Distance on the flat cone R^2/Z_k (angle period 2 pi/k)."""
    r1, t1, r2, t2 = (np.asarray(a, float) for a in (r1, t1, r2, t2))
    best = None
    for j in range(k):
        ang = t1 - t2 + 2 * math.pi * j / k
        d2 = r1 * r1 + r2 * r2 - 2 * r1 * r2 * np.cos(ang)
        best = d2 if best is None else np.minimum(best, d2)
    return np.sqrt(np.maximum(best, 0.0))


@dataclass(frozen=True)
class BoundFit:
    constant: float
    fit_max_ratio: float
    validation_max_ratio: float
    violations: int
    n_fit: int
    n_validate: int


def sample_pairs(k: int, n: int, rng: np.random.Generator, dmin: float = 1e-3, dmax: float = 1.0):
    """Random point pairs in C_(0,1](S^1/Z_k) with cone distance in [dmin, dmax]."""
    out = []
    period = 2 * math.pi / k
    while len(out) < n:
        m = 4 * (n - len(out)) + 16
        r1 = np.sqrt(rng.uniform(0, 1, m))
        t1 = rng.uniform(0, period, m)
        d = np.exp(rng.uniform(math.log(dmin), math.log(dmax), m))
        ang = rng.uniform(0, 2 * math.pi, m)
        x = r1 * np.cos(t1) + d * np.cos(ang)
        y = r1 * np.sin(t1) + d * np.sin(ang)
        r2 = np.hypot(x, y)
        t2 = np.mod(np.arctan2(y, x), period)
        ok = (r1 > 0) & (r2 > 0) & (r2 <= 1)
        dist = cone_distance(k, r1, t1, r2, t2)
        ok &= (dist >= dmin) & (dist <= dmax)
        for row in np.column_stack([r1, t1, r2, t2])[ok]:
            out.append(tuple(row))
    return np.array(out[:n])


def green_bound_check(k: int, flavor: str, pairs: np.ndarray, margin: float = 0.1) -> BoundFit:
    """Fit C in |G| <= C (1 + |log dist|) on the first half of ``pairs``, validate on the rest.

    The fitted constant is the largest observed ratio times (1 + margin).
    """
    r1, t1, r2, t2 = pairs.T
    dist = cone_distance(k, r1, t1, r2, t2)
    g = coexact_green_resummed(k, flavor, r1, r2, t1 - t2)
    ratio = np.abs(g) / (1.0 + np.abs(np.log(dist)))
    half = len(ratio) // 2
    fit_max = float(np.max(ratio[:half]))
    c = fit_max * (1.0 + margin)
    val = ratio[half:]
    return BoundFit(c, fit_max, float(np.max(val)), int(np.sum(val > c)), half, len(val))


def coexact_part_envelope(k: int, r1, r2, dtheta):
    """The mu > 0 part of the model sum divided by r</r>, for the r1/r2 <= 1/2 regime."""
    lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
    q = (lo / hi) ** k
    psi = k * np.asarray(dtheta, float)
    part = -0.25 / math.pi * np.log1p(q * q - 2.0 * q * np.cos(psi))
    return np.abs(part) / (lo / hi)


def builtin_indices(m: int, cutoff: float = 60.0) -> list[ConeIndices]:
    """Cone indices of every coclosed link mode of the built-in spectra up to ``cutoff``."""
    from .link_spectrum import circle_quotient_spectrum, sphere_spectrum

    spectra: Sequence[LinkSpectrum]
    if m == 1:
        spectra = [circle_quotient_spectrum(k, cutoff) for k in (1, 2, 3)]
    else:
        spectra = [sphere_spectrum(m, cutoff)]
    seen = set()
    out = []
    for s in spectra:
        for f in s.modes:
            if f.kind == "exact":
                continue
            key = (f.degree, f.eigenvalue)
            if key not in seen:
                seen.add(key)
                out.append(cone_indices(m, f.degree, f.eigenvalue))
    return out
