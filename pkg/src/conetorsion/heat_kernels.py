"""Conical heat kernels by per-mode radial solves, orbifold kernels by image sums.

For one link mode with cone indices (alpha, nu) the radial operator is

    L u = -u'' - (p/r) u' + mu u / r^2,   p = m - 2i,

self-adjoint in L^2(r^p dr).  Its heat kernel on the half line is the Bessel form

    (r1 r2)^alpha / (2t) * exp(-(r1^2 + r2^2)/4t) * I_nu(r1 r2 / 2t),

used here as the oracle for a finite-volume implicit solver.  On the flat
cone R^2/Z_k the mode sum over the link S^1/Z_k must agree with the image sum
(4 pi t)^-1 sum_g exp(-|g x - y|^2 / 4t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .bessel import ive
from .cone_calculus import ConeIndices, cone_indices

BOUNDARIES = ("none", "absolute", "relative")
LOG_TAIL = math.log(1e14)


class SolverError(RuntimeError):
    """Radial solver failure (factorization or non-finite values)."""


@dataclass(frozen=True)
class ConePoint:
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("cone points need r > 0")

    def cartesian(self) -> tuple[float, float]:
        return self.r * math.cos(self.theta), self.r * math.sin(self.theta)


@dataclass(frozen=True)
class SolverConfig:
    """Radial solver resolution.

    ``h`` is the node spacing in the mapped coordinate xi, r = stretch*sinh(xi/stretch);
    spacing grows geometrically away from the tip with ratio exp(h/stretch) per cell.
    ``steps`` equal implicit steps reach the target time.
    ``richardson`` combines (h, dt) with (h/2, dt/2) as (4 fine - coarse)/3.
    """
    h: float = 4e-3
    steps: int = 200
    stretch: float = 1.5
    richardson: bool = True
    r_out: float | None = None

    def halved(self) -> "SolverConfig":
        return SolverConfig(self.h / 2, self.steps * 2, self.stretch,
                            False, self.r_out)


def bessel_mode_kernel(ind: ConeIndices, t: float, r1, r2):
    """Closed-form half-line heat kernel of one mode w.r.t. r^{m-2i} dr."""
    if not t > 0:
        raise ValueError("t must be positive")
    r1 = np.asarray(r1, float)
    r2 = np.asarray(r2, float)
    z = r1 * r2 / (2.0 * t)
    # exp(-(r1^2+r2^2)/4t) I_nu(z) = exp(-(r1-r2)^2/4t) ive(nu, z)
    return (r1 * r2) ** ind.alpha / (2.0 * t) * np.exp(-(r1 - r2) ** 2 / (4.0 * t)) * ive(ind.nu, z)


@dataclass
class _Discretization:
    r: np.ndarray          # unknown nodes
    xi: np.ndarray         # their mapped coordinates
    mass: np.ndarray
    diag: np.ndarray       # stiffness diagonal
    off: np.ndarray        # stiffness off-diagonal (negative)
    h: float
    xi0: float             # mapped coordinate of the first unknown
    stretch: float


def _discretize(ind: ConeIndices, boundary: str, xi_end: float, n: int, stretch: float) -> _Discretization:
    """Finite volumes for w = r^{-a+} u.

    With s = a+ the substitution removes the mu/r^2 potential: w solves
    -w'' - (1+2nu)/r w' in the weight r^{1+2nu}, regular with zero flux at the tip.
    Neumann for u at r = 1 becomes the Robin condition w' = -s w.
    """
    h = xi_end / n
    xi = np.arange(n + 1) * h
    r = stretch * np.sinh(xi / stretch)
    faces = stretch * np.sinh((xi[:-1] + h / 2) / stretch)
    q = 1.0 + 2.0 * ind.nu
    hi = n if boundary == "absolute" else n - 1
    idx = np.arange(0, hi + 1)
    left = np.concatenate([[0.0], faces[:hi]])
    right = faces[:hi + 1] if hi < n else np.concatenate([faces, [r[n]]])
    mass = (right ** (q + 1) - left ** (q + 1)) / (q + 1)
    w = faces**q / (r[1:] - r[:-1])
    diag = np.zeros(hi + 1)
    diag[1:] += w[:hi]
    diag[:min(hi + 1, n)] += w[:min(hi + 1, n)]
    if boundary == "absolute":
        diag[n] += ind.a_plus
    off = -w[:hi]
    return _Discretization(r[idx], xi[idx], mass, diag, off, h, 0.0, stretch)


def _lagrange_weights(disc: _Discretization, radii: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cubic Lagrange interpolation in xi: (start index, 4 weights) per radius."""
    x = disc.stretch * np.arcsinh(radii / disc.stretch)
    pos = (x - disc.xi0) / disc.h
    npts = len(disc.r)
    start = np.clip(np.floor(pos).astype(int) - 1, 0, npts - 4)
    s = pos - start
    w = np.empty((len(radii), 4))
    for a in range(4):
        num = np.ones_like(s)
        for b in range(4):
            if b != a:
                num *= (s - b) / (a - b)
        w[:, a] = num
    return start, w


SDIRK_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)


def _factor(mass, diag, off, c):
    from scipy.linalg import lapack  # deferred: keeps CLI start-up short

    d_f, e_f, info = lapack.dpttrf(mass + c * diag, c * off)
    if info != 0:
        raise SolverError(f"tridiagonal factorization failed (info={info})")
    return d_f, e_f


def _stiffness(diag, off, u):
    out = diag[:, None] * u
    out[:-1] += off[:, None] * u[1:]
    out[1:] += off[:, None] * u[:-1]
    return out


def _solve(fac, rhs):
    from scipy.linalg import lapack

    x, info = lapack.dpttrs(fac[0], fac[1], rhs)
    if info != 0:
        raise SolverError(f"tridiagonal solve failed (info={info})")
    return x


def _march(disc: _Discretization, u: np.ndarray, t: float, steps: int) -> np.ndarray:
    """Two-stage L-stable SDIRK for M u' = -A u (second order, stiffly accurate)."""
    dt = t / steps
    g = SDIRK_GAMMA
    m, a, e = disc.mass[:, None], disc.diag, disc.off
    fac = _factor(disc.mass, a, e, g * dt)
    for _ in range(steps):
        mu = m * u
        u1 = _solve(fac, mu)
        u = _solve(fac, mu - (1.0 - g) * dt * _stiffness(a, e, u1))
    if not np.all(np.isfinite(u)):
        raise SolverError("non-finite values in radial solve")
    return u


def _domain_end(boundary: str, t: float, radii_max: float, cfg: SolverConfig) -> float:
    if boundary != "none":
        return 1.0
    if cfg.r_out is not None:
        return cfg.r_out
    return radii_max + math.sqrt(4.0 * t * LOG_TAIL)


def _raw_kernel(ind, t, r1, r2, boundary, cfg: SolverConfig):
    end = _domain_end(boundary, t, max(np.max(r1), np.max(r2)), cfg)
    xi_end = cfg.stretch * math.asinh(end / cfg.stretch)
    n = max(int(math.ceil(xi_end / cfg.h)), 8)
    return n, xi_end


def mode_heat_matrix(ind: ConeIndices, t: float, r1, r2, boundary: str = "none",
                     cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Solver heat kernel of one mode on the grid r1 x r2 (w.r.t. r^{m-2i} dr)."""
    if not t > 0:
        raise ValueError("t must be positive")
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}")
    r1 = np.atleast_1d(np.asarray(r1, float))
    r2 = np.atleast_1d(np.asarray(r2, float))
    if boundary != "none" and (np.any(r1 > 1) or np.any(r2 > 1)):
        raise ValueError("bounded cone radii must lie in (0, 1]")
    n, xi_end = _raw_kernel(ind, t, r1, r2, boundary, cfg)

    def at(level_n, steps):
        disc = _discretize(ind, boundary, xi_end, level_n, cfg.stretch)
        s2, w2 = _lagrange_weights(disc, r2)
        u0 = np.zeros((len(disc.r), len(r2)))
        for col in range(len(r2)):
            u0[s2[col]:s2[col] + 4, col] = w2[col] / disc.mass[s2[col]:s2[col] + 4]
        u = _march(disc, u0, t, steps)
        s1, w1 = _lagrange_weights(disc, r1)
        out = np.zeros((len(r1), len(r2)))
        for row in range(len(r1)):
            out[row] = w1[row] @ u[s1[row]:s1[row] + 4]
        return out

    scale = np.outer(r1 ** ind.a_plus, r2 ** ind.a_plus)
    coarse = at(n, cfg.steps)
    if not cfg.richardson:
        return scale * coarse
    fine = at(2 * n, 2 * cfg.steps)
    return scale * (4.0 * fine - coarse) / 3.0


def mode_heat_radial(ind: ConeIndices, t: float, r1: float, r2: float, boundary: str = "none",
                     cfg: SolverConfig = SolverConfig(), method: str = "solver") -> float:
    """Heat kernel of one radial mode at (r1, r2).

    ``method="bessel"`` returns the closed form (infinite cone only).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if method == "bessel":
        if boundary != "none":
            raise ValueError("closed form exists for the infinite cone only")
        return float(bessel_mode_kernel(ind, t, r1, r2))
    if method != "solver":
        raise ValueError(f"unknown method {method!r}")
    return float(mode_heat_matrix(ind, t, [r1], [r2], boundary, cfg)[0, 0])


# ---------------------------------------------------------------------------
# flat model R^2 / Z_k

def orbifold_image_kernel(k: int, t: float, x1: ConePoint, x2: ConePoint) -> float:
    """(4 pi t)^-1 sum over Z_k rotations of the planar Gaussian."""
    if not t > 0:
        raise ValueError("t must be positive")
    ang = x1.theta - x2.theta + 2.0 * np.pi * np.arange(k) / k
    d2 = x1.r**2 + x2.r**2 - 2.0 * x1.r * x2.r * np.cos(ang)
    return float(np.sum(np.exp(-d2 / (4.0 * t))) / (4.0 * math.pi * t))


def image_kernel_array(k: int, t: float, r1, t1, r2, t2) -> np.ndarray:
    r1, t1, r2, t2 = np.broadcast_arrays(*(np.asarray(a, float) for a in (r1, t1, r2, t2)))
    out = np.zeros(r1.shape)
    for j in range(k):
        d2 = r1**2 + r2**2 - 2.0 * r1 * r2 * np.cos(t1 - t2 + 2.0 * math.pi * j / k)
        out += np.exp(-d2 / (4.0 * t))
    return out / (4.0 * math.pi * t)


def mode_cutoff(k: int, t: float, rmax: float, tol: float = 1e-10) -> int:
    """Largest Fourier index n so that the neglected modes (kn' > kn) are below ``tol`` relative."""
    z = rmax * rmax / (2.0 * t)
    scale = float(ive(0.0, z))
    n = 1
    while True:
        nu = k * n
        term = float(ive(float(nu), z))
        # I_nu decays faster than geometric once nu > z; bound the tail by a geometric series
        ratio = float(ive(float(nu + k), z)) / term if term > 0 else 0.0
        if nu > z and term * 2.0 / max(1e-300, 1.0 - ratio) < tol * scale:
            return n - 1 if n > 1 else 1
        n += 1
        if n > 100000:
            raise SolverError("mode cutoff did not converge")


def cone_mode_sum_matrix(k: int, t: float, pts1: Sequence[ConePoint], pts2: Sequence[ConePoint],
                         method: str = "solver", cfg: SolverConfig = SolverConfig(),
                         n_max: int | None = None) -> np.ndarray:
    """Mode-sum kernel of R^2/Z_k for every pair (pts1[a], pts2[b])."""
    r1 = np.array([p.r for p in pts1])
    r2 = np.array([p.r for p in pts2])
    th1 = np.array([p.theta for p in pts1])[:, None]
    th2 = np.array([p.theta for p in pts2])[None, :]
    if n_max is None:
        n_max = mode_cutoff(k, t, max(r1.max(), r2.max()))
    total = np.zeros((len(r1), len(r2)))
    for n in range(0, n_max + 1):
        ind = cone_indices(1, 0, float((k * n) ** 2))
        if method == "bessel":
            radial = bessel_mode_kernel(ind, t, r1[:, None], r2[None, :])
        else:
            radial = mode_heat_matrix(ind, t, r1, r2, "none", cfg)
        if n == 0:
            total += radial * k / (2.0 * math.pi)
        else:
            total += radial * (k / math.pi) * np.cos(k * n * (th1 - th2))
    return total


def cone_mode_sum_kernel(k: int, t: float, x1: ConePoint, x2: ConePoint,
                         method: str = "solver", cfg: SolverConfig = SolverConfig(),
                         n_max: int | None = None) -> float:
    """Sum over link modes of R^2/Z_k of radial kernel times angular pairing."""
    if not t > 0:
        raise ValueError("t must be positive")
    return float(cone_mode_sum_matrix(k, t, [x1], [x2], method, cfg, n_max)[0, 0])


# ---------------------------------------------------------------------------

@dataclass
class HeatGrid:
    k: int
    times: list[float]
    pairs: list[tuple[float, float, float, float]]
    values_c: list[list[float]]
    values_o: list[list[float]]
    sup_rel_discrepancy: float
    solver: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return asdict(self)


def random_pairs(k: int, n: int, rng: np.random.Generator, r_min: float = 0.3, r_max: float = 1.0):
    period = 2.0 * math.pi / k
    r = rng.uniform(r_min, r_max, size=(n, 2))
    th = rng.uniform(0.0, period, size=(n, 2))
    return [(ConePoint(a, b), ConePoint(c, d)) for (a, c), (b, d) in zip(r, th)]


def duhamel_compare(k: int, times: Sequence[float], pairs, cfg: SolverConfig = SolverConfig(),
                    method: str = "solver", workers: int = 1) -> HeatGrid:
    """Mode-sum versus image-sum kernels over times x pairs.

    ``workers`` > 1 evaluates the times in a thread pool; results keep input order.
    """
    p1 = [a for a, _ in pairs]
    p2 = [b for _, b in pairs]

    def one(t):
        return cone_mode_sum_matrix(k, t, p1, p2, method, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mats = list(pool.map(one, times))
    else:
        mats = [one(t) for t in times]
    vc, vo = [], []
    worst = 0.0
    truncation = [mode_cutoff(k, t, max(max(p.r for p in p1), max(p.r for p in p2))) for t in times]
    for t, mat in zip(times, mats):
        kc = np.diag(mat)
        ko = np.array([orbifold_image_kernel(k, t, a, b) for a, b in pairs])
        worst = max(worst, float(np.max(np.abs(kc - ko) / np.abs(ko))))
        vc.append(kc.tolist())
        vo.append(ko.tolist())
    return HeatGrid(k, list(times), [(a.r, a.theta, b.r, b.theta) for a, b in pairs], vc, vo, worst,
                    {"method": method, "truncation": truncation, **asdict(cfg)})


def heat_trace(eigenvalues, t: float, multiplicities=None, include_zero: bool = False) -> float:
    """sum mult * exp(-lambda t); zero modes are dropped unless ``include_zero``."""
    if not t > 0:
        raise ValueError("t must be positive")
    lam = np.asarray(list(eigenvalues), float)
    if lam.size == 0:
        return 0.0
    mult = np.ones_like(lam) if multiplicities is None else np.asarray(list(multiplicities), float)
    keep = np.ones(lam.shape, bool) if include_zero else lam > 1e-12
    return math.fsum(mult[keep] * np.exp(-lam[keep] * t))
