"""Spectral zeta functions, zeta'(0), the weighted torsion zeta and torsion numbers.

Convention ``dar_eq_a8``: with zeta_i the positive spectral zeta of the degree-i
Laplacian restricted to nonzero modes,

    zeta(s) = sum_i (-1)^(i+1) i zeta_i(s),    T = exp(zeta'(0) / 2).

For the circle of length L this gives log T = -log L.

Continuation of a generic spectrum splits the Mellin integral at tau = 30 / cutoff:

    zeta'(0) = sum_lambda E1(lambda tau) + sum_{e != 0} c_e tau^e / e + c_0 (log tau + gamma),

where sum_e c_e t^e is a least-squares fit of the truncated heat trace on
[tau, 100 tau].  Above tau the truncated sum is exact to exp(-30).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence

import mpmath
import numpy as np
from scipy.special import exp1

CONVENTION = "dar_eq_a8"
EULER_GAMMA = 0.57721566490153286061
TAU_FACTOR = 30.0
WINDOW_DECADES = 2.0
FIT_POINTS = 64
ABS_TOL = 1e-12


class ZetaError(ValueError):
    """Unsupported continuation request or invalid series."""


class ZetaPole(ZetaError):
    def __init__(self, s, residue):
        super().__init__(f"pole at s={s} with residue {residue}")
        self.s = s
        self.residue = residue


class FitError(ZetaError):
    def __init__(self, message, condition):
        super().__init__(f"{message} (condition number {condition:.3g})")
        self.condition = condition


# ---------------------------------------------------------------------------
# Gamma and Riemann zeta

_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(z):
    """Lanczos approximation (g=7, 9 terms), complex argument, reflection for Re z < 1/2."""
    z = complex(z)
    if z.real < 0.5:
        if abs(z - round(z.real)) < 1e-15 and round(z.real) <= 0:
            raise ZetaPole(z, None)
        return math.pi / (cmath.sin(math.pi * z) * gamma(1.0 - z))
    z -= 1.0
    x = _LANCZOS[0]
    for j in range(1, len(_LANCZOS)):
        x += _LANCZOS[j] / (z + j)
    tt = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * tt ** (z + 0.5) * cmath.exp(-tt) * x


def rgamma(z) -> complex:
    """1/Gamma(z); zero at the poles of Gamma."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == round(z.real):
        return 0j
    return 1.0 / gamma(z)


def riemann_zeta(s) -> complex:
    return complex(mpmath.zeta(s))


def riemann_zeta_prime(s) -> complex:
    return complex(mpmath.zeta(s, derivative=1))


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmallTimeFit:
    """Heat-trace fit sum_e c_e t^e + b log t on [tau, 100 tau]."""
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]
    log_coefficient: float
    log_stderr: float
    tau: float
    condition: float
    rms: float

    def evaluate(self, t):
        t = np.asarray(t, float)
        out = sum(c * t**e for e, c in zip(self.exponents, self.coefficients))
        return out + self.log_coefficient * np.log(t)


def _design(x, exponents, log_term):
    cols = [x**e for e in exponents]
    if log_term:
        cols.append(np.log(x))
    return np.column_stack(cols)


def _lstsq(a, y):
    norms = np.linalg.norm(a, axis=0)
    scaled = a / norms
    coef, *_ = np.linalg.lstsq(scaled, y, rcond=None)
    return coef / norms, np.linalg.cond(scaled)


def fit_small_time(times, trace, dim: int, log_term: bool = False, terms: int | None = None,
                   max_terms: int = 8, max_condition: float = 1e12) -> SmallTimeFit:
    """Least-squares fit with exponents -dim/2 + j/2, j < terms, in relative weighting.

    ``terms=None`` picks the count by holdout validation on alternate grid points.
    """
    t = np.asarray(times, float)
    y = np.asarray(trace, float)
    if t.ndim != 1 or t.shape != y.shape or len(t) < 8:
        raise ZetaError("need matching 1-d time and trace arrays with at least 8 points")
    tau = float(t.min())
    x = t / tau
    weight = 1.0 / np.maximum(np.abs(y), 1e-300)

    def solve(n, mask):
        exps = [-dim / 2 + j / 2 for j in range(n)]
        a = _design(x[mask], exps, log_term) * weight[mask, None]
        coef, cond = _lstsq(a, y[mask] * weight[mask])
        return exps, coef, cond

    if terms is None:
        best = None
        train = np.arange(len(t)) % 2 == 0
        for n in range(2, max_terms + 1):
            exps, coef, cond = solve(n, train)
            if cond > max_condition:
                break
            pred = _design(x[~train], exps, log_term) @ coef
            err = float(np.sqrt(np.mean(((pred - y[~train]) * weight[~train]) ** 2)))
            if best is None or err < best[0] * (1 - 1e-3):
                best = (err, n)
        if best is None:
            raise FitError("small-time fit ill-conditioned for every basis size", cond)
        terms = best[1]
    exps, coef, cond = solve(terms, np.ones(len(t), bool))
    if cond > max_condition:
        raise FitError("small-time fit ill-conditioned", cond)
    a = _design(x, exps, log_term) * weight[:, None]
    resid = a @ coef - y * weight
    dof = max(len(t) - a.shape[1], 1)
    sigma2 = float(resid @ resid) / dof
    b, stderr = 0.0, 0.0
    if log_term:
        cov = sigma2 * np.linalg.pinv(a.T @ a)
        b = float(coef[-1])
        stderr = float(math.sqrt(max(cov[-1, -1], 0.0)))
        coef = coef[:-1]
    # x^e = t^e tau^-e and log x = log t - log tau
    c = [float(ce) * tau ** (-e) for e, ce in zip(exps, coef)]
    if log_term and 0.0 in exps:
        c[exps.index(0.0)] -= b * math.log(tau)
    return SmallTimeFit(tuple(exps), tuple(c), b, stderr, tau, float(cond),
                        float(math.sqrt(sigma2)))


# ---------------------------------------------------------------------------

@dataclass
class ZetaSeries:
    """Nonzero eigenvalues with multiplicities.

    ``strategy`` is ``"lattice"`` for lambda = scale*n^2 (n >= 1) with fixed
    multiplicity ``weight``, where closed forms in the Riemann zeta apply,
    ``"finite"`` for a complete finite list (an entire function summed
    directly), and ``"mellin"`` otherwise.  ``cutoff`` is the level below which the list is
    complete; ``dim`` is the dimension of the underlying space.
    """
    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    dim: int
    cutoff: float
    strategy: str = "mellin"
    scale: float | None = None
    weight: float | None = None
    provenance: str = ""
    _fits: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, float)
        mult = np.asarray(self.multiplicities, float)
        if lam.shape != mult.shape:
            raise ZetaError("eigenvalue and multiplicity arrays differ in shape")
        if np.any(lam <= 0):
            raise ZetaError("ZetaSeries holds nonzero (positive) eigenvalues only")
        if self.strategy not in ("lattice", "mellin", "finite"):
            raise ZetaError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "lattice" and (self.scale is None or self.weight is None):
            raise ZetaError("lattice strategy needs scale and weight")
        order = np.argsort(lam, kind="stable")
        self.eigenvalues = lam[order]
        self.multiplicities = mult[order]

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]], dim: int, cutoff: float | None = None,
                   provenance: str = "") -> "ZetaSeries":
        """Drop zero modes (harmonic projection) and keep the rest."""
        pos = [(lam, mult) for lam, mult in pairs if lam > ABS_TOL]
        lam = np.array([p[0] for p in pos], float)
        mult = np.array([p[1] for p in pos], float)
        if cutoff is None:
            cutoff = float(lam.max()) if lam.size else 0.0
        return cls(lam, mult, dim, float(cutoff), provenance=provenance)

    @classmethod
    def finite(cls, pairs: Sequence[tuple[float, float]], dim: int, provenance: str = "") -> "ZetaSeries":
        """A complete finite spectrum (zero modes dropped)."""
        pos = [(lam, mult) for lam, mult in pairs if lam > ABS_TOL]
        lam = np.array([p[0] for p in pos], float)
        return cls(lam, np.array([p[1] for p in pos], float), dim, float(lam.max()) if lam.size else 0.0,
                   "finite", provenance=provenance)

    @classmethod
    def lattice(cls, scale: float, weight: float, n_max: int, dim: int = 1,
                provenance: str = "") -> "ZetaSeries":
        """lambda = scale * n^2, n = 1..n_max, multiplicity ``weight``."""
        if not scale > 0 or n_max < 1:
            raise ZetaError("lattice needs scale > 0 and n_max >= 1")
        n = np.arange(1, n_max + 1, dtype=float)
        return cls(scale * n * n, np.full(n_max, float(weight)), dim, scale * n_max**2,
                   "lattice", float(scale), float(weight), provenance)

    def as_mellin(self) -> "ZetaSeries":
        return ZetaSeries(self.eigenvalues, self.multiplicities, self.dim, self.cutoff,
                          provenance=self.provenance)

    def scaled(self, c: float) -> "ZetaSeries":
        return ZetaSeries(self.eigenvalues * c, self.multiplicities, self.dim, self.cutoff * c,
                          self.strategy, None if self.scale is None else self.scale * c,
                          self.weight, self.provenance)

    def trace(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, float))
        return np.array([math.fsum(self.multiplicities * np.exp(-self.eigenvalues * tt)) for tt in t])

    @property
    def tau(self) -> float:
        if not self.cutoff > 0:
            raise ZetaError("empty spectrum has no continuation window")
        return TAU_FACTOR / self.cutoff

    def window(self, points: int = FIT_POINTS) -> np.ndarray:
        return self.tau * np.logspace(0.0, WINDOW_DECADES, points)

    def small_time_fit(self, log_term: bool = False) -> SmallTimeFit:
        if log_term not in self._fits:
            times = self.window()
            self._fits[log_term] = fit_small_time(times, self.trace(times), self.dim, log_term)
        return self._fits[log_term]


def _incomplete_gamma_sum(series: ZetaSeries, s: complex, tau: float) -> complex:
    total = mpmath.mpf(0)
    for lam, mult in zip(series.eigenvalues, series.multiplicities):
        total += mult * mpmath.power(lam, -s) * mpmath.gammainc(s, lam * tau)
    return complex(total)


def spectral_zeta(series: ZetaSeries, s) -> complex:
    """zeta(s) = sum mult * lambda^-s, continued to all s.

    Lattice series use scale^-s * weight * zeta_R(2s).  Generic series use the
    split Mellin integral with the fitted small-time expansion on (0, tau].
    """
    s = complex(s)
    if series.eigenvalues.size == 0:
        return 0j
    if series.strategy == "lattice":
        if abs(s - 0.5) < 1e-14:
            raise ZetaPole(s, series.weight / (2.0 * math.sqrt(series.scale)))
        return series.weight * series.scale ** (-s) * riemann_zeta(2 * s)
    if series.strategy == "finite":
        return complex(sum(m * complex(lam) ** (-s) for lam, m in zip(series.eigenvalues, series.multiplicities)))
    fit = series.small_time_fit()
    tau = series.tau
    n = round(s.real)
    if s.imag == 0 and n <= 0 and abs(s.real - n) < 1e-14:
        # 1/Gamma vanishes at s = -n; only the matching power survives, with
        # lim (s+n)^-1 / Gamma(s) = (-1)^n n!
        return complex(sum(c * (-1) ** n * math.factorial(-n)
                           for e, c in zip(fit.exponents, fit.coefficients) if e == -n))
    total = _incomplete_gamma_sum(series, s, tau)
    for e, c in zip(fit.exponents, fit.coefficients):
        if abs(s + e) < 1e-14:
            raise ZetaPole(s, c * rgamma(s))
        total += c * tau ** (s + e) / (s + e)
    return total * rgamma(s)


def zeta_prime_at_zero(series: ZetaSeries) -> float:
    """d/ds zeta(s) at s = 0."""
    if series.eigenvalues.size == 0:
        return 0.0
    if series.strategy == "lattice":
        # w * (-log c * zeta_R(0) + 2 zeta_R'(0)) = w * (log(c)/2 - log(2 pi))
        return series.weight * (0.5 * math.log(series.scale) - math.log(2.0 * math.pi))
    if series.strategy == "finite":
        return -math.fsum(series.multiplicities * np.log(series.eigenvalues))
    fit = series.small_time_fit()
    tau = series.tau
    total = math.fsum(series.multiplicities * exp1(series.eigenvalues * tau))
    for e, c in zip(fit.exponents, fit.coefficients):
        if e == 0.0:
            total += c * (math.log(tau) + EULER_GAMMA)
        else:
            total += c * tau**e / e
    return float(total)


def zeta_at_zero(series: ZetaSeries) -> float:
    """Continued value zeta(0): the constant term of the nonzero-mode heat trace."""
    if series.eigenvalues.size == 0:
        return 0.0
    if series.strategy == "lattice":
        return -0.5 * series.weight
    if series.strategy == "finite":
        return float(np.sum(series.multiplicities))
    fit = series.small_time_fit()
    return float(sum(c for e, c in zip(fit.exponents, fit.coefficients) if e == 0.0))


# ---------------------------------------------------------------------------

def torsion_weight(i: int) -> int:
    """Coefficient of zeta_i in the weighted torsion zeta, (-1)^(i+1) i."""
    return (-1) ** (i + 1) * i


@dataclass
class TorsionReport:
    convention: str
    zeta_prime: dict[int, float]
    weighted_zeta_prime: float
    log_torsion: float
    torsion: float
    residue: float | None = None
    log_T_c: float | None = None
    log_T_o: float | None = None
    T_c: float | None = None
    T_o: float | None = None
    discrepancy: float | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.log_torsion - 0.5 * self.weighted_zeta_prime) > 1e-12 * max(1.0, abs(self.log_torsion)):
            raise ZetaError("log T must equal zeta'(0)/2")

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["zeta_prime"] = {str(k): v for k, v in self.zeta_prime.items()}
        return d


def torsion(series_by_degree: Mapping[int, ZetaSeries], convention: str = CONVENTION) -> TorsionReport:
    """Torsion from per-degree series (missing degrees count as empty)."""
    if convention != CONVENTION:
        raise ZetaError(f"unsupported convention {convention!r}")
    dims = {s.dim for s in series_by_degree.values()}
    if len(dims) > 1:
        raise ZetaError(f"inconsistent dimensions across degrees: {sorted(dims)}")
    zp = {i: zeta_prime_at_zero(s) for i, s in sorted(series_by_degree.items())}
    weighted = math.fsum(torsion_weight(i) * v for i, v in zp.items())
    log_t = 0.5 * weighted
    prov = {str(i): s.provenance for i, s in series_by_degree.items() if s.provenance}
    return TorsionReport(convention, zp, weighted, log_t, math.exp(log_t), provenance=prov)


def circle_series(length: float, n_max: int = 2000) -> dict[int, ZetaSeries]:
    """Nonzero spectra of the circle of length L: (2 pi n / L)^2 with multiplicity 2 in degrees 0, 1."""
    if not length > 0:
        raise ZetaError("length must be positive")
    c = (2.0 * math.pi / length) ** 2
    return {i: ZetaSeries.lattice(c, 2, n_max, dim=1, provenance=f"circle L={length!r} degree {i}")
            for i in (0, 1)}


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidueFit:
    log_coefficient: float
    band: float
    condition: float
    terms: int
    tolerance: float
    weights: dict

    @property
    def passed(self) -> bool:
        return abs(self.log_coefficient) < self.tolerance


def trace_grid(t_min: float = 1e-4, t_max: float = 1e-1, points: int = FIT_POINTS) -> np.ndarray:
    return np.geomspace(t_min, t_max, points)


def residue_check(times, traces: Mapping[int, np.ndarray], dim: int,
                  weights: Mapping[int, float] | None = None, tolerance: float = 1e-3,
                  terms: int | None = None) -> ResidueFit:
    """Fit the log t coefficient of sum_i w_i Tr_i(t); weights (-1)^(i+1) i by default.

    The fit is in absolute weighting so a combination that cancels to zero gives b ~ 0.
    """
    t = np.asarray(times, float)
    if weights is None:
        weights = {i: torsion_weight(i) for i in traces}
    combo = sum(w * np.asarray(traces[i], float) for i, w in weights.items())
    tau = float(t.min())
    x = t / tau
    scale = max(float(np.max(np.abs(np.asarray(traces[i]) * x ** (dim / 2)))) for i in traces)

    def solve(n, mask):
        exps = [-dim / 2 + j / 2 for j in range(n)]
        a = _design(x[mask], exps, True) * (x[mask, None] ** (dim / 2))
        coef, cond = _lstsq(a, combo[mask] * x[mask] ** (dim / 2))
        return exps, coef, cond, a

    if terms is None:
        train = np.arange(len(t)) % 2 == 0
        best = None
        for n in range(1, 8):
            exps, coef, cond, _ = solve(n, train)
            if cond > 1e12:
                break
            pred = _design(x[~train], exps, True) @ coef
            err = float(np.sqrt(np.mean((pred - combo[~train]) ** 2 * x[~train] ** dim)))
            if best is None or err < best[0] * (1 - 1e-3) - 1e-14 * scale:
                best = (err, n)
        if best is None:
            raise FitError("residue fit ill-conditioned", cond)
        terms = best[1]
    exps, coef, cond, a = solve(terms, np.ones(len(t), bool))
    if cond > 1e12:
        raise FitError("residue fit ill-conditioned", cond)
    resid = a @ coef - combo * x ** (dim / 2)
    dof = max(len(t) - a.shape[1], 1)
    cov = float(resid @ resid) / dof * np.linalg.pinv(a.T @ a)
    band = 2.0 * math.sqrt(max(cov[-1, -1], 0.0))
    return ResidueFit(float(coef[-1]), band, float(cond), terms, tolerance,
                      {str(k): v for k, v in weights.items()})


# ---------------------------------------------------------------------------
# flat spindle comparison

DEFAULT_CUTOFFS = (1e5, 2e5, 4e5)


def richardson_limit(values: Sequence[float]) -> float:
    """Extrapolate a sequence from geometrically refined truncations.

    With three or more levels the observed contraction ratio r of successive
    differences gives v + d / (r - 1); without a contracting ratio the finest
    value is returned unchanged.
    """
    v = [float(x) for x in values]
    if len(v) < 3:
        return v[-1]
    d1, d2 = v[-2] - v[-3], v[-1] - v[-2]
    if abs(d2) <= 1e-15 * max(1.0, abs(v[-1])):
        return v[-1]
    r = d1 / d2
    if r <= 1.0:
        return v[-1]
    return v[-1] + d2 / (r - 1.0)


def spindle_series(spectrum, provenance: str = "") -> dict[int, ZetaSeries]:
    return {i: ZetaSeries.from_pairs(spectrum.pairs(i), 2, spectrum.cutoff,
                                     provenance=f"{spectrum.route} k={spectrum.k} degree {i} {provenance}".strip())
            for i in range(3)}


def torsion_compare(k: int, radius: float = 1.0, cutoffs: Sequence[float] = DEFAULT_CUTOFFS) -> TorsionReport:
    """T_c from the conical-route spectra against T_o from the orbifold route.

    Per-degree zeta'(0) values are extrapolated over the truncation levels.
    A kernel-dimension mismatch between the routes is a hard failure.
    """
    from .spindle import conical_spectrum, orbifold_spectrum

    if int(k) != k or k < 1:
        raise ZetaError(f"k must be a positive integer, got {k!r}")
    cutoffs = sorted(float(c) for c in cutoffs)
    levels = {"conical": {i: [] for i in range(3)}, "orbifold": {i: [] for i in range(3)}}
    kernels = {}
    finest = None
    for cut in cutoffs:
        for route, build in (("conical", conical_spectrum), ("orbifold", orbifold_spectrum)):
            spec = build(k, radius, cut)
            kernels[route] = spec.kernel_dims()
            series = spindle_series(spec)
            for i, s in series.items():
                levels[route][i].append(zeta_prime_at_zero(s))
            if route == "conical":
                finest = series
        if kernels["conical"] != kernels["orbifold"]:
            raise ZetaError(f"kernel dimensions differ: conical {kernels['conical']}, "
                            f"orbifold {kernels['orbifold']}")
    limits = {route: {i: richardson_limit(v) for i, v in per.items()} for route, per in levels.items()}
    weighted = {route: math.fsum(torsion_weight(i) * v for i, v in lim.items()) for route, lim in limits.items()}
    log_c, log_o = 0.5 * weighted["conical"], 0.5 * weighted["orbifold"]
    times = trace_grid()
    residue = residue_check(times, {i: s.trace(times) for i, s in finest.items()}, 2)
    level_logs = {route: [0.5 * math.fsum(torsion_weight(i) * per[i][j] for i in range(3))
                          for j in range(len(cutoffs))] for route, per in levels.items()}
    prov = {
        "geometry": f"flat spindle k={k} radius={radius}",
        "cutoffs": cutoffs,
        "kernel_dims": list(kernels["conical"]),
        "zeta_prime_levels": {route: {str(i): v for i, v in per.items()} for route, per in levels.items()},
        "zeta_prime_orbifold": {str(i): v for i, v in limits["orbifold"].items()},
        "log_T_levels": level_logs,
        "discrepancy_levels": [abs(a - b) for a, b in zip(level_logs["conical"], level_logs["orbifold"])],
    }
    return TorsionReport(CONVENTION, limits["conical"], weighted["conical"], log_c, math.exp(log_c),
                         residue=residue.log_coefficient, log_T_c=log_c, log_T_o=log_o,
                         T_c=math.exp(log_c), T_o=math.exp(log_o), discrepancy=abs(log_c - log_o),
                         provenance=prov)
