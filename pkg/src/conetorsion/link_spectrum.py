"""Hodge-Laplacian spectra of links N = S^m / G.

A :class:`LinkSpectrum` lists eigenvalue families per form degree, split into
coexact, exact and harmonic parts.  Built-in constructors cover the circle
quotients S^1/Z_k (exactly) and round spheres S^m; anything else comes in
through the text format read by :func:`load_spectrum`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

KINDS = ("coexact", "exact", "harmonic")
AGG_TOL = 1e-9


class SpectrumError(ValueError):
    """Invalid argument to a spectrum constructor."""


class SpectrumParseError(SpectrumError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class SpectrumValidationError(SpectrumError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class ModeFamily:
    degree: int
    kind: str
    eigenvalue: float
    multiplicity: int


@dataclass(frozen=True)
class LinkSpectrum:
    m: int
    group_order: int
    cutoff: float
    modes: tuple[ModeFamily, ...]

    @classmethod
    def from_modes(cls, m: int, group_order: int, cutoff: float,
                   modes: Iterable[ModeFamily]) -> "LinkSpectrum":
        return cls(m, group_order, float(cutoff), _aggregate(modes))

    def families(self, degree: int | None = None, kind: str | None = None) -> list[ModeFamily]:
        return [f for f in self.modes
                if (degree is None or f.degree == degree) and (kind is None or f.kind == kind)]

    def eigenvalues(self, degree: int, kinds: Iterable[str] = KINDS) -> list[tuple[float, int]]:
        kinds = tuple(kinds)
        return [(f.eigenvalue, f.multiplicity) for f in self.families(degree) if f.kind in kinds]

    def count_up_to(self, degree: int, lam: float, kinds: Iterable[str] = KINDS) -> int:
        return sum(mult for mu, mult in self.eigenvalues(degree, kinds) if mu <= lam + AGG_TOL)


def _aggregate(modes: Iterable[ModeFamily]) -> tuple[ModeFamily, ...]:
    merged: list[ModeFamily] = []
    for f in sorted(modes, key=lambda f: (f.degree, f.eigenvalue, KINDS.index(f.kind))):
        last = merged[-1] if merged else None
        if (last is not None and last.degree == f.degree and last.kind == f.kind
                and abs(last.eigenvalue - f.eigenvalue) < AGG_TOL):
            merged[-1] = ModeFamily(f.degree, f.kind, last.eigenvalue,
                                    last.multiplicity + f.multiplicity)
        else:
            merged.append(f)
    # kinds interleave at equal eigenvalue; a second pass restores (degree, eigenvalue) order
    return tuple(sorted(merged, key=lambda f: (f.degree, f.eigenvalue, KINDS.index(f.kind))))


def circle_quotient_spectrum(k: int, cutoff: float) -> LinkSpectrum:
    """Spectrum of S^1/Z_k, the circle of circumference 2*pi/k.

    Functions are spanned by cos(k n theta), sin(k n theta) with eigenvalue
    (k n)^2.  One-forms f(theta) d theta mirror them: exact forms pair with the
    nonconstant functions and d theta is the harmonic form.
    """
    if int(k) != k or k < 1:
        raise SpectrumError(f"k must be a positive integer, got {k!r}")
    if not cutoff > 0:
        raise SpectrumError(f"cutoff must be positive, got {cutoff!r}")
    k = int(k)
    modes = [ModeFamily(0, "harmonic", 0.0, 1), ModeFamily(1, "harmonic", 0.0, 1)]
    n = 1
    while (k * n) ** 2 <= cutoff + AGG_TOL:
        mu = float((k * n) ** 2)
        modes.append(ModeFamily(0, "coexact", mu, 2))
        modes.append(ModeFamily(1, "exact", mu, 2))
        n += 1
    return LinkSpectrum.from_modes(1, k, cutoff, modes)


def so_irrep_dim(n: int, weight: tuple[int, ...]) -> int:
    """Weyl dimension of the SO(n) irrep with dominant weight ``weight``.

    ``weight`` is padded with zeros to the rank.  For n even the last entry may
    be negative.  n = 2 is the one-dimensional character e^{i l theta}.
    """
    rank = n // 2
    lam = list(weight) + [0] * (rank - len(weight))
    if len(lam) > rank:
        raise SpectrumError(f"weight {weight} too long for SO({n})")
    if n % 2:
        rho = [Fraction(2 * (rank - j) - 1, 2) for j in range(rank)]
    else:
        rho = [Fraction(rank - 1 - j) for j in range(rank)]
    shifted = [Fraction(l) + r for l, r in zip(lam, rho)]
    num = Fraction(1)
    den = Fraction(1)
    for a in range(rank):
        for b in range(a + 1, rank):
            num *= shifted[a] ** 2 - shifted[b] ** 2
            den *= rho[a] ** 2 - rho[b] ** 2
        if n % 2:
            num *= shifted[a]
            den *= rho[a]
    value = num / den
    if value.denominator != 1:
        raise ArithmeticError("non-integral Weyl dimension")
    return abs(int(value))


def coexact_multiplicity(m: int, i: int, l: int) -> int:
    """Multiplicity of the coexact i-form eigenvalue (l+i)(l+m-1-i) on round S^m.

    The eigenspace is the SO(m+1) irrep of highest weight (l, 1, ..., 1) with i
    ones; when i + 1 reaches the rank of SO(2r) both signs of the last entry
    occur.  Degrees past the middle follow from Hodge duality i -> m-1-i.
    """
    if not 0 <= i <= m:
        raise SpectrumError(f"degree {i} outside [0, {m}]")
    if i == m or l < 1:
        return 0
    n = m + 1
    rank = n // 2
    if i + 1 > rank:
        i = m - 1 - i
    weight = (l,) + (1,) * i
    if n % 2 == 0 and len(weight) == rank:
        neg = weight[:-1] + (-weight[-1],)
        return so_irrep_dim(n, weight) + so_irrep_dim(n, neg)
    return so_irrep_dim(n, weight)


def sphere_coexact_eigenvalue(m: int, i: int, l: int) -> int:
    return (l + i) * (l + m - 1 - i)


def sphere_coexact_spectrum(m: int, i: int, cutoff: float) -> LinkSpectrum:
    """Coexact i-form families on the round unit sphere S^m with eigenvalue <= cutoff."""
    if int(m) != m or m < 1:
        raise SpectrumError(f"m must be a positive integer, got {m!r}")
    if int(i) != i or not 0 <= i <= m:
        raise SpectrumError(f"degree {i!r} outside [0, {m}]")
    modes = []
    l = 1
    while i < m and sphere_coexact_eigenvalue(m, i, l) <= cutoff + AGG_TOL:
        modes.append(ModeFamily(i, "coexact", float(sphere_coexact_eigenvalue(m, i, l)),
                                coexact_multiplicity(m, i, l)))
        l += 1
    return LinkSpectrum.from_modes(m, 1, cutoff, modes)


def sphere_spectrum(m: int, cutoff: float) -> LinkSpectrum:
    """All degrees of round S^m: coexact, exact (= coexact one degree down), harmonic in 0 and m."""
    modes = [ModeFamily(0, "harmonic", 0.0, 1), ModeFamily(m, "harmonic", 0.0, 1)]
    for i in range(m):
        for f in sphere_coexact_spectrum(m, i, cutoff).modes:
            modes.append(f)
            modes.append(ModeFamily(i + 1, "exact", f.eigenvalue, f.multiplicity))
    return LinkSpectrum.from_modes(m, 1, cutoff, modes)


def validate_spectrum(s: LinkSpectrum) -> list[str]:
    """All invariant violations of ``s``; empty when it is well formed."""
    out = []
    seen: dict[tuple[int, str], list[float]] = {}
    for f in s.modes:
        tag = f"degree {f.degree} {f.kind} mu={f.eigenvalue:g}"
        if f.kind not in KINDS:
            out.append(f"{tag}: unknown kind")
            continue
        if not 0 <= f.degree <= s.m:
            out.append(f"{tag}: degree outside [0, {s.m}]")
        if f.eigenvalue < 0:
            out.append(f"{tag}: negative eigenvalue")
        if f.multiplicity < 1:
            out.append(f"{tag}: multiplicity {f.multiplicity} < 1")
        is_zero = abs(f.eigenvalue) < AGG_TOL
        if (f.kind == "harmonic") != is_zero:
            out.append(f"{tag}: harmonic kind must coincide with zero eigenvalue")
        key = (f.degree, f.kind)
        if any(abs(f.eigenvalue - e) < AGG_TOL for e in seen.get(key, [])):
            out.append(f"{tag}: duplicate family")
        seen.setdefault(key, []).append(f.eigenvalue)
        if f.kind == "coexact":
            bound = (s.m - f.degree) * (f.degree + 1)
            if f.eigenvalue < bound - AGG_TOL:
                out.append(f"{tag}: below lower bound (m-i)(i+1) = {bound}")
        if f.kind == "harmonic" and f.degree == 0 and f.multiplicity != 1:
            out.append(f"{tag}: harmonic 0-forms must have multiplicity 1 (connected link)")
    order = [(f.degree, f.eigenvalue) for f in s.modes]
    if order != sorted(order):
        out.append("families not sorted by (degree, eigenvalue)")
    return out


_HEADER = re.compile(r"^m=(\S+)\s+k=(\S+)\s+cutoff=(\S+)$")


def format_spectrum(s: LinkSpectrum) -> str:
    lines = [f"m={s.m} k={s.group_order} cutoff={s.cutoff!r}"]
    lines += [f"{f.degree} {f.kind} {f.eigenvalue!r} {f.multiplicity}" for f in s.modes]
    return "\n".join(lines) + "\n"


def write_spectrum(s: LinkSpectrum, path: str | Path) -> None:
    Path(path).write_text(format_spectrum(s), encoding="utf-8")


def parse_spectrum(text: str) -> LinkSpectrum:
    header = None
    modes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            match = _HEADER.match(line)
            if not match:
                raise SpectrumParseError(lineno, "expected header 'm=<int> k=<int> cutoff=<real>'")
            try:
                header = (int(match.group(1)), int(match.group(2)), float(match.group(3)))
            except ValueError as exc:
                raise SpectrumParseError(lineno, str(exc)) from None
            continue
        parts = line.split()
        if len(parts) != 4:
            raise SpectrumParseError(lineno, f"expected 4 fields, got {len(parts)}")
        deg, kind, mu, mult = parts
        if kind not in KINDS:
            raise SpectrumParseError(lineno, f"unknown kind {kind!r}")
        try:
            modes.append(ModeFamily(int(deg), kind, float(mu), int(mult)))
        except ValueError as exc:
            raise SpectrumParseError(lineno, str(exc)) from None
    if header is None:
        raise SpectrumParseError(1, "missing header")
    m, k, cutoff = header
    spec = LinkSpectrum.from_modes(m, k, cutoff, modes)
    violations = validate_spectrum(spec)
    if violations:
        raise SpectrumValidationError(violations)
    return spec


def load_spectrum(path: str | Path) -> LinkSpectrum:
    return parse_spectrum(Path(path).read_text(encoding="utf-8"))


def weyl_count(m: int, lam: float, rank: int = 1) -> float:
    """Leading Weyl term for all forms of one degree-binomial factor ``rank`` on unit S^m."""
    vol = 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)
    return rank * vol * lam ** (m / 2) / ((4 * math.pi) ** (m / 2) * math.gamma(m / 2 + 1))
