"""Betti-number bookkeeping: cone caps, quotient links and Mayer-Vietoris gluing.

Only ranks are tracked.  For X = A u B the long exact sequence

    ... -> H^i(X) -> H^i(A) + H^i(B) --r_i--> H^i(A n B) -> H^{i+1}(X) -> ...

gives dim H^i(X) = (a_i + b_i - rho_i) + (c_{i-1} - rho_{i-1}) with rho_i = rank r_i.
A rank is forced when its source or target vanishes; other ranks must be supplied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence


class CohomologyError(ValueError):
    """Inconsistent ranks or malformed Betti data."""


@dataclass(frozen=True)
class BettiVector:
    dims: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 0 for d in self.dims):
            raise CohomologyError(f"negative Betti number in {self.dims}")

    @property
    def top(self) -> int:
        return len(self.dims) - 1

    def euler(self) -> int:
        return sum((-1) ** i * d for i, d in enumerate(self.dims))

    def padded(self, n: int) -> tuple[int, ...]:
        return self.dims + (0,) * (n + 1 - len(self.dims))

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class GluingData:
    """X = A u B with A n B; ``ranks[i]`` is the rank of H^i(A)+H^i(B) -> H^i(A n B) when known."""
    a: BettiVector
    b: BettiVector
    overlap: BettiVector
    ranks: Mapping[int, int] = field(default_factory=dict)
    label: str = ""

    def to_json(self) -> str:
        return json.dumps({"a": asdict(self.a), "b": asdict(self.b), "overlap": asdict(self.overlap),
                           "ranks": {str(k): v for k, v in self.ranks.items()}, "label": self.label})


@dataclass(frozen=True)
class MayerVietorisResult:
    dims: tuple[int | None, ...]
    indeterminate: tuple[int, ...]
    euler_ok: bool

    @property
    def determined(self) -> bool:
        return not self.indeterminate

    def betti(self, label: str = "") -> BettiVector:
        if not self.determined:
            raise CohomologyError(f"degrees {list(self.indeterminate)} need restriction ranks")
        return BettiVector(tuple(self.dims), label)


def cone_l2_cohomology(link: BettiVector, m: int, keep_zero: bool = True) -> BettiVector:
    """L^2 cohomology of the cone over an m-dimensional link: H^i(N) for i <= m/2, else 0.

    ``keep_zero=False`` drops the degree-0 class; it exists only as a negative control.
    """
    if link.top != m:
        raise CohomologyError(f"link vector has degrees 0..{link.top}, expected 0..{m}")
    dims = [link.dims[i] if 2 * i <= m else 0 for i in range(m + 1)] + [0]
    if not keep_zero:
        dims[0] = 0
    return BettiVector(tuple(dims), "L2 cone")


def quotient_invariant_cohomology(m: int, rank: int = 1) -> BettiVector:
    """G-invariant cohomology of S^m for orientation-preserving G with trivial fiber action."""
    if m < 1:
        raise CohomologyError("m must be at least 1")
    dims = [0] * (m + 1)
    dims[0] = dims[m] = rank
    return BettiVector(tuple(dims), "link S^m/G")


def mayer_vietoris_betti(data: GluingData) -> MayerVietorisResult:
    """Betti numbers of A u B from the long exact sequence; unknown ranks flag degrees."""
    n = max(data.a.top, data.b.top, data.overlap.top + 1)
    a, b, c = data.a.padded(n), data.b.padded(n), data.overlap.padded(n)
    rho: list[int | None] = []
    for i in range(n + 1):
        source, target = a[i] + b[i], c[i]
        if i in data.ranks:
            r = int(data.ranks[i])
            if not 0 <= r <= min(source, target):
                raise CohomologyError(
                    f"rank {r} of H^{i}(A)+H^{i}(B) -> H^{i}(A n B) outside [0, min({source}, {target})]")
            rho.append(r)
        elif source == 0 or target == 0:
            rho.append(0)
        else:
            rho.append(None)
    dims: list[int | None] = []
    unknown = []
    for i in range(n + 1):
        prev = rho[i - 1] if i > 0 else 0
        cprev = c[i - 1] if i > 0 else 0
        if rho[i] is None or prev is None:
            dims.append(None)
            unknown.append(i)
            continue
        d = (a[i] + b[i] - rho[i]) + (cprev - prev)
        dims.append(d)
    expected = data.a.euler() + data.b.euler() - data.overlap.euler()
    euler_ok = True
    if not unknown:
        got = sum((-1) ** i * d for i, d in enumerate(dims))
        euler_ok = got == expected
        if not euler_ok:
            raise CohomologyError(f"Euler characteristic {got} != {expected}")
    keep = max(data.a.top, data.b.top) + 1
    while len(dims) > keep and dims[-1] == 0:
        dims.pop()
    return MayerVietorisResult(tuple(dims), tuple(unknown), euler_ok)


def spindle_gluing(k: int, keep_zero: bool = True) -> GluingData:
    """Flat spindle: A = two cone caps, B = collar cylinder, A n B = two circles.

    r_0 has rank 2 (locally constant functions on A and B restrict onto both
    circles); r_1 has rank 1 (the cylinder class restricts diagonally).
    """
    if k < 1:
        raise CohomologyError("k must be positive")
    cap = cone_l2_cohomology(quotient_invariant_cohomology(1), 1, keep_zero)
    a = BettiVector(tuple(2 * d for d in cap.dims), "two caps")
    b = BettiVector((1, 1, 0), "cylinder")
    overlap = BettiVector((2, 2, 0), "two circles")
    # the cylinder constant restricts to (1, 1); cap constants add (1, 0) and (0, 1)
    ranks = {0: 2 if a.dims[0] else 1, 1: 1}
    return GluingData(a, b, overlap, ranks, f"flat spindle k={k}")


def orbifold_invariant_betti(k: int) -> BettiVector:
    """Rotation-invariant cohomology of the double S^2 under Z_k; rotations preserve orientation."""
    if k < 1:
        raise CohomologyError("k must be positive")
    return BettiVector(quotient_invariant_cohomology(2).dims, f"S^2 Z_{k}-invariant")


@dataclass(frozen=True)
class HarmonicCheck:
    degree: int
    conical: int | None
    orbifold: int

    @property
    def passed(self) -> bool:
        return self.conical == self.orbifold


def harmonic_dim_check(k: int, degrees: Sequence[int] = (0, 1, 2), keep_zero: bool = True) -> list[HarmonicCheck]:
    """Per-degree comparison of conical (Mayer-Vietoris) and orbifold harmonic dimensions."""
    mv = mayer_vietoris_betti(spindle_gluing(k, keep_zero))
    orb = orbifold_invariant_betti(k)
    return [HarmonicCheck(i, mv.dims[i] if i < len(mv.dims) else 0, orb.padded(2)[i]) for i in degrees]
