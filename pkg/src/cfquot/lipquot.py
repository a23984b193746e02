"""Lipschitz and co-Lipschitz constants of finite maps, and the stagewise preimage check."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .complex import SegmentComplex, flatten
from .metric import DomainError, PseudometricSpace

INF = math.inf


@dataclass(frozen=True)
class FiniteMap:
    """Total map between finite (pseudo)metric spaces, as a tuple of target indices.

    When built from complexes the flattened spaces are used and the complexes
    are kept for the curve-flat checks.
    """

    source: PseudometricSpace
    target: PseudometricSpace
    assignment: tuple[int, ...]
    source_complex: SegmentComplex | None = None
    target_complex: SegmentComplex | None = None

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        if len(self.assignment) != len(self.source):
            raise DomainError("assignment must cover every source point")
        if any(not 0 <= a < len(self.target) for a in self.assignment):
            raise DomainError("assignment points outside the target")

    @classmethod
    def of_complexes(cls, src: SegmentComplex, tgt: SegmentComplex, assignment) -> "FiniteMap":
        return cls(flatten(src).space, flatten(tgt).space, tuple(assignment), src, tgt)

    @classmethod
    def from_labels(cls, source: PseudometricSpace, target: PseudometricSpace, pairs) -> "FiniteMap":
        lookup = dict(pairs)
        missing = [p for p in source.points if p not in lookup]
        if missing:
            raise DomainError(f"map leaves {missing[:3]} unassigned")
        return cls(source, target, tuple(target.index(lookup[p]) for p in source.points))

    @property
    def surjective(self) -> bool:
        return set(self.assignment) == set(range(len(self.target)))

    def fibers(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(len(self.target))]
        for p, y in enumerate(self.assignment):
            out[y].append(p)
        return out


def lip_constant(f: FiniteMap) -> Fraction | float:
    """Largest ratio rho(f x, f y) / d(x, y); ``inf`` if a zero pair is separated."""
    d, rho, a = f.source.dist, f.target.dist, f.assignment
    best = Fraction(0)
    n = len(a)
    for i in range(n):
        for j in range(i + 1, n):
            r = rho[a[i]][a[j]]
            if d[i][j] == 0:
                if r > 0:
                    return INF
                continue
            q = r / d[i][j]
            if q > best:
                best = q
    return best


def colip_constant(f: FiniteMap) -> Fraction | float:
    """Smallest C with B(f x, r) inside f(B(x, C r)) for every x and r > 0 (closed balls)."""
    if not f.surjective:
        raise DomainError("co-Lipschitz constant needs a surjective map")
    d, rho, a = f.source.dist, f.target.dist, f.assignment
    fibers = f.fibers()
    best = Fraction(0)
    for x in range(len(a)):
        fx = a[x]
        for y, fiber in enumerate(fibers):
            reach = min(d[x][p] for p in fiber)
            r = rho[fx][y]
            if r == 0:
                if reach > 0:
                    return INF
                continue
            q = reach / r
            if q > best:
                best = q
    return best


def _balls_ok(f: FiniteMap, C: Fraction) -> bool:
    d, rho, a = f.source.dist, f.target.dist, f.assignment
    m = len(f.target)
    for x in range(len(a)):
        fx = a[x]
        for r in sorted({rho[fx][y] for y in range(m)} - {0}):
            image = {a[p] for p in range(len(a)) if d[x][p] <= C * r}
            if any(rho[fx][y] <= r and y not in image for y in range(m)):
                return False
    return True


def colip_by_balls(f: FiniteMap) -> Fraction | float:
    """Independent ball-inclusion search over all candidate constants.

    Radii are the finitely many target distances from each ``f(x)``; the
    limit ``r -> 0`` demands a zero-distance preimage of every point in the
    zero class of ``f(x)``.
    """
    if not f.surjective:
        raise DomainError("co-Lipschitz constant needs a surjective map")
    d, rho, a = f.source.dist, f.target.dist, f.assignment
    n, m = len(a), len(f.target)
    for x in range(n):
        for y in range(m):
            if rho[a[x]][y] == 0 and not any(a[p] == y and d[x][p] == 0 for p in range(n)):
                return INF
    cands = sorted(
        {Fraction(0)}
        | {d[x][p] / rho[a[x]][y] for x in range(n) for p in range(n) for y in range(m) if rho[a[x]][y] > 0}
    )
    # validity is monotone in C: binary search for the first valid candidate
    k = bisect.bisect_left(range(len(cands)), True, key=lambda i: _balls_ok(f, cands[i]))
    return cands[k]


# -- stagewise checks ------------------------------------------------------------------


@dataclass(frozen=True)
class PreimageWitness:
    x: int
    y: int
    stage: int
    p: int
    margin: Fraction  # C * rho_k(f x, y) - d_k(x, p)


@dataclass(frozen=True)
class LipschitzQuotientReport:
    lip: Fraction | float
    colip: Fraction | float
    product: Fraction | float
    witnesses: tuple[PreimageWitness, ...]
    violations: tuple[PreimageWitness, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _stages(f: FiniteMap, max_stage: int):
    from .curveflat import cf_oracle_stages, recomplexify

    src = f.source_complex or recomplexify(f.source)
    tgt = f.target_complex or recomplexify(f.target)
    return cf_oracle_stages(src, max_stage), cf_oracle_stages(tgt, max_stage)


def _require_quotient(f: FiniteMap):
    lip, colip = lip_constant(f), colip_constant(f)
    if lip == INF or colip == INF:
        raise DomainError("map is not a Lipschitz quotient (infinite Lip or co-Lip constant)")
    return lip, colip


def verify_preimage_inequality(f: FiniteMap, max_stage: int) -> LipschitzQuotientReport:
    """For every stage k, x and y pick p in f^-1(y) nearest to x in d_k and
    check d_k(x, p) <= C rho_k(f x, y) with C the co-Lipschitz constant."""
    lip, C = _require_quotient(f)
    src, tgt = _stages(f, max_stage)
    fibers = f.fibers()
    a = f.assignment
    wit, bad = [], []
    for k in range(max_stage + 1):
        d, rho = src[k].dist, tgt[k].dist
        for x in range(len(a)):
            for y, fiber in enumerate(fibers):
                p = min(fiber, key=lambda q: (d[x][q], q))
                w = PreimageWitness(x, y, k, p, C * rho[a[x]][y] - d[x][p])
                wit.append(w)
                if w.margin < 0:
                    bad.append(w)
    return LipschitzQuotientReport(lip, C, lip * C, tuple(wit), tuple(bad))


@dataclass(frozen=True)
class IndexReport:
    source_index: int | None
    target_index: int | None

    @property
    def conclusive(self) -> bool:
        return self.source_index is not None and self.target_index is not None

    @property
    def ok(self) -> bool:
        return self.conclusive and self.source_index >= self.target_index


def verify_index_monotonicity(f: FiniteMap, max_stage: int) -> IndexReport:
    from .curveflat import cf_index, recomplexify

    _require_quotient(f)
    src = f.source_complex or recomplexify(f.source)
    tgt = f.target_complex or recomplexify(f.target)
    return IndexReport(cf_index(src, max_stage), cf_index(tgt, max_stage))


def compose(f: FiniteMap, g: FiniteMap) -> FiniteMap:
    """``g o f``; the target of ``f`` must be the source of ``g``."""
    if len(f.target) != len(g.source):
        raise DomainError("maps do not compose")
    return FiniteMap(f.source, g.target, tuple(g.assignment[y] for y in f.assignment), f.source_complex, g.target_complex)
