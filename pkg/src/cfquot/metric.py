"""Finite pseudometric spaces, piecewise-linear distortions and zero-class quotients."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exact import Matrix, as_matrix, common_scale, fmt, pick_dtype, to_fraction, to_int_array


class StructuralError(ValueError):
    """Malformed input: wrong matrix shape, bad labels, out-of-range indices."""


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class PseudometricSpace:
    """Finite point set with an exact symmetric distance matrix.

    ``metric=True`` additionally asks for positive off-diagonal distances; it
    is a declaration checked by :func:`validate`, not enforced here.
    """

    points: tuple[str, ...]
    dist: Matrix
    metric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(str(p) for p in self.points))
        object.__setattr__(self, "dist", as_matrix(self.dist))
        n = len(self.points)
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise StructuralError(
                f"distance matrix must be {n}x{n} to match {n} points"
            )
        if len(set(self.points)) != n:
            raise StructuralError("point labels must be distinct")

    def __len__(self) -> int:
        return len(self.points)

    def index(self, label: str) -> int:
        try:
            return self.points.index(label)
        except ValueError:
            raise StructuralError(f"unknown point {label!r}") from None

    def d(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]

    def restrict(self, indices: Sequence[int]) -> "PseudometricSpace":
        idx = list(indices)
        return PseudometricSpace(
            tuple(self.points[i] for i in idx),
            tuple(tuple(self.dist[i][j] for j in idx) for i in idx),
            self.metric,
        )

    def with_dist(self, dist, metric: bool | None = None) -> "PseudometricSpace":
        """Same labels, new matrix.  An inherited metric flag is dropped once a zero pair appears."""
        out = PseudometricSpace(self.points, dist, bool(metric))
        if metric is None and self.metric:
            n = len(out)
            keep = all(out.dist[i][j] != 0 for i in range(n) for j in range(i + 1, n))
            object.__setattr__(out, "metric", keep)
        return out

    def relabel(self, labels: Sequence[str]) -> "PseudometricSpace":
        return PseudometricSpace(tuple(labels), self.dist, self.metric)

    @classmethod
    def from_points(cls, labels, dist_fn, metric: bool = False) -> "PseudometricSpace":
        labels = list(labels)
        n = len(labels)
        return cls(
            tuple(map(str, labels)),
            tuple(tuple(to_fraction(dist_fn(i, j)) if i != j else Fraction(0) for j in range(n)) for i in range(n)),
            metric,
        )

    @classmethod
    def uniform(cls, n: int, value, metric: bool = True) -> "PseudometricSpace":
        v = to_fraction(value)
        return cls.from_points([f"p{i}" for i in range(n)], lambda i, j: v, metric)


@dataclass(frozen=True)
class Violation:
    kind: str  # "diagonal" | "symmetry" | "negative" | "triangle" | "positivity"
    witness: tuple[int, ...]
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(space: PseudometricSpace) -> ValidationReport:
    """Check every pseudometric axiom; each violation carries its witness indices."""
    d = space.dist
    n = len(space)
    out: list[Violation] = []
    for i in range(n):
        if d[i][i] != 0:
            out.append(Violation("diagonal", (i,), f"d[{i}][{i}]={fmt(d[i][i])}"))
        for j in range(n):
            if d[i][j] < 0:
                out.append(Violation("negative", (i, j)))
            if j > i and d[i][j] != d[j][i]:
                out.append(Violation("symmetry", (i, j)))
            if space.metric and i < j and d[i][j] == 0:
                out.append(Violation("positivity", (i, j)))
    if n:
        scale = common_scale([d])
        arr = to_int_array(d, scale, pick_dtype([d], scale))
        for j in range(n):
            bad = np.argwhere(arr > arr[:, j : j + 1] + arr[j : j + 1, :])
            for i, k in bad.tolist():
                out.append(
                    Violation(
                        "triangle",
                        (i, j, k),
                        f"{fmt(d[i][k])} > {fmt(d[i][j])} + {fmt(d[j][k])}",
                    )
                )
    return ValidationReport(tuple(out))


def diameter(space: PseudometricSpace) -> Fraction:
    if len(space) == 0:
        raise DomainError("diameter of an empty space")
    return max(max(row) for row in space.dist)


class DistortionError(ValueError):
    pass


@dataclass(frozen=True)
class DistortionPL:
    """Concave nondecreasing piecewise-linear function with ``w(0) = 0``.

    Beyond the last breakpoint the last slope is extended.  ``s0``, when given,
    declares the steepness that stands in for an infinite derivative at 0 and
    the first slope must reach it.
    """

    breakpoints: tuple[tuple[Fraction, Fraction], ...]
    s0: Fraction | None = None
    _ts: tuple[Fraction, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple((to_fraction(t), to_fraction(v)) for t, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if self.s0 is not None:
            object.__setattr__(self, "s0", to_fraction(self.s0))
        object.__setattr__(self, "_ts", tuple(t for t, _ in bps))
        problems = self.problems()
        if problems:
            raise DistortionError("; ".join(problems))

    def problems(self) -> list[str]:
        bps = self.breakpoints
        out = []
        if len(bps) < 2:
            return ["need at least two breakpoints"]
        if bps[0] != (0, 0):
            out.append("first breakpoint must be (0, 0)")
        slopes = []
        for (t0, v0), (t1, v1) in zip(bps, bps[1:]):
            if t1 <= t0:
                out.append("abscissas must be strictly increasing")
                return out
            slopes.append((v1 - v0) / (t1 - t0))
        if any(s <= 0 for s in slopes):
            out.append("slopes must be positive")
        if any(b > a for a, b in zip(slopes, slopes[1:])):
            out.append("slopes must be nonincreasing (concavity)")
        if self.s0 is not None:
            if self.s0 <= 1:
                out.append("declared steepness s0 must exceed 1")
            elif slopes and slopes[0] < self.s0:
                out.append(f"first slope {fmt(slopes[0])} below declared s0 {fmt(self.s0)}")
        return out

    @property
    def slopes(self) -> tuple[Fraction, ...]:
        bps = self.breakpoints
        return tuple((v1 - v0) / (t1 - t0) for (t0, v0), (t1, v1) in zip(bps, bps[1:]))

    def __call__(self, t) -> Fraction:
        t = to_fraction(t)
        if t < 0:
            raise DomainError("distortions are defined on [0, inf)")
        bps = self.breakpoints
        k = bisect.bisect_right(self._ts, t) - 1
        k = min(k, len(bps) - 2)
        (t0, v0), (t1, v1) = bps[k], bps[k + 1]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def rescaled(self, c) -> "DistortionPL":
        """``t -> c * w(t / c)``; keeps concavity and maps ``c*T`` to ``c*w(T)``."""
        c = to_fraction(c)
        if c <= 0:
            raise DistortionError("scale must be positive")
        return DistortionPL(tuple((c * t, c * v) for t, v in self.breakpoints), self.s0)

    def fixes(self, t) -> bool:
        t = to_fraction(t)
        return self(t) == t

    @classmethod
    def identity(cls) -> "DistortionPL":
        return cls(((0, 0), (1, 1)))

    @classmethod
    def steep(cls, diam, s0=2**16) -> "DistortionPL":
        """Two-piece distortion with first slope ``s0`` and ``w(diam) = diam``."""
        diam, s0 = to_fraction(diam), to_fraction(s0)
        knee = diam / (2 * s0)
        return cls(((0, 0), (knee, diam / 2), (diam, diam)), s0)

    @classmethod
    def snowflake(cls, exponent, diam, levels: int, base: int = 2) -> "DistortionPL":
        """Interpolant of ``diam * (t/diam)**exponent`` at knots where it is rational.

        With ``exponent = p/q`` the knots are ``diam * base**(-q*i)`` whose images
        are ``diam * base**(-p*i)``.
        """
        e, diam = to_fraction(exponent), to_fraction(diam)
        if not 0 < e < 1:
            raise DistortionError("snowflake exponent must lie in (0, 1)")
        p, q = e.numerator, e.denominator
        knots = [(diam / Fraction(base) ** (q * i), diam / Fraction(base) ** (p * i)) for i in range(levels, -1, -1)]
        first = knots[0][1] / knots[0][0]
        return cls(((Fraction(0), Fraction(0)), *knots), first if first > 1 else None)

    def to_json(self) -> dict:
        out = {"breakpoints": [[fmt(t), fmt(v)] for t, v in self.breakpoints]}
        if self.s0 is not None:
            out["s0"] = fmt(self.s0)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DistortionPL":
        return cls(tuple((t, v) for t, v in obj["breakpoints"]), obj.get("s0"))


def apply_distortion(space: PseudometricSpace, w: DistortionPL) -> PseudometricSpace:
    cache: dict[Fraction, Fraction] = {}

    def w_cached(t):
        if t not in cache:
            cache[t] = w(t)
        return cache[t]

    return space.with_dist(tuple(tuple(w_cached(v) for v in row) for row in space.dist))


@dataclass(frozen=True)
class ZeroClassPartition:
    """Blocks of points at mutual distance zero, ordered by first member."""

    blocks: tuple[tuple[int, ...], ...]

    def block_of(self, i: int) -> int:
        for b, block in enumerate(self.blocks):
            if i in block:
                return b
        raise StructuralError(f"index {i} not covered by the partition")

    def assignment(self) -> tuple[int, ...]:
        n = sum(len(b) for b in self.blocks)
        out = [0] * n
        for b, block in enumerate(self.blocks):
            for i in block:
                out[i] = b
        return tuple(out)

    def same(self, i: int, j: int) -> bool:
        return self.block_of(i) == self.block_of(j)


def partition_from_assignment(assignment: Sequence[int]) -> ZeroClassPartition:
    order: dict[int, list[int]] = {}
    for i, a in enumerate(assignment):
        order.setdefault(a, []).append(i)
    return ZeroClassPartition(tuple(tuple(b) for b in order.values()))


def zero_classes(space: PseudometricSpace) -> ZeroClassPartition:
    n = len(space)
    label = [-1] * n
    blocks = []
    for i in range(n):
        if label[i] >= 0:
            continue
        members = tuple(j for j in range(n) if space.dist[i][j] == 0)
        for j in members:
            label[j] = len(blocks)
        blocks.append(members)
    return ZeroClassPartition(tuple(blocks))


def quotient_by_zero(space: PseudometricSpace) -> tuple[PseudometricSpace, ZeroClassPartition]:
    """Identify points at distance 0; each block is represented by its first member."""
    part = zero_classes(space)
    reps = [b[0] for b in part.blocks]
    q = space.restrict(reps)
    return PseudometricSpace(q.points, q.dist, metric=True), part


def isometric_labelled(a: PseudometricSpace, b: PseudometricSpace, mapping: Iterable[int] | None = None) -> bool:
    """Exact equality of ``a`` with ``b`` read through ``mapping`` (a index -> b index)."""
    if len(a) != len(b):
        return False
    m = list(range(len(a))) if mapping is None else list(mapping)
    return all(a.dist[i][j] == b.dist[m[i]][m[j]] for i in range(len(a)) for j in range(len(a)))


def space_to_json(space: PseudometricSpace) -> dict:
    out = {"points": list(space.points), "dist": [[fmt(v) for v in row] for row in space.dist]}
    if space.metric:
        out["metric"] = True
    return out


def space_from_json(obj: dict) -> PseudometricSpace:
    try:
        return PseudometricSpace(tuple(obj["points"]), obj["dist"], bool(obj.get("metric", False)))
    except KeyError as exc:
        raise StructuralError(f"space JSON missing key {exc}") from None
