"""Builders: gapped segments, gapped graphs, admissible tuples, the depth-alpha space Y."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .complex import FrameChain, GappedEdge, SegmentComplex, Thread, bend, flatten
from .exact import fmt, to_fraction
from .metric import (
    DistortionError,
    DistortionPL,
    DomainError,
    PseudometricSpace,
    apply_distortion,
    diameter,
)


class InsufficientStages(ValueError):
    """The generated stages do not certify the requested scale."""


class DegeneratePairWarning(UserWarning):
    pass


def _check_dominates(w: DistortionPL, t: Fraction) -> None:
    if w(t) < t:
        raise DistortionError(f"distortion value {fmt(w(t))} at {fmt(t)} is below the identity")


# -- gapped segments and graphs ------------------------------------------------------


def gapped_segment(dxy, w: DistortionPL, samples: int = 1) -> SegmentComplex:
    """Two points at distance ``w(dxy)`` joined by a gapped edge of gap ``dxy``."""
    dxy = to_fraction(dxy)
    if dxy <= 0:
        raise DomainError("gapped segment needs a positive distance")
    _check_dominates(w, dxy)
    l = w(dxy)
    frame = PseudometricSpace(("x", "y"), ((0, l), (l, 0)), metric=True)
    return SegmentComplex(frame, (Thread((0, 1), GappedEdge(l, dxy, samples)),))


@dataclass(frozen=True)
class SampledGappedSegment:
    """A gapped edge laid out as a finite metric space with its solid structure."""

    space: PseudometricSpace
    chains: tuple[FrameChain, ...]
    links: tuple[tuple[int, int], ...]  # consecutive samples on each arm
    gap_pair: tuple[int, int] | None  # (u, v)
    ends: tuple[int, int]


def gapped_segment_space(length, gap, samples: int = 1) -> SampledGappedSegment:
    edge = GappedEdge(length, gap, samples)
    lay = edge.layout()
    chains = tuple(FrameChain(run, [lay[i][1] for i in run]) for run in edge.arms() if len(run) > 1)
    links = tuple((run[i], run[i + 1]) for run in edge.arms() for i in range(len(run) - 1))
    names = [n for n, _ in lay]
    gap_pair = (names.index("u"), names.index("v")) if edge.kind == "gap" else None
    return SampledGappedSegment(edge.space().with_dist(edge.space().dist, metric=True), chains, links, gap_pair, (0, len(lay) - 1))


def gapped_graph(M: PseudometricSpace, w: DistortionPL, D: Sequence[int] | None = None, samples: int = 1) -> SegmentComplex:
    """Distorted frame ``w o d`` with a gapped edge over every pair of ``D``."""
    D = list(range(len(M))) if D is None else sorted(set(D))
    if len(M) > 1:
        _check_dominates(w, diameter(M))
    frame = apply_distortion(M, w).with_dist(apply_distortion(M, w).dist, metric=True)
    threads = []
    for a, i in enumerate(D):
        for j in D[a + 1 :]:
            d = M.dist[i][j]
            if d == 0:
                raise DomainError(f"points {i} and {j} coincide; gapped graphs need a metric")
            _check_dominates(w, d)
            threads.append(Thread((i, j), GappedEdge(w(d), d, samples)))
    return SegmentComplex(frame, tuple(threads), p1u=True, meta={"D": tuple(D)})


@dataclass(frozen=True)
class P1uFlagReport:
    violations: tuple[tuple[int, int], ...]  # w(d) < d
    flat_pairs: tuple[tuple[int, int], ...]  # w(d) == d away from the diameter

    @property
    def ok(self) -> bool:
        return not self.violations and not self.flat_pairs


def validate_p1u_flag(M: PseudometricSpace, w: DistortionPL) -> P1uFlagReport:
    """Does ``w`` strictly exceed the identity on every realised distance?

    Pairs at the diameter are exempt: normalisation forces ``w(diam) = diam``.
    """
    n = len(M)
    diam = diameter(M) if n else Fraction(0)
    bad, flat = [], []
    for i in range(n):
        for j in range(i + 1, n):
            d = M.dist[i][j]
            if d == 0:
                continue
            v = w(d)
            if v < d:
                bad.append((i, j))
            elif v == d and d != diam:
                flat.append((i, j))
    return P1uFlagReport(tuple(bad), tuple(flat))


# -- admissible tuples ------------------------------------------------------------------


def _greedy_net(dist, radius: Fraction) -> tuple[int, ...]:
    chosen: list[int] = []
    for p in range(len(dist)):
        if all(dist[p][c] > radius for c in chosen):
            chosen.append(p)
    return tuple(chosen)


@dataclass(frozen=True)
class AdmissibleTuple:
    distortion: DistortionPL
    eps: Fraction
    diam: Fraction
    stages: tuple[tuple[int, int, int], ...]  # (alpha_n, x_n, y_n)
    deltas: tuple[Fraction, ...]
    epsilons: tuple[Fraction, ...]
    nets: tuple[tuple[int, ...], ...]
    pools: tuple[tuple[tuple[int, int], ...], ...]
    certified_scale: int
    max_scale: int  # beyond this every scale is vacuous (no pair is that close)
    prepended: int = 0

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((x, y) for _, x, y in self.stages)

    def require_scale(self, k: int) -> None:
        if k > self.certified_scale:
            raise InsufficientStages(
                f"scale {k} requested but only scales <= {self.certified_scale} are certified; raise n_stages"
            )


def _scale_witness_ok(M, wd, pairs, p, q, k, eps, diam) -> bool:
    rhs = eps * M.dist[p][q] / 2**k
    for x, y in pairs:
        if 2 * (wd[p][x] + wd[q][y]) <= rhs or 2 * (wd[p][y] + wd[q][x]) <= rhs:
            return True
    return False


def certify_scales(M: PseudometricSpace, w: DistortionPL, pairs, eps, upto: int) -> int:
    """Largest ``K <= upto`` such that the pair list covers every scale ``k <= K``; ``-1`` if none."""
    diam = diameter(M)
    wd = apply_distortion(M, w).dist
    n = len(M)
    close = sorted(
        ((M.dist[p][q], p, q) for p in range(n) for q in range(p + 1, n)), reverse=True
    )
    for k in range(upto + 1):
        limit = diam / 2**k
        for d, p, q in close:
            if d > limit:
                continue
            if not _scale_witness_ok(M, wd, pairs, p, q, k, eps, diam):
                return k - 1
    return upto


def build_admissible(
    M: PseudometricSpace,
    eps,
    w: DistortionPL,
    n_stages: int,
    alpha: int = 1,
    prepend: Sequence[tuple[int, int]] = (),
) -> AdmissibleTuple:
    """Nets, pools and the concatenated pair list for ``n_stages`` stages.

    Each entry is ``(alpha_n, x, y)``: the thread over that pair must survive
    ``alpha_n`` quotients and collapse at the next one.  ``prepend`` pairs go
    first with ``alpha_n = 0``; a finite prefix never breaks admissibility.
    """
    eps = to_fraction(eps)
    if len(M) < 2:
        raise DomainError("need at least two points")
    if eps <= 0:
        raise DomainError("eps must be positive")
    if n_stages < 1:
        raise DomainError("need at least one stage")
    if any(M.dist[i][j] == 0 for i in range(len(M)) for j in range(len(M)) if i != j):
        raise DomainError("admissible tuples need a metric (positive off-diagonal distances)")
    diam = diameter(M)
    if w(diam) != diam:
        raise DistortionError(f"distortion must fix the diameter: w({fmt(diam)}) = {fmt(w(diam))}")
    wd = apply_distortion(M, w).dist
    deltas, epsilons, nets, pools = [], [], [], []
    for n in range(1, n_stages + 1):
        delta = diam / 2 ** (n - 1)
        e_n = eps * (diam / 2**n) / (2**n * 4)
        net = _greedy_net(wd, e_n)
        pool = tuple((x, y) for a, x in enumerate(net) for y in net[a + 1 :] if M.dist[x][y] <= delta + 2 * e_n)
        deltas.append(delta)
        epsilons.append(e_n)
        nets.append(net)
        pools.append(pool)
    seen = set()
    stages = []
    for x, y in prepend:
        key = (min(x, y), max(x, y))
        if key not in seen:
            seen.add(key)
            stages.append((0, x, y))
    head = len(stages)
    for pool in pools:
        for x, y in pool:
            if (x, y) not in seen:
                seen.add((x, y))
                stages.append((max(alpha - 1, 0), x, y))
    min_d = min(M.dist[i][j] for i in range(len(M)) for j in range(i + 1, len(M)))
    max_scale = 0
    while diam / 2 ** (max_scale + 1) >= min_d:
        max_scale += 1
    pairs = [(x, y) for _, x, y in stages]
    certified = certify_scales(M, w, pairs, eps, max_scale)
    if certified == max_scale:
        certified = max_scale + 1  # every finer scale has no pair left to check
    return AdmissibleTuple(
        w, eps, diam, tuple(stages), tuple(deltas), tuple(epsilons), tuple(nets), tuple(pools), certified, max_scale, head
    )


# -- the depth-alpha construction ---------------------------------------------------------


@dataclass(frozen=True)
class ScaleBoundReport:
    bent: PseudometricSpace
    failures: tuple[tuple[int, int, int], ...]  # (p, q, k)
    checked: int

    @property
    def ok(self) -> bool:
        return not self.failures


def check_scale_bound(M: PseudometricSpace, adm: AdmissibleTuple, rho: PseudometricSpace | None = None) -> ScaleBoundReport:
    """Bend ``rho`` (default ``w o d``) by every ``(x_n, y_n, d(x_n, y_n))`` and check
    ``d <= rho_B <= (1 + 2^-k eps) d`` for pairs at each certified scale ``k``."""
    rho = apply_distortion(M, adm.distortion) if rho is None else rho
    bent = bend(rho, [(x, y, M.dist[x][y]) for x, y in adm.pairs])
    top = min(adm.certified_scale, adm.max_scale)
    fails, checked = [], 0
    n = len(M)
    for k in range(top + 1):
        limit = adm.diam / 2**k
        for p in range(n):
            for q in range(p + 1, n):
                d = M.dist[p][q]
                if d > limit:
                    continue
                checked += 1
                r = bent.dist[p][q]
                if not (d <= r <= (1 + adm.eps / 2**k) * d):
                    fails.append((p, q, k))
    return ScaleBoundReport(bent, tuple(fails), checked)


def build_theorem_b(
    M: PseudometricSpace,
    alpha: int,
    eps,
    w: DistortionPL,
    n_stages: int,
    samples: int = 1,
    chains: Sequence[FrameChain] = (),
    prepend: Sequence[tuple[int, int]] = (),
) -> SegmentComplex:
    """Complex of curve-flat index ``alpha`` whose stage-``alpha`` quotient is close to ``M``.

    Frame ``(M, w o d)``.  Pair ``n`` of the admissible list gets a gapped
    edge when it is shallow (depth 1 requested, or ``3 w(d) > diam``),
    otherwise the same construction of depth ``alpha - 1`` over the sampled
    gapped segment of that pair, with ``w`` rescaled so it fixes the
    segment's length.
    """
    if alpha < 1:
        raise DomainError("depth must be at least 1; depth 0 is M itself")
    eps = to_fraction(eps)
    adm = build_admissible(M, eps, w, n_stages, alpha, prepend)
    diam = adm.diam
    frame = apply_distortion(M, w)
    frame = frame.with_dist(frame.dist, metric=True)
    threads = []
    depths = []
    notes = []
    strict_by_depth: dict[int, bool] = {}
    for alpha_n, x, y in adm.stages:
        d = M.dist[x][y]
        l = w(d)
        if alpha_n == 0 or 3 * l > diam:
            body = GappedEdge(l, d, samples)
            threads.append(Thread((x, y), body))
            depth = 1
        else:
            seg = gapped_segment_space(l, d, samples)
            inner_w = w.rescaled(l / diam)
            extra = list(seg.links) + ([seg.gap_pair] if seg.gap_pair else [])
            inner = build_theorem_b(seg.space, alpha_n, eps, inner_w, n_stages, samples, seg.chains, extra)
            threads.append(Thread((x, y), inner, boundary=seg.ends))
            depth = alpha_n + 1
        depths.append(depth)
        strict_by_depth[depth] = strict_by_depth.get(depth, False) or l > d
    for depth, strict in sorted(strict_by_depth.items()):
        if not strict:
            notes.append(f"no pair of depth {depth} has w(d) > d; the index claim at that depth is not witnessed")
    if max(depths, default=0) < alpha:
        notes.append(f"no pair satisfies 3 w(d) <= diam, so no thread reaches depth {alpha}")
    for msg in notes:
        warnings.warn(msg, DegeneratePairWarning, stacklevel=2)
    meta = {
        "base": M,
        "admissible": adm,
        "certified_scale": adm.certified_scale,
        "depths": tuple(depths),
        "pairs": adm.pairs,
        "warnings": tuple(notes),
        "alpha": alpha,
        "eps": eps,
    }
    return SegmentComplex(frame, tuple(threads), chains=tuple(chains), p1u=True, meta=meta)


def thread_depths(cx: SegmentComplex) -> tuple[int, ...]:
    return tuple(t.depth for t in cx.threads)


def expected_anchor_value(cx: SegmentComplex, M: PseudometricSpace, k: int, beta: int) -> Fraction:
    """Anchor value of thread ``k`` at stage ``beta`` predicted by the construction:
    ``w(d)`` before the thread's depth, ``d`` from then on."""
    t = cx.threads[k]
    x, y = t.anchors
    return M.dist[x][y] if beta >= t.depth else cx.frame.dist[x][y]


# -- geodesic surrogate ---------------------------------------------------------------------


def path_metric(mesh, length=1) -> PseudometricSpace:
    """Points ``0, r, 2r, ..., length`` of a segment with the usual distance."""
    r, length = to_fraction(mesh), to_fraction(length)
    steps = length / r
    if steps.denominator != 1:
        raise DomainError("mesh must divide the length")
    k = int(steps)
    return PseudometricSpace.from_points([f"s{i}" for i in range(k + 1)], lambda i, j: abs(i - j) * r, metric=True)


@dataclass(frozen=True)
class GeodesicRow:
    mesh: Fraction
    points: int
    stages: int
    ratio: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.ratio <= self.bound


def refine_geodesic_check(meshes: Sequence, eps=1, w: DistortionPL | None = None, samples: int = 0) -> list[GeodesicRow]:
    """Stage-1 distortion of the depth-1 construction over finer and finer path metrics."""
    from .curveflat import cf_step, initial_state

    rows = []
    for r in meshes:
        r = to_fraction(r)
        M = path_metric(r)
        ww = w if w is not None else DistortionPL.steep(1, 4)
        n_stages = int(math.log2(1 / r)) + 1
        Y = build_theorem_b(M, 1, eps, ww, n_stages, samples)
        frame = cf_step(initial_state(Y)).bent_frame.dist
        n = len(M)
        ratio = max(frame[p][q] / M.dist[p][q] for p in range(n) for q in range(p + 1, n))
        rows.append(GeodesicRow(r, n, n_stages, ratio, (1 + r) ** 2))
    return rows


def diameter_of(cx: SegmentComplex) -> Fraction:
    return diameter(flatten(cx).space)
