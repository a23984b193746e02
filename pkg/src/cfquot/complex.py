"""Segment complexes and the two gluing operations, attachment and bending.

A complex is a frame (a finite pseudometric space) with threads hung on pairs
of frame points.  A thread body is either a gapped edge (a sampled interval
of length ``l`` with a centred open gap of length ``g`` removed) or another
complex with two designated boundary points.

Flattening materialises every sample point, computes the attachment metric
bottom-up and records the solid structure the curve-flat engine needs:
sampled geodesic chains (gapped-edge arms, or frame chains of a complex
that stands for a sampled length space) together with the guard deciding
when a frame chain counts as rectifiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .exact import (
    Matrix,
    common_scale,
    fmt,
    from_int_array,
    pick_dtype,
    shortest_path_closure,
    to_fraction,
    to_int_array,
)
from .metric import PseudometricSpace, StructuralError, ZeroClassPartition, partition_from_assignment


class BendingError(ValueError):
    """A bending triple asks to *raise* a distance."""


class AttachError(ValueError):
    """Thread boundary distance disagrees with its frame anchors."""


# -- bending -----------------------------------------------------------------


@dataclass(frozen=True)
class BendingTriple:
    x: int
    y: int
    a: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", to_fraction(self.a))
        if self.x == self.y:
            raise StructuralError("bending triple needs two distinct points")
        if self.a < 0:
            raise StructuralError("bending target must be nonnegative")


def _triples(triples) -> list[BendingTriple]:
    return [t if isinstance(t, BendingTriple) else BendingTriple(*t) for t in triples]


def _check_triple(space: PseudometricSpace, t: BendingTriple) -> None:
    n = len(space)
    if not (0 <= t.x < n and 0 <= t.y < n):
        raise StructuralError(f"bending triple {t} out of range for {n} points")
    if t.a > space.dist[t.x][t.y]:
        raise BendingError(
            f"cannot bend ({t.x},{t.y}) to {fmt(t.a)} above current distance {fmt(space.dist[t.x][t.y])}"
        )


def bend(space: PseudometricSpace, triples) -> PseudometricSpace:
    """Largest pseudometric below ``space`` with ``d(x_i, y_i) <= a_i``.

    Computed as the shortest-path closure of the complete graph weighted by
    the input distances plus one shortcut edge per triple.
    """
    triples = _triples(triples)
    if not triples:
        return space
    rows = [list(r) for r in space.dist]
    for t in triples:
        _check_triple(space, t)
        if t.a < rows[t.x][t.y]:
            rows[t.x][t.y] = rows[t.y][t.x] = t.a
    return space.with_dist(shortest_path_closure(rows))


def bend_single_formula(space: PseudometricSpace, t) -> PseudometricSpace:
    """Closed form for one triple: min(d(p,q), d(p,x)+a+d(y,q), d(p,y)+a+d(x,q))."""
    (t,) = _triples([t])
    _check_triple(space, t)
    if t.a == space.dist[t.x][t.y]:
        return space
    d = space.dist
    scale = common_scale([d, ((t.a,),)])
    arr = to_int_array(d, scale, pick_dtype([d], scale, factor=8))
    a = t.a.numerator * (scale // t.a.denominator)
    col_x = arr[:, t.x : t.x + 1]
    col_y = arr[:, t.y : t.y + 1]
    via = np.minimum(col_x + a + col_y.T, col_y + a + col_x.T)
    return space.with_dist(from_int_array(np.minimum(arr, via), scale))


def bend_sequential(space: PseudometricSpace, triples) -> PseudometricSpace:
    """Apply triples one at a time, clamping each target to the current distance."""
    for t in _triples(triples):
        current = space.dist[t.x][t.y]
        space = bend_single_formula(space, BendingTriple(t.x, t.y, min(t.a, current)))
    return space


# -- gapped edges --------------------------------------------------------------


@dataclass(frozen=True)
class GappedEdge:
    """Interval ``[0, l]`` minus the centred open gap of length ``g``.

    ``g == l`` leaves only the endpoints (a pure p1u link); ``g == 0`` is a
    solid segment.  ``samples`` interior points are placed evenly on each arm.
    """

    length: Fraction
    gap: Fraction
    samples: int = 1

    def __post_init__(self):
        object.__setattr__(self, "length", to_fraction(self.length))
        object.__setattr__(self, "gap", to_fraction(self.gap))
        if self.length <= 0:
            raise StructuralError("gapped edge length must be positive")
        if not 0 <= self.gap <= self.length:
            raise StructuralError("gap must lie in [0, length]")
        if self.samples < 0:
            raise StructuralError("sample count must be nonnegative")

    @property
    def kind(self) -> str:
        if self.gap == self.length:
            return "p1u"
        if self.gap == 0:
            return "solid"
        return "gap"

    @property
    def arm_end(self) -> Fraction:
        return (self.length - self.gap) / 2

    def layout(self) -> list[tuple[str, Fraction]]:
        """Sample labels and positions along ``[0, l]``, anchors included."""
        l, a = self.length, self.arm_end
        b = l - a
        pts = [("x", Fraction(0))]
        if self.kind != "p1u":
            s = self.samples
            pts += [(f"a{i}", a * i / (s + 1)) for i in range(1, s + 1)]
            if self.kind == "solid":
                pts.append(("m", a))
            else:
                pts += [("u", a), ("v", b)]
            pts += [(f"b{i}", b + (l - b) * i / (s + 1)) for i in range(1, s + 1)]
        pts.append(("y", l))
        return pts

    def arms(self) -> list[list[int]]:
        """Index runs (into :meth:`layout`) of the solid pieces."""
        lay = self.layout()
        if self.kind == "p1u":
            return []
        if self.kind == "solid":
            return [list(range(len(lay)))]
        split = next(i for i, (name, _) in enumerate(lay) if name == "v")
        return [list(range(split)), list(range(split, len(lay)))]

    def space(self) -> PseudometricSpace:
        lay = self.layout()
        return PseudometricSpace.from_points(
            [name for name, _ in lay], lambda i, j: abs(lay[i][1] - lay[j][1])
        )

    def to_json(self) -> dict:
        return {"l": fmt(self.length), "g": fmt(self.gap), "samples": self.samples}

    @classmethod
    def from_json(cls, obj: dict) -> "GappedEdge":
        return cls(obj["l"], obj["g"], int(obj.get("samples", 1)))


# -- complexes -------------------------------------------------------------------


@dataclass(frozen=True)
class FrameChain:
    """Frame points sampling a geodesic of the underlying space, with positions."""

    points: tuple[int, ...]
    positions: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))
        object.__setattr__(self, "positions", tuple(to_fraction(p) for p in self.positions))
        if len(self.points) != len(self.positions):
            raise StructuralError("chain points and positions differ in length")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise StructuralError("chain positions must increase")


@dataclass(frozen=True)
class Thread:
    anchors: tuple[int, int]
    body: Union[GappedEdge, "SegmentComplex"]
    boundary: tuple[int, int] | None = None
    wedge: bool = False

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple(int(a) for a in self.anchors))
        if self.boundary is not None:
            object.__setattr__(self, "boundary", tuple(int(b) for b in self.boundary))
        x, y = self.anchors
        if self.wedge:
            if x != y:
                raise StructuralError("wedge thread must have a single anchor (x == y)")
        elif x == y:
            raise StructuralError("thread anchors must differ unless wedge=True")
        if isinstance(self.body, SegmentComplex):
            if self.boundary is None:
                raise StructuralError("nested thread needs boundary points")
            if self.wedge and self.boundary[0] != self.boundary[1]:
                raise StructuralError("wedge thread needs a single boundary point")
        elif self.boundary is not None:
            raise StructuralError("gapped-edge threads carry no boundary")

    @property
    def depth(self) -> int:
        if isinstance(self.body, GappedEdge):
            return 1
        return 1 + self.body.depth


@dataclass(frozen=True)
class SegmentComplex:
    """Frame plus threads plus permanent bendings; a finite tree of complexes.

    ``chains`` mark frame points that sample geodesics of the represented
    space (used when the frame is a distorted copy of a length space such
    as a gapped segment).  ``p1u`` is the builder's declaration that the
    frame is purely 1-unrectifiable at stage 0.
    """

    frame: PseudometricSpace
    threads: tuple[Thread, ...] = ()
    collapsed: tuple[BendingTriple, ...] = ()
    chains: tuple[FrameChain, ...] = ()
    p1u: bool = True
    meta: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "threads", tuple(self.threads))
        object.__setattr__(self, "collapsed", tuple(_triples(self.collapsed)))
        object.__setattr__(self, "chains", tuple(self.chains))
        n = len(self.frame)
        for k, t in enumerate(self.threads):
            if not all(0 <= a < n for a in t.anchors):
                raise StructuralError(f"thread {k} anchors {t.anchors} outside frame of size {n}")
            if isinstance(t.body, SegmentComplex):
                m = len(t.body.frame)
                if not all(0 <= b < m for b in t.boundary):
                    raise StructuralError(f"thread {k} boundary outside nested frame")
        for t in self.collapsed:
            if not (0 <= t.x < n and 0 <= t.y < n):
                raise StructuralError("collapsed constraint outside frame")
        for c in self.chains:
            if not all(0 <= p < n for p in c.points):
                raise StructuralError("frame chain outside frame")

    @property
    def depth(self) -> int:
        return max((t.depth for t in self.threads), default=0)


# -- flattening --------------------------------------------------------------------


@dataclass(frozen=True)
class SolidChain:
    """Sampled geodesic in flattened indices; ``guard`` names the owning complex."""

    points: tuple[int, ...]
    positions: tuple[Fraction, ...]
    guard: int | None = None


@dataclass(frozen=True)
class Guard:
    """Threads of one complex, as (body points, anchors) in flattened indices.

    A frame chain of that complex is rectifiable only once every listed body
    sits at distance 0 from its anchor set.
    """

    threads: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]


@dataclass(frozen=True)
class EdgeRecord:
    path: str
    anchors: tuple[int, int]
    length: Fraction
    gap: Fraction
    kind: str
    pieces: tuple[tuple[str, int, int], ...]  # ("solid" | "gap" | "p1u", from, to)


@dataclass(frozen=True)
class Flattened:
    space: PseudometricSpace
    chains: tuple[SolidChain, ...]
    guards: tuple[Guard, ...]
    edges: tuple[EdgeRecord, ...]
    frame: tuple[int, ...]
    threads: tuple[tuple[int, ...], ...]  # per top-level thread: its body points, boundary first
    boundary: tuple[int, ...] = ()


def _attach_indexed(frame: PseudometricSpace, threads):
    """Attachment plus, per thread, the map body index -> global index."""
    m = len(frame)
    mats = [frame.dist] + [body.dist for _, body, _ in threads]
    labels = list(frame.points)
    maps = []
    interiors = []
    offset = m
    for k, (anchors, body, boundary) in enumerate(threads):
        anchors, boundary = tuple(anchors), tuple(boundary)
        if len(set(anchors)) != len(set(boundary)):
            raise AttachError(f"thread {k}: anchors {anchors} and boundary {boundary} disagree in size")
        if len(anchors) == 2 and body.dist[boundary[0]][boundary[1]] != frame.dist[anchors[0]][anchors[1]]:
            raise AttachError(
                f"thread {k}: boundary distance {fmt(body.dist[boundary[0]][boundary[1]])} "
                f"!= anchor distance {fmt(frame.dist[anchors[0]][anchors[1]])}"
            )
        mp = {}
        for b, a in zip(boundary, anchors):
            mp[b] = a
        inner = [i for i in range(len(body)) if i not in mp]
        for i in inner:
            mp[i] = offset
            labels.append(f"t{k}.{body.points[i]}")
            offset += 1
        maps.append(mp)
        interiors.append(inner)
    n = offset
    scale = common_scale(mats)
    dtype = pick_dtype(mats, scale, factor=8)
    F = to_int_array(frame.dist, scale, dtype)
    R = np.zeros((n, n), dtype=dtype)
    R[:m, :m] = F
    to_frame = []
    for k, (anchors, body, boundary) in enumerate(threads):
        B = to_int_array(body.dist, scale, dtype)
        inner = interiors[k]
        g = [maps[k][i] for i in inner]
        zs = list(dict.fromkeys(zip(boundary, anchors)))
        if inner:
            R[np.ix_(g, g)] = B[np.ix_(inner, inner)]
            tf = None
            for bz, fz in zs:
                cand = B[inner, bz][:, None] + F[fz, :][None, :]
                tf = cand if tf is None else np.minimum(tf, cand)
            R[np.ix_(g, list(range(m)))] = tf
            R[np.ix_(list(range(m)), g)] = tf.T
        to_frame.append((g, tf if inner else None, B, inner, zs))
    for k in range(len(threads)):
        gk, tfk, _, _, _ = to_frame[k]
        if not gk:
            continue
        for j in range(k + 1, len(threads)):
            gj, _, Bj, innerj, zsj = to_frame[j]
            if not gj:
                continue
            best = None
            for bw, fw in zsj:
                cand = tfk[:, fw][:, None] + Bj[bw, innerj][None, :]
                best = cand if best is None else np.minimum(best, cand)
            R[np.ix_(gk, gj)] = best
            R[np.ix_(gj, gk)] = best.T
    space = PseudometricSpace(tuple(labels), from_int_array(R, scale))
    return space, maps


def attach(frame: PseudometricSpace, threads) -> PseudometricSpace:
    """Largest pseudometric on frame + bodies agreeing with each piece.

    ``threads`` is a list of ``(anchors, body_space, boundary)``; anchors are
    frame indices, boundary the matching body indices (one or two of each).
    Output order: frame points, then each body's non-boundary points.
    """
    space, _ = _attach_indexed(frame, threads)
    return space


def _edge_flat(edge: GappedEdge, wedge: bool, path: str) -> Flattened:
    space = edge.space()
    lay = edge.layout()
    chains = tuple(
        SolidChain(tuple(run), tuple(lay[i][1] for i in run)) for run in edge.arms() if len(run) > 1
    )
    last = len(lay) - 1
    if edge.kind == "p1u":
        pieces = (("p1u", 0, last),)
    elif edge.kind == "solid":
        pieces = (("solid", 0, last),)
    else:
        u = next(i for i, (nm, _) in enumerate(lay) if nm == "u")
        pieces = (("solid", 0, u), ("gap", u, u + 1), ("solid", u + 1, last))
    rec = EdgeRecord(path, (0, last), edge.length, edge.gap, edge.kind, pieces)
    boundary = (0,) if wedge else (0, last)
    return Flattened(space, chains, (), (rec,), boundary, (), boundary)


def _remap(flat: Flattened, mp: dict[int, int], guard_offset: int):
    chains = tuple(
        SolidChain(
            tuple(mp[p] for p in c.points),
            c.positions,
            None if c.guard is None else c.guard + guard_offset,
        )
        for c in flat.chains
    )
    guards = tuple(
        Guard(tuple((tuple(mp[p] for p in body), tuple(mp[a] for a in anc)) for body, anc in g.threads))
        for g in flat.guards
    )
    edges = tuple(
        EdgeRecord(
            e.path,
            (mp[e.anchors[0]], mp[e.anchors[1]]),
            e.length,
            e.gap,
            e.kind,
            tuple((kind, mp[a], mp[b]) for kind, a, b in e.pieces),
        )
        for e in flat.edges
    )
    return chains, guards, edges


def _prefix_paths(edges, prefix: str):
    return tuple(
        EdgeRecord(f"{prefix}.{e.path}" if e.path else prefix, e.anchors, e.length, e.gap, e.kind, e.pieces)
        for e in edges
    )


def flatten(cx: SegmentComplex) -> Flattened:
    """Materialise all sample points of ``cx`` with the ambient pseudometric.

    Point order is deterministic: frame points, then threads in index order,
    each body depth-first.  Collapsed constraints are applied to the whole
    attachment after gluing.
    """
    children = []
    for k, t in enumerate(cx.threads):
        if isinstance(t.body, GappedEdge):
            child = _edge_flat(t.body, t.wedge, "")
            children.append((child, child.boundary))
        else:
            inner = flatten(t.body)
            b = (t.boundary[0],) if t.wedge else t.boundary
            children.append((inner, tuple(inner.frame[i] for i in b)))
    glued = [
        ((t.anchors[0],) if t.wedge else t.anchors, child.space, boundary)
        for t, (child, boundary) in zip(cx.threads, children)
    ]
    space, maps = _attach_indexed(cx.frame, glued)
    if cx.collapsed:
        space = bend(space, cx.collapsed)
    m = len(cx.frame)
    edges: list[EdgeRecord] = []
    chains: list[SolidChain] = []
    guards: list[Guard] = []  # guard 0 is this complex, children's follow in thread order
    thread_points = []
    for k, ((child, _), mp) in enumerate(zip(children, maps)):
        c, g, e = _remap(child, mp, 1 + len(guards))
        chains.extend(c)
        guards.extend(g)
        edges.extend(_prefix_paths(e, f"t{k}"))
        thread_points.append(tuple(sorted(set(mp.values()), key=lambda v: (v >= m, v))))
    own = Guard(
        tuple(
            (pts, tuple(dict.fromkeys((t.anchors[0],) if t.wedge else t.anchors)))
            for t, pts in zip(cx.threads, thread_points)
        )
    )
    all_guards = [own] + guards
    fixed_chains = chains
    own_chains = [SolidChain(fc.points, fc.positions, 0) for fc in cx.chains]
    return Flattened(
        space,
        tuple(own_chains + fixed_chains),
        tuple(all_guards),
        tuple(edges),
        tuple(range(len(cx.frame))),
        tuple(thread_points),
    )


# -- solid structure -----------------------------------------------------------------


def chain_is_active(chain: SolidChain, guards: Sequence[Guard], dist: Matrix) -> bool:
    """A sampled geodesic is rectifiable when every link is no longer than its
    base length and, for frame chains, the owning complex has no live thread."""
    pts, pos = chain.points, chain.positions
    for i in range(len(pts) - 1):
        if dist[pts[i]][pts[i + 1]] > pos[i + 1] - pos[i]:
            return False
    if chain.guard is not None:
        for body, anchors in guards[chain.guard].threads:
            for p in body:
                if all(dist[p][a] != 0 for a in anchors):
                    return False
    return True


def solid_partition(flat: Flattened, dist: Matrix | None = None) -> ZeroClassPartition:
    """Union of the active chains into rectifiably connected components."""
    dist = flat.space.dist if dist is None else dist
    n = len(dist)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for ch in flat.chains:
        if chain_is_active(ch, flat.guards, dist):
            root = find(ch.points[0])
            for p in ch.points[1:]:
                r = find(p)
                if r != root:
                    parent[r] = root
    return partition_from_assignment([find(i) for i in range(n)])


def arms(cx: SegmentComplex) -> ZeroClassPartition:
    """Rectifiably connected components of the flattened complex at stage 0."""
    return solid_partition(flatten(cx))


def body_distance(t: Thread) -> Fraction:
    """Ambient distance between a thread body's boundary points."""
    if isinstance(t.body, GappedEdge):
        return Fraction(0) if t.wedge else t.body.length
    flat = flatten(t.body)
    bx, by = (flat.frame[b] for b in t.boundary)
    return flat.space.dist[bx][by]
