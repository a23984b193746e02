"""Curve-flat pseudometrics on segment complexes.

Two independent routes compute the iterated quotients:

* the *chain oracle* works on the flattened complex: contract every
  rectifiable component (the union of the currently active solid chains) to
  cost 0, let any other move cost the ambient distance, and take all-pairs
  shortest paths;
* the *structural engine* keeps a frame metric and one state per thread,
  steps every thread on its own, bends the frame by the new anchor values and
  re-attaches the bent threads.

On complexes whose solid pieces are sampled segments the two agree exactly;
the test-suite checks that stage by stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .complex import (
    BendingTriple,
    Flattened,
    GappedEdge,
    SegmentComplex,
    attach,
    bend,
    bend_single_formula,
    chain_is_active,
    flatten,
    solid_partition,
)
from .exact import Matrix, common_scale, floyd_warshall_int, from_int_array, pick_dtype, to_int_array
from .metric import PseudometricSpace, ZeroClassPartition, partition_from_assignment


# -- oracle -------------------------------------------------------------------


def chain_cf(dist: Matrix, part: ZeroClassPartition) -> Matrix:
    """Shortest paths with free moves inside each block and jumps at ``dist`` cost."""
    n = len(dist)
    if n == 0 or all(len(b) == 1 for b in part.blocks):
        return dist
    scale = common_scale([dist])
    arr = to_int_array(dist, scale, pick_dtype([dist], scale))
    rows = np.stack([arr[list(b)].min(axis=0) for b in part.blocks])
    C = np.stack([rows[:, list(b)].min(axis=1) for b in part.blocks], axis=1)
    np.fill_diagonal(C, 0)
    floyd_warshall_int(C)
    cls = list(part.assignment())
    return from_int_array(C[np.ix_(cls, cls)], scale)


@dataclass(frozen=True)
class GapCostGraph:
    """Flattened points, their solid components and the ambient jump costs."""

    nodes: tuple[str, ...]
    components: ZeroClassPartition
    jump: Matrix

    @classmethod
    def of(cls, flat: Flattened, dist: Matrix | None = None) -> "GapCostGraph":
        dist = flat.space.dist if dist is None else dist
        return cls(flat.space.points, solid_partition(flat, dist), dist)

    def shortest(self) -> Matrix:
        return chain_cf(self.jump, self.components)


def cf_oracle_stages(cx: SegmentComplex, max_stage: int) -> list[PseudometricSpace]:
    """``[rho^0, ..., rho^max_stage]`` on the flattened complex, oracle route."""
    flat = flatten(cx)
    out = [flat.space]
    for _ in range(max_stage):
        cur = out[-1].dist
        out.append(flat.space.with_dist(GapCostGraph.of(flat, cur).shortest()))
    return out


def cf_oracle(cx: SegmentComplex) -> PseudometricSpace:
    """First-order curve-flat pseudometric on all sample points."""
    return cf_oracle_stages(cx, 1)[1]


def cf_index_oracle(cx: SegmentComplex, max_stage: int) -> int | None:
    stages = cf_oracle_stages(cx, max_stage + 1)
    for b in range(max_stage + 1):
        if stages[b + 1].dist == stages[b].dist:
            return b
    return None


# -- structural engine -----------------------------------------------------------


@dataclass(frozen=True)
class ThreadState:
    """Unbent body pseudometric at the current stage, in the body's own order."""

    body: PseudometricSpace
    boundary: tuple[int, ...]
    nested: "CurveFlatState | None" = None

    @property
    def anchor_value(self) -> Fraction:
        if len(self.boundary) == 1:
            return Fraction(0)
        return self.body.dist[self.boundary[0]][self.boundary[1]]

    @property
    def collapsed(self) -> bool:
        """Every body point sits at distance 0 from the boundary."""
        d = self.body.dist
        return all(any(d[p][b] == 0 for b in self.boundary) for p in range(len(self.body)))


@dataclass(frozen=True)
class CurveFlatState:
    stage: int
    complex: SegmentComplex
    flat: Flattened
    bent_frame: PseudometricSpace
    thread_states: tuple[ThreadState, ...]
    materialized: PseudometricSpace

    def anchor_values(self) -> tuple[Fraction, ...]:
        return tuple(t.anchor_value for t in self.thread_states)


def _collapsed_edge(edge: GappedEdge) -> PseudometricSpace:
    """Quotient of a gapped edge by its arms: 0 on an arm, ``g`` across the gap."""
    lay = edge.layout()
    if edge.kind == "p1u":
        return edge.space()
    cut = edge.arm_end
    side = [pos > cut for _, pos in lay]
    return PseudometricSpace.from_points(
        [name for name, _ in lay], lambda i, j: edge.gap if side[i] != side[j] else 0
    )


def _materialize(cx: SegmentComplex, frame: PseudometricSpace, threads: Sequence[ThreadState]):
    glued = []
    for t, ts in zip(cx.threads, threads):
        if t.wedge:
            glued.append(((t.anchors[0],), ts.body, ts.boundary))
            continue
        x, y = t.anchors
        bx, by = ts.boundary
        eta = bend_single_formula(ts.body, BendingTriple(bx, by, frame.dist[x][y]))
        glued.append((t.anchors, eta, ts.boundary))
    return attach(frame, glued)


def _cap(cx: SegmentComplex, frame: PseudometricSpace, threads: Sequence[ThreadState]) -> PseudometricSpace:
    caps = [
        BendingTriple(t.anchors[0], t.anchors[1], min(ts.anchor_value, frame.dist[t.anchors[0]][t.anchors[1]]))
        for t, ts in zip(cx.threads, threads)
        if not t.wedge
    ]
    return bend(frame, caps)


def initial_state(cx: SegmentComplex) -> CurveFlatState:
    flat = flatten(cx)
    threads = []
    for t in cx.threads:
        if isinstance(t.body, GappedEdge):
            body = t.body.space()
            last = len(body) - 1
            threads.append(ThreadState(body, (0,) if t.wedge else (0, last)))
        else:
            ns = initial_state(t.body)
            b = (t.boundary[0],) if t.wedge else t.boundary
            threads.append(ThreadState(ns.materialized, tuple(ns.flat.frame[i] for i in b), ns))
    frame = _cap(cx, bend(cx.frame, cx.collapsed), threads)
    return CurveFlatState(0, cx, flat, frame, tuple(threads), _materialize(cx, frame, threads))


def cf_step(state: CurveFlatState) -> CurveFlatState:
    """Stage ``beta -> beta + 1`` computed thread by thread."""
    cx, flat = state.complex, state.flat
    rho = state.materialized.dist
    m = len(cx.frame)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for ch in flat.chains:
        if ch.guard == 0 and chain_is_active(ch, flat.guards, rho):
            for p in ch.points[1:]:
                parent[find(p)] = find(ch.points[0])
    frame_cf = state.bent_frame.with_dist(
        chain_cf(state.bent_frame.dist, partition_from_assignment([find(i) for i in range(m)]))
    )
    threads = []
    for t, ts in zip(cx.threads, state.thread_states):
        if ts.nested is not None:
            ns = cf_step(ts.nested)
            threads.append(ThreadState(ns.materialized, ts.boundary, ns))
        elif ts.collapsed:
            threads.append(ts)
        else:
            threads.append(ThreadState(_collapsed_edge(t.body), ts.boundary))
    frame = _cap(cx, frame_cf, threads)
    return CurveFlatState(state.stage + 1, cx, flat, frame, tuple(threads), _materialize(cx, frame, threads))


def cf_iterate(state: CurveFlatState, max_stage: int) -> tuple[list[CurveFlatState], int | None]:
    """Step until the materialized matrix repeats or ``max_stage`` is reached.

    Returns the visited states and the first stage ``b`` with
    ``rho^(b+1) == rho^b`` (``None`` if not seen within ``max_stage``).
    """
    if max_stage < 0:
        raise ValueError("max_stage must be nonnegative")
    states = [state]
    for _ in range(max_stage + 1):
        nxt = cf_step(states[-1])
        if nxt.materialized.dist == states[-1].materialized.dist:
            return states, states[-1].stage
        states.append(nxt)
    return states, None


def cf_index(cx: SegmentComplex, max_stage: int) -> int | None:
    """Finite curve-flat index, or ``None`` when it exceeds ``max_stage``."""
    return cf_iterate(initial_state(cx), max_stage)[1]


# -- lemma checks ------------------------------------------------------------------


@dataclass(frozen=True)
class CommutationReport:
    b: Fraction
    lhs: Matrix
    rhs: Matrix
    mismatches: tuple[tuple[int, int], ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def check_pair_bending_commutation(cx: SegmentComplex, triple) -> CommutationReport:
    """Compare cf(bend(rho, (x,y,a))) with bend(cf(rho), (x,y,min(cf(x,y), a))).

    The triple is given in flattened indices and must be valid on the ambient
    pseudometric.
    """
    t = triple if isinstance(triple, BendingTriple) else BendingTriple(*triple)
    flat = flatten(cx)
    bent = bend(flat.space, [t])
    lhs = GapCostGraph.of(flat, bent.dist).shortest()
    cf = GapCostGraph.of(flat).shortest()
    b = min(cf[t.x][t.y], t.a)
    rhs = bend(flat.space.with_dist(cf), [BendingTriple(t.x, t.y, b)]).dist
    n = len(lhs)
    bad = tuple((i, j) for i in range(n) for j in range(i + 1, n) if lhs[i][j] != rhs[i][j])
    return CommutationReport(b, lhs, rhs, bad)


def recomplexify(space: PseudometricSpace) -> SegmentComplex:
    """A thread-less, chain-less complex on ``space`` (every move is a jump)."""
    return SegmentComplex(space, p1u=True)
