"""Seeded random instances.

Metrics: draw a symmetric matrix of small positive rationals, then take its
shortest-path closure so the triangle inequality holds.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .complex import BendingTriple, GappedEdge, SegmentComplex, Thread, flatten
from .constructions import build_theorem_b, gapped_graph, gapped_segment_space
from .exact import shortest_path_closure
from .metric import DistortionPL, PseudometricSpace, apply_distortion, diameter


def random_metric(rng: random.Random, n: int, max_num: int = 8, max_den: int = 4) -> PseudometricSpace:
    raw = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            raw[i][j] = raw[j][i] = Fraction(rng.randint(1, max_num), rng.randint(1, max_den))
    return PseudometricSpace([f"p{i}" for i in range(n)], shortest_path_closure(raw), metric=True)


def random_clustered_metric(rng: random.Random, clusters: int = 4, per: int = 4) -> PseudometricSpace:
    """Tight clumps of grid points far apart (l1 distance), so greedy nets stay sparse."""
    pts = []
    for _ in range(clusters):
        cx, cy = rng.randint(0, 16) * 64, rng.randint(0, 16) * 64
        pts += [(cx + rng.randint(0, 3), cy + rng.randint(0, 3)) for _ in range(per)]
    pts = list(dict.fromkeys(pts))
    return PseudometricSpace.from_points(
        [f"p{i}" for i in range(len(pts))],
        lambda i, j: Fraction(abs(pts[i][0] - pts[j][0]) + abs(pts[i][1] - pts[j][1]), 64),
        metric=True,
    )


def random_distortion(rng: random.Random, diam: Fraction) -> DistortionPL:
    """Two-piece concave distortion fixing ``diam``, strictly above the identity inside."""
    t1 = diam * Fraction(rng.randint(1, 7), 16)
    v1 = t1 + (diam - t1) * Fraction(rng.randint(1, 3), 4)
    return DistortionPL(((0, 0), (t1, v1), (diam, diam)))


def random_depth1_complex(rng: random.Random, n: int | None = None) -> SegmentComplex:
    n = n or rng.randint(2, 6)
    frame = random_metric(rng, n)
    threads = []
    for _ in range(rng.randint(0, 4)):
        x, y = rng.sample(range(n), 2)
        l = frame.dist[x][y]
        g = rng.choice([Fraction(0), l, l * Fraction(rng.randint(1, 7), 8)])
        if rng.random() < 0.15:
            wl = Fraction(rng.randint(1, 3))
            threads.append(Thread((x, x), GappedEdge(wl, wl * Fraction(rng.randint(0, 8), 8), rng.randint(0, 2)), wedge=True))
        else:
            threads.append(Thread((x, y), GappedEdge(l, g, rng.randint(0, 2))))
    collapsed = []
    if n > 2 and rng.random() < 0.3:
        x, y = rng.sample(range(n), 2)
        collapsed.append(BendingTriple(x, y, frame.dist[x][y] * Fraction(rng.randint(0, 3), 4)))
    return SegmentComplex(frame, tuple(threads), tuple(collapsed))


def random_segment_body(rng: random.Random, length: Fraction) -> SegmentComplex:
    """Distorted sampled gapped segment of the given length with random gapped edges on it."""
    g = length * Fraction(rng.randint(1, 6), 8)
    seg = gapped_segment_space(length, g, rng.randint(0, 2))
    w = random_distortion(rng, length)
    frame = apply_distortion(seg.space, w)
    candidates = list(seg.links) + [seg.gap_pair]
    m = len(seg.space)
    candidates += [(i, j) for i in range(m) for j in range(i + 1, m) if (i, j) not in candidates]
    chosen = [p for p in candidates[: len(seg.links) + 1] if rng.random() < 0.85]
    chosen += [p for p in candidates[len(seg.links) + 1 :] if rng.random() < 0.2]
    threads = []
    for x, y in chosen:
        d = seg.space.dist[x][y]
        threads.append(Thread((x, y), GappedEdge(w(d), d, rng.randint(0, 1))))
    return SegmentComplex(frame, tuple(threads), chains=seg.chains)


def random_depth2_complex(rng: random.Random, n: int | None = None) -> SegmentComplex:
    """Distorted random frame carrying gapped edges and segment-shaped nested bodies."""
    n = n or rng.randint(2, 4)
    M = random_metric(rng, n)
    w = random_distortion(rng, diameter(M))
    frame = apply_distortion(M, w)
    threads = []
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    for x, y in pairs[: rng.randint(1, 3)]:
        l, d = frame.dist[x][y], M.dist[x][y]
        if rng.random() < 0.6:
            body = random_segment_body(rng, l)
            threads.append(Thread((x, y), body, boundary=(0, len(body.frame) - 1)))
        else:
            threads.append(Thread((x, y), GappedEdge(l, d, rng.randint(0, 1))))
    return SegmentComplex(frame, tuple(threads))


def random_theorem_b(rng: random.Random, alpha: int = 2, n: int | None = None) -> SegmentComplex:
    """Depth-``alpha`` construction over a small random metric, redrawn until
    at least one pair is short enough to get a nested body."""
    n = n or rng.randint(3, 4)
    for _ in range(1000):
        M = random_metric(rng, n, max_num=12, max_den=2)
        diam = diameter(M)
        w = random_distortion(rng, diam)
        if any(3 * w(M.dist[i][j]) <= diam for i in range(n) for j in range(i + 1, n)):
            break
    else:  # pragma: no cover - astronomically unlikely
        raise RuntimeError("could not draw a metric with a short pair")
    return build_theorem_b(M, alpha, Fraction(1, 4), w, 2, samples=rng.randint(0, 1))


def random_gapped_graph(rng: random.Random, n: int | None = None, samples: int | None = None):
    n = n or rng.randint(4, 8)
    M = random_metric(rng, n)
    w = random_distortion(rng, diameter(M))
    return M, gapped_graph(M, w, samples=rng.randint(0, 1) if samples is None else samples)


# -- Lipschitz-quotient corpus ---------------------------------------------------------------


def _arm_projection(flat, n_frame: int) -> tuple[int, ...]:
    from .complex import solid_partition

    part = solid_partition(flat)
    owner = {}
    for block in part.blocks:
        frame_pts = [p for p in block if p < n_frame]
        if len(frame_pts) != 1:
            raise ValueError("arm without a unique frame point")
        for p in block:
            owner[p] = frame_pts[0]
    return tuple(owner[p] for p in range(len(flat.space)))


def _merge_quotient(M: PseudometricSpace, a: int, b: int):
    """1-Lipschitz quotient of ``M`` identifying points ``a`` and ``b``."""
    from .complex import bend
    from .metric import quotient_by_zero

    Q, part = quotient_by_zero(bend(M, [(a, b, 0)]))
    return Q, part.assignment()


def _nearest_on_arm(src_edge: GappedEdge, tgt_edge: GappedEdge) -> list[int]:
    """Map each sample of ``src_edge`` to the closest sample of ``tgt_edge`` on the same arm."""
    s_lay, t_lay = src_edge.layout(), tgt_edge.layout()
    cut = src_edge.arm_end
    out = []
    for _, pos in s_lay:
        side = pos > cut
        best = min(
            (j for j, (_, tp) in enumerate(t_lay) if (tp > cut) == side),
            key=lambda j: (abs(t_lay[j][1] - pos), t_lay[j][1]),
        )
        out.append(best)
    return out


def lipquot_corpus(rng: random.Random):
    """Structure-respecting Lipschitz quotients between complexes of depth <= 2.

    Returns ``(name, FiniteMap)`` pairs: identities, arm projections of
    gapped graphs (optionally followed by a merge), class maps onto stage-k
    quotients, sample coarsening of gapped graphs and arm collapse of a
    gapped segment.
    """
    from .constructions import gapped_segment
    from .curveflat import cf_oracle_stages, recomplexify
    from .lipquot import FiniteMap
    from .metric import quotient_by_zero

    out = []
    cx = rng.choice([random_depth1_complex, random_depth2_complex])(rng)
    flat = flatten(cx)
    out.append(("identity", FiniteMap.of_complexes(cx, cx, range(len(flat.space)))))

    M, Y = random_gapped_graph(rng, rng.randint(3, 5), samples=rng.randint(0, 1))
    proj = _arm_projection(flatten(Y), len(M))
    out.append(("arm-projection", FiniteMap.of_complexes(Y, recomplexify(M), proj)))
    a, b = rng.sample(range(len(M)), 2)
    N, merge = _merge_quotient(M, a, b)
    out.append(("arm-projection+merge", FiniteMap.of_complexes(Y, recomplexify(N), [merge[p] for p in proj])))

    T = random_theorem_b(rng, 2, 3)
    stages = cf_oracle_stages(T, 2)
    k = rng.choice([1, 2])
    Q, part = quotient_by_zero(stages[k])
    out.append((f"class-map-stage{k}", FiniteMap.of_complexes(T, recomplexify(Q), part.assignment())))

    M2 = random_metric(rng, rng.randint(2, 4))
    w2 = random_distortion(rng, diameter(M2))
    fine, coarse = gapped_graph(M2, w2, samples=3), gapped_graph(M2, w2, samples=1)
    ff, fc = flatten(fine), flatten(coarse)
    assign = list(range(len(M2)))
    for k2, (tf, tc) in enumerate(zip(fine.threads, coarse.threads)):
        lay = _nearest_on_arm(tf.body, tc.body)
        tgt_label = lambda j: coarse.frame.points[tc.anchors[0]] if j == 0 else (
            coarse.frame.points[tc.anchors[1]] if j == len(tc.body.layout()) - 1 else f"t{k2}.{tc.body.layout()[j][0]}"
        )
        for i, (name, _) in enumerate(tf.body.layout()):
            if 0 < i < len(tf.body.layout()) - 1:
                assign.append(fc.space.index(tgt_label(lay[i])))
    out.append(("sample-coarsening", FiniteMap.of_complexes(fine, coarse, assign)))

    d = Fraction(rng.randint(1, 3), 4)
    w3 = DistortionPL(((0, 0), (d / 2, d), (1, 1)))
    S = gapped_segment(d, w3, rng.randint(0, 2))
    fs = flatten(S)
    pair = PseudometricSpace(("x", "y"), ((0, d), (d, 0)), metric=True)
    side = _arm_projection(fs, 2)
    out.append(("arm-collapse", FiniteMap.of_complexes(S, recomplexify(pair), side)))
    return out
