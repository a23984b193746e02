import random
import warnings
from fractions import Fraction as Fr

from hypothesis import given
from hypothesis import strategies as st

from cfquot.complex import BendingTriple, GappedEdge, SegmentComplex, Thread, bend, flatten, solid_partition
from cfquot.constructions import DegeneratePairWarning, build_theorem_b, gapped_graph, gapped_segment, gapped_segment_space
from cfquot.curveflat import (
    cf_index,
    cf_iterate,
    cf_oracle,
    cf_oracle_stages,
    cf_step,
    check_pair_bending_commutation,
    initial_state,
    recomplexify,
)
from cfquot.generators import random_depth1_complex, random_depth2_complex, random_metric, random_theorem_b
from cfquot.metric import DistortionPL, PseudometricSpace, quotient_by_zero, validate

W = DistortionPL(((0, 0), (Fr(1, 2), Fr(3, 2)), (2, 2)))
seeds = st.integers(0, 2**32 - 1)


def two(l):
    return PseudometricSpace(("x", "y"), ((0, l), (l, 0)), metric=True)


def gapped_thread(l=Fr(3, 2), g=Fr(1, 2), samples=1):
    return SegmentComplex(two(l), (Thread((0, 1), GappedEdge(l, g, samples)),))


def mixed(seed):
    rng = random.Random(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePairWarning)
        return rng.choice([random_depth1_complex, random_depth2_complex, random_theorem_b])(rng)


def abcd():
    d = {("A", "B"): Fr(1, 8), ("C", "D"): Fr(1, 4), ("A", "C"): 1, ("A", "D"): Fr(3, 4), ("B", "C"): Fr(7, 8), ("B", "D"): Fr(5, 8)}
    M = PseudometricSpace.from_points("ABCD", lambda i, j: d.get(("ABCD"[i], "ABCD"[j])) or d[("ABCD"[j], "ABCD"[i])], metric=True)
    return M, DistortionPL(((0, 0), (Fr(1, 16), Fr(1, 8)), (1, 1)))


class TestOracle:
    def test_gapped_thread_collapses_to_gap(self):
        cx = gapped_thread()
        cf = cf_oracle(cx).dist
        flat = flatten(cx)
        assert cf[0][1] == Fr(1, 2)
        for block in solid_partition(flat).blocks:
            assert all(cf[p][q] == 0 for p in block for q in block)

    def test_gapped_graph_recovers_d(self):
        M = random_metric(random.Random(5), 4)
        w = DistortionPL.steep(max(max(r) for r in M.dist), 4)
        cx = gapped_graph(M, w)
        cf = cf_oracle(cx).dist
        assert all(cf[i][j] == M.dist[i][j] for i in range(4) for j in range(4))

    def test_no_threads_unchanged(self):
        M = random_metric(random.Random(1), 5)
        assert cf_oracle(recomplexify(M)).dist == M.dist

    @given(seeds)
    def test_below_ambient_and_valid(self, seed):
        cx = mixed(seed)
        flat = flatten(cx)
        cf = cf_oracle(cx)
        n = len(cf)
        assert validate(cf.with_dist(cf.dist, metric=False)).ok
        assert all(cf.dist[i][j] <= flat.space.dist[i][j] for i in range(n) for j in range(n))

    @given(seeds)
    def test_stage_monotone_and_arms_constant(self, seed):
        cx = mixed(seed)
        flat = flatten(cx)
        stages = cf_oracle_stages(cx, 3)
        n = len(flat.space)
        for a, b in zip(stages, stages[1:]):
            assert all(b.dist[i][j] <= a.dist[i][j] for i in range(n) for j in range(n))
        cf = stages[1].dist
        for block in solid_partition(flat).blocks:
            assert all(cf[p][q] == 0 for p in block for q in block)

    @given(seeds, st.integers(1, 4))
    def test_monotone_in_ambient(self, seed, k):
        """Shrinking the frame (same solid structure) cannot raise cf distances."""
        rng = random.Random(seed)
        cx = random_depth1_complex(rng)
        n = len(cx.frame)
        x, y = rng.sample(range(n), 2)
        smaller = SegmentComplex(cx.frame, cx.threads, cx.collapsed + (BendingTriple(x, y, cx.frame.dist[x][y] * Fr(k, 4)),))
        a, b = cf_oracle(smaller).dist, cf_oracle(cx).dist
        m = len(a)
        assert all(a[i][j] <= b[i][j] for i in range(m) for j in range(m))

    @given(seeds)
    def test_recomplexify_idempotent(self, seed):
        cf = cf_oracle(mixed(seed))
        assert cf_oracle(recomplexify(cf)).dist == cf.dist


class TestEngine:
    def test_depth1_step_bends_frame_by_gaps(self):
        rng = random.Random(3)
        M = random_metric(rng, 4)
        w = DistortionPL.steep(max(max(r) for r in M.dist), 4)
        cx = gapped_graph(M, w)
        st1 = cf_step(initial_state(cx))
        want = bend(cx.frame, [(t.anchors[0], t.anchors[1], t.body.gap) for t in cx.threads])
        assert st1.bent_frame.dist == want.dist
        assert st1.materialized.dist == cf_oracle(cx).dist

    def test_fixed_point_is_identity(self):
        st0 = initial_state(gapped_thread())
        st1 = cf_step(st0)
        assert cf_step(st1).materialized.dist == st1.materialized.dist

    def test_depth2_body_returns_to_segment(self):
        M, w = abcd()
        Y = build_theorem_b(M, 2, Fr(1, 4), w, 4, samples=1)
        deep = [k for k, t in enumerate(Y.threads) if t.depth == 2]
        assert deep
        st1 = cf_step(initial_state(Y))
        for k in deep:
            t = Y.threads[k]
            x, y = t.anchors
            seg = gapped_segment_space(Y.frame.dist[x][y], M.dist[x][y], 1)
            assert st1.thread_states[k].nested.bent_frame.dist == seg.space.dist

    def test_iterate_examples(self):
        assert cf_iterate(initial_state(recomplexify(random_metric(random.Random(0), 3))), 3)[1] == 0
        assert cf_index(gapped_thread(), 3) == 1
        assert cf_index(gapped_segment(Fr(1, 2), W), 3) == 1

    def test_theorem_b_depth_two(self):
        M, w = abcd()
        Y = build_theorem_b(M, 2, Fr(1, 4), w, 4, samples=0)
        assert cf_index(Y, 4) == 2

    def test_index_none_when_budget_short(self):
        M, w = abcd()
        Y = build_theorem_b(M, 2, Fr(1, 4), w, 4, samples=0)
        assert cf_index(Y, 1) is None

    @given(seeds)
    def test_engine_equals_oracle(self, seed):
        cx = mixed(seed)
        oracle = cf_oracle_stages(cx, 3)
        state = initial_state(cx)
        for b in range(4):
            assert state.materialized.dist == oracle[b].dist
            state = cf_step(state)

    @given(seeds)
    def test_anchor_values_nonincreasing(self, seed):
        cx = mixed(seed)
        states, _ = cf_iterate(initial_state(cx), 3)
        for a, b in zip(states, states[1:]):
            assert all(v2 <= v1 for v1, v2 in zip(a.anchor_values(), b.anchor_values()))


class TestCommutation:
    def test_p1u_complex(self):
        M = random_metric(random.Random(2), 4)
        rep = check_pair_bending_commutation(recomplexify(M), (0, 1, M.dist[0][1] / 2))
        assert rep.ok and rep.lhs == bend(M, [(0, 1, M.dist[0][1] / 2)]).dist

    def test_endpoints_below_gap(self):
        cx = gapped_thread()
        rep = check_pair_bending_commutation(cx, (0, 1, Fr(1, 4)))
        assert rep.ok and rep.lhs[0][1] == Fr(1, 4) and rep.b == Fr(1, 4)

    @given(seeds, st.data())
    def test_random_depth1(self, seed, data):
        rng = random.Random(seed)
        cx = random_depth1_complex(rng)
        flat = flatten(cx)
        n = len(flat.space)
        x = data.draw(st.integers(0, n - 1))
        y = data.draw(st.integers(0, n - 1).filter(lambda v: v != x))
        a = flat.space.dist[x][y] * Fr(data.draw(st.integers(0, 4)), 4)
        assert check_pair_bending_commutation(cx, (x, y, a)).ok


class TestQuotients:
    @given(seeds)
    def test_theorem_a(self, seed):
        rng = random.Random(seed)
        M = random_metric(rng, rng.randint(2, 6))
        diam = max(max(r) for r in M.dist)
        w = DistortionPL.steep(diam, rng.randint(2, 8))
        Q, part = quotient_by_zero(cf_oracle(gapped_graph(M, w, samples=rng.randint(0, 2))))
        assert len(Q) == len(M)
        assert [Q.points[k] for k in range(len(M))] == list(M.points)
        assert all(Q.dist[i][j] == M.dist[i][j] for i in range(len(M)) for j in range(len(M)))
