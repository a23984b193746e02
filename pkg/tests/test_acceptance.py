"""The ten acceptance criteria at full scale.

Every test prints one PASS/FAIL line (also repeated in the pytest terminal
summary) and asserts both the property and its time budget.
"""

import itertools
import random
import time
import warnings
from fractions import Fraction as Fr

from cfquot.complex import BendingTriple, GappedEdge, bend, bend_sequential, bend_single_formula, flatten, solid_partition
from cfquot.constructions import (
    DegeneratePairWarning,
    build_admissible,
    build_theorem_b,
    check_scale_bound,
    gapped_graph,
    gapped_segment,
    refine_geodesic_check,
)
from cfquot.curveflat import cf_index, cf_iterate, cf_oracle, cf_oracle_stages, cf_step, check_pair_bending_commutation, initial_state, recomplexify
from cfquot.generators import (
    lipquot_corpus,
    random_clustered_metric,
    random_depth1_complex,
    random_depth2_complex,
    random_distortion,
    random_metric,
    random_theorem_b,
)
from cfquot.lipquot import colip_by_balls, colip_constant, verify_index_monotonicity, verify_preimage_inequality
from cfquot.metric import DistortionPL, PseudometricSpace, diameter, quotient_by_zero
from cfquot.verify import random_map

from conftest import complete_edges, nx_closure, record


def _seeded(i):
    return random.Random(1_000_003 * 2024 + i)


def _quiet(fn, *a):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePairWarning)
        return fn(*a)


def test_01_gapped_segment_collapse():
    t0 = time.perf_counter()
    w = DistortionPL(((0, 0), (Fr(1, 2), Fr(3, 2)), (2, 2)))
    ok = True
    for samples in (0, 1, 3):
        S = gapped_segment(Fr(1, 2), w, samples)
        cf = cf_oracle(S)
        Q, _ = quotient_by_zero(cf)
        ok &= len(Q) == 2 and Q.dist[0][1] == Fr(1, 2)
        for block in solid_partition(flatten(S)).blocks:
            ok &= all(cf.dist[p][q] == 0 for p in block for q in block)
        ok &= cf_index(S, 3) == 1
    dt = time.perf_counter() - t0
    record(1, "gapped segment collapses to two points at distance 1/2", ok and dt < 1, f"{dt:.2f}s")
    assert ok and dt < 1


def test_02_theorem_a_finite():
    t0 = time.perf_counter()
    bad = []
    for i in range(100):
        rng = _seeded(i)
        M = random_metric(rng, rng.randint(4, 8))
        cx = gapped_graph(M, random_distortion(rng, diameter(M)), samples=rng.randint(0, 3))
        Q, _ = quotient_by_zero(cf_oracle(cx))
        if Q.points != M.points or Q.dist != M.dist:
            bad.append(i)
    dt = time.perf_counter() - t0
    record(2, "gapped-graph quotient is label-isometric to M, 100 seeds", not bad and dt < 30, f"{dt:.1f}s" + (f", failures {bad[:5]}" if bad else ""))
    assert not bad and dt < 30


def test_03_bending_coherence():
    t0 = time.perf_counter()
    bad = []
    for i in range(200):
        rng = _seeded(i)
        M = random_metric(rng, rng.randint(2, 10))
        n = len(M)
        ts = []
        for _ in range(rng.randint(0, 4)):
            x, y = rng.sample(range(n), 2)
            ts.append(BendingTriple(x, y, M.dist[x][y] * Fr(rng.randint(0, 4), 4)))
        batch = bend(M, ts).dist
        ok = batch == nx_closure(n, complete_edges(M.dist) + [(t.x, t.y, t.a) for t in ts])
        ok &= all(bend_sequential(M, list(p)).dist == batch for p in itertools.permutations(ts))
        if ts:
            ok &= bend_single_formula(M, ts[0]).dist == bend(M, ts[:1]).dist
        if not ok:
            bad.append(i)
    dt = time.perf_counter() - t0
    record(3, "bend = single formula = every sequential order = shortcut oracle, 200 seeds", not bad and dt < 30, f"{dt:.1f}s")
    assert not bad and dt < 30


def test_04_pair_commutation():
    t0 = time.perf_counter()
    bad = []
    for i in range(200):
        rng = _seeded(i)
        cx = random_depth1_complex(rng)
        sp = flatten(cx).space
        x, y = rng.sample(range(len(sp)), 2)
        a = sp.dist[x][y] * Fr(rng.randint(0, 4), 4)
        if not check_pair_bending_commutation(cx, (x, y, a)).ok:
            bad.append(i)
    dt = time.perf_counter() - t0
    record(4, "cf of a bending = bending of cf with b = min(cf, a), 200 seeds", not bad and dt < 60, f"{dt:.1f}s")
    assert not bad and dt < 60


def test_05_engine_equals_oracle():
    t0 = time.perf_counter()
    bad, depths = [], []
    for i in range(100):
        rng = _seeded(i)
        cx = _quiet([random_depth1_complex, random_depth2_complex, random_theorem_b][i % 3], rng)
        depths.append(cx.depth)
        oracle = cf_oracle_stages(cx, 3)
        state = initial_state(cx)
        for b in range(4):
            if state.materialized.dist != oracle[b].dist:
                bad.append((i, b))
                break
            state = cf_step(state)
    dt = time.perf_counter() - t0
    ok = not bad and dt < 300 and max(depths) == 2
    record(5, "structural engine = stagewise oracle, stages 0-3, 100 seeds", ok, f"{dt:.1f}s, depth-2 instances {depths.count(2)}")
    assert ok, bad[:5]


def test_06_theorem_b_bounds():
    t0 = time.perf_counter()
    d = {("A", "B"): Fr(1, 8), ("C", "D"): Fr(1, 4), ("A", "C"): 1, ("A", "D"): Fr(3, 4), ("B", "C"): Fr(7, 8), ("B", "D"): Fr(5, 8)}
    M = PseudometricSpace.from_points("ABCD", lambda i, j: d.get(("ABCD"[i], "ABCD"[j])) or d[("ABCD"[j], "ABCD"[i])], metric=True)
    w = DistortionPL(((0, 0), (Fr(1, 16), Fr(1, 8)), (1, 1)))
    eps = Fr(1, 4)
    Y = build_theorem_b(M, 2, eps, w, 4, samples=1)
    states, idx = cf_iterate(initial_state(Y), 4)
    checks = {"index": idx == 2, "certified>=3": Y.meta["certified_scale"] >= 3}
    rho = states[2].materialized.dist
    n = len(M)
    checks["stage-2 within [d,(1+eps)d]"] = all(M.dist[p][q] <= rho[p][q] <= (1 + eps) * M.dist[p][q] for p in range(n) for q in range(n))
    scale_ok = True
    for k in range(min(Y.meta["certified_scale"], 3) + 1):
        for p in range(n):
            for q in range(p + 1, n):
                if M.dist[p][q] <= Fr(1, 2**k) * diameter(M):
                    scale_ok &= rho[p][q] <= (1 + eps / 2**k) * M.dist[p][q]
    checks["scale bounds"] = scale_ok
    checks["diam(Y) <= 3 diam(M)"] = diameter(flatten(Y).space) <= 3 * diameter(M)
    anchors_ok = True
    for b in range(3):
        for k, t in enumerate(Y.threads):
            x, y = t.anchors
            want = M.dist[x][y] if b >= t.depth else w(M.dist[x][y])
            anchors_ok &= states[b].anchor_values()[k] == want
    checks["anchor values"] = anchors_ok
    oracle = cf_oracle_stages(Y, 2)
    checks["engine = oracle"] = all(states[b].materialized.dist == oracle[b].dist for b in range(3))
    dt = time.perf_counter() - t0
    ok = all(checks.values()) and dt < 300
    record(6, "depth-2 construction: index, stage bounds, diameter, anchor values", ok, f"{dt:.2f}s, {len(flatten(Y).space)} points" + "".join(f", {k} failed" for k, v in checks.items() if not v))
    assert ok, checks


def test_07_scale_bound():
    t0 = time.perf_counter()
    bad, checked, off_list = [], 0, 0
    eps = Fr(1, 2)
    for i in range(30):
        rng = _seeded(i)
        if i % 2 == 0:
            M = random_clustered_metric(rng, 4, 4)
            diam = diameter(M)
            w = DistortionPL(((0, 0), (diam / 8, diam * Fr(3, 16)), (diam, diam)))
        else:
            M = random_metric(rng, rng.randint(4, 12), max_num=16, max_den=1)
            w = random_distortion(rng, diameter(M))
        for n_stages in range(1, 17):
            adm = build_admissible(M, eps, w, n_stages)
            if adm.certified_scale > adm.max_scale:
                break
        rep = check_scale_bound(M, adm)
        checked += rep.checked
        listed = set(adm.pairs)
        off_list += sum(1 for p in range(len(M)) for q in range(p + 1, len(M)) if (p, q) not in listed)
        if not rep.ok or adm.certified_scale <= adm.max_scale:
            bad.append(i)
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60 and off_list > 0
    record(7, "full bending stays within (1+2^-k eps) d at every certified scale", ok, f"{dt:.1f}s, {checked} pair-scale checks, {off_list} pairs not in the list")
    assert ok, bad


def test_08_geodesic_limit():
    t0 = time.perf_counter()
    rows = refine_geodesic_check([Fr(1, 2), Fr(1, 4), Fr(1, 8)])
    ok = all(r.ratio <= (1 + r.mesh) ** 2 for r in rows)
    ok &= all(b.ratio <= a.ratio for a, b in zip(rows, rows[1:]))
    dt = time.perf_counter() - t0
    table = ", ".join(f"r={r.mesh}: {r.ratio}" for r in rows)
    record(8, "stage-1 distortion on refined paths is nonincreasing and <= (1+r)^2", ok and dt < 120, f"{dt:.1f}s, {table}")
    assert ok and dt < 120


def test_09_lipschitz_quotients():
    t0 = time.perf_counter()
    colip_bad = [i for i in range(300) if colip_constant(f := random_map(_seeded(i), 12)) != colip_by_balls(f)]
    pre_bad, idx_bad, families = [], [], set()
    for i in range(40):
        for name, f in _quiet(lipquot_corpus, _seeded(i)):
            families.add(name)
            if not verify_preimage_inequality(f, 2).ok:
                pre_bad.append((i, name))
            if not verify_index_monotonicity(f, 4).ok:
                idx_bad.append((i, name))
    dt = time.perf_counter() - t0
    ok = not (colip_bad or pre_bad or idx_bad) and dt < 300
    record(9, "co-Lip formula = ball enumeration; preimage inequality and index monotonicity on the corpus", ok, f"{dt:.1f}s, {len(families)} map families")
    assert ok, (colip_bad[:3], pre_bad[:3], idx_bad[:3])


def test_10_recomplexify_idempotence():
    t0 = time.perf_counter()
    bad = []
    for i in range(100):
        rng = _seeded(i)
        cx = _quiet([random_depth1_complex, random_depth2_complex, random_theorem_b][i % 3], rng)
        cf = cf_oracle(cx)
        if cf_oracle(recomplexify(cf)).dist != cf.dist:
            bad.append(i)
    dt = time.perf_counter() - t0
    record(10, "cf of the p1u re-complexification of a cf output is the identity, 100 seeds", not bad and dt < 30, f"{dt:.1f}s")
    assert not bad and dt < 30
