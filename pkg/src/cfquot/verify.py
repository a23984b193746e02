"""Seeded verification suites, one per lemma/theorem family.

Every instance is generated from ``Random(seed * 1_000_003 + i)`` so reports
are reproducible; failing instances are shrunk by deleting points (or
threads) while the failure persists.
"""

from __future__ import annotations

import itertools
import random
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

from .complex import (
    BendingTriple,
    GappedEdge,
    SegmentComplex,
    attach,
    bend,
    bend_sequential,
    bend_single_formula,
    flatten,
)
from .constructions import (
    DegeneratePairWarning,
    build_admissible,
    build_theorem_b,
    check_scale_bound,
    gapped_graph,
    refine_geodesic_check,
)
from .curveflat import cf_index, cf_iterate, cf_oracle, cf_oracle_stages, cf_step, check_pair_bending_commutation, initial_state, recomplexify
from .exact import fmt
from .generators import (
    lipquot_corpus,
    random_depth1_complex,
    random_depth2_complex,
    random_clustered_metric,
    random_distortion,
    random_metric,
    random_theorem_b,
)
from .io import complex_to_json
from .lipquot import FiniteMap, colip_by_balls, colip_constant, verify_index_monotonicity, verify_preimage_inequality
from .metric import DistortionPL, PseudometricSpace, diameter, quotient_by_zero, space_to_json

SUITES = (
    "bending",
    "attachment",
    "pair-commutation",
    "attach-cf-commutation",
    "theorem-a",
    "theorem-b",
    "scale-bound",
    "geodesic-limit",
    "lipquot",
)

DEFAULTS = {
    "bending": {"seeds": 200, "points": 10, "triples": 4},
    "attachment": {"seeds": 100},
    "pair-commutation": {"seeds": 200},
    "attach-cf-commutation": {"seeds": 100, "stages": 3},
    "theorem-a": {"seeds": 100, "points": 8},
    "theorem-b": {"seeds": 10},
    "scale-bound": {"seeds": 30, "points": 16},
    "geodesic-limit": {"seeds": 1},
    "lipquot": {"seeds": 20, "points": 12},
}


class UnknownSuite(KeyError):
    pass


@dataclass(frozen=True)
class CheckResult:
    check: str
    instance: int
    passed: bool
    witness: dict | None = None


@dataclass
class SuiteResult:
    name: str
    params: dict
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict[str, tuple[int, int]]:
        out: dict[str, list[int]] = {}
        for c in self.checks:
            s = out.setdefault(c.check, [0, 0])
            s[0] += c.passed
            s[1] += 1
        return {k: (v[0], v[1]) for k, v in sorted(out.items())}

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "params": {k: self.params[k] for k in sorted(self.params)},
            "passed": self.passed,
            "summary": {k: {"passed": p, "total": t} for k, (p, t) in self.summary().items()},
            "failures": [asdict(c) for c in self.checks if not c.passed],
        }

    def to_csv(self) -> str:
        lines = ["check,passed,total"]
        lines += [f"{k},{p},{t}" for k, (p, t) in self.summary().items()]
        return "\n".join(lines) + "\n"


# -- shrinking --------------------------------------------------------------------------


def shrink_points(space: PseudometricSpace, fails: Callable[[PseudometricSpace], bool]) -> PseudometricSpace:
    """Delete points one at a time while ``fails`` keeps returning True."""
    changed = True
    while changed and len(space) > 1:
        changed = False
        for i in range(len(space)):
            smaller = space.restrict([j for j in range(len(space)) if j != i])
            try:
                still = fails(smaller)
            except Exception:
                still = False
            if still:
                space, changed = smaller, True
                break
    return space


def shrink_threads(cx: SegmentComplex, fails: Callable[[SegmentComplex], bool]) -> SegmentComplex:
    changed = True
    while changed and cx.threads:
        changed = False
        for k in range(len(cx.threads)):
            smaller = SegmentComplex(cx.frame, cx.threads[:k] + cx.threads[k + 1 :], cx.collapsed, cx.chains, cx.p1u)
            try:
                still = fails(smaller)
            except Exception:
                still = False
            if still:
                cx, changed = smaller, True
                break
    return cx


def _space_witness(space: PseudometricSpace, **extra) -> dict:
    return {"space": space_to_json(space), **{k: v for k, v in extra.items()}}


def _complex_witness(cx: SegmentComplex, **extra) -> dict:
    return {"complex": complex_to_json(cx), **extra}


# -- instance runners (module-level so they pickle for worker processes) ------------------


def _naive_closure(mat):
    n = len(mat)
    d = [list(r) for r in mat]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return tuple(tuple(r) for r in d)


def _random_triples(rng, space, count):
    n = len(space)
    out = []
    for _ in range(count):
        x, y = rng.sample(range(n), 2)
        out.append(BendingTriple(x, y, space.dist[x][y] * Fraction(rng.randint(0, 4), 4)))
    return out


def _bending_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rng = random.Random(seed * 1_000_003 + i)
    n = rng.randint(2, params["points"])
    space = random_metric(rng, n)
    triples = _random_triples(rng, space, rng.randint(0, params["triples"]))
    res = []

    def fails_batch(sp):
        ts = [t for t in triples if t.x < len(sp) and t.y < len(sp)]
        ts = [BendingTriple(t.x, t.y, min(t.a, sp.dist[t.x][t.y])) for t in ts]
        batch = bend(sp, ts)
        if any(bend_sequential(sp, [ts[k] for k in perm]).dist != batch.dist for perm in itertools.permutations(range(len(ts)))):
            return True
        rows = [list(r) for r in sp.dist]
        for t in ts:
            rows[t.x][t.y] = rows[t.y][t.x] = min(rows[t.x][t.y], t.a)
        return _naive_closure(rows) != batch.dist

    ok = not fails_batch(space)
    res.append(CheckResult("batch=sequential=oracle", i, ok, None if ok else _space_witness(shrink_points(space, fails_batch))))
    if triples:
        t = triples[0]
        ok = bend_single_formula(space, t).dist == bend(space, [t]).dist
        res.append(CheckResult("single-formula", i, ok, None if ok else _space_witness(space, triple=[t.x, t.y, fmt(t.a)])))
    b = bend(space, triples)
    again = [BendingTriple(t.x, t.y, min(t.a, b.dist[t.x][t.y])) for t in triples]
    res.append(CheckResult("idempotent", i, bend(b, again).dist == b.dist))
    res.append(CheckResult("empty-is-identity", i, bend(space, []).dist == space.dist))
    return res


def _attachment_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rng = random.Random(seed * 1_000_003 + i)
    cx = random_depth1_complex(rng)
    cx = SegmentComplex(cx.frame, cx.threads)  # bending is a separate suite
    flat = flatten(cx)
    d = flat.space.dist
    m = len(cx.frame)
    ok_frame = all(d[a][b] == cx.frame.dist[a][b] for a in range(m) for b in range(m))
    ok_body = True
    for t, pts in zip(cx.threads, flat.threads):
        body = t.body.space()
        order = [t.anchors[0]] + ([] if t.wedge else [t.anchors[1]])
        # body order in flat.threads: anchors first then interior in layout order
        idx = [0] + ([] if t.wedge else [len(body) - 1]) + [j for j in range(1, len(body) - (0 if t.wedge else 1))]
        glob = list(dict.fromkeys(order)) + [p for p in pts if p >= m]
        ok_body &= all(body.dist[idx[a]][idx[b]] == d[glob[a]][glob[b]] for a in range(len(idx)) for b in range(len(idx)))
    # independent oracle: explicit weighted graph with anchors identified, then closure
    n = len(d)
    big = sum(sum(r) for r in d) + 1
    rows = [[big] * n for _ in range(n)]
    for a in range(m):
        for b in range(m):
            rows[a][b] = cx.frame.dist[a][b]
    for t, pts in zip(cx.threads, flat.threads):
        body = t.body.space()
        lay_idx = [0] + ([] if t.wedge else [len(body) - 1]) + [j for j in range(1, len(body) - (0 if t.wedge else 1))]
        glob = list(dict.fromkeys([t.anchors[0]] + ([] if t.wedge else [t.anchors[1]]))) + [p for p in pts if p >= m]
        for a in range(len(glob)):
            for b in range(len(glob)):
                rows[glob[a]][glob[b]] = min(rows[glob[a]][glob[b]], body.dist[lay_idx[a]][lay_idx[b]])
    ok_oracle = _naive_closure(rows) == d
    w = None if ok_frame and ok_body and ok_oracle else _complex_witness(cx)
    return [
        CheckResult("restrict-frame", i, ok_frame, w if not ok_frame else None),
        CheckResult("restrict-body", i, ok_body, w if not ok_body else None),
        CheckResult("shortest-path-oracle", i, ok_oracle, w if not ok_oracle else None),
    ]


def _pair_commutation_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rng = random.Random(seed * 1_000_003 + i)
    cx = random_depth1_complex(rng)
    flat = flatten(cx)
    n = len(flat.space)
    if n < 2:
        return [CheckResult("commutation", i, True)]
    x, y = rng.sample(range(n), 2)
    a = flat.space.dist[x][y] * Fraction(rng.randint(0, 4), 4)
    rep = check_pair_bending_commutation(cx, (x, y, a))
    return [CheckResult("commutation", i, rep.ok, None if rep.ok else _complex_witness(cx, triple=[x, y, fmt(a)]))]


def _attach_cf_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rng = random.Random(seed * 1_000_003 + i)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePairWarning)
        cx = [random_depth1_complex, random_depth2_complex, random_theorem_b][i % 3](rng)

    def fails(c):
        st = initial_state(c)
        orc = cf_oracle_stages(c, params["stages"])
        for b in range(params["stages"] + 1):
            if st.materialized.dist != orc[b].dist:
                return True
            st = cf_step(st)
        return False

    bad = fails(cx)
    return [CheckResult("engine=oracle", i, not bad, _complex_witness(shrink_threads(cx, fails)) if bad else None)]


def _theorem_a_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rng = random.Random(seed * 1_000_003 + i)
    M = random_metric(rng, rng.randint(4, params["points"]))

    def fails(sp):
        w = random_distortion(random.Random(i), diameter(sp))
        Q, part = quotient_by_zero(cf_oracle(gapped_graph(sp, w, samples=1)))
        return len(Q) != len(sp) or Q.dist != sp.dist

    bad = fails(M)
    return [CheckResult("quotient=M", i, not bad, _space_witness(shrink_points(M, fails)) if bad else None)]


def theorem_b_checks(Y: SegmentComplex, i: int = 0) -> list[CheckResult]:
    """Index, stage-alpha bounds, diameter and anchor-value checks for a built Y."""
    M, alpha, eps = Y.meta["base"], Y.meta["alpha"], Y.meta["eps"]
    adm = Y.meta["admissible"]
    states, idx = cf_iterate(initial_state(Y), alpha + 2)
    strict = not Y.meta["warnings"]
    ok = idx == alpha if strict else idx is not None and idx <= alpha
    res = [CheckResult("index", i, ok, None if ok else {"index": idx, "complex": complex_to_json(Y)})]
    st = states[min(alpha, len(states) - 1)]
    D = st.bent_frame.dist
    n = len(M)
    top = min(adm.certified_scale, adm.max_scale)
    bad = []
    for p in range(n):
        for q in range(p + 1, n):
            d = M.dist[p][q]
            if not d <= D[p][q] <= (1 + eps) * d:
                bad.append((p, q, 0))
            for k in range(top + 1):
                if d <= adm.diam / 2**k and not D[p][q] <= (1 + eps / 2**k) * d:
                    bad.append((p, q, k))
    res.append(CheckResult("stage-alpha-bounds", i, not bad, {"failures": bad} if bad else None))
    res.append(CheckResult("diam<=3diam", i, diameter(flatten(Y).space) <= 3 * adm.diam))
    wrong = []
    for k, t in enumerate(Y.threads):
        x, y = t.anchors
        for b in range(alpha + 1):
            s = states[min(b, len(states) - 1)]
            want = M.dist[x][y] if b >= t.depth else Y.frame.dist[x][y]
            if s.anchor_values()[k] != want:
                wrong.append((k, b, fmt(s.anchor_values()[k]), fmt(want)))
    res.append(CheckResult("anchor-values", i, not wrong, {"wrong": wrong} if wrong else None))
    return res


def _theorem_b_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rng = random.Random(seed * 1_000_003 + i)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePairWarning)
        Y = random_theorem_b(rng, params.get("alpha", 2))
    return theorem_b_checks(Y, i)


def _scale_bound_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    """Smallest stage count certifying every scale, then the exhaustive bound check."""
    rng = random.Random(seed * 1_000_003 + i)
    if i % 2 == 0:
        M = random_clustered_metric(rng, 4, params["points"] // 4)
        diam = diameter(M)
        w = DistortionPL(((0, 0), (diam / 8, diam * Fraction(3, 16)), (diam, diam)))
    else:
        M = random_metric(rng, rng.randint(4, params["points"]), max_num=16, max_den=1)
        w = random_distortion(rng, diameter(M))
    eps = Fraction(1, 2)
    for n_stages in range(1, params.get("max_stages", 16) + 1):
        adm = build_admissible(M, eps, w, n_stages)
        if adm.certified_scale > adm.max_scale:
            break
    rep = check_scale_bound(M, adm)
    covered = adm.certified_scale > adm.max_scale
    return [
        CheckResult("d<=rho_B<=(1+2^-k eps)d", i, rep.ok, None if rep.ok else _space_witness(M, failures=[list(f) for f in rep.failures])),
        CheckResult("all-scales-certified", i, covered, None if covered else _space_witness(M, certified=adm.certified_scale)),
    ]


def _geodesic_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rows = refine_geodesic_check([Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)])
    ok_bound = all(r.ok for r in rows)
    ok_mono = all(b.ratio <= a.ratio for a, b in zip(rows, rows[1:]))
    table = [{"mesh": fmt(r.mesh), "ratio": fmt(r.ratio), "bound": fmt(r.bound)} for r in rows]
    return [
        CheckResult("ratio<=(1+r)^2", i, ok_bound, None if ok_bound else {"table": table}),
        CheckResult("nonincreasing", i, ok_mono, None if ok_mono else {"table": table}),
    ]


def random_map(rng: random.Random, n_max: int = 12) -> FiniteMap:
    """Random surjection between random pseudometric spaces (zero pairs allowed)."""
    n = rng.randint(2, n_max)
    m = rng.randint(1, n)
    src = random_metric(rng, n)
    if rng.random() < 0.3 and n > 2:
        src = bend(src, [(0, 1, 0)])
    assign = list(range(m)) + [rng.randrange(m) for _ in range(n - m)]
    rng.shuffle(assign)
    tgt = random_metric(rng, m) if m > 1 else PseudometricSpace(("q0",), ((0,),))
    return FiniteMap(src, tgt, assign)


def _lipquot_instance(seed: int, i: int, params: dict) -> list[CheckResult]:
    rng = random.Random(seed * 1_000_003 + i)
    res = []
    f = random_map(rng, params["points"])
    a, b = colip_constant(f), colip_by_balls(f)
    res.append(CheckResult("colip-formula=balls", i, a == b, None if a == b else _space_witness(f.source, target=space_to_json(f.target), assignment=list(f.assignment))))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePairWarning)
        corpus = lipquot_corpus(rng)
    for name, g in corpus:
        rep = verify_preimage_inequality(g, 2)
        res.append(CheckResult(f"preimage[{name}]", i, rep.ok, None if rep.ok else {"violations": [asdict(v) | {"margin": fmt(v.margin)} for v in rep.violations[:5]]}))
        ir = verify_index_monotonicity(g, 4)
        res.append(CheckResult(f"index-monotone[{name}]", i, ir.ok, None if ir.ok else asdict(ir)))
        if ir.source_index == 0:
            res.append(CheckResult("p1u-preserved", i, ir.target_index == 0))
    return res


_RUNNERS = {
    "bending": _bending_instance,
    "attachment": _attachment_instance,
    "pair-commutation": _pair_commutation_instance,
    "attach-cf-commutation": _attach_cf_instance,
    "theorem-a": _theorem_a_instance,
    "theorem-b": _theorem_b_instance,
    "scale-bound": _scale_bound_instance,
    "geodesic-limit": _geodesic_instance,
    "lipquot": _lipquot_instance,
}


def _run_one(args):
    name, seed, i, params = args
    return _RUNNERS[name](seed, i, params)


def run_suite(name: str, params: dict | None = None) -> SuiteResult:
    """Run a named suite.  ``params`` may set ``seeds``, ``seed``, ``jobs`` and suite knobs."""
    if name not in _RUNNERS:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    p = dict(DEFAULTS[name])
    p.update(params or {})
    p.setdefault("seed", 0)
    jobs = int(p.pop("jobs", 1) or 1)
    tasks = [(name, p["seed"], i, p) for i in range(p["seeds"])]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            batches = list(ex.map(_run_one, tasks))
    else:
        batches = [_run_one(t) for t in tasks]
    checks = sorted((c for b in batches for c in b), key=lambda c: (c.instance, c.check))
    return SuiteResult(name, p, checks)
