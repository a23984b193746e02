"""JSON, DOT and CSV serialisation.  Output is byte-stable for a fixed input."""

from __future__ import annotations

import csv
import io as _io
import json
from typing import Sequence

from .complex import BendingTriple, FrameChain, GappedEdge, SegmentComplex, Thread, flatten
from .exact import fmt
from .metric import PseudometricSpace, StructuralError, space_from_json, space_to_json


def complex_to_json(cx: SegmentComplex) -> dict:
    threads = []
    for t in cx.threads:
        if isinstance(t.body, GappedEdge):
            entry = {"anchors": list(t.anchors), "body": {"gapped_edge": t.body.to_json()}}
        else:
            entry = {"anchors": list(t.anchors), "body": {"complex": complex_to_json(t.body), "boundary": list(t.boundary)}}
        if t.wedge:
            entry["wedge"] = True
        threads.append(entry)
    out = {
        "frame": space_to_json(cx.frame),
        "threads": threads,
        "collapsed": [[t.x, t.y, fmt(t.a)] for t in cx.collapsed],
    }
    if cx.chains:
        out["chains"] = [{"points": list(c.points), "positions": [fmt(p) for p in c.positions]} for c in cx.chains]
    if not cx.p1u:
        out["p1u"] = False
    return out


def complex_from_json(obj: dict) -> SegmentComplex:
    try:
        frame = space_from_json(obj["frame"])
        threads = []
        for t in obj.get("threads", []):
            body = t["body"]
            wedge = bool(t.get("wedge", False))
            if "gapped_edge" in body:
                threads.append(Thread(tuple(t["anchors"]), GappedEdge.from_json(body["gapped_edge"]), wedge=wedge))
            elif "complex" in body:
                threads.append(
                    Thread(tuple(t["anchors"]), complex_from_json(body["complex"]), tuple(body["boundary"]), wedge)
                )
            else:
                raise StructuralError("thread body needs 'gapped_edge' or 'complex'")
        collapsed = [BendingTriple(int(x), int(y), a) for x, y, a in obj.get("collapsed", [])]
        chains = [FrameChain(c["points"], c["positions"]) for c in obj.get("chains", [])]
    except KeyError as exc:
        raise StructuralError(f"complex JSON missing key {exc}") from None
    return SegmentComplex(frame, tuple(threads), tuple(collapsed), tuple(chains), bool(obj.get("p1u", True)))


def load_object(obj: dict) -> PseudometricSpace | SegmentComplex:
    """A bare space (``points``/``dist``) or a complex (``frame``)."""
    if "frame" in obj:
        return complex_from_json(obj)
    if "points" in obj:
        return space_from_json(obj)
    raise StructuralError("JSON is neither a space nor a complex")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


_STYLE = {"solid": "solid", "gap": "dashed", "p1u": "dotted"}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def complex_to_dot(cx: SegmentComplex) -> str:
    """Flattened points as nodes; solid pieces solid, gaps dashed, p1u links dotted."""
    flat = flatten(cx)
    pts = flat.space.points
    lines = ["graph complex {"]
    for p in pts:
        lines.append(f"  {_quote(p)};")
    for e in flat.edges:
        for kind, a, b in e.pieces:
            w = flat.space.dist[a][b]
            lines.append(f"  {_quote(pts[a])} -- {_quote(pts[b])} [style={_STYLE[kind]}, label={_quote(fmt(w))}];")
    for ch in flat.chains:
        if ch.guard is None:
            continue
        for a, b in zip(ch.points, ch.points[1:]):
            lines.append(f"  {_quote(pts[a])} -- {_quote(pts[b])} [style=solid, color=gray];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def space_to_csv(space: PseudometricSpace) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "q", "value"])
    n = len(space)
    for i in range(n):
        for j in range(i + 1, n):
            w.writerow([space.points[i], space.points[j], fmt(space.dist[i][j])])
    return buf.getvalue()


def stage_trace_csv(stages: Sequence[PseudometricSpace]) -> str:
    """One row per stage and unordered pair: ``stage,p,q,value``."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "p", "q", "value"])
    for b, sp in enumerate(stages):
        n = len(sp)
        for i in range(n):
            for j in range(i + 1, n):
                w.writerow([b, sp.points[i], sp.points[j], fmt(sp.dist[i][j])])
    return buf.getvalue()
