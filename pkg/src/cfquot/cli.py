"""``cfquot`` command line.

Exit codes: 0 when every checked property holds, 1 on a property failure,
2 on usage, input or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from .complex import AttachError, BendingError, BendingTriple, SegmentComplex, attach, bend, flatten
from .constructions import (
    DegeneratePairWarning,
    InsufficientStages,
    build_theorem_b,
    gapped_graph,
    gapped_segment,
)
from .curveflat import cf_index, cf_oracle_stages, recomplexify
from .exact import fmt, to_fraction
from .io import complex_from_json, complex_to_dot, complex_to_json, dumps, load_object, space_to_csv, stage_trace_csv
from .lipquot import FiniteMap, verify_index_monotonicity, verify_preimage_inequality
from .metric import (
    DistortionError,
    DistortionPL,
    DomainError,
    PseudometricSpace,
    StructuralError,
    diameter,
    space_from_json,
    space_to_json,
    validate,
)
from .verify import SUITES, UnknownSuite, run_suite

PASS, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------------


def _read_json(src: str):
    """A path, ``-`` for stdin, or an inline JSON literal."""
    if src == "-":
        return json.load(sys.stdin)
    s = src.lstrip()
    if s.startswith("{") or s.startswith("["):
        return json.loads(src)
    with open(src, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _point(space: PseudometricSpace, token) -> int:
    if isinstance(token, int):
        idx = token
    elif isinstance(token, str) and token in space.points:
        return space.points.index(token)
    else:
        try:
            idx = int(token)
        except (TypeError, ValueError):
            raise StructuralError(f"unknown point {token!r}") from None
    if not 0 <= idx < len(space):
        raise StructuralError(f"point index {idx} out of range")
    return idx


def _as_space(obj) -> PseudometricSpace:
    return obj if isinstance(obj, PseudometricSpace) else flatten(obj).space


def _distortion(src: str | None, diam: Fraction | None = None) -> DistortionPL:
    if src is None:
        if diam is None:
            raise UsageError("--distortion is required here")
        return DistortionPL.steep(diam, 4)
    return DistortionPL.from_json(_read_json(src))


def _render_object(args, obj) -> str:
    fmt_ = args.format or "json"
    if fmt_ == "json":
        return dumps(complex_to_json(obj) if isinstance(obj, SegmentComplex) else space_to_json(obj))
    if fmt_ == "dot":
        cx = obj if isinstance(obj, SegmentComplex) else recomplexify(obj)
        return complex_to_dot(cx)
    if fmt_ == "csv":
        return space_to_csv(_as_space(obj))
    raise UsageError(f"format {fmt_!r} not supported here")


# -- subcommands ----------------------------------------------------------------------


def cmd_validate(args) -> int:
    obj = load_object(_read_json(args.input))
    report: dict = {}
    if isinstance(obj, SegmentComplex):
        frame = validate(obj.frame)
        space = validate(flatten(obj).space)
        report["frame"] = [v.__dict__ for v in frame.violations]
        report["flattened"] = [v.__dict__ for v in space.violations]
        ok = frame.ok and space.ok
    else:
        rep = validate(obj)
        report["violations"] = [v.__dict__ for v in rep.violations]
        ok = rep.ok
    report["ok"] = ok
    _emit(args, dumps(report))
    return PASS if ok else FAIL


def cmd_build(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegeneratePairWarning)
        if args.kind == "segment":
            if args.d is None:
                raise UsageError("build segment needs --d")
            cx = gapped_segment(to_fraction(args.d), _distortion(args.distortion), args.samples)
        else:
            if args.input is None:
                raise UsageError(f"build {args.kind} needs an input metric")
            M = space_from_json(_read_json(args.input))
            w = _distortion(args.distortion, diameter(M))
            if args.kind == "gapped-graph":
                D = None if args.pairs is None else [_point(M, t) for t in args.pairs.split(",")]
                cx = gapped_graph(M, w, D, args.samples)
            else:
                cx = build_theorem_b(M, args.alpha, to_fraction(args.eps), w, args.stages, samples=args.samples)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(args, _render_object(args, cx))
    return PASS


def cmd_cf(args) -> int:
    obj = load_object(_read_json(args.input))
    cx = obj if isinstance(obj, SegmentComplex) else recomplexify(obj)
    stages = cf_oracle_stages(cx, args.stages)
    idx = cf_index(cx, args.stages)
    if (args.format or "csv") == "csv":
        _emit(args, stage_trace_csv(stages))
    elif args.format == "json":
        _emit(args, dumps({"index": idx, "stages": [space_to_json(s) for s in stages]}))
    else:
        raise UsageError(f"format {args.format!r} not supported by cf")
    print(f"cf index: {idx if idx is not None else f'> {args.stages}'}", file=sys.stderr)
    return PASS


def cmd_bend(args) -> int:
    space = _as_space(load_object(_read_json(args.input)))
    raw = [tuple(t) for t in args.triple or []]
    if args.triples:
        raw += [tuple(t) for t in _read_json(args.triples)]
    triples = []
    for t in raw:
        if len(t) != 3:
            raise UsageError("a bending triple is x y a")
        triples.append(BendingTriple(_point(space, t[0]), _point(space, t[1]), to_fraction(t[2])))
    _emit(args, _render_object(args, bend(space, triples)))
    return PASS


def cmd_attach(args) -> int:
    obj = _read_json(args.input)
    if "frame" not in obj:
        raise StructuralError("attach input needs a 'frame'")
    bodies = [t.get("body", {}) for t in obj.get("threads", [])]
    if bodies and all("points" in b for b in bodies):
        frame = space_from_json(obj["frame"])
        threads = []
        for t in obj["threads"]:
            body = space_from_json(t["body"])
            threads.append(([_point(frame, a) for a in t["anchors"]], body, t.get("boundary")))
        space = attach(frame, threads)
    else:
        space = flatten(complex_from_json(obj)).space
    _emit(args, _render_object(args, space))
    return PASS


def _load_side(obj) -> tuple[PseudometricSpace, SegmentComplex]:
    loaded = load_object(obj)
    cx = loaded if isinstance(loaded, SegmentComplex) else recomplexify(loaded)
    return flatten(cx).space, cx


def cmd_lipq(args) -> int:
    doc = _read_json(args.map)
    try:
        src, src_cx = _load_side(doc["source"])
        tgt, tgt_cx = _load_side(doc["target"])
        pairs = doc["pairs"]
    except KeyError as exc:
        raise StructuralError(f"map JSON missing key {exc}") from None
    f = FiniteMap.from_labels(src, tgt, [tuple(p) for p in pairs])
    f = FiniteMap(f.source, f.target, f.assignment, src_cx, tgt_cx)
    stages = int(doc.get("stages", args.stages))
    rep = verify_preimage_inequality(f, stages)
    idx = verify_index_monotonicity(f, stages)
    ok = rep.ok and (idx.ok or not idx.conclusive)
    out = {
        "lip": fmt(rep.lip),
        "colip": fmt(rep.colip),
        "product": fmt(rep.product),
        "stages": stages,
        "preimage_ok": rep.ok,
        "violations": [
            {"x": src.points[w.x], "y": tgt.points[w.y], "stage": w.stage, "p": src.points[w.p], "margin": fmt(w.margin)}
            for w in rep.violations
        ],
        "source_index": idx.source_index,
        "target_index": idx.target_index,
        "index_ok": idx.ok,
        "ok": ok,
    }
    if args.format == "table":
        rows = [("Lip", out["lip"]), ("coLip", out["colip"]), ("Lip*coLip", out["product"]),
                ("preimage inequality", "holds" if rep.ok else f"{len(rep.violations)} violations"),
                ("cf index source", str(idx.source_index)), ("cf index target", str(idx.target_index))]
        width = max(len(k) for k, _ in rows)
        _emit(args, "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows))
    else:
        _emit(args, dumps(out))
    return PASS if ok else FAIL


def cmd_verify(args) -> int:
    params: dict = {"seed": args.seed, "jobs": args.jobs}
    if args.seeds is not None:
        params["seeds"] = args.seeds
    for kv in args.param or []:
        k, _, v = kv.partition("=")
        if not _:
            raise UsageError(f"--param expects key=value, got {kv!r}")
        params[k] = int(v) if v.lstrip("-").isdigit() else v
    res = run_suite(args.suite, params)
    if args.format == "csv":
        _emit(args, res.to_csv())
    else:
        _emit(args, dumps(res.to_json()))
        if args.out:
            Path(args.out).with_suffix(".csv").write_text(res.to_csv(), encoding="utf-8")
    for check, (p, t) in res.summary().items():
        print(f"{'PASS' if p == t else 'FAIL'} {check}: {p}/{t}", file=sys.stderr)
    return PASS if res.passed else FAIL


def cmd_export(args) -> int:
    obj = load_object(_read_json(args.input))
    if args.format == "csv" and isinstance(obj, SegmentComplex) and args.stages is not None:
        _emit(args, stage_trace_csv(cf_oracle_stages(obj, args.stages)))
    else:
        _emit(args, _render_object(args, obj))
    return PASS


# -- parser ------------------------------------------------------------------------------


def _globals(p: argparse.ArgumentParser, top: bool) -> None:
    d = None if top else argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=0 if top else argparse.SUPPRESS, help="base random seed")
    p.add_argument("--out", default=d, help="output file (default: stdout)")
    p.add_argument("--format", default=d, choices=["json", "dot", "csv", "table"], help="output format")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cfquot", description="Exact curve-flat quotients of finite segment complexes.")
    _globals(ap, True)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _globals(p, False)
        p.set_defaults(func=fn)
        return p

    p = add("validate", cmd_validate, "check the pseudometric axioms of a space or complex")
    p.add_argument("input")

    p = add("build", cmd_build, "build a gapped segment, gapped graph or depth-alpha complex")
    p.add_argument("kind", choices=["segment", "gapped-graph", "theorem-b"])
    p.add_argument("input", nargs="?", help="metric JSON (graph builders)")
    p.add_argument("--d", help="segment gap length")
    p.add_argument("--distortion", help="DistortionPL JSON (path or inline)")
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--pairs", help="comma separated points spanned by gapped edges")
    p.add_argument("--eps", default="1/4")
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--stages", type=int, default=3)

    p = add("cf", cmd_cf, "iterated curve-flat quotients as a stage trace")
    p.add_argument("input")
    p.add_argument("--stages", type=int, default=3)

    p = add("bend", cmd_bend, "bend a space by triples x y a")
    p.add_argument("input")
    p.add_argument("--triple", nargs=3, action="append", metavar=("X", "Y", "A"))
    p.add_argument("--triples", help="JSON list of [x, y, a]")

    p = add("attach", cmd_attach, "attach thread bodies to a frame")
    p.add_argument("input")

    p = add("lipq", cmd_lipq, "Lipschitz quotient report for a finite map")
    p.add_argument("--map", required=True, help="JSON with source, target and label pairs")
    p.add_argument("--stages", type=int, default=2)

    p = add("verify", cmd_verify, "run a verification suite")
    p.add_argument("suite", help=", ".join(SUITES))
    p.add_argument("--seeds", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--param", action="append", help="suite knob key=value")

    p = add("export", cmd_export, "re-serialise a space or complex as JSON, DOT or CSV")
    p.add_argument("input")
    p.add_argument("--stages", type=int, help="with csv on a complex: emit the cf stage trace")
    return ap


_USAGE_ERRORS = (
    UsageError,
    UnknownSuite,
    StructuralError,
    DomainError,
    DistortionError,
    BendingError,
    AttachError,
    InsufficientStages,
    OSError,
    json.JSONDecodeError,
    ValueError,
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, UnknownSuite) and exc.args else exc
        print(f"cfquot: error: {msg}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
