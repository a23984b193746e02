import json
import random
import subprocess
import sys
from fractions import Fraction as Fr

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfquot.cli import main
from cfquot.constructions import gapped_segment
from cfquot.curveflat import cf_oracle_stages
from cfquot.generators import random_depth2_complex, random_metric
from cfquot.io import complex_from_json, complex_to_dot, complex_to_json, dumps, load_object, space_to_csv, stage_trace_csv
from cfquot.metric import DistortionPL, PseudometricSpace, StructuralError, space_to_json

W_SEG = {"breakpoints": [["0", "0"], ["1/2", "3/2"]]}
ABCD = {
    "points": ["A", "B", "C", "D"],
    "dist": [["0", "1/8", "1", "3/4"], ["1/8", "0", "7/8", "5/8"], ["1", "7/8", "0", "1/4"], ["3/4", "5/8", "1/4", "0"]],
}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


class TestIO:
    def test_canonical_rational(self):
        sp = PseudometricSpace(("a", "b"), (("0", "2/4"), ("2/4", "0")))
        assert '"1/2"' in dumps(space_to_json(sp))

    def test_segment_dot(self):
        dot = complex_to_dot(gapped_segment(Fr(1, 2), DistortionPL.from_json(W_SEG)))
        assert dot.count("style=solid") == 2 and dot.count("style=dashed") == 1
        assert dot.startswith("graph complex {")

    def test_stage_trace_header(self):
        csv = stage_trace_csv(cf_oracle_stages(gapped_segment(Fr(1, 2), DistortionPL.from_json(W_SEG)), 1))
        assert csv.splitlines()[0] == "stage,p,q,value"
        assert "1,x,y,1/2" in csv.splitlines()

    def test_space_csv(self):
        csv = space_to_csv(PseudometricSpace.uniform(2, Fr(3, 2)))
        assert csv == "p,q,value\np0,p1,3/2\n"

    @given(st.integers(0, 2**32 - 1))
    def test_complex_roundtrip(self, seed):
        cx = random_depth2_complex(random.Random(seed))
        obj = complex_to_json(cx)
        back = complex_from_json(json.loads(dumps(obj)))
        assert back == cx and dumps(complex_to_json(back)) == dumps(obj)

    def test_bad_json(self):
        with pytest.raises(StructuralError):
            load_object({"nothing": 1})
        with pytest.raises(StructuralError):
            complex_from_json({"frame": ABCD, "threads": [{"anchors": [0, 1], "body": {}}]})


class TestCLI:
    def test_validate(self, tmp_path, capsys):
        assert main(["validate", write(tmp_path, "m.json", ABCD)]) == 0
        bad = {"points": ["a", "b", "c"], "dist": [["0", "1", "3"], ["1", "0", "1"], ["3", "1", "0"]]}
        assert main(["validate", write(tmp_path, "bad.json", bad)]) == 1
        out = capsys.readouterr().out
        assert '"triangle"' in out

    def test_build_segment_and_cf(self, tmp_path, capsys):
        seg = tmp_path / "seg.json"
        assert main(["--out", str(seg), "build", "segment", "--d", "1/2", "--distortion", json.dumps(W_SEG)]) == 0
        assert main(["cf", str(seg), "--stages", "2"]) == 0
        out = capsys.readouterr()
        assert out.out.startswith("stage,p,q,value") and "cf index: 1" in out.err

    def test_build_theorem_b(self, tmp_path, capsys):
        w = {"breakpoints": [["0", "0"], ["1/16", "1/8"], ["1", "1"]]}
        args = ["build", "theorem-b", write(tmp_path, "m.json", ABCD), "--alpha", "2", "--eps", "1/4", "--stages", "4", "--distortion", json.dumps(w)]
        assert main(args) == 0
        cx = complex_from_json(json.loads(capsys.readouterr().out))
        assert len(cx.threads) == 6

    def test_build_gapped_graph_default_distortion(self, tmp_path, capsys):
        assert main(["build", "gapped-graph", write(tmp_path, "m.json", ABCD), "--pairs", "A,C,D", "--format", "dot"]) == 0
        out = capsys.readouterr().out
        assert out.count("style=dashed") == 2 and out.count("style=dotted") == 1  # A-C is diametral

    def test_bend(self, tmp_path, capsys):
        m = write(tmp_path, "m.json", ABCD)
        assert main(["bend", m, "--triple", "A", "C", "1/2", "--format", "csv"]) == 0
        assert "A,C,1/2" in capsys.readouterr().out
        assert main(["bend", m, "--triple", "A", "C", "2"]) == 2
        assert main(["bend", m, "--triple", "A", "Z", "0"]) == 2

    def test_attach_raw_bodies(self, tmp_path, capsys):
        obj = {
            "frame": {"points": ["x", "y"], "dist": [["0", "2"], ["2", "0"]]},
            "threads": [{"anchors": ["x", "y"], "body": {"points": ["s", "m", "t"], "dist": [["0", "1", "2"], ["1", "0", "1"], ["2", "1", "0"]]}, "boundary": [0, 2]}],
        }
        assert main(["attach", write(tmp_path, "a.json", obj)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out["points"]) == 3 and out["dist"][0][2] == "1"

    def test_lipq(self, tmp_path, capsys):
        src = {"points": ["A", "B", "C"], "dist": [["0", "2", "2"], ["2", "0", "2"], ["2", "2", "0"]]}
        tgt = {"points": ["u", "v"], "dist": [["0", "1"], ["1", "0"]]}
        mapping = {"source": src, "target": tgt, "pairs": [["A", "u"], ["B", "u"], ["C", "v"]]}
        path = write(tmp_path, "map.json", mapping)
        assert main(["lipq", "--map", path]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["lip"] == "1/2" and rep["colip"] == "2" and rep["product"] == "1"
        assert main(["lipq", "--map", path, "--format", "table"]) == 0
        assert "coLip" in capsys.readouterr().out
        assert main(["lipq", "--map", write(tmp_path, "x.json", {"source": src})]) == 2

    def test_verify_and_reports(self, tmp_path, capsys):
        out = tmp_path / "rep.json"
        assert main(["--seed", "7", "--out", str(out), "verify", "theorem-a", "--seeds", "3"]) == 0
        rep = json.loads(out.read_text())
        assert rep["passed"] and rep["params"]["seed"] == 7
        assert (tmp_path / "rep.csv").read_text().startswith("check,passed,total")
        assert main(["verify", "nosuch"]) == 2

    def test_verify_deterministic(self, capsys):
        main(["verify", "bending", "--seeds", "5", "--param", "points=6"])
        a = capsys.readouterr().out
        main(["verify", "bending", "--seeds", "5", "--param", "points=6", "--jobs", "2"])
        b = capsys.readouterr().out
        assert a == b

    def test_export(self, tmp_path, capsys):
        seg = tmp_path / "seg.json"
        main(["--out", str(seg), "build", "segment", "--d", "1/2", "--distortion", json.dumps(W_SEG)])
        assert main(["export", str(seg), "--format", "json"]) == 0
        assert capsys.readouterr().out == seg.read_text()
        assert main(["export", str(seg), "--format", "csv", "--stages", "1"]) == 0
        assert capsys.readouterr().out.startswith("stage,p,q,value")
        assert main(["export", str(tmp_path / "missing.json")]) == 2

    def test_usage_errors(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["nope"])
        assert exc.value.code == 2
        assert main(["build", "segment", "--distortion", json.dumps(W_SEG)]) == 2

    def test_module_entry_point(self, tmp_path):
        p = write(tmp_path, "m.json", ABCD)
        r = subprocess.run([sys.executable, "-m", "cfquot", "validate", p], capture_output=True, text=True)
        assert r.returncode == 0 and '"ok": true' in r.stdout
