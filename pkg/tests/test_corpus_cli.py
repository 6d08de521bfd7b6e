import dataclasses
import json
import xml.etree.ElementTree as ET

import pytest

from planarfield import corpus
from planarfield.cli import main


def test_corpus_all_pass():
    results = corpus.run_corpus()
    assert [r.name for r in results] == [e.name for e in corpus.ENTRIES]
    assert all(r.passed for r in results), [r.to_dict() for r in results if not r.passed]


def test_corpus_negative_control():
    bad = dataclasses.replace(corpus.get("F"), name="F_bad", det="3*(x+1)^4+1e-6")
    (r,) = corpus.run_corpus(entries=(bad,))
    assert not r.passed and r.checks["oracle"] is False
    assert r.checks["verdict"]


def test_corpus_oracle_that_does_not_parse():
    bad = dataclasses.replace(corpus.get("radial"), trace="-2+")
    (r,) = corpus.run_corpus(entries=(bad,))
    assert r.checks["oracle"] is False and "ParseError" in r.info["oracle_error"]


def test_corpus_filter(capsys):
    assert main(["corpus", "--filter", "F"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1 and out[0].startswith("F ") and out[0].endswith("PASS")
    assert main(["corpus", "--filter", "nope"]) == 1


def test_oracle_entries_parse_and_evaluate():
    for e in corpus.ENTRIES:
        o = e.oracle()
        o.eval((0.3, 0.7))


def _json(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr()


def test_cli_analyze_F(capsys):
    code, out = _json(capsys, ["analyze", "--field", "F"])
    assert code == 0
    rep = json.loads(out.out)
    assert rep["conclusion"] == "GloballyAsymptoticallyStable"
    assert rep["verdicts"]["theorem_A"]["conclusion"] == "GloballyAsymptoticallyStable"
    assert rep["indices"][0]["index"] == 1
    assert "wall_time" not in rep
    assert set(rep) >= {"field", "parameters", "spectral", "singularities", "verdicts", "version", "tool"}


def test_cli_analyze_center_and_expanding(capsys):
    _, out = _json(capsys, ["analyze", "--field", "X_table2"])
    assert json.loads(out.out)["conclusion"] == "GlobalCenter"
    _, out = _json(capsys, ["analyze", "--fx", "x", "--fy", "y"])
    rep = json.loads(out.out)
    assert rep["conclusion"] == "Inconclusive"
    assert rep["spectral"]["counts"]["Expanding"] == 200 * 200


def test_cli_byte_stable(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["analyze", "--field", "Z_table2", "--seed", "7", "--out", str(a)]) == 0
    assert main(["analyze", "--field", "Z_table2", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_timing_flag(capsys):
    _, out = _json(capsys, ["analyze", "--field", "radial", "--grid", "20", "--timing"])
    assert json.loads(out.out)["wall_time"] > 0


def test_cli_exit_codes(capsys):
    assert main(["analyze", "--fx", "x+", "--fy", "y"]) == 2
    assert main(["analyze", "--fx", "q", "--fy", "y"]) == 2
    assert main(["index", "--field", "H", "--center", "1,0.5", "--radius", "1"]) == 3
    assert main(["index", "--field", "radial", "--center", "1,0", "--radius", "1"]) == 4
    assert "ZeroOnCircle" in capsys.readouterr().err
    assert main(["green", "--field", "F", "--p1", "1,1", "--flow-time", "0", "--transversal-time", "0.1"]) == 4


def test_cli_index(capsys):
    _, out = _json(capsys, ["index", "--field", "F", "--center", "0,0", "--radius", "0.5"])
    assert json.loads(out.out)["index"] == 1


def test_cli_green(capsys):
    argv = ["green", "--field", "radial", "--p1", "1,0", "--flow-time", "0.6931471805599453",
            "--transversal-time", "-1.5707963267948966"]
    _, out = _json(capsys, argv)
    assert json.loads(out.out)["residual"] <= 1e-6


def test_cli_singularities(capsys):
    _, out = _json(capsys, ["singularities", "--field", "Y_line", "--region=-2,2,-2,2"])
    assert json.loads(out.out)["singularities"]["trichotomy_class"] == "NonDiscreteSuspected"


@pytest.mark.parametrize("name", ["X_table2", "Z_table2", "radial"])
def test_cli_portrait_svg(tmp_path, name):
    out = tmp_path / f"{name}.svg"
    assert main(["portrait", "--field", name, "--seeds", "6", "--region=-1.5,1.5,-1.5,1.5",
                 "--out", str(out)]) == 0
    root = ET.parse(out).getroot()
    assert root.tag.endswith("svg") and root.get("viewBox") == "0 0 600 600"
    paths = root.findall(".//{http://www.w3.org/2000/svg}path")
    circles = root.findall(".//{http://www.w3.org/2000/svg}circle")
    assert len(paths) > 10 and circles
