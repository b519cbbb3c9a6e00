from __future__ import annotations

import json
import shutil
import subprocess
import sys

import pytest

from ccm import cli

from conftest import CORPUS


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def f(name):
    return str(CORPUS / f"{name}.ccm")


class TestEnumerate:
    def test_sb_sc_complete(self, capsys):
        code, out, _ = run(capsys, "enumerate", f("sb"), "--model", "sc", "--complete-only", "--json")
        rep = json.loads(out)
        assert code == 0 and rep["executions"] == [] and rep["behaviors"] == []

    def test_sb_cc_complete(self, capsys):
        code, out, _ = run(capsys, "enumerate", f("sb"), "--model", "cc", "--complete-only", "--json")
        rep = json.loads(out)
        assert code == 0 and len(rep["executions"]) >= 1
        assert rep["behaviors"] == [{"x": True, "y": True}]

    def test_lowenstein_tso_plain(self, capsys):
        code, out, _ = run(capsys, "enumerate", f("lowenstein"), "--model", "tso-plain", "--complete-only", "--json")
        rep = json.loads(out)
        assert code == 0 and len(rep["executions"]) >= 1
        assert {"b": True, "x": True, "y": True} in rep["behaviors"]

    def test_init_override(self, capsys):
        code, out, _ = run(capsys, "enumerate", f("sb"), "--model", "sc", "--init", "y=true", "--json")
        rep = json.loads(out)
        assert code == 0
        assert all(e["final"]["y"] for e in rep["executions"])

    def test_text_output(self, capsys):
        code, out, _ = run(capsys, "enumerate", f("sb"), "--complete-only")
        assert code == 0
        assert "edges [w1<r1, w2<r2]" in out and "behaviors:" in out

    def test_cap(self, capsys):
        code, _, err = run(capsys, "enumerate", f("sb"), "--max-ops", "2")
        assert code == 3 and "cap" in err

    def test_bad_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.ccm"
        bad.write_text("vars { x: bool = false }\nthread t { a: y := true }\n")
        code, _, err = run(capsys, "enumerate", str(bad))
        assert code == 2 and "2:" in err

    def test_bad_init(self, capsys):
        code, _, _ = run(capsys, "enumerate", f("sb"), "--init", "zz=true")
        assert code == 2

    def test_tso_shape_error(self, capsys):
        code, _, err = run(capsys, "enumerate", f("ghost-weakread"), "--model", "tso-plain")
        assert code == 2


class TestCheck:
    def test_annotation_pass(self, capsys):
        assert run(capsys, "check", f("sb-annotated"), "--annotation")[0] == 0

    def test_annotation_fail(self, capsys):
        code, out, _ = run(capsys, "check", f("sb-strengthened"), "--annotation", "--json")
        rep = json.loads(out)
        assert code == 1 and rep["verdict"] == "fail"
        assert rep["witnesses"] == [
            {"condition": "A4", "ops": ["r1", "F", "w2"], "states": [{"x": True, "y": False}, {"x": True, "y": True}]}
        ]

    def test_ghost_race(self, capsys):
        code, out, _ = run(capsys, "check", f("ghost-race"), "--ghost", "--json")
        rep = json.loads(out)
        assert code == 1
        assert rep["witnesses"][0]["condition"] == "commutation"

    def test_ghost_doneflags(self, capsys):
        assert run(capsys, "check", f("ghost-doneflags"), "--ghost")[0] == 0

    def test_bridge(self, capsys):
        assert run(capsys, "check", f("lowenstein"), "--bridge", "--model", "tso-disciplined")[0] == 0
        assert run(capsys, "check", f("sb"), "--bridge")[0] == 0
        assert run(capsys, "check", f("lowenstein"), "--bridge", "--model", "tso-plain")[0] == 1

    def test_soundness(self, capsys):
        assert run(capsys, "check", f("lowenstein-annotated"), "--soundness")[0] == 0

    @pytest.mark.parametrize("flag", ["--annotation", "--ghost", "--soundness"])
    def test_missing_section(self, capsys, flag):
        assert run(capsys, "check", f("sb"), flag)[0] == 64

    def test_bridge_needs_tso_model(self, capsys):
        assert run(capsys, "check", f("sb"), "--bridge", "--model", "cc")[0] == 64

    def test_needs_one_check(self, capsys):
        assert run(capsys, "check", f("sb"))[0] == 64


class TestJson:
    def test_stable_keys(self, capsys):
        _, out, _ = run(capsys, "enumerate", f("sb"), "--json")
        rep = json.loads(out)
        for key in ("command", "input", "verdict", "witnesses", "behaviors", "stats", "wall_time"):
            assert key in rep
        assert rep["input"].startswith("sha256:")

    @pytest.mark.parametrize(
        "argv",
        [
            ["enumerate", "sb", "--model", "cc", "--json"],
            ["enumerate", "fig2", "--model", "tso-disciplined", "--json"],
            ["check", "ghost-race", "--ghost", "--json"],
        ],
    )
    def test_deterministic_modulo_wall_time(self, capsys, argv):
        argv = [argv[0], f(argv[1]), *argv[2:]]
        outs = []
        for _ in range(2):
            _, out, _ = run(capsys, *argv)
            rep = json.loads(out)
            rep.pop("wall_time")
            outs.append(json.dumps(rep, sort_keys=True))
        assert outs[0] == outs[1]


class TestCorpus:
    def test_json_rows(self, capsys):
        code, out, _ = run(capsys, "corpus", "--json")
        rows = [json.loads(line) for line in out.splitlines()]
        assert code == 0
        assert [r["criterion"] for r in rows] == list(range(1, 12))
        assert all(r["verdict"] == "pass" for r in rows)

    def test_corrupted_file(self, capsys, tmp_path):
        for p in CORPUS.glob("*.ccm"):
            shutil.copy(p, tmp_path / p.name)
        (tmp_path / "sb.ccm").write_text("vars { x: bool = \n")
        code, out, _ = run(capsys, "corpus", "--corpus-dir", str(tmp_path))
        assert code == 1
        assert "FAIL" in out and "ParseError" in out


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "ccm.cli", "enumerate", f("sb"), "--model", "sc", "--complete-only"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    assert out.stdout.startswith("0 execution(s)")
