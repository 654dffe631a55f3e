"""
Tests for the effex and effex-corpus command lines.
"""

import io
import json
import shutil

import pandas as pd
import pytest

from effex.cli import run_corpus, run_effex


def _effex(capsys, *argv):
    code = run_effex.main(list(argv))
    return code, capsys.readouterr()


@pytest.mark.integration
class TestEffexCommands:
    def test_check_ok(self, capsys, programs_dir):
        code, out = _effex(capsys, "check", str(programs_dir / "state.eff"))
        assert code == 0
        assert "main : F bit" in out.out

    def test_check_reports_type_errors(self, capsys, programs_dir):
        code, out = _effex(capsys, "check", str(programs_dir / "reader_counterexample.eff"), "--json")
        assert code == 1
        data = json.loads(out.out)
        assert data["ok"] is False

    def test_run_prints_the_result(self, capsys, programs_dir):
        code, out = _effex(capsys, "run", str(programs_dir / "state.mam"))
        assert code == 0
        assert out.out.strip().endswith("<tru, fls>")

    def test_run_json(self, capsys, programs_dir):
        code, out = _effex(capsys, "run", str(programs_dir / "not.mam"), "--json")
        assert code == 0
        assert json.loads(out.out)["status"] == {"kind": "normal-form", "value": "fls"}

    def test_run_out_of_fuel_is_not_a_failure(self, capsys, programs_dir):
        code, out = _effex(capsys, "run", str(programs_dir / "loop.eff"), "--fuel", "100")
        assert code == 0
        assert "out of fuel after 100 step(s)" in out.out

    def test_run_from_stdin(self, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO("main = return tru"))
        code, out = _effex(capsys, "run", "-", "--calculus", "mam")
        assert code == 0
        assert out.out.strip() == "tru"

    def test_translate_to_file(self, capsys, programs_dir, tmp_path):
        target = tmp_path / "state_from_del.mon"
        code, _ = _effex(capsys, "translate", str(programs_dir / "state.del"), "--to", "mon",
                         "-o", str(target))
        assert code == 0
        assert "reify" in target.read_text(encoding="utf-8")

    def test_simulate_exact(self, capsys, programs_dir):
        code, out = _effex(capsys, "simulate", str(programs_dir / "state.mon"), "--to", "eff",
                           "--json")
        assert code == 0
        data = json.loads(out.out)
        assert data["ok"] is True
        assert data["mode"] == "exact"

    def test_denote_type(self, capsys, programs_dir):
        code, out = _effex(capsys, "denote", str(programs_dir / "state.mon"), "--type",
                           "U [State] F bit", "--json")
        assert code == 0
        assert json.loads(out.out)["cardinality"] == "16"

    def test_laws_flag_the_broken_monad(self, capsys, programs_dir):
        code, out = _effex(capsys, "laws", str(programs_dir / "broken.mon"), "--sizes", "0,1",
                           "--cases", "60")
        assert code == 1
        assert "improper" in out.out

    def test_pigeonhole(self, capsys):
        code, out = _effex(capsys, "pigeonhole", "--k", "2", "--target", "U F bit", "--json")
        assert code == 0
        assert json.loads(out.out)["ok"] is True

    def test_pigeonhole_without_enough_programs(self, capsys):
        code, out = _effex(capsys, "pigeonhole", "--k", "0", "--target", "U F bit", "--json")
        assert code == 1
        data = json.loads(out.out)
        assert data["exceeds"] is False
        assert data["pairs"] == []


@pytest.mark.unit
class TestEffexUsage:
    def test_stdin_needs_a_calculus(self, capsys):
        code, out = _effex(capsys, "run", "-")
        assert code == 2
        assert "--calculus" in out.err

    def test_missing_file(self, capsys, tmp_path):
        code, _ = _effex(capsys, "run", str(tmp_path / "nowhere.eff"))
        assert code == 2

    def test_unknown_extension(self, capsys, tmp_path):
        path = tmp_path / "prog.txt"
        path.write_text("main = return ()", encoding="utf-8")
        code, _ = _effex(capsys, "run", str(path))
        assert code == 2

    def test_syntax_error_is_reported(self, capsys, tmp_path):
        path = tmp_path / "bad.mam"
        path.write_text("main =\n  return )", encoding="utf-8")
        code, out = _effex(capsys, "check", str(path), "--json")
        assert code == 1
        error = json.loads(out.out)["error"]
        assert (error["line"], error["col"]) == (2, 10)

    def test_undecodable_source(self, capsys, tmp_path):
        path = tmp_path / "bad.eff"
        path.write_bytes(b"\xff\xfe main")
        code, out = _effex(capsys, "check", str(path))
        assert code == 2
        assert "not UTF-8" in out.err
        assert "offset 0" in out.err

    def test_invalid_fuel(self, capsys, programs_dir):
        code, _ = _effex(capsys, "run", str(programs_dir / "not.mam"), "--fuel", "0")
        assert code == 2

    def test_missing_subcommand(self, capsys):
        code, _ = _effex(capsys)
        assert code == 2


@pytest.mark.integration
class TestCorpusRunner:
    def test_directory_run(self, capsys, programs_dir, tmp_path):
        corpus_dir = tmp_path / "programs"
        corpus_dir.mkdir()
        for name in ("not.mam", "state.mon", "loop.eff"):
            shutil.copy(programs_dir / name, corpus_dir / name)
        out_dir = tmp_path / "results"
        code = run_corpus.main([str(corpus_dir), "--output", str(out_dir), "--fuel", "2000",
                               "--no-simulate"])
        capsys.readouterr()
        assert code == 0
        df = pd.read_csv(out_dir / "corpus.csv")
        assert set(df["program"]) == {"not.mam", "state.mon", "loop.eff"}
        check = df[(df["program"] == "loop.eff") & (df["task"] == "check")]
        assert not check["ok"].iloc[0]
        run = df[(df["program"] == "not.mam") & (df["task"] == "run")]
        assert run["outcome"].iloc[0] == "fls"

    def test_empty_directory(self, capsys, tmp_path):
        code = run_corpus.main([str(tmp_path), "--output", str(tmp_path / "out")])
        assert code == 2

    def test_not_a_directory(self, capsys, tmp_path):
        code = run_corpus.main([str(tmp_path / "missing")])
        assert code == 2

    def test_undecodable_file_is_a_failed_parse(self, tmp_path):
        path = tmp_path / "bad.eff"
        path.write_bytes(b"\xff\xfe main")
        rows = run_corpus.run_program(path, {})
        assert [(r["task"], r["ok"]) for r in rows] == [("parse", False)]
        assert rows[0]["outcome"] == "not UTF-8 at offset 0"

    def test_generated_runs_are_retyped_at_every_step(self):
        df = run_corpus.run_generated(3, {"seed": 7, "max_depth": 3, "fuel": 100_000})
        assert len(df) == 12
        assert (df["status"] == "NormalForm").all()
        assert df["retyped"].all()
        assert df["untyped_step"].isna().all()
