import json
from importlib.resources import files

import pytest

from psolver.cli import (
    CorpusEntry, RunConfig, check, corpus_run, main, manufacture, render_corpus, run,
)

from conftest import EQ2, KAMKE21, SECTION4

FIXTURES = str(files("psolver") / "data" / "worked_examples.jsonl")


def call(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestExitCodes:
    def test_solve(self, capsys):
        code, out = call(capsys, "solve", SECTION4)
        assert code == 0
        assert "the integrating factor will be R = " in out
        assert out.rstrip().splitlines()[-1].startswith("first integral: ")

    def test_no_factor(self, capsys):
        code, out = call(capsys, "intfact", KAMKE21)
        assert code == 1
        assert "no integrating factor found at degree 1" in out

    def test_extended(self, capsys):
        code, out = call(capsys, "solve", "--extended", KAMKE21)
        assert code == 0 and "Int(exp(-cos(x)), x)" in out

    @pytest.mark.parametrize("argv", [
        ["solve", "y' = 2x"],
        ["solve", "y' = sinh(x)"],
        ["solve", "--degree", "0", "y' = y/x"],
        ["solve", "--numberf", "none", "y' = y/x"],
        ["frobnicate", "y' = y"],
        ["corpus", "/nonexistent/file.jsonl"],
    ])
    def test_input_errors(self, capsys, argv):
        assert main(argv) == 2
        capsys.readouterr()

    def test_time_limit(self, capsys):
        code, out = call(capsys, "solve", "--degree", "3", "--time-limit", "0.01", EQ2)
        assert code == 3 and "time limit" in out

    def test_stdin(self, capsys, monkeypatch):
        import io
        monkeypatch.setattr("sys.stdin", io.StringIO("y' = y/x\n"))
        code, out = call(capsys, "intfact", "-")
        assert code == 0 and "R = " in out


class TestStages:
    def test_basis(self, capsys):
        code, out = call(capsys, "basis", SECTION4)
        assert code == 0
        assert "basis of functions: u1 = cos(x), u2 = sin(x), u3 = exp(x)" in out

    def test_empty_basis(self, capsys):
        _, out = call(capsys, "basis", "y' = y/x")
        assert "basis of functions: empty" in out

    def test_dbasis(self, capsys):
        _, out = call(capsys, "dbasis", SECTION4)
        assert "du1/dx = -sin(x)" in out and "du3/dy = 0" in out

    def test_dop(self, capsys):
        _, out = call(capsys, "dop", "y' = y/x")
        assert "Delta = 1" in out and "T = " in out

    def test_eigenpval(self, capsys):
        _, out = call(capsys, "eigenpval", "y' = y/x")
        assert "eigen_p = [x, y]" in out
        assert "eigen_p_val = [1, 1]" in out


class TestJson:
    def test_round_trip(self, capsys):
        code, out = call(capsys, "solve", "--json", SECTION4)
        doc = json.loads(out)
        assert code == 0
        assert set(doc) >= {"ode", "basis", "dbasis", "dop", "eigenpairs", "R", "solution", "timings"}
        assert doc["solution"]["verified"] is True
        assert json.loads(json.dumps(doc)) == doc
        # the reported R is accepted by check
        assert check(SECTION4, intfact=doc["R"]["expr"])[0] == 0

    def test_stage_fields_absent(self, capsys):
        _, out = call(capsys, "basis", "--json", SECTION4)
        doc = json.loads(out)
        assert doc["dop"] is None and doc["R"] is None


class TestCheck:
    def test_good_factor(self):
        code, rep = check(SECTION4, intfact="1/(y*cos(x)*(y + exp(x)))")
        assert code == 0 and rep["R"]["verified"]

    def test_bad_factor(self):
        assert check(SECTION4, intfact="1/y")[0] == 1

    def test_solution_with_constant(self):
        code, rep = check("y' = -x/y", solution="x^2 + y^2 = C")
        assert code == 0 and rep["solution"]["verified"]

    def test_nothing_to_check(self):
        assert check("y' = y/x")[0] == 1

    def test_cli(self, capsys):
        code, out = call(capsys, "check", "y' = y/x", "--intfact", "1/(x*y)")
        assert code == 0 and "verified" in out and "NOT" not in out


class TestCorpus:
    def test_fixtures(self, capsys):
        code, results = corpus_run(FIXTURES)
        assert code == 0 and len(results) == 8
        assert render_corpus(results).endswith("8/8 passed")

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "ok", "ode": "y\' = y/x"}\n{"id": "bad"}\nnot json\n')
        code, results = corpus_run(str(p))
        assert code == 1
        assert [r.passed for r in results] == [True, False, False]

    def test_unsolved_expectation(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps({"id": "k", "ode": KAMKE21, "expect": "unsolved"}) + "\n")
        assert corpus_run(str(p))[0] == 0

    def test_wrong_expected_R(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps({"id": "r", "ode": "y' = y/x", "expected_R": "y"}) + "\n")
        code, results = corpus_run(str(p))
        assert code == 1 and results[0].reason == "R differs from expected_R"


class TestCorpusEntry:
    def test_round_trip(self):
        e = CorpusEntry("a", "y' = y/x", {"degree": 2}, expected_R="1/x^2")
        assert CorpusEntry.from_dict(e.to_dict()) == e

    @pytest.mark.parametrize("d", [
        {"id": "a"},
        {"id": "a", "ode": "y' = y/x", "expect": "maybe"},
        {"id": "a", "ode": "y' = y/x", "options": {"colour": 1}},
        {"id": "a", "ode": "y' = y/x", "expected_R": "1/("},
    ])
    def test_rejects(self, d):
        with pytest.raises(Exception):
            CorpusEntry.from_dict(d)


class TestRunConfig:
    @pytest.mark.parametrize("kw", [
        {"subcommand": "nope"}, {"degree": 0}, {"numberf": 0}, {"time_limit": 0},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            RunConfig(**kw)

    def test_env_default(self, monkeypatch):
        monkeypatch.setenv("PSOLVE_TIME_LIMIT", "12.5")
        assert RunConfig().time_limit == 12.5
        monkeypatch.setenv("PSOLVE_TIME_LIMIT", "junk")
        assert RunConfig().time_limit == 500.0

    def test_run_report(self):
        code, rep = run(RunConfig("intfact"), "y' = y/x")
        assert code == 0 and rep["solution"] is None and rep["R"] is not None


class TestManufacture:
    def test_deterministic(self):
        assert manufacture(7, 2) == manufacture(7, 2)
        assert manufacture(7, 2) != manufacture(8, 2)

    def test_cli_lines(self, capsys):
        code, out = call(capsys, "manufacture", "--seed", "3", "--count", "2")
        lines = [json.loads(s) for s in out.splitlines()]
        assert code == 0 and len(lines) == 2
        assert lines[0] == manufacture(3).to_dict()

    @pytest.mark.parametrize("seed", range(5))
    def test_planted_factor_verifies(self, seed):
        e = manufacture(seed)
        assert check(e.ode, intfact=e.expected_R)[0] == 0
