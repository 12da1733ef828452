import json
import subprocess
import sys

import pytest

from tamelift.cli import main
from tamelift.endo import PolyEndo, compose, endo_from_json
from tamelift.jsonio import dumps, fixture_names, load_fixture
from tamelift.tame import eval_word, word_from_json
from tamelift.weyl import check_weyl_relations, weyl_endo_from_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fixtures_are_bundled():
    names = fixture_names()
    for required in ("identity", "nagata", "shifts", "symplectic_word", "nonsymplectic"):
        assert required in names


class TestVerify:
    def test_nagata(self, capsys):
        code, _, err = run(capsys, "verify", "-i", "fixture:nagata")
        assert code == 0
        assert "jacobian: 1" in err and "linear part: identity" in err

    def test_identity(self, capsys):
        assert run(capsys, "verify", "-i", "fixture:identity")[0] == 0

    def test_non_symplectic_names_the_pair(self, capsys):
        code, _, err = run(capsys, "verify", "-i", "fixture:nonsymplectic")
        assert code == 1
        assert "{x1, p1}" in err

    def test_literal_nagata_fails(self, capsys):
        code, _, err = run(capsys, "verify", "-i", "fixture:nagata_literal")
        assert code == 1 and "jacobian constant: no" in err

    def test_rank_flag_enables_symplectic_check(self, capsys, tmp_path):
        report = tmp_path / "r.json"
        code, _, _ = run(capsys, "verify", "-i", "fixture:identity", "--rank", "1", "--report", str(report))
        assert code == 2  # 3 variables cannot carry rank 1
        code, _, _ = run(capsys, "verify", "-i", "fixture:symplectic_map", "--report", str(report))
        assert code == 0 and json.loads(report.read_text())["symplectic"] is True

    def test_constant_term_is_a_validation_failure(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"nvars": 1, "images": [{"nvars": 1, "terms": [{"c": "1/1", "e": [1]}, {"c": "2/1", "e": [0]}]}]}))
        code, _, err = run(capsys, "verify", "-i", str(path))
        assert code == 1 and "origin preserved: no" in err

    def test_parse_errors(self, capsys, tmp_path):
        assert run(capsys, "verify", "-i", str(tmp_path / "missing.json"))[0] == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(capsys, "verify", "-i", str(bad))[0] == 2
        bad.write_text('{"nvars": 2, "images": []}')
        assert run(capsys, "verify", "-i", str(bad))[0] == 2
        assert run(capsys, "verify", "-i", "fixture:nonexistent")[0] == 2


class TestApprox:
    def test_poly(self, capsys, tmp_path):
        out, rep = tmp_path / "w.json", tmp_path / "r.json"
        code, text, _ = run(capsys, "approx", "poly", "-i", "fixture:nagata", "-K", "6", "-o", str(out), "--report", str(rep))
        assert code == 0 and "residual height" in text
        w = word_from_json(json.loads(out.read_text()))
        nag = endo_from_json(load_fixture("nagata"))
        assert eval_word(w, 5) == nag.truncate(5)
        report = json.loads(rep.read_text())
        assert report["success"] and [r["k"] for r in report["rounds"]] == [2, 3, 4, 5]

    def test_symp(self, capsys, tmp_path):
        out = tmp_path / "w.json"
        code, _, _ = run(capsys, "approx", "symp", "-i", "fixture:symplectic_map", "-K", "7", "-o", str(out), "-q")
        assert code == 0
        w = word_from_json(json.loads(out.read_text()))
        assert w.is_symplectic

    def test_identity(self, capsys):
        code, out, _ = run(capsys, "approx", "poly", "-i", "fixture:identity", "-K", "5", "-q")
        assert code == 0 and json.loads(out)["factors"] == []

    def test_rejections(self, capsys):
        assert run(capsys, "approx", "poly", "-i", "fixture:nagata_literal", "-K", "6")[0] == 1
        assert run(capsys, "approx", "symp", "-i", "fixture:nonsymplectic", "-K", "5")[0] == 1
        assert run(capsys, "approx", "poly", "-i", "fixture:nagata", "-K", "1")[0] == 2

    def test_deterministic_output(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "approx", "symp", "-i", "fixture:symplectic_map", "-K", "6", "-o", str(a), "-q")
        run(capsys, "approx", "symp", "-i", "fixture:symplectic_map", "-K", "6", "-o", str(b), "-q")
        assert a.read_bytes() == b.read_bytes()


class TestWord:
    def test_eval_empty_word(self, capsys, tmp_path):
        path = tmp_path / "w.json"
        path.write_text(json.dumps({"arity": 2, "factors": []}))
        code, out, _ = run(capsys, "word", "eval", "-i", str(path), "-q")
        assert code == 0 and endo_from_json(json.loads(out)) == PolyEndo.identity(2)

    def test_invert_twice(self, capsys, tmp_path):
        once, twice = tmp_path / "1.json", tmp_path / "2.json"
        run(capsys, "word", "invert", "-i", "fixture:shifts", "-o", str(once))
        run(capsys, "word", "invert", "-i", str(once), "-o", str(twice))
        assert json.loads(twice.read_text()) == load_fixture("shifts")

    def test_inverse_composes_to_identity(self, capsys, tmp_path):
        inv = tmp_path / "inv.json"
        run(capsys, "word", "invert", "-i", "fixture:shifts", "-o", str(inv))
        f = eval_word(word_from_json(load_fixture("shifts")))
        g = eval_word(word_from_json(json.loads(inv.read_text())))
        assert compose(g, f) == PolyEndo.identity(3)

    def test_eval_matches_fixture(self, capsys):
        code, out, _ = run(capsys, "word", "eval", "-i", "fixture:shifts", "-q")
        assert json.loads(out) == load_fixture("shifts_map")


class TestLift:
    def test_symplectic_word(self, capsys, tmp_path):
        out, rep = tmp_path / "l.json", tmp_path / "r.json"
        code, _, _ = run(capsys, "lift", "-i", "fixture:symplectic_word", "-o", str(out), "--report", str(rep))
        assert code == 0
        assert check_weyl_relations(weyl_endo_from_json(json.loads(out.read_text())))
        assert json.loads(rep.read_text()) == {"relations_ok": True, "violations": [], "symbol_ok": True}

    def test_plain(self, capsys):
        code, out, _ = run(capsys, "lift", "-i", "fixture:symplectic_word", "--plain", "-q")
        assert code == 0 and json.loads(out)["formal"] is False

    def test_non_symplectic_word(self, capsys):
        assert run(capsys, "lift", "-i", "fixture:shifts")[0] == 1


class TestStar:
    def test_commutator_pair(self, capsys, tmp_path):
        path = tmp_path / "pair.json"
        x = {"nvars": 2, "terms": [{"c": "1/1", "e": [1, 0]}]}
        p = {"nvars": 2, "terms": [{"c": "1/1", "e": [0, 1]}]}
        path.write_text(json.dumps({"f": x, "g": p}))
        code, out, err = run(capsys, "star", "-i", str(path))
        assert code == 0
        obj = json.loads(out)
        assert obj["L"] == 4 and obj["coeffs"][1]["terms"] == [{"c": "-1/2", "e": [0, 0]}]  # x*p = xp + (hbar/2){x, p}

    def test_order_mismatch(self, capsys, tmp_path):
        path = tmp_path / "pair.json"
        x = {"nvars": 2, "terms": [{"c": "1/1", "e": [1, 0]}]}
        path.write_text(json.dumps({"f": {"L": 2, "coeffs": [x, x, x]}, "g": x}))
        assert run(capsys, "star", "-i", str(path))[0] == 1


def test_emitted_files_reparse(capsys, tmp_path):
    out = tmp_path / "m.json"
    run(capsys, "word", "eval", "-i", "fixture:symplectic_word", "-o", str(out))
    text = out.read_text()
    assert dumps(json.loads(text)) == text


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "tamelift", "verify", "-i", "fixture:identity", "-q"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["approx", "sideways"])
    assert info.value.code == 2
