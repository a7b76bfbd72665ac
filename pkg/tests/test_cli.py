import hashlib
import json

import pytest

from herrlab import cli
from herrlab.config import canonical_json
from herrlab.pipeline import LemmaReport


def run(argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def phi_reports(tmp_path_factory):
    out = tmp_path_factory.mktemp("reports")
    codes = {w: run(["herr-phi", "--builtin", "cyclotomic-Q3-trivial", "--workers", w, "--out", out / f"w{w}.json"])
             for w in (1, 2)}
    return out, codes


def test_herr_phi_report(phi_reports):
    out, codes = phi_reports
    assert codes == {1: 0, 2: 0}
    doc = json.loads((out / "w1.json").read_text())
    assert doc["schema_version"] == cli.SCHEMA_VERSION and doc["command"] == "herr-phi"
    assert [d["exponents"] for d in doc["report"]["degrees"]] == [[1], [1, 1], []]
    man = doc["manifest"]
    assert man["outcome"] == "Stabilized" and man["schedule"]["N_levels"] == list(range(1, 9))
    assert man["report_hash"] == hashlib.sha256(canonical_json(doc["report"]).encode()).hexdigest()
    timing = json.loads((out / "w1.json.timing.json").read_text())
    assert timing["levels"] and "seconds" in timing["levels"][0]


def test_reports_are_byte_identical_across_workers(phi_reports):
    out, _ = phi_reports
    assert (out / "w1.json").read_bytes() == (out / "w2.json").read_bytes()


def test_report_to_stdout(capsys):
    assert run(["verify-lemmas", "--n-max", 3, "--N-max", 12]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["manifest"]["outcome"] == "pass" and doc["report"]["passed"]


@pytest.mark.parametrize("argv", [[], ["bogus"], ["herr-phi", "--m", "x"], ["herr-phi", "--builtin", "nope"],
                                  ["herr-phi", "--config", "a", "--builtin", "cyclotomic-Q3-trivial"]])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as err:
        run(argv)
    assert err.value.code == 1


def test_config_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[run]\nbuiltin = cyclotomic-Q3-trivial\nfoo = 1\n")
    assert run(["herr-phi", "--config", bad]) == 1
    assert "line 3" in capsys.readouterr().err
    assert run(["herr-phi", "--config", tmp_path / "missing.cfg"]) == 1
    assert run(["herr-phi", "--m", 0]) == 1


def test_not_stabilized_exit_2(tmp_path):
    cfg = tmp_path / "short.cfg"
    cfg.write_text("[run]\nbuiltin = cyclotomic-Q3-trivial\n\n[schedule]\nN = 1, 2, 3\nn = 1, 2, 3\n")
    out = tmp_path / "r.json"
    assert run(["herr-phi", "--config", cfg, "--out", out]) == 2
    doc = json.loads(out.read_text())
    assert doc["manifest"]["outcome"] == "NotStabilized"
    assert doc["report"]["traces"]


def test_duality_mismatch_exit_3(tmp_path):
    out = tmp_path / "d.json"
    code = run(["duality", "--builtin", "cyclotomic-Q3-trivial", "--dual-builtin", "cyclotomic-Q3-trivial",
                "--out", out])
    assert code == 3
    assert json.loads(out.read_text())["manifest"]["outcome"] == "DualityMismatch"


def test_lemma_violation_exit_3(monkeypatch, capsys):
    monkeypatch.setattr(cli, "verify_exactness_lemmas", lambda *a, **k: LemmaReport([{"holds": False}], False))
    assert run(["verify-lemmas"]) == 3


def test_iwasawa_warning_on_non_cyclotomic_base(tmp_path):
    out = tmp_path / "i.json"
    code = run(["iwasawa", "--builtin", "standardLT-Q3-trivial", "--out", out])
    doc = json.loads(out.read_text())
    assert doc["report"]["warnings"]
    # H^1_Iw is an infinite Iwasawa module, so the tower does not stabilize
    assert code == 2 and doc["report"]["degrees"][1]["exponents"] == [1]


def test_custom_frobenius_config_runs(tmp_path):
    cfg = tmp_path / "lt.cfg"
    cfg.write_text("[run]\nbuiltin = standardLT-Q3-trivial\n\n[frobenius]\nseries = [(1, 3), (3, 1)]\n")
    out = tmp_path / "lt.json"
    assert run(["herr-phi", "--config", cfg, "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert [len(d["exponents"]) for d in doc["report"]["degrees"]] == [1, 2, 0]


def test_empty_report_path():
    with pytest.raises(OSError):
        cli.emit_report({"a": 1}, "")
