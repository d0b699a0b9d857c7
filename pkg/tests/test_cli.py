import json
import shutil
import subprocess
import sys

import pytest

from fmscope.cli import detect_format, main
from support import FIXTURE_DIR

REPLAY = FIXTURE_DIR / "replay"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_single_ao(capsys):
    assert run(capsys, "analyze", FIXTURE_DIR / "e1.bp", "--ao", "AO1") == (0, "AO1\t5\n", "")


def test_analyze_void_warns_but_succeeds(capsys):
    code, out, err = run(capsys, "analyze", FIXTURE_DIR / "e2.bp", "--ao", "AO10")
    assert code == 0 and out == "AO10\tfalse\n" and "warning: void" in err


def test_analyze_missing_extras_is_usage_error(capsys):
    assert run(capsys, "analyze", FIXTURE_DIR / "e1.bp", "--ao", "AO11")[0] == 2
    assert run(capsys, "analyze", FIXTURE_DIR / "e1.bp", "--ao", "AO16")[0] == 2


def test_analyze_all_skips_extras_with_note(capsys):
    code, out, err = run(capsys, "analyze", FIXTURE_DIR / "e1.bp")
    assert code == 0 and len(out.splitlines()) == 14
    assert "AO13\tCar,Engine" in out and "AO11 skipped" in err


def test_analyze_with_config_pair_and_json(capsys, tmp_path):
    code, out, _ = run(capsys, "analyze", FIXTURE_DIR / "e1.bp", "--ao", "AO11,AO16,AO13",
                       "--config", FIXTURE_DIR / "e1_full.config.json", "--pair", FIXTURE_DIR / "e1.bp",
                       "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["results"] == {"AO11": True, "AO16": True, "AO13": ["Car", "Engine"]}
    assert doc["void"] is False


def test_analyze_json_void(capsys):
    code, out, _ = run(capsys, "analyze", FIXTURE_DIR / "e2.bp", "--json")
    assert code == 0 and json.loads(out)["void"] is True


def test_parse_error_exit_1(capsys, tmp_path):
    bad = tmp_path / "bad.bp"
    bad.write_text("The root feature is A.\nFeature A dances.\n")
    code, _, err = run(capsys, "analyze", bad)
    assert code == 1 and "2:" in err


def test_missing_file_exit_3(capsys, tmp_path):
    assert run(capsys, "analyze", tmp_path / "nope.bp")[0] == 3


def test_argparse_usage_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["analyze"])
    assert exc.value.code == 2


def test_uvl_and_blueprint_give_identical_vectors(capsys, tmp_path):
    a = run(capsys, "analyze", FIXTURE_DIR / "e1.uvl")[1]
    b = run(capsys, "analyze", FIXTURE_DIR / "e1.bp")[1]
    assert a == b
    out = tmp_path / "e1.bp"
    assert run(capsys, "convert", FIXTURE_DIR / "e1.uvl", out, "--to", "bp")[0] == 0
    assert run(capsys, "analyze", out)[1] == a
    back = tmp_path / "back.uvl"
    assert run(capsys, "convert", out, back, "--to", "uvl")[0] == 0
    assert run(capsys, "analyze", back)[1] == a


def test_root_only_converts_both_ways(capsys, tmp_path):
    u = tmp_path / "e0.uvl"
    assert run(capsys, "convert", FIXTURE_DIR / "e0.bp", u, "--to", "uvl")[0] == 0
    code, out, _ = run(capsys, "convert", u, "-", "--to", "bp")
    assert code == 0 and out.strip() == "The root feature is A."


def test_cardinality_uvl_exit_1(capsys, tmp_path):
    p = tmp_path / "card.uvl"
    p.write_text("features\n\tA\n\t\t[1..2]\n\t\t\tB\n\t\t\tC\n")
    code, _, err = run(capsys, "convert", p, "-", "--to", "bp")
    assert code == 1 and "cardinality" in err


def test_format_sniffing(tmp_path):
    assert detect_format(tmp_path / "x.txt", "// c\nfeatures\n\tA\n") == "uvl"
    assert detect_format(tmp_path / "x.txt", "The root feature is A.") == "bp"
    assert detect_format(tmp_path / "x.uvl", "") == "uvl"


def test_variant_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.bp", tmp_path / "b.bp"
    assert run(capsys, "variant", FIXTURE_DIR / "e1.bp", a, "--seed", "3", "--swaps", "2")[0] == 0
    run(capsys, "variant", FIXTURE_DIR / "e1.bp", b, "--seed", "3", "--swaps", "2")
    assert a.read_text() == b.read_text() != (FIXTURE_DIR / "e1.bp").read_text()
    assert run(capsys, "variant", FIXTURE_DIR / "e0.bp", a)[0] == 2


def test_variant_keeps_uvl_format(capsys, tmp_path):
    out = tmp_path / "v.uvl"
    run(capsys, "variant", FIXTURE_DIR / "e1.uvl", out, "--seed", "1")
    assert out.read_text().startswith("features")


def test_eval_mock_run_and_rerun(capsys, tmp_path):
    bp_dir = tmp_path / "bps"
    bp_dir.mkdir()
    shutil.copy(FIXTURE_DIR / "e1.bp", bp_dir / "e1.bp")
    mock = tmp_path / "mock.json"
    mock.write_text(json.dumps({"responses": [
        {"model_id": "m", "blueprint": "e1", "ao": "AO1", "response": "<count>5</count>"},
        {"model_id": "m", "blueprint": "e1", "ao": "AO10", "response": "<satisfiable>false</satisfiable>"}]}))
    models = tmp_path / "models.json"
    models.write_text(json.dumps({"m": {"family": "general"}}))
    out = tmp_path / "records.jsonl"
    args = ["eval", "run", "--models", models, "--blueprints", bp_dir, "--aos", "AO1,AO10",
            "--out", out, "--mock", mock]
    code, stdout, _ = run(capsys, *args)
    assert code == 0 and len(stdout.splitlines()) == 2
    assert len(out.read_text().splitlines()) == 2
    code, stdout, err = run(capsys, *args)
    assert code == 0 and stdout == "" and err.startswith("0 new records")


def test_eval_report_unreadable_exit_3(capsys, tmp_path):
    assert run(capsys, "eval", "report", tmp_path / "missing.jsonl")[0] == 3


def replay(capsys, tmp_path):
    out = tmp_path / "records.jsonl"
    code, _, _ = run(capsys, "eval", "run", "--models", REPLAY / "models.json",
                     "--blueprints", REPLAY / "blueprints", "--out", out,
                     "--mock", REPLAY / "responses.json", "--concurrency", "4")
    assert code == 0
    return out


def test_replay_report_matches_hand_tally(capsys, tmp_path):
    records = replay(capsys, tmp_path)
    code, out, _ = run(capsys, "eval", "report", records, "--json", "--dest", tmp_path / "rep")
    assert code == 0
    expected = json.loads((REPLAY / "expected_report.json").read_text())
    assert json.loads(out) == expected
    first = {p.name: p.read_bytes() for p in (tmp_path / "rep").iterdir()}
    run(capsys, "eval", "report", records, "--dest", tmp_path / "rep2")
    assert first == {p.name: p.read_bytes() for p in (tmp_path / "rep2").iterdir()}


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fmscope.cli", "analyze",
                           str(FIXTURE_DIR / "e4.bp"), "--ao", "AO6"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "AO6\t1\n"
