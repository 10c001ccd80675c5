import csv
import io
import json

import pytest

from hiercache.cli import main, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_json(capsys):
    code, out, err = run(capsys, "verify", "--k1", "2", "--k2", "2", "--n", "3", "--json")
    assert code == 0
    report = json.loads(out)
    assert [r["scheme"] for r in report["schemes"]] == [1, 2]
    assert all(r["attempted"] == 36 and r["ok"] for r in report["schemes"])
    assert "scheme 1" in err


def test_verify_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "inst.cfg"
    cfg.write_text("# tiny\nk1 = 2\nk2 = 2\nn = 4\nseed = 5\n")
    assert read_config(str(cfg)) == {"k1": 2, "k2": 2, "n": 4, "seed": 5}
    out_path = tmp_path / "r.json"
    code, _, _ = run(capsys, "verify", "--config", str(cfg), "--n", "3", "--scheme", "2", "-o", str(out_path))
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["schemes"][0]["config"]["n"] == 3


def test_verify_rejects_small_prime(capsys):
    code, _, err = run(capsys, "verify", "--k1", "2", "--k2", "2", "--n", "3", "--prime", "2")
    assert code == 2 and "prime" in err.lower()


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("k3 = 1\n")
    code, _, err = run(capsys, "verify", "--config", str(cfg))
    assert code == 2 and "k3" in err


def test_verify_files_roundtrip(tmp_path, capsys):
    paths = []
    for i, blob in enumerate([b"alpha", b"\xff\x00beta-gamma", b"z"]):
        p = tmp_path / f"f{i}"
        p.write_bytes(blob)
        paths.append(str(p))
    code, out, _ = run(capsys, "verify", "--k1", "2", "--k2", "2", "--n", "3", "--files", *paths, "--json")
    assert code == 0
    report = json.loads(out)
    assert [r["original_length"] for r in report["inputs"]] == [5, 12, 1]


def test_table_csv(capsys):
    code, out, _ = run(capsys, "table", "--rows", "8,4,2", "--scheme", "1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["r2_frac"] == "11/8" and rows[0]["source"] == "computed"
    assert {r["source"] for r in rows} == {"computed", "measured", "published"}


def test_table_bad_rows(capsys):
    code, _, _ = run(capsys, "table", "--rows", "8,4")
    assert code == 2


def test_trace_default(capsys):
    code, out, _ = run(capsys, "trace")
    assert code == 0
    assert "W^{12}_2 + W^{13}_3" in out
    assert "E: W^{13}_1" in out or "W^{13}_1" in out


def test_points_json(capsys):
    code, out, _ = run(capsys, "points", "--k1", "3", "--k2", "2", "--n", "6", "--format", "json")
    assert code == 0
    labels = [p["label"] for p in json.loads(out)]
    assert labels[-2:] == ["scheme-1", "scheme-2"]


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "hiercache", "points", "--k1", "2", "--k2", "2", "--n", "3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and "scheme-1" in proc.stdout
