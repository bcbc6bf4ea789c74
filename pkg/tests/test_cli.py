import csv
import io
import json
import subprocess
import sys

import pytest

from introdet.bigmat import bareiss_det, gen_random, write_matrix
from introdet.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_det_identity(capsys):
    assert run(capsys, "det", "--gen", "identity", "--n", "5")[:2] == (0, "1\n")


def test_det_file(tmp_path, capsys):
    f = tmp_path / "m.txt"
    f.write_text("2 2\n1 2\n3 4\n")
    assert run(capsys, "det", str(f))[:2] == (0, "-2\n")


def test_det_random_matches_bareiss(capsys):
    args = ["det", "--gen", "random", "--n", "50", "--lambda", "16", "--seed", "7"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args, "--algo", "bareiss")
    assert a == b == f"{bareiss_det(gen_random(50, 16, 7))}\n"


def test_det_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n1 x\n3 4\n")
    rect = tmp_path / "rect.txt"
    rect.write_text("2 3\n1 2 3\n4 5 6\n")
    assert run(capsys, "det", str(bad))[0] == 2
    assert run(capsys, "det", str(rect))[0] == 2
    assert run(capsys, "det", str(tmp_path / "missing.txt"))[0] == 2
    assert run(capsys, "det")[0] == 2


def test_det_exhaustion_exit_code(capsys):
    # the window (8, 16) holds only 11 and 13
    code, _, err = run(capsys, "det", "--gen", "random", "--n", "8", "--lambda", "100", "--prime-bits", "3", "--algo", "certified-cra")
    assert code == 3 and "used" in err


def test_det_stats(tmp_path, capsys):
    path = tmp_path / "stats.json"
    code, out, _ = run(capsys, "det", "--gen", "engineered", "--n", "20", "--stats", str(path))
    rec = json.loads(path.read_text())
    assert code == 0
    assert {"n", "path", "solvings", "primes_used", "K_bits", "det_bits", "timings_ms", "algo", "seed"} <= set(rec)
    assert rec["det_bits"] == abs(int(out)).bit_length()


def test_bench_csv(capsys):
    code, out, _ = run(capsys, "bench", "--sizes", "12", "8", "--algos", "introspective,et-cra,abbott,lif-only")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["n", "algo", "seed", "ms", "det_bits", "solvings", "primes"]
    assert [int(r["n"]) for r in rows] == [8] * 4 + [12] * 4
    assert run(capsys, "bench", "--algos", "fastdet")[0] == 2


def test_verify_factors_reports_bound(capsys):
    code, out, _ = run(capsys, "verify", "factors", "--n", "40", "--lambda", "4", "--oracle-trials", "10")
    recs = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert recs[0]["bound"] == 6 and recs[1]["bound"] == 4


def test_verify_unknown_suite(capsys):
    with pytest.raises(SystemExit) as e:
        main(["verify", "bogus"])
    assert e.value.code == 2


def test_console_determinism(tmp_path):
    m = tmp_path / "m.txt"
    write_matrix(gen_random(30, 200, 4), m)
    cmd = [sys.executable, "-m", "introdet", "det", str(m), "--seed", "3"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.strip().lstrip(b"-").isdigit()
