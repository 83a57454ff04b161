import csv
import io
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from chandecomp.channel import QuantumChannel, random_channel, trace_channel, validate_cptp
from chandecomp.cli import main
from chandecomp.decompose import DecompositionProblem, decompose, verify
from chandecomp.exceptions import FileFormatError
from chandecomp.files import channel_checksum, load_channel, load_result, save_channel, save_result


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def bench_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_gen_round_trip(tmp_path, capsys):
    path = tmp_path / "c.json"
    code, _, _ = run(capsys, "gen", "--n", 2, "--m", 3, "--rank", 6, "--seed", 7, "--out", path)
    assert code == 0
    ch = load_channel(path)
    assert validate_cptp(ch.kraus, 2, 3)
    np.testing.assert_array_equal(ch.kraus, random_channel(2, 3, 6, seed=7).kraus)


def test_gen_is_byte_identical(tmp_path, capsys):
    for name in ("a.json", "b.json"):
        run(capsys, "gen", "--n", 3, "--m", 2, "--seed", 1, "--out", tmp_path / name)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_gen_trace_channel(tmp_path, capsys):
    path = tmp_path / "t.json"
    assert run(capsys, "gen", "--n", 2, "--m", 1, "--rank", 2, "--out", path)[0] == 0
    np.testing.assert_array_equal(load_channel(path).kraus, trace_channel(2).kraus)


def test_gen_bad_rank(capsys):
    code, _, err = run(capsys, "gen", "--n", 2, "--m", 2, "--rank", 9)
    assert code == 2
    assert "rank" in err


def test_gen_unwritable(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--n", 2, "--m", 2, "--out", tmp_path / "missing" / "c.json")
    assert code == 3
    assert "No such file" in err


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "gen", "--n", 2)[0] == 2
    assert run(capsys, "decompose", "x.json", "--family", "7")[0] == 2


def test_file_round_trip_bits(tmp_path):
    ch = random_channel(3, 3, 2, seed=4)
    save_channel(ch, tmp_path / "c.json")
    back = load_channel(tmp_path / "c.json")
    assert back.kraus.tobytes() == ch.kraus.tobytes()
    assert channel_checksum(back) == channel_checksum(ch)


def test_load_rejects_non_tp(tmp_path):
    doc = {"format_version": 1, "n": 2, "m": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]] * 2}
    (tmp_path / "c.json").write_text(json.dumps(doc))
    with pytest.raises(FileFormatError, match="residual"):
        load_channel(tmp_path / "c.json")


def test_load_reports_context(tmp_path):
    (tmp_path / "a.json").write_text('{"format_version": 1,\n "n": 2,\n "m": }')
    with pytest.raises(FileFormatError, match="line 3"):
        load_channel(tmp_path / "a.json")
    doc = {"format_version": 1, "n": 2, "m": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], "x"]]]}
    (tmp_path / "b.json").write_text(json.dumps(doc))
    with pytest.raises(FileFormatError, match=r"kraus\[0\]\[1\]\[1\]"):
        load_channel(tmp_path / "b.json")
    (tmp_path / "c.json").write_text(json.dumps({"format_version": 1, "n": 2}))
    with pytest.raises(FileFormatError, match="'m'"):
        load_channel(tmp_path / "c.json")


def test_classify(tmp_path, capsys):
    save_channel(QuantumChannel([np.eye(2)]), tmp_path / "id.json")
    code, out, _ = run(capsys, "classify", tmp_path / "id.json")
    assert code == 0
    assert out.startswith("extreme, rank 1")
    save_channel(random_channel(2, 2, 4, seed=0), tmp_path / "full.json")
    code, out, _ = run(capsys, "classify", tmp_path / "full.json", "--json")
    rep = json.loads(out)
    assert rep["classification"] == "not-generalized-extreme"
    assert rep["kraus_rank"] == 4
    save_channel(trace_channel(2), tmp_path / "tr.json")
    assert run(capsys, "classify", tmp_path / "tr.json")[1].startswith("extreme")


def test_decompose_and_verify(tmp_path, capsys):
    save_channel(random_channel(2, 2, 4, seed=1), tmp_path / "c.json")
    out = tmp_path / "r.json"
    code, text, _ = run(capsys, "decompose", tmp_path / "c.json", "--family", 1, "--target-error", 1e-3, "--out", out)
    assert code == 0
    assert "error" in text and "evals" in text
    code, text, _ = run(capsys, "verify", out, tmp_path / "c.json", "--json")
    assert code == 0
    assert json.loads(text)["drift"] <= 1e-12


def test_decompose_family_iii_32(tmp_path, capsys):
    save_channel(random_channel(3, 2, 6, seed=2), tmp_path / "c.json")
    code, _, _ = run(capsys, "decompose", tmp_path / "c.json", "--family", 3, "--target-error", 5e-2)
    assert code == 0


def test_decompose_threshold_missed(tmp_path, capsys):
    save_channel(random_channel(2, 2, 4, seed=1), tmp_path / "c.json")
    code, text, _ = run(
        capsys, "decompose", tmp_path / "c.json", "--starts", 1, "--max-evals", 1, "--target-error", 1e-12, "--json"
    )
    assert code == 1
    assert json.loads(text)["converged"] is False


def test_decompose_missing_file_leaves_nothing(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "decompose", tmp_path / "nope.json", "--out", out)
    assert code == 3
    assert not out.exists()
    assert os.listdir(tmp_path) == []


def test_decompose_unsupported_shape(tmp_path, capsys):
    save_channel(random_channel(3, 4, 2, seed=0), tmp_path / "c.json")
    code, _, err = run(capsys, "decompose", tmp_path / "c.json", "--family", 1)
    assert code == 2
    assert "supported" in err


def test_verify_checksum_mismatch(tmp_path, capsys):
    a = random_channel(2, 2, 4, seed=1)
    save_channel(a, tmp_path / "a.json")
    save_channel(random_channel(2, 2, 4, seed=2), tmp_path / "b.json")
    res = decompose(DecompositionProblem(a, starts=1))
    save_result(res, a, tmp_path / "r.json")
    assert run(capsys, "verify", tmp_path / "r.json", tmp_path / "b.json")[0] == 3


def test_result_file_round_trip(tmp_path):
    target = random_channel(2, 3, 6, seed=3)
    res = decompose(DecompositionProblem(target, family="III", starts=2))
    save_result(res, target, tmp_path / "r.json")
    back, checksum = load_result(tmp_path / "r.json")
    assert checksum == channel_checksum(target)
    assert back.specs == res.specs
    assert back.probs.tobytes() == res.probs.tobytes()
    assert back.achieved_error == res.achieved_error
    assert verify(back, target).trace_distance == verify(res, target).trace_distance
    save_result(back, target, tmp_path / "r2.json")
    assert (tmp_path / "r.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


def test_bench_counts(capsys):
    code, out, _ = run(capsys, "bench", "--channels", 0)
    assert code == 0
    rows = {(r["shape"], r["family"]): int(r["param_count_total"]) for r in bench_rows(out)}
    assert [rows[("2x2", f)] for f in ("I", "II", "III")] == [23, 23, 17]
    assert rows[("3x2", "II")] == 43


def test_bench_empty_and_skips(tmp_path, capsys):
    code, out, _ = run(capsys, "bench", "--shapes", "", "--channels", 0)
    assert code == 0
    assert out.strip().split("\n") == [",".join(
        ["shape", "family", "param_count_total", "channels", "min_error", "median_error",
         "max_error", "mean_evals", "wall_time_s", "note"])]
    code, out, _ = run(capsys, "bench", "--shapes", "3x4", "--families", "1,3", "--channels", 0,
                       "--out", tmp_path / "b.csv")
    rows = bench_rows((tmp_path / "b.csv").read_text())
    assert rows[0]["note"].startswith("skipped")
    assert rows[1]["param_count_total"] != ""


def test_bench_runs_decompositions(capsys):
    code, out, _ = run(capsys, "bench", "--shapes", "2x2", "--families", "1", "--channels", 2, "--starts", 3)
    row = bench_rows(out)[0]
    assert float(row["median_error"]) < 1e-5
    assert float(row["mean_evals"]) > 0


def test_bench_counts_fast_without_jax():
    code = "import sys; from chandecomp.cli import main; main(['bench', '--channels', '0']); " \
           "assert 'jax' not in sys.modules and 'sklearn' not in sys.modules"
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr
    assert elapsed < 1.0
