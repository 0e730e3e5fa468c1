import json

import numpy as np
import pytest

from papcode.cli import main
from papcode.fp_code import read_codebook


def test_gen_and_trace(tmp_path, capsys):
    code = tmp_path / "code.txt"
    assert main(["gen", "--n", "2", "--beta", "0.1", "--d", "4000", "--seed", "3", "--out", str(code)]) == 0
    cb, key, seed = read_codebook(code)
    assert cb.matrix.shape == (2, 4000) and seed == 3
    ans = tmp_path / "ans.txt"
    ans.write_text(" ".join(str(v) for v in cb.matrix[1]) + "\n")
    capsys.readouterr()
    assert main(["trace", "--codebook", str(code), "--answer", str(ans)]) == 0
    assert capsys.readouterr().out.strip() == "ACCUSED 2"
    ans.write_text(" ".join(str(v) for v in key.reference) + "\n")
    main(["trace", "--codebook", str(code), "--answer", str(ans)])
    assert capsys.readouterr().out.strip() == "NO_ACCUSATION"


def test_trace_bad_answer(tmp_path, capsys):
    code = tmp_path / "code.txt"
    main(["gen", "--n", "1", "--beta", "0.5", "--d", "5", "--seed", "1", "--out", str(code)])
    ans = tmp_path / "ans.txt"
    ans.write_text("1 1\n")
    assert main(["trace", "--codebook", str(code), "--answer", str(ans)]) == 2
    assert "error" in capsys.readouterr().err


def test_lemma_verify(capsys):
    assert main(["lemma-verify", "--n", "3", "--trials", "20000", "--adversary", "majority", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "mean" in out and "stderr" in out and "bound" in out


def test_lemma_verify_fail_exit_code(capsys, monkeypatch):
    from papcode import fp_lemma

    bad = fp_lemma.LemmaAdversary(lambda x, r: -x.mean(axis=1), "neg", vectorized=True)
    monkeypatch.setattr(fp_lemma, "named_adversary", lambda name: bad)
    assert main(["lemma-verify", "--n", "1", "--trials", "1000", "--adversary", "identity", "--seed", "1"]) == 1
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.parametrize(
    "task, extra",
    [
        ("raw", []),
        ("averaging", []),
        ("svd", []),
        ("clustering", ["--k", "2", "--xi", "0.01"]),
        ("averaging", ["--k", "2"]),
    ],
)
def test_attack_tasks(tmp_path, task, extra):
    n0 = "1" if task == "clustering" else "2"
    report = tmp_path / "r.json"
    csv = tmp_path / "r.csv"
    argv = ["attack", "--task", task, "--n0", n0, "--beta", "0.05", "--lambda", "1",
            "--trials", "3", "--seed", "5", "--d0", "300", "--report", str(report),
            "--csv", str(csv)] + extra
    assert main(argv) == 0
    payload = json.loads(report.read_text())
    assert set(payload) == {"config", "rates", "ci95", "runtime_seconds"}
    assert sum(payload["rates"][k] for k in ("trace_success", "false_accusation", "no_accusation")) == pytest.approx(1)
    assert len(csv.read_text().splitlines()) == 4


def test_attack_clustering_rows_mismatch(tmp_path):
    argv = ["attack", "--task", "clustering", "--n0", "3", "--k", "2", "--xi", "0.01",
            "--beta", "0.05", "--lambda", "1", "--trials", "1", "--d0", "50",
            "--report", str(tmp_path / "r.json")]
    assert main(argv) == 2


def test_attack_warns_outside_regime(tmp_path, caplog):
    argv = ["attack", "--task", "raw", "--n0", "2", "--beta", "0.05", "--lambda", "1",
            "--trials", "1", "--seed", "1", "--d0", "50", "--report", str(tmp_path / "r.json")]
    main(argv)
    assert "proven regime" in caplog.text


def test_attack_timing(tmp_path):
    report = tmp_path / "r.json"
    main(["attack", "--task", "raw", "--n0", "1", "--beta", "0.5", "--lambda", "1", "--trials", "1",
          "--seed", "1", "--d0", "20", "--report", str(report), "--timing"])
    assert json.loads(report.read_text())["runtime_seconds"] >= 0
