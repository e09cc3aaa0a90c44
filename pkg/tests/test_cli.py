import csv
import json
import math
import os

import numpy as np
import pytest

from crnn_sim import seq2seq, taskgen
from crnn_sim.cli import main


def write_cfg(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_verify_contextuality_passes(capsys):
    assert main(["verify-contextuality", "--random-alphas", "3"]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["passed"] is True


def test_verify_contextuality_fault_injection(capsys):
    # the corrupted grid must be detected as failing
    assert main(["verify-contextuality", "--random-alphas", "0", "--self-test-fault"]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["passed"] is False  # overall includes the injected fault


def test_gen_task_counts_and_determinism(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "task.json",
        {"task": {"n": 4, "k": 2, "count": 5, "seed": 3, "adversarial_triples": 2},
         "io": {"out": str(tmp_path / "o1")}},
    )
    assert main(["gen-task", "--config", cfg]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["instances"] == 5 + 6
    data1 = open(os.path.join(str(tmp_path / "o1"), "dataset.jsonl"), "rb").read()
    assert main(["gen-task", "--config", cfg, "--out", str(tmp_path / "o2")]) == 0
    capsys.readouterr()
    data2 = open(os.path.join(str(tmp_path / "o2"), "dataset.jsonl"), "rb").read()
    assert data1 == data2
    assert data1.count(b"\n") == 11


def test_gen_task_parallel_workers_identical(tmp_path, capsys, monkeypatch):
    cfg = write_cfg(
        tmp_path,
        "task.json",
        {"task": {"n": 3, "k": 1, "count": 4, "seed": 9},
         "io": {"out": str(tmp_path / "s1")}},
    )
    assert main(["gen-task", "--config", cfg]) == 0
    monkeypatch.setenv("CRNN_SIM_THREADS", "2")
    assert main(["gen-task", "--config", cfg, "--out", str(tmp_path / "s2")]) == 0
    capsys.readouterr()
    a = open(tmp_path / "s1" / "dataset.jsonl", "rb").read()
    b = open(tmp_path / "s2" / "dataset.jsonl", "rb").read()
    assert a == b


def test_invalid_config_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "bad.json", {"task": {"n": 1}, "io": {}})
    assert main(["gen-task", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "task.n" in err

    cfg2 = write_cfg(tmp_path, "bad2.json", {"task": {"n": 4, "bogus": 1}})
    assert main(["gen-task", "--config", cfg2]) == 2
    err = capsys.readouterr().err
    assert "task.bogus" in err and "line" in err

    cfg3 = write_cfg(tmp_path, "bad3.json", {"task": {"n": 4}, "nonsense": {}})
    assert main(["gen-task", "--config", cfg3]) == 2
    assert "nonsense" in capsys.readouterr().err


def _train_cfg(tmp_path, out, kind="gru", n=4, epochs=2, seed=1):
    return write_cfg(
        tmp_path,
        f"train_{kind}_{out}.json",
        {
            "model": {"cell_kind": kind, "n": n},
            "train": {"epochs": epochs, "batch_size": 16, "seed": seed,
                      "squeeze_scale": 1.0},
            "io": {"out": str(tmp_path / out), "corpus": "bundled", "max_pairs": 64},
        },
    )


@pytest.mark.parametrize("kind", ["crnn", "gaussian", "gru", "ornn"])
def test_train_all_cell_kinds_emit_csv(tmp_path, capsys, kind):
    cfg = _train_cfg(tmp_path, f"run_{kind}", kind=kind)
    assert main(["train", "--config", cfg]) == 0
    capsys.readouterr()
    with open(tmp_path / f"run_{kind}" / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == set(seq2seq.METRICS_HEADER)
    assert {r["split"] for r in rows} == {"train", "test"}
    assert len(rows) == 2 * 2  # epochs * splits


def test_train_determinism_binary_identical(tmp_path, capsys):
    cfg1 = _train_cfg(tmp_path, "d1", seed=5)
    cfg2 = _train_cfg(tmp_path, "d2", seed=5)
    assert main(["train", "--config", cfg1]) == 0
    assert main(["train", "--config", cfg2]) == 0
    capsys.readouterr()
    m1 = open(tmp_path / "d1" / "metrics.csv", "rb").read()
    m2 = open(tmp_path / "d2" / "metrics.csv", "rb").read()
    assert m1 == m2
    c1 = open(tmp_path / "d1" / "checkpoint" / "params.bin", "rb").read()
    c2 = open(tmp_path / "d2" / "checkpoint" / "params.bin", "rb").read()
    assert c1 == c2


def test_train_then_eval_ce_matches(tmp_path, capsys):
    cfg = _train_cfg(tmp_path, "ev", kind="gru", epochs=2, seed=2)
    assert main(["train", "--config", cfg]) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])

    from crnn_sim.corpus import save_pairs_tsv, toy_corpus
    from crnn_sim.seq2seq import split_pairs

    pairs = toy_corpus()[:64]
    _, test_pairs = split_pairs(pairs, 0.8, 2)
    tsv = tmp_path / "test_pairs.tsv"
    save_pairs_tsv(test_pairs, tsv)
    ckpt = str(tmp_path / "ev" / "checkpoint")
    assert main(["eval", "--checkpoint", ckpt, "--dataset", str(tsv)]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert abs(out["cross_entropy"] - summary["final_test_ce"]) < 1e-9


def test_eval_consistency_scoring(tmp_path, capsys):
    rng = np.random.default_rng(11)
    insts = [taskgen.gen_instance(3, 2, rng) for _ in range(2)]
    # zero-B instances have fully forced prefixes
    insts += [taskgen.gen_instance(3, 1, rng, B=np.zeros((3, 3))) for _ in range(2)]
    path = tmp_path / "data.jsonl"
    taskgen.write_dataset(insts, path)
    assert main(["eval", "--dataset", str(path)]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["consistent_fraction"] == 1.0

    # perturb a forced step wherever one exists
    for inst in insts:
        forced = [i for i, s in enumerate(inst.transcript) if s.deterministic]
        if forced:
            i = forced[-1]
            inst.transcript[i].value = inst.transcript[i].value + 1.0
    taskgen.write_dataset(insts, path)
    assert main(["eval", "--dataset", str(path)]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["consistent_fraction"] < 1.0


def test_separation_smoke(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "sep.json",
        {
            "separation": {"n": 3, "triples_train": 4, "triples_eval": 4,
                           "dims": [3], "epochs": 2, "batch_size": 8, "seed": 0},
            "io": {"out": str(tmp_path / "sep")},
        },
    )
    assert main(["separation", "--config", cfg]) == 0
    capsys.readouterr()
    with open(tmp_path / "sep" / "separation.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["cell_kind"] == "crnn_oracle"
    assert float(rows[0]["inconsistency_rate"]) == 0.0
    assert rows[1]["cell_kind"] == "gru"


def test_gen_corpus(tmp_path, capsys):
    assert main(["gen-corpus", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["pairs"] == 2000
    lines = open(tmp_path / "toy_corpus.tsv", encoding="utf-8").read().splitlines()
    assert len(lines) == 2000 and all("\t" in l for l in lines)
