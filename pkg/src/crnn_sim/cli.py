"""Command-line entry point.

Subcommands: verify-contextuality, gen-task, train, separation, eval,
gen-corpus.  Exit codes: 0 success, 1 verification failure, 2 usage or
config error.  All outputs are machine readable (CSV/JSON); --human prints
tables instead.  CRNN_SIM_THREADS caps dataset-generation workers.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import corpus as corpus_mod
from . import seq2seq, taskgen
from .config import (
    IO_FIELDS,
    MODEL_FIELDS,
    SEPARATION_FIELDS,
    TASK_FIELDS,
    TRAIN_FIELDS,
    ConfigError,
    load_config,
)
from .cvpauli import MagicSquare, build_magic_square, identity_word, verify_magic_square
from .experiments import SeparationConfig, run_separation
from .scalars import ExactBackend, FloatBackend

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CRNN_SIM_THREADS", "1")))
    except ValueError:
        return 1


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# -- verify-contextuality ---------------------------------------------------------


def cmd_verify_contextuality(args) -> int:
    alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else [1.0, 2.0, 1.0 / 3.0]
    rng = np.random.default_rng(args.seed)
    records = []
    overall = True

    def check(label, square):
        nonlocal overall
        report = verify_magic_square(square)
        records.append(
            {
                "alpha": label,
                "passed": report.passed,
                "classical_assignments": report.classical_assignments,
                "failures": report.failures() if not report.passed else [],
            }
        )
        overall = overall and report.passed

    if args.backend == "exact":
        check("g_p (symbolic)", build_magic_square(Fraction(1), ExactBackend(Fraction(1, 2))))
    for a in alphas:
        check(a, build_magic_square(a, FloatBackend()))
    for _ in range(args.random_alphas):
        a = float(rng.uniform(1e-3, 10.0))
        check(a, build_magic_square(a, FloatBackend()))
    if args.self_test_fault:
        square = build_magic_square(1.0, FloatBackend())
        grid = [list(r) for r in square.grid]
        grid[0][0] = identity_word(2, FloatBackend())
        check("fault-injection", MagicSquare(tuple(tuple(r) for r in grid)))

    payload = {"passed": overall, "checks": records}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "contextuality.json"), payload)
    if args.human:
        for rec in records:
            status = "pass" if rec["passed"] else "FAIL"
            print(f"alpha={rec['alpha']}: {status} (classical assignments: "
                  f"{rec['classical_assignments']})")
        print("overall:", "pass" if overall else "FAIL")
    else:
        print(json.dumps(payload, sort_keys=True))
    if args.self_test_fault:
        # fault injection must be detected: success means the last check failed
        return EXIT_OK if not records[-1]["passed"] and all(
            r["passed"] for r in records[:-1]
        ) else EXIT_FAIL
    return EXIT_OK if overall else EXIT_FAIL


# -- gen-task -----------------------------------------------------------------------


def cmd_gen_task(args) -> int:
    cfg = load_config(args.config, {"task": TASK_FIELDS, "io": IO_FIELDS})
    task, io = cfg["task"], cfg["io"]
    seed = args.seed if args.seed is not None else task["seed"]
    out_dir = args.out or io["out"]
    os.makedirs(out_dir, exist_ok=True)
    instances = taskgen.gen_dataset(
        task["n"],
        task["k"],
        task["count"],
        seed,
        init_state=task["init_state"],
        modified=task["modified"],
        adversarial_triples=task["adversarial_triples"],
        workers=_workers(),
    )
    path = os.path.join(out_dir, "dataset.jsonl")
    taskgen.write_dataset(instances, path)
    summary = {
        "instances": len(instances),
        "plain": task["count"],
        "triples": task["adversarial_triples"],
        "path": path,
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# -- train ---------------------------------------------------------------------------


def _load_corpus(io_cfg):
    if io_cfg["corpus"] == "bundled":
        pairs = corpus_mod.toy_corpus()
    else:
        pairs = corpus_mod.load_pairs_tsv(io_cfg["corpus"])
    if io_cfg["max_pairs"]:
        pairs = pairs[: io_cfg["max_pairs"]]
    return pairs


def cmd_train(args) -> int:
    cfg = load_config(
        args.config,
        {"model": MODEL_FIELDS, "train": TRAIN_FIELDS, "io": IO_FIELDS},
    )
    model_cfg, train_cfg, io = cfg["model"], cfg["train"], cfg["io"]
    seed = args.seed if args.seed is not None else train_cfg["seed"]
    out_dir = args.out or io["out"]
    os.makedirs(out_dir, exist_ok=True)
    pairs = _load_corpus(io)
    vocab = corpus_mod.build_vocab([s for p in pairs for s in p])
    config = seq2seq.TrainConfig(
        n=model_cfg["n"],
        cell_kind=model_cfg["cell_kind"],
        epochs=train_cfg["epochs"],
        batch_size=train_cfg["batch_size"],
        split=train_cfg["split"],
        lr=train_cfg["lr"],
        beta1=train_cfg["beta1"],
        beta2=train_cfg["beta2"],
        eps=train_cfg["eps"],
        seed=seed,
        squeeze_scale=train_cfg["squeeze_scale"],
        ridge=train_cfg["ridge"],
    )
    model = seq2seq.Model(vocab, config)
    log = print if args.human else None
    history = seq2seq.train(model, pairs, config, log=log)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    seq2seq.write_metrics_csv(history, metrics_path)
    seq2seq.save_checkpoint(model, os.path.join(out_dir, "checkpoint"))
    final = [h for h in history if h["split"] == "test"][-1]
    print(json.dumps({"metrics": metrics_path, "final_test_ce": final["cross_entropy"],
                      "param_count": model.cell_param_count()}, sort_keys=True))
    return EXIT_OK


# -- separation -----------------------------------------------------------------------


def cmd_separation(args) -> int:
    cfg = load_config(args.config, {"separation": SEPARATION_FIELDS, "io": IO_FIELDS})
    sep, io = cfg["separation"], cfg["io"]
    seed = args.seed if args.seed is not None else sep["seed"]
    out_dir = args.out or io["out"]
    os.makedirs(out_dir, exist_ok=True)
    config = SeparationConfig(
        n=sep["n"],
        triples_train=sep["triples_train"],
        triples_eval=sep["triples_eval"],
        dims=tuple(sep["dims"]),
        epochs=sep["epochs"],
        batch_size=sep["batch_size"],
        lr=sep["lr"],
        seed=seed,
        tol=sep["tol"],
    )
    result = run_separation(config, log=print if args.human else None)
    csv_path = os.path.join(out_dir, "separation.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["latent_dim", "cell_kind", "inconsistency_rate"])
        writer.writeheader()
        for row in result["rows"]:
            writer.writerow(row)
    _write_json(os.path.join(out_dir, "separation_report.json"), result)
    print(json.dumps({"csv": csv_path, "rows": result["rows"]}, sort_keys=True))
    return EXIT_OK


# -- eval -----------------------------------------------------------------------------


def cmd_eval(args) -> int:
    if args.dataset.endswith(".jsonl"):
        instances = taskgen.read_dataset(args.dataset)
        n_ok = 0
        for inst in instances:
            rep = taskgen.consistency_check(inst, [s.value for s in inst.transcript],
                                            tol=args.tol)
            n_ok += int(rep.consistent)
        payload = {
            "instances": len(instances),
            "consistent": n_ok,
            "consistent_fraction": n_ok / len(instances) if instances else 1.0,
        }
        print(json.dumps(payload, sort_keys=True))
        return EXIT_OK
    if not args.checkpoint:
        print("eval on a sentence-pair file requires --checkpoint", file=sys.stderr)
        return EXIT_USAGE
    model, _ = seq2seq.load_checkpoint(args.checkpoint)
    pairs = corpus_mod.load_pairs_tsv(args.dataset)
    encoded = seq2seq.encode_pairs(model.vocab, pairs)
    ce = seq2seq.evaluate_ce(model, encoded, model.config.batch_size)
    print(json.dumps({"cross_entropy": ce, "pairs": len(pairs)}, sort_keys=True))
    return EXIT_OK


# -- gen-corpus -----------------------------------------------------------------------


def cmd_gen_corpus(args) -> int:
    pairs = corpus_mod.toy_corpus()
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "toy_corpus.tsv")
    corpus_mod.save_pairs_tsv(pairs, path)
    print(json.dumps({"pairs": len(pairs), "path": path}, sort_keys=True))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crnn-sim",
        description="CV stabilizer oracle, task generation, and recurrent-model experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-contextuality", help="magic-square verification suite")
    p.add_argument("--alphas", default="", help="comma-separated float alphas")
    p.add_argument("--random-alphas", type=int, default=100)
    p.add_argument("--backend", choices=["exact", "float"], default="exact")
    p.add_argument("--self-test-fault", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="")
    p.add_argument("--human", action="store_true")
    p.set_defaults(func=cmd_verify_contextuality)

    p = sub.add_parser("gen-task", help="generate a task dataset (JSONL)")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_gen_task)

    p = sub.add_parser("train", help="train a translation model")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="")
    p.add_argument("--human", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("separation", help="memory-separation experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="")
    p.add_argument("--human", action="store_true")
    p.set_defaults(func=cmd_separation)

    p = sub.add_parser("eval", help="evaluate a checkpoint or score a dataset")
    p.add_argument("--checkpoint", default="")
    p.add_argument("--dataset", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--human", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-corpus", help="write the bundled toy corpus as TSV")
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_gen_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
