"""Memory-separation experiment: classical responders on adversarial triples.

A responder reads the (n+2) x 2n input rows of an instance one row per
step and predicts the measurement outcome of each step: a real value for
the first n quadrature rows, a phase (as a cos/sin pair) for the final
two rows.  Responders are GRU cells of sweeping hidden width trained by
regression on oracle transcripts; the oracle itself replays the tableau
and is consistent by construction.

Scoring replays each predicted transcript through ``consistency_check``:
a triple counts as inconsistent when any of its three instances has a
forced step the responder misses, at the experiment tolerance.  The
tolerance is far looser than the oracle replay tolerance: a regression
model never reproduces real-valued forced outcomes to 1e-6, and the
forced suffix answers the triples certify are separated by at least the
generation margin, so a loose tolerance keeps the score honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .cells import GRU, gru_step, init_gru
from .seq2seq import Adam
from .taskgen import AdversarialTriple, TaskInstance, consistency_check, gen_adversarial_triple


@dataclass
class SeparationConfig:
    n: int = 6
    triples_train: int = 120
    triples_eval: int = 200
    dims: Tuple[int, ...] = (4, 8, 16, 40)
    epochs: int = 40
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0
    margin: float = math.pi / 4
    tol: float = 0.15           # scoring tolerance for model outputs
    input_clip: float = 20.0    # clip raw rows fed to the responder

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if min(self.triples_train, self.triples_eval) < 1:
            raise ValueError("need at least one triple per split")


def gen_triples(n: int, count: int, seed: int, margin: float) -> List[AdversarialTriple]:
    out = []
    for i in range(count):
        rng = np.random.default_rng((seed, 2, i))
        out.append(gen_adversarial_triple(n, rng, margin=margin))
    return out


class Responder:
    """GRU regression model over instance rows."""

    def __init__(self, n: int, hidden: int, seed: int, clip: float):
        rng = np.random.default_rng(seed)
        self.n = n
        self.hidden = hidden
        self.clip = clip
        self.params = init_gru(hidden, 2 * n, rng)
        self.head_W = ad.parameter(ad.glorot_uniform((3, hidden), rng))
        self.head_b = ad.parameter(np.zeros(3))
        self.h0 = rng.normal(size=hidden)

    def trainable(self):
        return self.params.trainable() + [self.head_W, self.head_b]

    def _features(self, inputs: np.ndarray) -> np.ndarray:
        return np.clip(inputs, -self.clip, self.clip)

    def forward(self, batch_inputs: np.ndarray):
        """batch_inputs: (B, T, 2n) -> predictions (B, T, 3)."""
        B, T, _ = batch_inputs.shape
        h = Tensor(np.broadcast_to(self.h0, (B, self.hidden)).copy())
        outs = []
        for t in range(T):
            x = Tensor(self._features(batch_inputs[:, t, :]))
            h, y = gru_step(h, self.params, x)
            pred = ad.add(ad.matmul(y, ad.transpose(self.head_W)), self.head_b)
            outs.append(ad.reshape(pred, (B, 1, 3)))
        return ad.concat(outs, axis=1)

    def predict_transcript(self, instance: TaskInstance) -> List[float]:
        preds = self.forward(instance.inputs[None, :, :]).data[0]
        n = instance.n
        values = []
        for i in range(instance.n + instance.k):
            if i < n:
                values.append(float(preds[i, 0]))
            else:
                values.append(float(math.atan2(preds[i, 2], preds[i, 1]) % (2 * math.pi)))
        return values


def _targets(instances: Sequence[TaskInstance]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack (inputs, targets, weights): targets (B, T, 3) carrying value or
    (cos, sin); weights mask the active components."""
    B = len(instances)
    T = instances[0].n + instances[0].k
    X = np.stack([inst.inputs for inst in instances])
    Yt = np.zeros((B, T, 3))
    Wt = np.zeros((B, T, 3))
    for b, inst in enumerate(instances):
        for i, step in enumerate(inst.transcript):
            if i < inst.n:
                Yt[b, i, 0] = step.value
                Wt[b, i, 0] = 1.0
            else:
                Yt[b, i, 1] = math.cos(step.value)
                Yt[b, i, 2] = math.sin(step.value)
                Wt[b, i, 1] = Wt[b, i, 2] = 1.0
    return X, Yt, Wt


def train_responder(
    responder: Responder,
    triples: Sequence[AdversarialTriple],
    epochs: int,
    batch_size: int,
    lr: float,
    seed: int,
    log=None,
) -> List[float]:
    instances = [inst for t in triples for inst in t.instances]
    X, Yt, Wt = _targets(instances)
    opt = Adam(responder.trainable(), lr=lr)
    rng = np.random.default_rng(seed)
    losses = []
    for epoch in range(epochs):
        order = rng.permutation(len(instances))
        total, batches = 0.0, 0
        for i in range(0, len(order), batch_size):
            idx = order[i : i + batch_size]
            opt.zero_grad()
            preds = responder.forward(X[idx])
            diff = ad.add(preds, Tensor(-Yt[idx]))
            sq = ad.mul(diff, diff)
            loss = ad.scale(ad.tsum(ad.mul(sq, Tensor(Wt[idx]))), 1.0 / max(1.0, Wt[idx].sum()))
            loss.backward()
            opt.step()
            total += float(loss.data)
            batches += 1
        losses.append(total / batches)
        if log:
            log(f"dim {responder.hidden} epoch {epoch + 1}: mse={losses[-1]:.5f}")
    return losses


def inconsistency_rate(
    predict, triples: Sequence[AdversarialTriple], tol: float
) -> float:
    """Fraction of triples where at least one instance's predicted
    transcript fails consistency at the given tolerance."""
    bad = 0
    for triple in triples:
        ok = True
        for inst in triple.instances:
            values = predict(inst)
            if not consistency_check(inst, values, tol=tol).consistent:
                ok = False
                break
        if not ok:
            bad += 1
    return bad / len(triples)


def forced_step_accuracy(
    predict, triples: Sequence[AdversarialTriple], tol: float
) -> float:
    """Fraction of forced steps the responder answers within tol (a finer
    capacity diagnostic than the all-or-nothing triple rate)."""
    hit = total = 0
    for triple in triples:
        for inst in triple.instances:
            values = predict(inst)
            report = consistency_check(inst, values, tol=tol)
            for verdict in report.steps:
                if verdict.forced:
                    total += 1
                    hit += int(verdict.ok)
    return hit / total if total else 1.0


def run_translation_ordering(
    ns: Sequence[int] = (10, 18, 26),
    seeds: Sequence[int] = (0, 1, 2),
    epochs_by_n: Dict[int, int] = None,
    kinds: Sequence[str] = ("crnn", "gaussian"),
    gru_at: Sequence[int] = (26,),
    max_pairs: int = 0,
    log=None,
) -> Dict:
    """Train matched-parameter models on the bundled corpus and report the
    median-of-seeds final test cross entropy per (kind, n).

    The larger models need more epochs to converge, so the schedule is
    per-n; medians are over seeds.  GRU runs (reported, no ordering
    asserted) use the width that matches the crnn parameter budget.
    """
    from .corpus import build_vocab, toy_corpus
    from .seq2seq import Model, TrainConfig, train

    epochs_by_n = epochs_by_n or {10: 14, 18: 14, 26: 30}
    pairs = toy_corpus()
    if max_pairs:
        pairs = pairs[:max_pairs]
    vocab = build_vocab([s for p in pairs for s in p])
    results = {"runs": [], "medians": {}}
    for n in ns:
        run_kinds = list(kinds) + (["gru"] if n in gru_at else [])
        for kind in run_kinds:
            finals = []
            for seed in seeds:
                cfg = TrainConfig(
                    n=n, cell_kind=kind, epochs=epochs_by_n.get(n, 20),
                    batch_size=64, seed=seed,
                )
                model = Model(vocab, cfg)
                history = train(model, pairs, cfg)
                final_test = [h["cross_entropy"] for h in history if h["split"] == "test"][-1]
                final_train = [h["cross_entropy"] for h in history if h["split"] == "train"][-1]
                finals.append(final_test)
                results["runs"].append(
                    {
                        "n": n,
                        "cell_kind": kind,
                        "seed": seed,
                        "param_count": model.cell_param_count(),
                        "final_test_ce": final_test,
                        "final_train_ce": final_train,
                    }
                )
                if log:
                    log(f"n={n} {kind} seed={seed}: test_ce={final_test:.4f}")
            results["medians"][f"{kind}@{n}"] = float(np.median(finals))
    return results


def run_separation(config: SeparationConfig, log=None) -> Dict:
    """Full sweep; returns {'rows': [...], 'details': {...}} where rows
    follow the latent_dim,cell_kind,inconsistency_rate schema."""
    train_triples = gen_triples(config.n, config.triples_train, config.seed, config.margin)
    eval_triples = gen_triples(config.n, config.triples_eval, config.seed + 1, config.margin)

    rows = []
    details = {"train_mse": {}, "forced_step_accuracy": {}, "n": config.n, "tol": config.tol}

    # oracle replay: scoring its own transcripts is consistent by definition
    oracle_rate = inconsistency_rate(
        lambda inst: [s.value for s in inst.transcript], eval_triples, tol=1e-6
    )
    rows.append({"latent_dim": config.n, "cell_kind": "crnn_oracle",
                 "inconsistency_rate": oracle_rate})
    details["forced_step_accuracy"]["crnn_oracle"] = 1.0

    for dim in config.dims:
        responder = Responder(config.n, dim, config.seed + dim, config.input_clip)
        losses = train_responder(
            responder, train_triples, config.epochs, config.batch_size,
            config.lr, config.seed + 1000 + dim, log=log,
        )
        details["train_mse"][str(dim)] = losses[-1]
        rate = inconsistency_rate(responder.predict_transcript, eval_triples, config.tol)
        acc = forced_step_accuracy(responder.predict_transcript, eval_triples, config.tol)
        details["forced_step_accuracy"][str(dim)] = acc
        rows.append({"latent_dim": dim, "cell_kind": GRU, "inconsistency_rate": rate})
        if log:
            log(f"dim {dim}: inconsistency_rate={rate:.3f} forced_step_accuracy={acc:.3f}")
    return {"rows": rows, "details": details}
