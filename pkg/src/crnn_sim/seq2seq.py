"""Encoder-decoder training harness over the recurrent cells.

One cell instance is shared between the encoder and the decoder.  A shared
vocabulary covers both languages; the embedding table and the output
projection are trained together with the cell.  Training minimizes the
teacher-forced forward empirical cross entropy with Adam
(lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-7 by default); decoding is greedy
with the produced token's embedding fed back as the next input, capped at
20 tokens.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .cells import CELL_KINDS, CRNN, GAUSSIAN, Cell
from .corpus import BEGIN, END, PAD, Vocabulary, build_vocab
from .gaussian_sim import DEFAULT_SQUEEZE_SCALE

METRICS_HEADER = ["epoch", "split", "cell_kind", "n", "param_count", "cross_entropy", "seed"]
MAX_DECODE_LEN = 20


class TrainError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    n: int
    cell_kind: str = CRNN
    epochs: int = 80
    batch_size: int = 64
    split: float = 0.8
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    seed: int = 0
    squeeze_scale: float = DEFAULT_SQUEEZE_SCALE
    ridge: float = 1e-6
    gru_match_params: bool = True   # pick GRU width to match the crnn budget
    max_len: int = MAX_DECODE_LEN

    def __post_init__(self):
        if self.n <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("n, epochs and batch_size must be positive")
        if not (0.0 < self.split < 1.0):
            raise ValueError("split fraction must be in (0, 1)")
        if self.cell_kind not in CELL_KINDS:
            raise ValueError(f"unknown cell kind {self.cell_kind!r}")


class Model:
    """Embedding + shared encoder/decoder cell + output projection."""

    def __init__(self, vocab: Vocabulary, config: TrainConfig):
        from .cells import GRU, gru_width_for

        self.vocab = vocab
        self.config = config
        rng = np.random.default_rng(config.seed)
        n = config.n
        latent = n
        if config.cell_kind == GRU and config.gru_match_params:
            latent = gru_width_for(n, n)
        self.cell = Cell(
            config.cell_kind, latent, n, rng,
            squeeze_scale=config.squeeze_scale, ridge=config.ridge,
        )
        self.embedding = ad.parameter(rng.normal(size=(vocab.size, n)) / math.sqrt(n))
        out_dim = self.cell.output_dim
        self.W_out = ad.parameter(ad.glorot_uniform((vocab.size, out_dim), rng))
        self.b_out = ad.parameter(np.zeros(vocab.size))

    def trainable(self) -> List[Tensor]:
        return [self.embedding, *self.cell.trainable(), self.W_out, self.b_out]

    def cell_param_count(self) -> int:
        return self.cell.param_count()

    # -- forward -----------------------------------------------------------

    def _encode(self, src: np.ndarray):
        batch, slen = src.shape
        state = self.cell.initial_state(batch)
        for t in range(slen):
            ids = src[:, t]
            x = ad.embedding(self.embedding, ids)
            new_state, _ = self.cell.step(state, x)
            mask = Tensor((ids != PAD).astype(float)[:, None])
            state = self.cell.blend_state(mask, new_state, state)
        return state

    def _logits(self, y: Tensor) -> Tensor:
        return ad.add(ad.matmul(y, ad.transpose(self.W_out)), self.b_out)

    def forward_loss(self, src: np.ndarray, tgt: np.ndarray):
        """Teacher-forced loss; tgt rows end with END then PAD padding.
        Returns (loss Tensor, logits array list)."""
        if src.shape[0] != tgt.shape[0]:
            raise TrainError("source and target batches differ in size")
        batch, tlen = tgt.shape
        state = self._encode(src)
        dec_in = np.concatenate([np.full((batch, 1), BEGIN), tgt[:, :-1]], axis=1)
        step_logits = []
        losses = []
        for t in range(tlen):
            x = ad.embedding(self.embedding, dec_in[:, t])
            new_state, y = self.cell.step(state, x)
            mask_arr = (tgt[:, t] != PAD).astype(float)
            state = self.cell.blend_state(Tensor(mask_arr[:, None]), new_state, state)
            logits = self._logits(y)
            step_logits.append(logits)
            if mask_arr.any():
                loss_t, _ = ad.softmax_cross_entropy(logits, tgt[:, t], mask_arr)
                losses.append((loss_t, float(mask_arr.sum())))
        total = sum(w for _, w in losses)
        loss = None
        for loss_t, w in losses:
            term = ad.scale(loss_t, w / total)
            loss = term if loss is None else ad.add(loss, term)
        return loss, step_logits

    def greedy_decode(self, src_ids: Sequence[int], max_len: int = MAX_DECODE_LEN) -> List[int]:
        src = np.asarray([list(src_ids) if len(src_ids) else [END]])
        state = self._encode(src)
        out = []
        tok = BEGIN
        for _ in range(max_len):
            x = ad.embedding(self.embedding, np.array([tok]))
            state, y = self.cell.step(state, x)
            logits = self._logits(y)
            tok = int(np.argmax(logits.data[0]))
            if tok == END:
                break
            out.append(tok)
        return out


# -- optimizer -----------------------------------------------------------------


def adam_step(param, grad, m, v, t, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
    """One bias-corrected Adam update; mutates and returns (param, m, v)."""
    m[...] = beta1 * m + (1 - beta1) * grad
    v[...] = beta2 * v + (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    param[...] = param - lr * m_hat / (np.sqrt(v_hat) + eps)
    return param, m, v


class Adam:
    def __init__(self, params: List[Tensor], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0

    def step(self):
        self.t += 1
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            adam_step(p.data, p.grad, m, v, self.t, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


# -- data plumbing ---------------------------------------------------------------


def encode_pairs(vocab: Vocabulary, pairs, max_len: int = MAX_DECODE_LEN):
    """(source, target) texts -> (src ids without framing, tgt ids ending in
    END), truncated to max_len."""
    out = []
    for source, target in pairs:
        s = vocab.encode(source)[:max_len]
        t = (vocab.encode(target) + [END])[: max_len + 1]
        if t[-1] != END:
            t[-1] = END
        out.append((s, t))
    return out


def pad_batch(seqs: List[List[int]]) -> np.ndarray:
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), PAD, dtype=int)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def split_pairs(pairs, split: float, seed: int):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))
    cut = int(round(split * len(pairs)))
    train = [pairs[i] for i in order[:cut]]
    test = [pairs[i] for i in order[cut:]]
    return train, test


def evaluate_ce(model: Model, encoded, batch_size: int) -> float:
    """Teacher-forced forward cross entropy, token-averaged."""
    total, weight = 0.0, 0.0
    for i in range(0, len(encoded), batch_size):
        chunk = encoded[i : i + batch_size]
        src = pad_batch([s for s, _ in chunk])
        tgt = pad_batch([t for _, t in chunk])
        loss, _ = model.forward_loss(src, tgt)
        w = float((tgt != PAD).sum())
        total += float(loss.data) * w
        weight += w
    return total / weight


def train(
    model: Model,
    pairs,
    config: TrainConfig,
    log=None,
) -> List[Dict]:
    """Train on (source, target) texts; returns per-epoch metric records
    for both splits (schema: METRICS_HEADER)."""
    train_pairs, test_pairs = split_pairs(pairs, config.split, config.seed)
    enc_train = encode_pairs(model.vocab, train_pairs, config.max_len)
    enc_test = encode_pairs(model.vocab, test_pairs, config.max_len)
    opt = Adam(model.trainable(), config.lr, config.beta1, config.beta2, config.eps)
    rng = np.random.default_rng(config.seed + 1)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(enc_train))
        running, weight = 0.0, 0.0
        for i in range(0, len(order), config.batch_size):
            chunk = [enc_train[j] for j in order[i : i + config.batch_size]]
            src = pad_batch([s for s, _ in chunk])
            tgt = pad_batch([t for _, t in chunk])
            opt.zero_grad()
            loss, _ = model.forward_loss(src, tgt)
            val = float(loss.data)
            if not math.isfinite(val):
                raise TrainError(
                    f"loss diverged at epoch {epoch} (batch {i // config.batch_size}): {val}"
                )
            loss.backward()
            opt.step()
            w = float((tgt != PAD).sum())
            running += val * w
            weight += w
        test_ce = evaluate_ce(model, enc_test, config.batch_size) if enc_test else float("nan")
        for split_name, ce in (("train", running / weight), ("test", test_ce)):
            history.append(
                {
                    "epoch": epoch,
                    "split": split_name,
                    "cell_kind": config.cell_kind,
                    "n": config.n,
                    "param_count": model.cell_param_count(),
                    "cross_entropy": ce,
                    "seed": config.seed,
                }
            )
        if log:
            log(f"epoch {epoch}: train_ce={running / weight:.4f} test_ce={test_ce:.4f}")
    return history


def write_metrics_csv(history: List[Dict], path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_HEADER)
        writer.writeheader()
        for row in history:
            writer.writerow({k: row[k] for k in METRICS_HEADER})


# -- checkpoints -----------------------------------------------------------------


def _named_tensors(model: Model) -> List[Tuple[str, Tensor]]:
    named = [("embedding", model.embedding), ("W_out", model.W_out), ("b_out", model.b_out)]
    for i, p in enumerate(model.cell.trainable()):
        named.append((f"cell.{i}", p))
    if model.cell.consts is not None:
        c = model.cell.consts
        named += [
            ("consts.h_W", c.h_W), ("consts.h_b", c.h_b),
            ("consts.r_W", c.r_W), ("consts.r_b", c.r_b),
        ]
    named.append(("lambda0", Tensor(model.cell.lambda0)))
    return named


def save_checkpoint(model: Model, directory, optimizer: Optional[Adam] = None):
    os.makedirs(directory, exist_ok=True)
    named = _named_tensors(model)
    blob = np.concatenate([t.data.reshape(-1) for _, t in named])
    manifest = {
        "cell_kind": model.config.cell_kind,
        "n": model.config.n,
        "m": model.cell.m,
        "latent": model.cell.n,
        "seed": model.config.seed,
        "shapes": [[name, list(t.data.shape)] for name, t in named],
        "vocab": model.vocab.id_to_token,
        "config": asdict(model.config),
    }
    if optimizer is not None:
        manifest["adam_t"] = optimizer.t
        opt_blob = np.concatenate(
            [a.reshape(-1) for a in optimizer.m] + [a.reshape(-1) for a in optimizer.v]
        )
        opt_blob.tofile(os.path.join(directory, "adam.bin"))
    blob.tofile(os.path.join(directory, "params.bin"))
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True)


def load_checkpoint(directory) -> Tuple[Model, Optional[Adam]]:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    vocab = Vocabulary(
        {t: i for i, t in enumerate(manifest["vocab"])}, list(manifest["vocab"])
    )
    config = TrainConfig(**manifest["config"])
    model = Model(vocab, config)
    blob = np.fromfile(os.path.join(directory, "params.bin"))
    named = _named_tensors(model)
    offset = 0
    by_name = dict(named)
    for name, shape in manifest["shapes"]:
        size = int(np.prod(shape)) if shape else 1
        chunk = blob[offset : offset + size].reshape(shape)
        offset += size
        if name == "lambda0":
            model.cell.lambda0 = chunk.copy()
        else:
            by_name[name].data[...] = chunk
    optimizer = None
    if "adam_t" in manifest:
        optimizer = Adam(
            model.trainable(), config.lr, config.beta1, config.beta2, config.eps
        )
        opt_blob = np.fromfile(os.path.join(directory, "adam.bin"))
        optimizer.t = manifest["adam_t"]
        offset = 0
        for arr in optimizer.m + optimizer.v:
            size = arr.size
            arr[...] = opt_blob[offset : offset + size].reshape(arr.shape)
            offset += size
    return model, optimizer
