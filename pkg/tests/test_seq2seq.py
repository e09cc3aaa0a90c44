import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnn_sim import autodiff as ad
from crnn_sim.cells import CRNN, GAUSSIAN, GRU, ORNN, param_count
from crnn_sim.corpus import (
    BEGIN,
    END,
    PAD,
    UNK,
    CorpusError,
    Vocabulary,
    build_vocab,
    load_pairs_tsv,
    save_pairs_tsv,
    tokenize,
    toy_corpus,
)
from crnn_sim.seq2seq import (
    Adam,
    Model,
    TrainConfig,
    adam_step,
    encode_pairs,
    evaluate_ce,
    pad_batch,
    load_checkpoint,
    save_checkpoint,
    train,
)


def small_corpus():
    return [
        ("el gato duerme", "the cat sleeps"),
        ("el perro corre", "the dog runs"),
        ("la luna brilla", "the moon shines"),
        ("el sol brilla", "the sun shines"),
        ("un rio largo", "a long river"),
        ("la calle vieja", "the old street"),
        ("el pan fresco", "the fresh bread"),
        ("una silla rota", "a broken chair"),
        ("el fuego arde", "the fire burns"),
        ("la piedra cae", "the stone falls"),
    ]


def vocab_for(pairs):
    return build_vocab([s for p in pairs for s in p])


# -- vocabulary ---------------------------------------------------------------


def test_vocab_deterministic():
    pairs = small_corpus()
    v1 = vocab_for(pairs)
    v2 = vocab_for(pairs)
    assert v1.id_to_token == v2.id_to_token
    assert v1.token_to_id["the"] == 4  # most frequent after specials


def test_vocab_overflow_maps_to_unk():
    sentences = [f"tok{i}" for i in range(5200)]
    # repeat early tokens so ranking is stable
    v = build_vocab(sentences + ["tok0 tok1"])
    assert v.size == 5000 + 4
    ids = v.encode("tok0 " + sentences[-1])
    assert ids[0] != UNK and ids[1] == UNK


def test_vocab_empty_corpus_rejected():
    with pytest.raises(CorpusError):
        build_vocab([])


@given(st.integers(0, 9))
def test_vocab_roundtrip(idx):
    pairs = small_corpus()
    v = vocab_for(pairs)
    text = pairs[idx][0]
    assert v.decode(v.encode(text, frame=True)) == " ".join(tokenize(text))


def test_tsv_roundtrip(tmp_path):
    pairs = small_corpus()
    path = tmp_path / "pairs.tsv"
    save_pairs_tsv(pairs, path)
    assert load_pairs_tsv(path) == pairs


def test_toy_corpus_deterministic_and_contextual():
    c1 = toy_corpus()
    c2 = toy_corpus()
    assert c1 == c2
    assert len(c1) == 2000
    # homonym translations differ by context
    by_src = dict(c1)
    senses = set()
    for src, tgt in c1:
        if "vela" in tokenize(src):
            for tok in ("candle", "sail"):
                if tok in tokenize(tgt):
                    senses.add(tok)
    assert senses == {"candle", "sail"}


# -- losses and optimizer -------------------------------------------------------


def test_forward_loss_uniform_logits():
    pairs = small_corpus()
    v = vocab_for(pairs)
    cfg = TrainConfig(n=4, cell_kind=GRU, epochs=1, batch_size=4, seed=0)
    model = Model(v, cfg)
    model.W_out.data[...] = 0.0
    model.b_out.data[...] = 0.0
    enc = encode_pairs(v, pairs[:4])
    src = pad_batch([s for s, _ in enc])
    tgt = pad_batch([t for _, t in enc])
    loss, _ = model.forward_loss(src, tgt)
    assert abs(float(loss.data) - math.log(v.size)) < 1e-9


def test_forward_loss_onehot_logits_near_zero():
    pairs = small_corpus()[:2]
    v = vocab_for(pairs)
    cfg = TrainConfig(n=3, cell_kind=GRU, epochs=1, batch_size=2, seed=0)
    model = Model(v, cfg)
    enc = encode_pairs(v, pairs)
    src = pad_batch([s for s, _ in enc])
    tgt = pad_batch([t for _, t in enc])
    # cheat head: route a huge logit to the gold token independent of input
    model.W_out.data[...] = 0.0
    model.b_out.data[...] = -50.0
    loss0, _ = model.forward_loss(src, tgt)
    assert float(loss0.data) > 0  # uniform-ish baseline sanity

    # construct logits directly: bias can only prefer one token, so use the
    # fused op on its own for the one-hot case
    logits = np.full((4, v.size), -40.0)
    gold = np.array([5, 6, 7, 8])
    logits[np.arange(4), gold] = 40.0
    loss, _ = ad.softmax_cross_entropy(ad.Tensor(logits), gold)
    assert float(loss.data) < 1e-12


def test_adam_first_step_size():
    p = np.zeros(3)
    m = np.zeros(3)
    v = np.zeros(3)
    adam_step(p, np.ones(3), m, v, t=1, lr=1e-3, eps=1e-7)
    assert np.allclose(p, -1e-3, atol=1e-9)


def test_adam_zero_gradient_no_change():
    p = np.full(3, 0.7)
    adam_step(p, np.zeros(3), np.zeros(3), np.zeros(3), t=1)
    assert np.allclose(p, 0.7)


def test_adam_quadratic_bowl_convergence():
    rng = np.random.default_rng(0)
    x = ad.parameter(rng.normal(size=4) * 3)
    opt = Adam([x], lr=1e-2)
    for _ in range(5000):
        opt.zero_grad()
        loss = ad.tsum(ad.mul(x, x))
        loss.backward()
        opt.step()
    assert np.linalg.norm(x.data) <= 1e-3


# -- training ---------------------------------------------------------------------


@pytest.mark.parametrize("kind", [CRNN, GAUSSIAN, GRU, ORNN])
def test_loss_decreases_all_cells(kind):
    pairs = small_corpus()
    v = vocab_for(pairs)
    cfg = TrainConfig(
        n=4, cell_kind=kind, epochs=25, batch_size=5, seed=1,
        squeeze_scale=1.0, split=0.8,
    )
    model = Model(v, cfg)
    history = train(model, pairs, cfg)
    first = [h["cross_entropy"] for h in history if h["split"] == "train"][0]
    last = [h["cross_entropy"] for h in history if h["split"] == "train"][-1]
    assert last < first, (kind, first, last)


def test_train_determinism():
    pairs = small_corpus()
    v = vocab_for(pairs)

    def run():
        cfg = TrainConfig(n=4, cell_kind=GRU, epochs=3, batch_size=4, seed=7)
        model = Model(v, cfg)
        return train(model, pairs, cfg)

    assert run() == run()


def test_full_model_gradient_check():
    pairs = small_corpus()[:2]
    v = vocab_for(pairs)
    cfg = TrainConfig(n=3, cell_kind=CRNN, epochs=1, batch_size=2, seed=3,
                      squeeze_scale=1.0, ridge=0.0)
    model = Model(v, cfg)
    enc = encode_pairs(v, pairs)
    src = pad_batch([s for s, _ in enc])
    tgt = pad_batch([t for _, t in enc])

    def f():
        loss, _ = model.forward_loss(src, tgt)
        return loss

    err = ad.check_gradients(f, model.trainable())
    assert err <= 1e-4, err


def test_param_matching_harness():
    pairs = small_corpus()
    v = vocab_for(pairs)
    n = 26
    crnn = Model(v, TrainConfig(n=n, cell_kind=CRNN, epochs=1, seed=0))
    gaus = Model(v, TrainConfig(n=n, cell_kind=GAUSSIAN, epochs=1, seed=0))
    gru = Model(v, TrainConfig(n=n, cell_kind=GRU, epochs=1, seed=0))
    assert crnn.cell_param_count() == gaus.cell_param_count()
    rel = abs(gru.cell_param_count() - crnn.cell_param_count()) / crnn.cell_param_count()
    assert rel <= 0.025


def test_softmax_rows_sum_to_one():
    pairs = small_corpus()
    v = vocab_for(pairs)
    model = Model(v, TrainConfig(n=4, cell_kind=GRU, epochs=1, seed=0))
    enc = encode_pairs(v, pairs[:3])
    src = pad_batch([s for s, _ in enc])
    tgt = pad_batch([t for _, t in enc])
    _, logits = model.forward_loss(src, tgt)
    from crnn_sim.autodiff import softmax

    for lg in logits:
        sums = softmax(lg.data).sum(axis=-1)
        assert np.max(np.abs(sums - 1.0)) < 1e-9


def test_overfit_single_pair_and_decode():
    pairs = [("el gato duerme", "the cat sleeps")]
    v = build_vocab([s for p in pairs for s in p])
    cfg = TrainConfig(n=6, cell_kind=GRU, epochs=400, batch_size=1, seed=2,
                      split=0.5, lr=1e-2)
    model = Model(v, cfg)
    enc = encode_pairs(v, pairs)
    opt = Adam(model.trainable(), cfg.lr)
    src = pad_batch([enc[0][0]])
    tgt = pad_batch([enc[0][1]])
    for _ in range(cfg.epochs):
        opt.zero_grad()
        loss, _ = model.forward_loss(src, tgt)
        loss.backward()
        opt.step()
    out = model.greedy_decode(enc[0][0])
    assert v.decode(out) == "the cat sleeps"
    # decode determinism
    assert model.greedy_decode(enc[0][0]) == out


def test_decode_empty_source_terminates():
    pairs = small_corpus()
    v = vocab_for(pairs)
    model = Model(v, TrainConfig(n=4, cell_kind=GRU, epochs=1, seed=0))
    out = model.greedy_decode([])
    assert len(out) <= 20


def test_checkpoint_roundtrip_resumes_identically(tmp_path):
    pairs = small_corpus()
    v = vocab_for(pairs)
    cfg = TrainConfig(n=4, cell_kind=CRNN, epochs=2, batch_size=4, seed=5,
                      squeeze_scale=1.0)
    model = Model(v, cfg)
    enc = encode_pairs(v, pairs)
    src = pad_batch([s for s, _ in enc])
    tgt = pad_batch([t for _, t in enc])
    opt = Adam(model.trainable(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    for _ in range(3):
        opt.zero_grad()
        loss, _ = model.forward_loss(src, tgt)
        loss.backward()
        opt.step()
    save_checkpoint(model, tmp_path / "ckpt", opt)
    model2, opt2 = load_checkpoint(tmp_path / "ckpt")

    def one_step(m, o):
        o.zero_grad()
        loss, _ = m.forward_loss(src, tgt)
        loss.backward()
        o.step()
        loss2, _ = m.forward_loss(src, tgt)
        return float(loss2.data)

    assert one_step(model, opt) == pytest.approx(one_step(model2, opt2), abs=0)
