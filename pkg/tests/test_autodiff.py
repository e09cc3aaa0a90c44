import numpy as np
import pytest

from crnn_sim import autodiff as ad


def rng(seed=0):
    return np.random.default_rng(seed)


def test_add_mul_backward():
    a = ad.parameter([1.0, 2.0])
    b = ad.parameter([3.0, -1.0])
    loss = ad.tsum(ad.mul(ad.add(a, b), b))
    loss.backward()
    assert np.allclose(a.grad, b.data)
    assert np.allclose(b.grad, a.data + 2 * b.data)


def test_matmul_gradcheck():
    r = rng(1)
    A = ad.parameter(r.normal(size=(3, 4)))
    B = ad.parameter(r.normal(size=(4, 2)))

    def f():
        return ad.tsum(ad.mul(ad.matmul(A, B), ad.Tensor(r2)))

    r2 = rng(2).normal(size=(3, 2))
    assert ad.check_gradients(f, [A, B]) < 1e-6


def test_batched_matmul_broadcast():
    r = rng(3)
    A = ad.parameter(r.normal(size=(5, 3, 4)))
    W = ad.parameter(r.normal(size=(4, 4)))
    C = rng(4).normal(size=(5, 3, 4))

    def f():
        return ad.tsum(ad.mul(ad.matmul(A, W), ad.Tensor(C)))

    assert ad.check_gradients(f, [A, W]) < 1e-6


def test_inverse_gradient_identity():
    r = rng(5)
    A = ad.parameter(r.normal(size=(3, 3)) + 3 * np.eye(3))
    C = rng(6).normal(size=(3, 3))

    def f():
        return ad.tsum(ad.mul(ad.inv(A), ad.Tensor(C)))

    assert ad.check_gradients(f, [A]) < 1e-5


def test_batched_inverse_gradcheck():
    r = rng(7)
    A = ad.parameter(r.normal(size=(4, 2, 2)) + 3 * np.eye(2))
    C = rng(8).normal(size=(4, 2, 2))

    def f():
        return ad.tsum(ad.mul(ad.inv(A), ad.Tensor(C)))

    assert ad.check_gradients(f, [A]) < 1e-5


def test_block_diag_and_slicing():
    r = rng(9)
    A = ad.parameter(r.normal(size=(2, 2)))
    B = ad.parameter(r.normal(size=(3, 3)))
    out = ad.block_diag(A, B)
    assert out.shape == (5, 5)
    loss = ad.tsum(out[(slice(2, 5), slice(2, 5))])
    loss.backward()
    assert np.allclose(B.grad, np.ones((3, 3)))
    assert np.allclose(A.grad, np.zeros((2, 2)))


def test_tanh_sigmoid_gradcheck():
    x = ad.parameter(rng(10).normal(size=7))

    def f():
        return ad.tsum(ad.mul(ad.tanh(x), ad.sigmoid(x)))

    assert ad.check_gradients(f, [x]) < 1e-6


def test_embedding_grad():
    table = ad.parameter(rng(11).normal(size=(6, 3)))
    ids = np.array([0, 2, 2, 5])
    loss = ad.tsum(ad.embedding(table, ids))
    loss.backward()
    expect = np.zeros((6, 3))
    for i in ids:
        expect[i] += 1
    assert np.allclose(table.grad, expect)


def test_softmax_cross_entropy_uniform_and_onehot():
    V = 11
    logits = ad.parameter(np.zeros((4, V)))
    targets = np.array([1, 2, 3, 4])
    loss, probs = ad.softmax_cross_entropy(logits, targets)
    assert abs(float(loss.data) - np.log(V)) < 1e-12
    assert np.allclose(probs.sum(axis=-1), 1.0)

    strong = np.full((4, V), -50.0)
    strong[np.arange(4), targets] = 50.0
    loss2, _ = ad.softmax_cross_entropy(ad.parameter(strong), targets)
    assert float(loss2.data) < 1e-6


def test_softmax_cross_entropy_gradcheck():
    r = rng(12)
    logits = ad.parameter(r.normal(size=(3, 5)))
    targets = np.array([0, 3, 2])
    mask = np.array([1.0, 1.0, 0.0])

    def f():
        loss, _ = ad.softmax_cross_entropy(logits, targets, mask)
        return loss

    assert ad.check_gradients(f, [logits]) < 1e-6


def test_rotation_chain_orthogonal():
    r = rng(13)
    n = 5
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    th = ad.parameter(r.normal(size=len(pairs)))
    eye = ad.Tensor(np.eye(n))
    Q = ad.rotation_chain(eye, th, pairs)
    assert np.max(np.abs(Q.data @ Q.data.T - np.eye(n))) < 1e-12


def test_rotation_chain_gradcheck():
    r = rng(14)
    n = 4
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    th = ad.parameter(r.normal(size=len(pairs)))
    h = ad.parameter(r.normal(size=(3, n)))
    C = rng(15).normal(size=(3, n))

    def f():
        return ad.tsum(ad.mul(ad.rotation_chain(h, th, pairs), ad.Tensor(C)))

    assert ad.check_gradients(f, [th, h]) < 1e-6


def test_concat_and_reshape_roundtrip():
    a = ad.parameter(rng(16).normal(size=(2, 3)))
    b = ad.parameter(rng(17).normal(size=(2, 2)))
    out = ad.concat([a, b], axis=1)
    assert out.shape == (2, 5)
    loss = ad.tsum(ad.reshape(out, (10,)))
    loss.backward()
    assert np.allclose(a.grad, np.ones((2, 3)))
    assert np.allclose(b.grad, np.ones((2, 2)))


def test_grad_accumulates_on_reuse():
    x = ad.parameter([2.0])
    y = ad.add(ad.mul(x, x), x)  # x^2 + x
    y.backward(np.ones(1))
    assert np.allclose(x.grad, [5.0])
