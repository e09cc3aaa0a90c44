import math

import numpy as np
import pytest

from crnn_sim import autodiff as ad
from crnn_sim import gkp_lattice
from crnn_sim.autodiff import Tensor
from crnn_sim.cells import (
    CRNN,
    GAUSSIAN,
    GRU,
    ORNN,
    Cell,
    CRNNCellConsts,
    CRNNCellParams,
    crnn_step,
    gaussian_step,
    gru_step,
    gru_width_for,
    init_crnn,
    init_gru,
    init_ornn,
    ornn_step,
    param_count,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def _identity_cellpieces(n, m, batch=1):
    params = CRNNCellParams(
        ad.parameter(np.eye(n + m)),
        ad.parameter(np.zeros((n, m))),
        ad.parameter(np.zeros((m, m))),
    )
    consts = CRNNCellConsts(
        Tensor(np.zeros((m * m, m))),
        Tensor(np.eye(m).reshape(-1)),
        Tensor(np.zeros((m * m, m))),
        Tensor(np.eye(m).reshape(-1)),
        n,
        m,
    )
    state = (
        Tensor(np.broadcast_to(np.eye(n), (batch, n, n)).copy()),
        Tensor(np.broadcast_to(np.eye(n), (batch, n, n)).copy()),
        Tensor(np.zeros((batch, n))),
    )
    return params, consts, state


def test_crnn_identity_propagation():
    n, m = 2, 2
    params, consts, state = _identity_cellpieces(n, m)
    x = Tensor(np.zeros((1, m)))
    (A1, J1, a1), y = crnn_step(state, params, consts, x)
    assert np.allclose(y.data[0, : m * m], np.eye(m).reshape(-1))  # K block
    assert np.allclose(y.data[0, m * m :], 0.0)
    assert np.allclose(A1.data[0], np.eye(n))
    assert np.allclose(J1.data[0], np.eye(n))
    assert np.allclose(a1.data[0], 0.0)


def test_gaussian_limit_zero_lattice_output():
    n, m = 3, 2
    r = rng(1)
    params, consts = init_crnn(n, m, r)
    state = (
        Tensor(np.broadcast_to(2.0 * np.eye(n), (4, n, n)).copy()),
        Tensor(np.zeros((4, n, n))),
        Tensor(r.normal(size=(4, n))),
    )
    x = Tensor(r.normal(size=(4, m)))
    (_, J1, _), y = gaussian_step(state, params, consts, x)
    assert np.allclose(y.data[:, : m * m], 0.0)
    assert np.allclose(J1.data, 0.0)
    # equality with crnn_step under J=K=0
    (_, _, _), y2 = crnn_step(state, params, consts, x, lattice=False)
    assert np.allclose(y.data, y2.data)


def test_gaussian_center_matches_homodyne_mean():
    # the center block of y equals the Gaussian simulator's homodyne mean
    # for the same direct-sum state and W
    from crnn_sim import gaussian_sim

    n, m = 2, 2
    r = rng(7)
    params, consts = init_crnn(n, m, r)
    A0 = 2.0 * np.eye(n) + 0.1
    alpha0 = r.normal(size=n)
    x = r.normal(size=(1, m))
    state = (
        Tensor(A0[None]),
        Tensor(np.zeros((1, n, n))),
        Tensor(alpha0[None]),
    )
    (_, _, _), y = gaussian_step(state, params, consts, Tensor(x))

    fx = params.f_W.data @ x[0]
    alpha1 = alpha0 + np.linalg.solve(A0, fx)
    beta = params.g_W.data @ x[0]
    S = (consts.r_W.data @ x[0] + consts.r_b.data).reshape(m, m)
    U = np.zeros((n + m, n + m))
    U[:n, :n] = A0
    U[n:, n:] = S @ S.T + 1e-9 * np.eye(m)
    g = gaussian_sim.GraphGaussianState(U, c_q=np.concatenate([alpha1, beta]))
    g2 = gaussian_sim.apply_symplectic(g, gaussian_sim.RestrictedSymplectic(params.W.data))
    mean = g2.c_q[n:]
    assert np.max(np.abs(y.data[0, m * m :] - mean)) < 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_crnn_step_equals_lattice_composition(seed):
    # one cell step == apply_symplectic then measure_lattice on the
    # manually built direct-sum state
    n, m = 2, 2
    r = rng(seed)
    params, consts = init_crnn(n, m, r)
    A0 = np.eye(n) * 2 + 0.2 * r.normal(size=(n, n))
    A0 = (A0 + A0.T) / 2 + n * np.eye(n)
    J0 = np.eye(n) + 0.3 * r.normal(size=(n, n))
    alpha0 = r.normal(size=n)
    x = r.normal(size=(1, m))

    state = (Tensor(A0[None]), Tensor(J0[None]), Tensor(alpha0[None]))
    (A1, J1, a1), y = crnn_step(state, params, consts, Tensor(x))

    fx = params.f_W.data @ x[0]
    alpha1 = alpha0 + np.linalg.solve(A0, fx)
    beta = params.g_W.data @ x[0]
    K = (consts.h_W.data @ x[0] + consts.h_b.data).reshape(m, m)
    S = (consts.r_W.data @ x[0] + consts.r_b.data).reshape(m, m)
    U = np.zeros((n + m, n + m))
    U[:n, :n] = A0
    U[n:, n:] = S @ S.T
    L = np.zeros((n + m, n + m))
    L[:n, :n] = J0
    L[n:, n:] = K
    gk = gkp_lattice.GKPLatticeState(U, L, np.concatenate([alpha1, beta]))
    gk = gkp_lattice.apply_symplectic(gk, params.W.data)
    readout, post = gkp_lattice.measure_lattice(gk, list(range(n, n + m)))

    assert np.max(np.abs(y.data[0, : m * m].reshape(m, m) - readout.L_out)) < 1e-12
    assert np.max(np.abs(y.data[0, m * m :] - readout.c_out)) < 1e-12
    assert np.max(np.abs(J1.data[0] - post.J)) < 1e-12
    assert np.max(np.abs(a1.data[0] - post.alpha)) < 1e-12
    # cell A drops the B-block coupling exactly like the projector does
    assert np.max(np.abs(A1.data[0] - post.A)) < 1e-12


def test_gru_zero_weights_halves_state():
    n, m = 3, 2
    params = init_gru(n, m, rng())
    for p in params.trainable():
        p.data[...] = 0.0
    h = Tensor(rng(3).normal(size=(2, n)))
    h2, y = gru_step(h, params, Tensor(np.ones((2, m))))
    assert np.allclose(h2.data, 0.5 * h.data)
    assert y is h2


def test_gru_param_count_formula():
    n, m = 5, 3
    params = init_gru(n, m, rng())
    total = sum(p.data.size for p in params.trainable())
    assert total == param_count(GRU, n, m) == 3 * (n + m + 1) * n


def test_ornn_zero_angles_identity():
    n, m = 4, 2
    params = init_ornn(n, m, rng())
    params.thetas.data[...] = 0.0
    params.U.data[...] = 0.0
    h = Tensor(rng(1).normal(size=(3, n)))
    h2, _ = ornn_step(h, params, Tensor(np.zeros((3, m))))
    assert np.allclose(h2.data, h.data)


def test_ornn_orthogonality_and_norm():
    n, m = 5, 2
    params = init_ornn(n, m, rng(4))
    eye = Tensor(np.eye(n))
    Q = ad.rotation_chain(eye, params.thetas, params.pairs)
    assert np.max(np.abs(Q.data @ Q.data.T - np.eye(n))) < 1e-12
    h = rng(5).normal(size=(6, n))
    out, _ = ornn_step(Tensor(h), params, Tensor(np.zeros((6, m))))
    assert np.allclose(
        np.linalg.norm(out.data, axis=1), np.linalg.norm(h, axis=1)
    )


def test_param_counts_crnn_equals_gaussian():
    for (n, m) in [(3, 2), (10, 10), (26, 26)]:
        assert param_count(CRNN, n, m) == param_count(GAUSSIAN, n, m)
        assert param_count(CRNN, n, m) == (n + m) ** 2 + n * m + m * m
        c = Cell(CRNN, n, m, rng(0))
        assert c.param_count() == param_count(CRNN, n, m)


def test_gru_width_match_at_26():
    h = gru_width_for(26, 26)
    target = param_count(CRNN, 26, 26)
    got = param_count(GRU, h, 26)
    assert abs(got - target) / target <= 0.025
    assert h == 26  # 3*26*53 = 4134 vs 4056: 1.92%


def test_output_arity_stable():
    for kind in (CRNN, GAUSSIAN):
        cell = Cell(kind, 3, 2, rng(1))
        state = cell.initial_state(4)
        x = Tensor(rng(2).normal(size=(4, 2)))
        for _ in range(3):
            state, y = cell.step(state, x)
            assert y.shape == (4, cell.output_dim)


@pytest.mark.parametrize("kind", [CRNN, GAUSSIAN, GRU, ORNN])
def test_cell_gradient_checks(kind):
    n, m = 3, 2
    cell = Cell(kind, n, m, rng(10), squeeze_scale=1.0)
    x = Tensor(rng(11).normal(size=(2, m)))
    C = rng(12).normal(size=(2, cell.output_dim))

    def f():
        state = cell.initial_state(2)
        _, y = cell.step(state, x)
        state2, y2 = cell.step(cell.initial_state(2), x)
        return ad.tsum(ad.mul(y, Tensor(C)))

    err = ad.check_gradients(f, cell.trainable())
    assert err <= 1e-4, (kind, err)


@pytest.mark.parametrize("kind", [CRNN, GAUSSIAN])
def test_cell_two_step_gradient_checks(kind):
    # gradients through the recurrent state (inverse-of-A path included)
    n, m = 2, 2
    cell = Cell(kind, n, m, rng(20), squeeze_scale=1.0)
    xs = [Tensor(rng(21 + t).normal(size=(2, m))) for t in range(2)]
    C = rng(23).normal(size=(2, cell.output_dim))

    def f():
        state = cell.initial_state(2)
        for x in xs:
            state, y = cell.step(state, x)
        return ad.tsum(ad.mul(y, Tensor(C)))

    err = ad.check_gradients(f, cell.trainable())
    assert err <= 1e-4, (kind, err)


def test_blend_state_masks_updates():
    cell = Cell(GRU, 3, 2, rng(30))
    state = cell.initial_state(2)
    x = Tensor(rng(31).normal(size=(2, 2)))
    new_state, _ = cell.step(state, x)
    mask = Tensor(np.array([[1.0], [0.0]]))
    blended = cell.blend_state(mask, new_state, state)
    assert np.allclose(blended[0].data[0], new_state[0].data[0])
    assert np.allclose(blended[0].data[1], state[0].data[1])
