"""Recurrent cells with a uniform differentiable step interface.

Four kinds:

* ``crnn``: lattice-superposition cell.  One step, for latent size n and
  input size m (state A, J, alpha; trainable W, f, g; frozen h, r):

      alpha <- alpha + A^{-1} f(x);     beta <- g(x)
      K <- h(x);  S <- r(x);  B <- S S^T
      U <- A (+) B;  gamma <- alpha (+) beta;  L <- J (+) K
      U <- W U W^T;  gamma <- W^{-T} gamma;  L <- W^{-T} L
      y = (flatten of the measured-block of L, measured-block of gamma)
      A' = kept block of U;  alpha' = kept block of gamma
      J' = (W_HH^T)^{-1} J

  The J update uses the transpose of the kept W block: it is the Schur
  complement of the transformed lattice, which is what the fiber
  enumeration oracle confirms (see gkp_lattice).
* ``gaussian``: the same cell with J = 0 and K = 0; the lattice block of y
  is then identically zero, so output arity and trainable parameter count
  match the crnn exactly.
* ``gru``: standard gated recurrent unit.
* ``ornn``: orthogonal RNN, h' = Q(theta) h + U x with Q a product of
  n(n-1)/2 Givens rotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .gaussian_sim import DEFAULT_SQUEEZE_SCALE

CRNN = "crnn"
GAUSSIAN = "gaussian"
GRU = "gru"
ORNN = "ornn"

CELL_KINDS = (CRNN, GAUSSIAN, GRU, ORNN)


class CellError(ValueError):
    pass


def param_count(cell_kind: str, n: int, m: int) -> int:
    """Trainable scalar count of one recurrent cell (latent n, input m)."""
    if cell_kind in (CRNN, GAUSSIAN):
        return (n + m) ** 2 + n * m + m * m
    if cell_kind == GRU:
        return 3 * n * (n + m + 1)
    if cell_kind == ORNN:
        return n * (n - 1) // 2 + n * m
    raise CellError(f"unknown cell kind {cell_kind!r}")


def gru_width_for(n: int, m: int, tol: float = 0.025) -> int:
    """Smallest GRU hidden width whose cell parameter count is within
    ``tol`` of the crnn cell's at the same (n, m); when integer
    granularity makes the budget unreachable (small n), the closest
    width is used instead."""
    target = param_count(CRNN, n, m)
    best, best_rel = 1, float("inf")
    for h in range(1, 8 * (n + m) + 1):
        rel = abs(param_count(GRU, h, m) - target) / target
        if rel <= tol:
            return h
        if rel < best_rel:
            best, best_rel = h, rel
    return best


def output_dim(cell_kind: str, n: int, m: int) -> int:
    if cell_kind in (CRNN, GAUSSIAN):
        return m * m + m
    if cell_kind in (GRU, ORNN):
        return n
    raise CellError(f"unknown cell kind {cell_kind!r}")


# -- parameter containers -----------------------------------------------------


@dataclass
class CRNNCellParams:
    W: Tensor     # (n+m, n+m)
    f_W: Tensor   # (n, m), no bias
    g_W: Tensor   # (m, m), no bias

    def trainable(self) -> List[Tensor]:
        return [self.W, self.f_W, self.g_W]


@dataclass
class CRNNCellConsts:
    h_W: Tensor   # (m*m, m), frozen; bias centers K on the identity
    h_b: Tensor
    r_W: Tensor   # (m*m, m), frozen; bias centers S on the identity
    r_b: Tensor
    n: int
    m: int


@dataclass
class GRUParams:
    Wz: Tensor
    Wr: Tensor
    Wh: Tensor
    bz: Tensor
    br: Tensor
    bh: Tensor

    def trainable(self) -> List[Tensor]:
        return [self.Wz, self.Wr, self.Wh, self.bz, self.br, self.bh]


@dataclass
class ORNNParams:
    thetas: Tensor
    U: Tensor
    pairs: tuple

    def trainable(self) -> List[Tensor]:
        return [self.thetas, self.U]


def init_crnn(n: int, m: int, rng: np.random.Generator) -> Tuple[CRNNCellParams, CRNNCellConsts]:
    W = ad.parameter(np.eye(n + m) + 0.1 * ad.glorot_uniform((n + m, n + m), rng), "W")
    f_W = ad.parameter(ad.glorot_uniform((n, m), rng), "f_W")
    g_W = ad.parameter(ad.glorot_uniform((m, m), rng), "g_W")
    h_W = Tensor(ad.glorot_uniform((m * m, m), rng))
    h_b = Tensor(np.eye(m).reshape(-1))
    r_W = Tensor(ad.glorot_uniform((m * m, m), rng))
    r_b = Tensor(np.eye(m).reshape(-1))
    return CRNNCellParams(W, f_W, g_W), CRNNCellConsts(h_W, h_b, r_W, r_b, n, m)


def init_gru(n: int, m: int, rng: np.random.Generator) -> GRUParams:
    mk = lambda: ad.parameter(ad.glorot_uniform((n, m + n), rng))
    zb = lambda: ad.parameter(np.zeros(n))
    return GRUParams(mk(), mk(), mk(), zb(), zb(), zb())


def init_ornn(n: int, m: int, rng: np.random.Generator) -> ORNNParams:
    pairs = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    thetas = ad.parameter(rng.uniform(-np.pi / 8, np.pi / 8, size=len(pairs)))
    U = ad.parameter(ad.glorot_uniform((n, m), rng))
    return ORNNParams(thetas, U, pairs)


# -- steps ---------------------------------------------------------------------


def _dense(x: Tensor, W: Tensor, b: Tensor = None) -> Tensor:
    out = ad.matmul(x, ad.transpose(W))
    if b is not None:
        out = ad.add(out, b)
    return out


def _eye_like(n: int, batch: int, scale: float = 1.0) -> Tensor:
    return Tensor(np.broadcast_to(scale * np.eye(n), (batch, n, n)).copy())


def crnn_step(
    state: Tuple[Tensor, Tensor, Tensor],
    params: CRNNCellParams,
    consts: CRNNCellConsts,
    x: Tensor,
    ridge: float = 0.0,
    lattice: bool = True,
) -> Tuple[Tuple[Tensor, Tensor, Tensor], Tensor]:
    """One cell step; state = (A, J, alpha) batched as (B,n,n)/(B,n,n)/(B,n),
    x is (B, m).  ``lattice=False`` gives the Gaussian limit (K = 0)."""
    A, J, alpha = state
    n, m = consts.n, consts.m
    batch = x.shape[0]

    A_use = ad.add(A, _eye_like(n, batch, ridge)) if ridge else A
    fx = _dense(x, params.f_W)
    shift = ad.reshape(ad.matmul(ad.inv(A_use), ad.reshape(fx, (batch, n, 1))), (batch, n))
    alpha1 = ad.add(alpha, shift)
    beta = _dense(x, params.g_W)

    if lattice:
        K = ad.reshape(_dense(x, consts.h_W, consts.h_b), (batch, m, m))
    else:
        K = Tensor(np.zeros((batch, m, m)))
    S = ad.reshape(_dense(x, consts.r_W, consts.r_b), (batch, m, m))
    B = ad.matmul(S, ad.transpose(S))

    U = ad.block_diag(A, B)
    gamma = ad.concat([alpha1, beta], axis=-1)
    L = ad.block_diag(J, K)

    W = params.W
    Winv = ad.inv(W)
    U = ad.matmul(ad.matmul(W, U), ad.transpose(W))
    gamma = ad.matmul(gamma, Winv)
    L = ad.matmul(ad.transpose(Winv), L)

    y_lat = ad.reshape(L[(slice(None), slice(n, n + m), slice(n, n + m))], (batch, m * m))
    y_cen = gamma[(slice(None), slice(n, n + m))]
    y = ad.concat([y_lat, y_cen], axis=-1)

    A_next = U[(slice(None), slice(0, n), slice(0, n))]
    alpha_next = gamma[(slice(None), slice(0, n))]
    W_HH = W[(slice(0, n), slice(0, n))]
    if ridge:
        W_HH = ad.add(W_HH, Tensor(ridge * np.eye(n)))
    J_next = ad.matmul(ad.transpose(ad.inv(W_HH)), J)
    return (A_next, J_next, alpha_next), y


def gaussian_step(state, params, consts, x, ridge: float = 0.0):
    """Gaussian limit of the cell: J and K identically zero; the output is
    the center readout, zero-padded in the lattice block so shapes and
    parameter counts match the crnn."""
    return crnn_step(state, params, consts, x, ridge=ridge, lattice=False)


def gru_step(h: Tensor, params: GRUParams, x: Tensor):
    xh = ad.concat([x, h], axis=-1)
    z = ad.sigmoid(_dense(xh, params.Wz, params.bz))
    r = ad.sigmoid(_dense(xh, params.Wr, params.br))
    xrh = ad.concat([x, ad.mul(r, h)], axis=-1)
    h_tilde = ad.tanh(_dense(xrh, params.Wh, params.bh))
    one = Tensor(np.ones_like(z.data))
    h_next = ad.add(ad.mul(ad.add(one, ad.scale(z, -1.0)), h), ad.mul(z, h_tilde))
    return h_next, h_next


def ornn_step(h: Tensor, params: ORNNParams, x: Tensor):
    rotated = ad.rotation_chain(h, params.thetas, params.pairs)
    h_next = ad.add(rotated, _dense(x, params.U))
    return h_next, h_next


# -- uniform wrapper -----------------------------------------------------------


class Cell:
    """Cell kind + parameters + frozen initial latent state.

    The latent start (alpha_0 or h_0) is drawn once from the constructor
    rng and reused for every sequence.
    """

    def __init__(
        self,
        kind: str,
        n: int,
        m: int,
        rng: np.random.Generator,
        squeeze_scale: float = DEFAULT_SQUEEZE_SCALE,
        ridge: float = 0.0,
    ):
        if kind not in CELL_KINDS:
            raise CellError(f"unknown cell kind {kind!r}")
        self.kind = kind
        self.n = n
        self.m = m
        self.ridge = ridge
        self.squeeze_scale = squeeze_scale
        self.consts = None
        if kind in (CRNN, GAUSSIAN):
            self.params, self.consts = init_crnn(n, m, rng)
            self.lambda0 = rng.normal(size=n)
        elif kind == GRU:
            self.params = init_gru(n, m, rng)
            self.lambda0 = rng.normal(size=n)
        else:
            self.params = init_ornn(n, m, rng)
            self.lambda0 = rng.normal(size=n)

    @property
    def output_dim(self) -> int:
        return output_dim(self.kind, self.n, self.m)

    def trainable(self) -> List[Tensor]:
        return self.params.trainable()

    def param_count(self) -> int:
        return sum(p.data.size for p in self.trainable())

    def initial_state(self, batch: int):
        alpha0 = Tensor(np.broadcast_to(self.lambda0, (batch, self.n)).copy())
        if self.kind in (CRNN, GAUSSIAN):
            A0 = _eye_like(self.n, batch, self.squeeze_scale)
            J0 = _eye_like(self.n, batch, 1.0 if self.kind == CRNN else 0.0)
            return (A0, J0, alpha0)
        return (alpha0,)

    def step(self, state, x: Tensor):
        if self.kind == CRNN:
            return crnn_step(state, self.params, self.consts, x, self.ridge, lattice=True)
        if self.kind == GAUSSIAN:
            return crnn_step(state, self.params, self.consts, x, self.ridge, lattice=False)
        if self.kind == GRU:
            h_next, y = gru_step(state[0], self.params, x)
            return (h_next,), y
        h_next, y = ornn_step(state[0], self.params, x)
        return (h_next,), y

    def blend_state(self, mask: Tensor, new_state, old_state):
        """mask (B,1): 1 keeps the new state, 0 keeps the old (pad steps)."""
        out = []
        for new, old in zip(new_state, old_state):
            m = mask
            while len(m.shape) < len(new.shape):
                m = ad.reshape(m, m.shape + (1,))
            one = Tensor(np.ones_like(m.data))
            out.append(ad.add(ad.mul(m, new), ad.mul(ad.add(one, ad.scale(m, -1.0)), old)))
        return tuple(out)
