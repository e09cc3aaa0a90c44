"""Gaussian pure states in the graph-state picture.

A state is (U, V, c_q, c_p) with complex adjacency Z = V + i U, U symmetric
positive definite, satisfying the nullifier relation

    (phat - c_p - Z (qhat - c_q)) |psi> = 0,

and position wavefunction

    psi(q) = pi^{-n/4} det(U)^{1/4} exp((i/2) (q - c_q)^T Z (q - c_q)).

The restricted symplectic family acts only on the quadratures,
S = diag(W^T, W^{-1}), which in the V = 0, c_p = 0 regime updates the state
as U -> W U W^T and c_q -> W^{-T} c_q.

Homodyne detection of the positions of a mode subset Y returns a Gaussian
with mean Pi_Y c_q and covariance ``cov_scale * Pi_Y U^{-1} Pi_Y^T``.  The
covariance follows the quoted homodyne formula; the position marginal of
the wavefunction above actually carries an extra factor 1/2 (cov_scale =
0.5 reproduces it), and the scale is configurable because the two
conventions are not reconciled; see the tests for both behaviours.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

# implicit large squeezing used when the training pipeline builds initial
# latent states; multiplies U so homodyne spread is small
DEFAULT_SQUEEZE_SCALE = 1e3


class GaussianError(ValueError):
    pass


@dataclass
class GaussianConfig:
    sym_tol: float = 1e-9
    det_floor: float = 1e-8
    cond_max: float = 1e12
    cov_scale: float = 1.0


@dataclass
class GraphGaussianState:
    U: np.ndarray
    V: Optional[np.ndarray] = None
    c_q: Optional[np.ndarray] = None
    c_p: Optional[np.ndarray] = None
    config: GaussianConfig = field(default_factory=GaussianConfig)

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        n = self.U.shape[0]
        self.V = np.zeros((n, n)) if self.V is None else np.asarray(self.V, dtype=float)
        self.c_q = np.zeros(n) if self.c_q is None else np.asarray(self.c_q, dtype=float)
        self.c_p = np.zeros(n) if self.c_p is None else np.asarray(self.c_p, dtype=float)
        self.validate()

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def Z(self) -> np.ndarray:
        return self.V + 1j * self.U

    def validate(self):
        tol = self.config.sym_tol
        if self.U.shape != (self.n, self.n) or self.V.shape != (self.n, self.n):
            raise GaussianError("U and V must be square n x n")
        if np.max(np.abs(self.U - self.U.T)) > tol:
            raise GaussianError("U must be symmetric")
        if np.max(np.abs(self.V - self.V.T)) > tol:
            raise GaussianError("V must be symmetric")
        if np.min(np.linalg.eigvalsh(self.U)) <= tol:
            raise GaussianError("U must be positive definite")


@dataclass(frozen=True)
class RestrictedSymplectic:
    """Quadrature map S = diag(W^T, W^{-1}) for invertible W."""

    W: np.ndarray
    det_floor: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "W", np.asarray(self.W, dtype=float))
        if abs(np.linalg.det(self.W)) <= self.det_floor:
            raise GaussianError("W is (near-)singular")


def _guarded_inv(M: np.ndarray, cond_max: float) -> np.ndarray:
    if np.linalg.cond(M) > cond_max:
        raise GaussianError("matrix inversion rejected: condition number too large")
    return np.linalg.inv(M)


def apply_symplectic(state: GraphGaussianState, w: RestrictedSymplectic) -> GraphGaussianState:
    """U -> W U W^T, c_q -> W^{-T} c_q (restricted regime: V = 0, c_p = 0)."""
    if np.max(np.abs(state.V)) > state.config.sym_tol:
        raise GaussianError("restricted symplectic evolution requires V = 0")
    W = w.W
    if W.shape != (state.n, state.n):
        raise GaussianError("shape mismatch")
    U = W @ state.U @ W.T
    drift = np.max(np.abs(U - U.T))
    if drift > 1e-6:
        raise GaussianError("numerical failure: transformed U is not symmetric")
    U = (U + U.T) / 2
    c_q = np.linalg.solve(W.T, state.c_q)
    return GraphGaussianState(U, None, c_q, state.c_p.copy(), state.config)


def homodyne_sample(
    state: GraphGaussianState,
    measured_modes: Sequence[int],
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> Tuple[np.ndarray, Optional[GraphGaussianState]]:
    """Measure positions of ``measured_modes``; outcomes are Gaussian with
    mean Pi_Y c_q and covariance cov_scale * Pi_Y U^{-1} Pi_Y^T.  The
    post-state keeps the complementary block of U and c_q (empty marker
    None when every mode is measured).  ``size`` draws a batch of outcome
    vectors at once (the post-state is the same rule either way)."""
    if np.max(np.abs(state.V)) > state.config.sym_tol:
        raise GaussianError("homodyne sampling requires V = 0")
    Y = sorted(set(int(m) for m in measured_modes))
    if not Y:
        raise GaussianError("measured mode set must be nonempty")
    if any(m < 0 or m >= state.n for m in Y):
        raise GaussianError("mode index out of range")
    H = [m for m in range(state.n) if m not in Y]
    Uinv = _guarded_inv(state.U, state.config.cond_max)
    mean = state.c_q[Y]
    cov = state.config.cov_scale * Uinv[np.ix_(Y, Y)]
    cov = (cov + cov.T) / 2
    outcomes = rng.multivariate_normal(mean, cov, size=size, method="cholesky")
    if not H:
        return outcomes, None
    post = GraphGaussianState(
        state.U[np.ix_(H, H)], None, state.c_q[H], state.c_p[H], state.config
    )
    return outcomes, post


def wavefunction(state: GraphGaussianState, q_points: np.ndarray) -> np.ndarray:
    """Amplitudes at the given points, shape (..., n) -> (...,)."""
    q = np.asarray(q_points, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    d = q - state.c_q
    quad = np.einsum("...i,ij,...j->...", d, state.Z, d)
    sign, logdet = np.linalg.slogdet(state.U)
    if sign <= 0:
        raise GaussianError("U must be positive definite")
    amp = np.pi ** (-state.n / 4) * np.exp(0.25 * logdet) * np.exp(0.5j * quad)
    return amp[0] if single else amp
