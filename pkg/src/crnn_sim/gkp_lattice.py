"""Restricted Gaussian operations on lattice superpositions of Gaussians.

The state is an (unnormalized) uniform superposition of Gaussian branches
indexed by integer vectors l, where branch l has adjacency A and center
alpha + J l.  Branches are exact Gaussians taken in the epsilon -> 0+
limit, so mutual orthogonality is an algebraic convention and epsilon is
never represented numerically.

Under the restricted symplectic W the data transform as

    A -> W A W^T,   alpha -> W^{-T} alpha,   J -> W^{-T} J.

Measuring the positions of a mode block Y reads out the measured-block
lattice and centers, and the surviving branches are indexed by l_H alone:

    A    -> Pi_H A Pi_H^T,
    alpha -> Pi_H alpha                (after the displacement correction),
    J    -> J_HH - J_HY J_YY^{-1} J_YH  (the Schur complement of J_YY),

which equals W_HH^{-T} L_HH when J = W^{-T} diag(L_HH, L_YY).  The brute
force ``enumerate_fiber`` oracle checks the same correspondence by direct
search over integer branch labels.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np


class GKPError(ValueError):
    pass


@dataclass
class GKPLatticeState:
    A: np.ndarray       # branch adjacency (symmetric positive definite)
    J: np.ndarray       # lattice: branch centers alpha + J l
    alpha: np.ndarray   # center offsets / stabilizer phases
    det_floor: float = 1e-8

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.J = np.asarray(self.J, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.J.shape != (n, n) or self.alpha.shape != (n,):
            raise GKPError("A, J must be n x n and alpha length n")
        if np.max(np.abs(self.A - self.A.T)) > 1e-9:
            raise GKPError("A must be symmetric")
        if np.min(np.linalg.eigvalsh(self.A)) <= 0:
            raise GKPError("A must be positive definite")
        if abs(np.linalg.det(self.J)) <= self.det_floor:
            raise GKPError("lattice J must be invertible")

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class LatticeReadout:
    L_out: np.ndarray   # m x m measured-block lattice
    c_out: np.ndarray   # m measured-block centers
    ell: Optional[np.ndarray] = None       # sampled branch label, if rng given
    y_sample: Optional[np.ndarray] = None  # position sample of that branch


def apply_symplectic(state: GKPLatticeState, W: np.ndarray) -> GKPLatticeState:
    W = np.asarray(W, dtype=float)
    if W.shape != (state.n, state.n):
        raise GKPError("shape mismatch")
    if abs(np.linalg.det(W)) <= state.det_floor:
        raise GKPError("W is (near-)singular")
    Winv_T = np.linalg.inv(W).T
    A = W @ state.A @ W.T
    A = (A + A.T) / 2
    return GKPLatticeState(A, Winv_T @ state.J, Winv_T @ state.alpha, state.det_floor)


def measure_lattice(
    state: GKPLatticeState,
    measured_modes: Sequence[int],
    rng: Optional[np.random.Generator] = None,
    sample_box: int = 3,
) -> Tuple[LatticeReadout, Optional[GKPLatticeState]]:
    """Read out the measured block of (J, alpha) and project it out.

    Requires the measured sub-block J_YY to be invertible (it is whenever
    the underlying frame lattice is block diagonal with invertible blocks,
    as the recurrent cells guarantee).  When ``rng`` is given, the readout
    also carries one concrete branch label and its position sample.
    """
    Y = sorted(set(int(m) for m in measured_modes))
    if not Y:
        raise GKPError("measured mode set must be nonempty")
    if any(m < 0 or m >= state.n for m in Y):
        raise GKPError("mode index out of range")
    H = [m for m in range(state.n) if m not in Y]
    J = state.J
    J_YY = J[np.ix_(Y, Y)]
    if abs(np.linalg.det(J_YY)) <= state.det_floor:
        raise GKPError("singular measured lattice block (ill-conditioned cell weights)")
    readout_L = J_YY.copy()
    readout_c = state.alpha[Y].copy()
    ell = y_sample = None
    if rng is not None:
        ell = rng.integers(-sample_box, sample_box + 1, size=state.n)
        y_sample = state.alpha[Y] + (J @ ell)[Y]
    if not H:
        return LatticeReadout(readout_L, readout_c, ell, y_sample), None
    J_post = J[np.ix_(H, H)] - J[np.ix_(H, Y)] @ np.linalg.solve(J_YY, J[np.ix_(Y, H)])
    if abs(np.linalg.det(J_post)) <= state.det_floor:
        warnings.warn("post-measurement lattice is near-singular: branch labels "
                      "may not be in one-to-one correspondence", RuntimeWarning)
    post = GKPLatticeState(
        state.A[np.ix_(H, H)], J_post, state.alpha[H].copy(), state.det_floor
    )
    return LatticeReadout(readout_L, readout_c, ell, y_sample), post


def enumerate_fiber(
    frame: dict,
    y: np.ndarray,
    box: int,
    measured_modes: Optional[Sequence[int]] = None,
    tol: float = 1e-9,
    candidate_cap: int = 10_000_000,
) -> list:
    """All integer branch labels l in [-box, box]^n consistent with the
    position outcome y on the measured modes:

        || Pi_Y (W^{-T} c_q + W^{-T} L l) - y ||_inf <= tol.

    ``frame`` holds the raw W, L, c_q; this oracle is exponential by design
    and never uses the closed-form update.
    """
    if box < 1:
        raise GKPError("box must be >= 1")
    W = np.asarray(frame["W"], dtype=float)
    L = np.asarray(frame["L"], dtype=float)
    c_q = np.asarray(frame["c_q"], dtype=float)
    n = W.shape[0]
    y = np.asarray(y, dtype=float)
    m = y.shape[0]
    Y = sorted(measured_modes) if measured_modes is not None else list(range(n - m, n))
    if (2 * box + 1) ** n > candidate_cap:
        raise GKPError("enumeration box too large")
    Winv_T = np.linalg.inv(W).T
    base = (Winv_T @ c_q)[Y]
    M = (Winv_T @ L)[Y, :]
    out = []
    for ell in itertools.product(range(-box, box + 1), repeat=n):
        lv = np.array(ell)
        if np.max(np.abs(base + M @ lv - y)) <= tol:
            out.append(lv)
    return out
