"""Small linear-algebra helpers over exact rationals and over floats.

The stabilizer tableau needs three primitives on tiny matrices (dimensions
bounded by 2n with n <= ~8):

* solve a rational/float linear system ``sum_k x_k col_k = target``;
* reduce a vector modulo the row span of a set of vectors;
* solve ``A m = t`` over the integers (lattice membership), exactly via a
  column Hermite normal form for rationals, and by rounding a least-squares
  candidate (with a bounded enumeration fallback) for floats.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd
from typing import List, Optional, Sequence, Tuple

import numpy as np


# ---------------------------------------------------------------------------
# exact (Fraction) path
# ---------------------------------------------------------------------------

def rref_fraction(rows: List[List[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form; returns (rows, pivot column indices)."""
    rows = [list(r) for r in rows]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def reduce_mod_span_fraction(rref_rows, pivots, v: Sequence[Fraction]) -> List[Fraction]:
    v = list(v)
    for row, c in zip(rref_rows, pivots):
        if v[c] != 0:
            f = v[c]
            v = [x - f * y for x, y in zip(v, row)]
    return v


def solve_columns_fraction(
    cols: List[Sequence[Fraction]], target: Sequence[Fraction]
) -> Optional[List[Fraction]]:
    """Exact solution x of sum_k x_k cols[k] = target, or None."""
    if not cols:
        return [] if all(t == 0 for t in target) else None
    m = len(target)
    k = len(cols)
    aug = [[Fraction(cols[j][i]) for j in range(k)] + [Fraction(target[i])] for i in range(m)]
    rows, pivots = rref_fraction(aug)
    x = [Fraction(0)] * k
    for row, c in zip(rows, pivots):
        if c == k:  # pivot in the augmented column: inconsistent
            return None
        x[c] = row[k]
    # verify (guards free-variable columns)
    for i in range(m):
        s = sum(x[j] * Fraction(cols[j][i]) for j in range(k))
        if s != Fraction(target[i]):
            return None
    return x


def _clear_denominators(rows: List[List[Fraction]]) -> Tuple[List[List[int]], int]:
    den = 1
    for r in rows:
        for x in r:
            den = den * x.denominator // gcd(den, x.denominator)
    out = [[int(x * den) for x in r] for r in rows]
    return out, den


def hnf_solve_integer(
    cols: List[Sequence[Fraction]], target: Sequence[Fraction]
) -> Optional[List[int]]:
    """Integer solution m of sum_j m_j cols[j] = target, or None.

    Works over the rationals by clearing denominators, then runs a column
    Hermite reduction A U = H with unimodular U.
    """
    k = len(cols)
    if k == 0:
        return [] if all(Fraction(t) == 0 for t in target) else None
    d = len(target)
    rows = [[Fraction(cols[j][i]) for j in range(k)] + [Fraction(target[i])] for i in range(d)]
    cleared, _ = _clear_denominators(rows)
    A = [[cleared[i][j] for j in range(k)] for i in range(d)]
    t = [cleared[i][k] for i in range(d)]

    U = [[1 if i == j else 0 for j in range(k)] for i in range(k)]

    def col_addmul(dst, src, f):
        for i in range(d):
            A[i][dst] += f * A[i][src]
        for i in range(k):
            U[i][dst] += f * U[i][src]

    def col_swap(c1, c2):
        for i in range(d):
            A[i][c1], A[i][c2] = A[i][c2], A[i][c1]
        for i in range(k):
            U[i][c1], U[i][c2] = U[i][c2], U[i][c1]

    rpos = 0
    pivot_cols = []
    for r in range(d):
        while True:
            nz = [j for j in range(rpos, k) if A[r][j] != 0]
            if not nz:
                break
            if len(nz) == 1:
                break
            nz.sort(key=lambda j: abs(A[r][j]))
            a = nz[0]
            for j in nz[1:]:
                col_addmul(j, a, -(A[r][j] // A[r][a]))
        nz = [j for j in range(rpos, k) if A[r][j] != 0]
        if nz:
            if nz[0] != rpos:
                col_swap(nz[0], rpos)
            pivot_cols.append((r, rpos))
            rpos += 1
            if rpos == k:
                break

    # forward-substitute H y = t over the echelon structure
    y = [0] * k
    resid = list(t)
    for (r, c) in pivot_cols:
        if resid[r] % A[r][c] != 0:
            return None
        y[c] = resid[r] // A[r][c]
        for i in range(d):
            resid[i] -= y[c] * A[i][c]
    if any(x != 0 for x in resid):
        return None
    # m = U y
    m = [sum(U[i][j] * y[j] for j in range(k)) for i in range(k)]
    # verify in the original rationals
    for i in range(d):
        s = sum(m[j] * Fraction(cols[j][i]) for j in range(k))
        if s != Fraction(target[i]):
            return None
    return m


def mixed_solve_fraction(
    span: List[Sequence[Fraction]],
    lattice: List[Sequence[Fraction]],
    target: Sequence[Fraction],
) -> Optional[Tuple[List[Fraction], List[int]]]:
    """Solve target = sum_k t_k span[k] + sum_j m_j lattice[j] with rational
    t and integer m; returns (t, m) or None."""
    rr, piv = rref_fraction([list(map(Fraction, v)) for v in span])
    red = lambda v: reduce_mod_span_fraction(rr, piv, list(map(Fraction, v)))
    m = hnf_solve_integer([red(g) for g in lattice], red(target))
    if m is None:
        return None
    rem = list(map(Fraction, target))
    for mj, g in zip(m, lattice):
        rem = [x - mj * Fraction(y) for x, y in zip(rem, g)]
    t = solve_columns_fraction([list(map(Fraction, v)) for v in span], rem)
    if t is None:
        return None
    return t, m


# ---------------------------------------------------------------------------
# float path
# ---------------------------------------------------------------------------

def solve_columns_float(
    cols: List[np.ndarray], target: np.ndarray, tol: float = 1e-9
) -> Optional[np.ndarray]:
    if not cols:
        return np.zeros(0) if np.max(np.abs(target), initial=0.0) <= tol else None
    A = np.stack([np.asarray(c, dtype=float) for c in cols], axis=1)
    x, *_ = np.linalg.lstsq(A, np.asarray(target, dtype=float), rcond=None)
    if np.max(np.abs(A @ x - target)) <= tol * max(1.0, np.max(np.abs(target))):
        return x
    return None


def reduce_mod_span_float(span: List[np.ndarray], v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    if not span:
        return np.asarray(v, dtype=float)
    A = np.stack([np.asarray(s, dtype=float) for s in span], axis=1)
    x, *_ = np.linalg.lstsq(A, np.asarray(v, dtype=float), rcond=None)
    return np.asarray(v, dtype=float) - A @ x


def solve_integer_float(
    cols: List[np.ndarray],
    target: np.ndarray,
    tol: float = 1e-7,
    bound: int = 6,
    max_combos: int = 200_000,
) -> Optional[List[int]]:
    """Integer m with sum m_j cols[j] ~= target (within tol).

    Rounds the least-squares candidate first; falls back to a bounded
    enumeration for small systems.
    """
    k = len(cols)
    target = np.asarray(target, dtype=float)
    if k == 0:
        return [] if np.max(np.abs(target), initial=0.0) <= tol else None
    A = np.stack([np.asarray(c, dtype=float) for c in cols], axis=1)
    x, *_ = np.linalg.lstsq(A, target, rcond=None)
    m = np.round(x).astype(int)
    if np.max(np.abs(A @ m - target)) <= tol:
        return [int(v) for v in m]
    if (2 * bound + 1) ** k <= max_combos:
        for combo in itertools.product(range(-bound, bound + 1), repeat=k):
            mv = np.array(combo)
            if np.max(np.abs(A @ mv - target)) <= tol:
                return list(combo)
    return None


def mixed_solve_float(
    span: List[np.ndarray],
    lattice: List[np.ndarray],
    target: np.ndarray,
    tol: float = 1e-7,
) -> Optional[Tuple[np.ndarray, List[int]]]:
    red = lambda v: reduce_mod_span_float(span, v, tol)
    m = solve_integer_float([red(g) for g in lattice], red(target), tol)
    if m is None:
        return None
    rem = np.asarray(target, dtype=float).copy()
    for mj, g in zip(m, lattice):
        rem -= mj * np.asarray(g, dtype=float)
    t = solve_columns_float(span, rem, tol)
    if t is None:
        return None
    return t, m
