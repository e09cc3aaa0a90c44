"""CV Pauli words and the Mermin-Peres magic square.

A word is e^{i theta} * exp(i (a . qhat + b . phat)) on n modes, stored as
the coefficient vectors a, b and the phase theta.  Units fix hbar = 1/2,
so [qhat_j, phat_k] = (i/2) delta_jk and two words obey

    P1 P2 = e^{-i omega / 2} P2 P1,      omega = a1.b2 - b1.a2.

Products track the Baker-Campbell-Hausdorff phase:

    theta(P1 P2) = theta1 + theta2 - omega(P1, P2) / 4.

The generators of the usual CV Pauli pair are X_j(t) = exp(-2 i t phat_j)
(so b_j = -2t) and Z_j(t) = exp(2 i t qhat_j) (so a_j = 2t).  Words commute
iff omega is a multiple of 4*pi and anticommute iff omega is an odd
multiple of 2*pi.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

from .scalars import (
    GP,
    GQ,
    PI,
    Backend,
    ExactBackend,
    ExactScalar,
    FloatBackend,
    UnitError,
)


class ModeMismatchError(ValueError):
    """Words on different mode counts or backends were combined."""


@dataclass(frozen=True)
class PauliWord:
    n: int
    a: tuple
    b: tuple
    theta: object
    backend: Backend

    def __post_init__(self):
        if len(self.a) != self.n or len(self.b) != self.n:
            raise ValueError("coefficient vectors must have length n")
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))

    def vector(self) -> tuple:
        return self.a + self.b

    def is_identity(self) -> bool:
        be = self.backend
        if be.kind == "exact":
            vec_zero = all(s.is_zero() for s in self.vector())
            return vec_zero and be.mod_2pi(self.theta).is_zero()
        vec_zero = all(abs(x) <= be.tol for x in self.vector())
        th = be.mod_2pi(self.theta)
        return vec_zero and (th <= be.tol)

    def to_json(self) -> dict:
        be = self.backend
        return {
            "n": self.n,
            "a": [be.scalar_to_json(s) for s in self.a],
            "b": [be.scalar_to_json(s) for s in self.b],
            "theta": be.scalar_to_json(self.theta),
            "backend": be.kind,
        }


def word_from_json(d: dict, backend: Backend) -> PauliWord:
    if d["backend"] != backend.kind:
        raise ModeMismatchError("serialized backend does not match")
    a = tuple(backend.scalar_from_json(x) for x in d["a"])
    b = tuple(backend.scalar_from_json(x) for x in d["b"])
    return PauliWord(d["n"], a, b, backend.scalar_from_json(d["theta"]), backend)


def _check_pair(p1: PauliWord, p2: PauliWord):
    if p1.n != p2.n:
        raise ModeMismatchError(f"mode counts differ: {p1.n} vs {p2.n}")
    if p1.backend != p2.backend:
        raise ModeMismatchError("scalar backends differ")


def identity_word(n: int, backend: Backend) -> PauliWord:
    zq = tuple(backend.zero(GQ) for _ in range(n))
    zp = tuple(backend.zero(GP) for _ in range(n))
    return PauliWord(n, zq, zp, backend.zero(PI), backend)


def x_word(n: int, j: int, t, backend: Backend) -> PauliWord:
    """X_j(t) = exp(-2 i t phat_j); t in g_p units for the exact backend."""
    w = identity_word(n, backend)
    b = list(w.b)
    b[j] = backend.p_coef(-2 * Fraction(t)) if backend.kind == "exact" else -2.0 * t
    return PauliWord(n, w.a, tuple(b), w.theta, backend)


def z_word(n: int, j: int, t, backend: Backend) -> PauliWord:
    """Z_j(t) = exp(2 i t qhat_j); t in g_q units for the exact backend."""
    w = identity_word(n, backend)
    a = list(w.a)
    a[j] = backend.q_coef(2 * Fraction(t)) if backend.kind == "exact" else 2.0 * t
    return PauliWord(n, tuple(a), w.b, w.theta, backend)


def word_from_coeffs(a: Sequence, b: Sequence, backend: Backend, theta=None) -> PauliWord:
    """Word exp(i (a . qhat + b . phat)) with raw coefficient entries.

    Exact entries are rationals interpreted in g_q / g_p units.
    """
    n = len(a)
    if backend.kind == "exact":
        aa = tuple(backend.q_coef(x) for x in a)
        bb = tuple(backend.p_coef(x) for x in b)
        th = backend.zero(PI) if theta is None else theta
    else:
        aa = tuple(float(x) for x in a)
        bb = tuple(float(x) for x in b)
        th = 0.0 if theta is None else float(theta)
    return PauliWord(n, aa, bb, th, backend)


def symplectic_form(p1: PauliWord, p2: PauliWord):
    """omega(p1, p2) = a1.b2 - b1.a2; commute iff omega in 4*pi*Z."""
    _check_pair(p1, p2)
    be = p1.backend
    if be.kind == "exact":
        total = be.zero(PI)
        for j in range(p1.n):
            total = total + be.mul_qp(p1.a[j], p2.b[j])
            total = total - be.mul_qp(p2.a[j], p1.b[j])
        return total
    total = 0.0
    for j in range(p1.n):
        total += p1.a[j] * p2.b[j] - p1.b[j] * p2.a[j]
    return total


def omega_class(p1: PauliWord, p2: PauliWord) -> str:
    return p1.backend.omega_class(symplectic_form(p1, p2))


def commutes(p1: PauliWord, p2: PauliWord) -> bool:
    return omega_class(p1, p2) == "commute"


def pauli_mul(p1: PauliWord, p2: PauliWord) -> PauliWord:
    _check_pair(p1, p2)
    be = p1.backend
    w = symplectic_form(p1, p2)
    if be.kind == "exact":
        a = tuple(x + y for x, y in zip(p1.a, p2.a))
        b = tuple(x + y for x, y in zip(p1.b, p2.b))
        theta = be.mod_2pi(p1.theta + p2.theta - w.scale(Fraction(1, 4)))
    else:
        a = tuple(x + y for x, y in zip(p1.a, p2.a))
        b = tuple(x + y for x, y in zip(p1.b, p2.b))
        theta = be.mod_2pi(p1.theta + p2.theta - w / 4.0)
    return PauliWord(p1.n, a, b, theta, be)


def pauli_adjoint(p: PauliWord) -> PauliWord:
    be = p.backend
    if be.kind == "exact":
        a = tuple(-s for s in p.a)
        b = tuple(-s for s in p.b)
        theta = be.mod_2pi(-p.theta)
    else:
        a = tuple(-x for x in p.a)
        b = tuple(-x for x in p.b)
        theta = be.mod_2pi(-p.theta)
    return PauliWord(p.n, a, b, theta, be)


def pauli_power(p: PauliWord, t) -> PauliWord:
    """p^t: the vector and phase scale by t (same generator, no BCH term)."""
    be = p.backend
    if be.kind == "exact":
        r = Fraction(t)
        a = tuple(s.scale(r) for s in p.a)
        b = tuple(s.scale(r) for s in p.b)
        theta = be.mod_2pi(p.theta.scale(r))
    else:
        a = tuple(x * t for x in p.a)
        b = tuple(x * t for x in p.b)
        theta = be.mod_2pi(p.theta * t)
    return PauliWord(p.n, a, b, theta, be)


def words_equal(p1: PauliWord, p2: PauliWord) -> bool:
    _check_pair(p1, p2)
    be = p1.backend
    if not all(be.eq(x, y) for x, y in zip(p1.vector(), p2.vector())):
        return False
    return be.phase_eq(p1.theta, p2.theta)


# ---------------------------------------------------------------------------
# Magic square
# ---------------------------------------------------------------------------

# Lines of the 3x3 square: three rows, three columns (as index triples).
_LINES = [[(r, c) for c in range(3)] for r in range(3)] + [
    [(r, c) for r in range(3)] for c in range(3)
]


@dataclass(frozen=True)
class MagicSquare:
    grid: Tuple[Tuple[PauliWord, ...], ...]

    def __getitem__(self, rc):
        r, c = rc
        return self.grid[r][c]


def build_magic_square(alpha, backend: Backend = None) -> MagicSquare:
    """The 3x3 two-mode square with X arguments alpha and Z arguments
    pi/(2*alpha).

    Float backend: alpha is a nonzero float.  Exact backend: alpha is a
    nonzero rational coefficient c, meaning alpha = c * g_p under the
    rho = 1/2 unit system (Z arguments are then (1/c) * g_q).
    """
    if backend is None:
        backend = FloatBackend()
    if backend.kind == "exact":
        c = Fraction(alpha)
        if c == 0:
            raise ValueError("alpha must be nonzero")
        if backend.rho != Fraction(1, 2):
            raise UnitError("magic square exact units require rho = 1/2")
        xa, zu = c, 1 / c
    else:
        if alpha == 0:
            raise ValueError("alpha must be nonzero")
        import math

        xa, zu = float(alpha), math.pi / (2.0 * float(alpha))

    def X(j, t):
        return x_word(2, j, t, backend)

    def Z(j, t):
        return z_word(2, j, t, backend)

    def dag(p):
        return pauli_adjoint(p)

    def mul(*ps):
        out = ps[0]
        for p in ps[1:]:
            out = pauli_mul(out, p)
        return out

    def minus(p):
        th = p.theta + backend.phase(1)
        return PauliWord(p.n, p.a, p.b, backend.mod_2pi(th), backend)

    x1, x2 = X(0, xa), X(1, xa)
    z1, z2 = Z(0, zu), Z(1, zu)
    row0 = (x1, x2, mul(dag(x1), dag(x2)))
    row1 = (
        mul(dag(x1), dag(z2)),
        mul(dag(z1), dag(x2)),
        minus(mul(x1, z1, x2, z2)),
    )
    row2 = (z2, z1, mul(dag(z1), dag(z2)))
    return MagicSquare((row0, row1, row2))


@dataclass
class LineReport:
    indices: List[Tuple[int, int]]
    pair_commute: List[bool]
    product: PauliWord
    product_is_identity: bool
    product_is_minus_identity: bool


@dataclass
class VerificationReport:
    lines: List[LineReport] = field(default_factory=list)
    classical_assignments: int = -1
    passed: bool = False

    def failures(self) -> List[str]:
        msgs = []
        for i, line in enumerate(self.lines):
            kind = "row" if i < 3 else "column"
            idx = i if i < 3 else i - 3
            if not all(line.pair_commute):
                msgs.append(f"{kind} {idx}: non-commuting pair")
            want_minus = i == 5
            ok = line.product_is_minus_identity if want_minus else line.product_is_identity
            if not ok:
                msgs.append(f"{kind} {idx}: wrong line product")
        if self.classical_assignments != 0:
            msgs.append(f"classical assignments: {self.classical_assignments}")
        return msgs


def _is_minus_identity(p: PauliWord) -> bool:
    be = p.backend
    if be.kind == "exact":
        vec_zero = all(s.is_zero() for s in p.vector())
        return vec_zero and be.phase_eq(p.theta, be.phase(1))
    vec_zero = all(abs(x) <= be.tol for x in p.vector())
    return vec_zero and be.phase_eq(p.theta, be.phase(1))


def verify_magic_square(m: MagicSquare) -> VerificationReport:
    """Check commutation within all six lines, the five identity products,
    the minus-identity third column, and the absence of any +-1 assignment
    satisfying the six product constraints (brute force over 2^9)."""
    report = VerificationReport()
    targets = []
    for line in _LINES:
        words = [m[rc] for rc in line]
        pairs = [commutes(w1, w2) for w1, w2 in itertools.combinations(words, 2)]
        prod = words[0]
        for w in words[1:]:
            prod = pauli_mul(prod, w)
        rec = LineReport(
            indices=line,
            pair_commute=pairs,
            product=prod,
            product_is_identity=prod.is_identity(),
            product_is_minus_identity=_is_minus_identity(prod),
        )
        report.lines.append(rec)
        if rec.product_is_identity:
            targets.append(1)
        elif rec.product_is_minus_identity:
            targets.append(-1)
        else:
            targets.append(0)

    # exhaustive +-1 value assignment against the observed line targets
    count = 0
    if 0 not in targets:
        for bits in itertools.product((1, -1), repeat=9):
            ok = True
            for line, target in zip(_LINES, targets):
                prod = 1
                for (r, c) in line:
                    prod *= bits[3 * r + c]
                if prod != target:
                    ok = False
                    break
            if ok:
                count += 1
    else:
        count = -1
    report.classical_assignments = count

    structure_ok = all(
        all(line.pair_commute)
        and (line.product_is_minus_identity if i == 5 else line.product_is_identity)
        for i, line in enumerate(report.lines)
    )
    report.passed = structure_ok and count == 0
    return report
