"""Scalar backends for the CV Pauli algebra.

Two backends share one interface:

* FLOAT: plain ``float`` values, compared with an absolute tolerance
  (default 1e-9).
* EXACT: a rational coefficient attached to one of four formal units

      1, g_q, g_p, pi

  where ``g_q`` is the unit of q-quadrature coefficients, ``g_p`` the unit
  of p-quadrature coefficients, and the unit system declares a rational
  ``rho`` with ``g_q * g_p == rho * pi``.  Sums only ever combine like
  units; the only cross-unit product the algebra needs is g_q * g_p
  (symplectic-form terms), which lands in the pi unit.  Phases and
  symplectic forms are therefore rational multiples of pi, so commutation
  classes and phase equalities are decided exactly.

A few concrete unit systems used elsewhere:

* magic square: g_q = pi/(2 alpha), g_p = alpha, rho = 1/2;
* graph-state scenarios: g_q = g_p = alpha with alpha^2 = rho*pi;
* GKP generators: g_q = 1, g_p = pi, rho = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

ONE = "1"
GQ = "gq"
GP = "gp"
PI = "pi"

_UNITS = (ONE, GQ, GP, PI)


class UnitError(ValueError):
    """Operation not representable in the exact unit system."""


@dataclass(frozen=True)
class ExactScalar:
    coef: Fraction
    unit: str

    def __post_init__(self):
        if self.unit not in _UNITS:
            raise UnitError(f"unknown unit {self.unit!r}")
        if not isinstance(self.coef, Fraction):
            object.__setattr__(self, "coef", Fraction(self.coef))

    def is_zero(self) -> bool:
        return self.coef == 0

    def __neg__(self) -> "ExactScalar":
        return ExactScalar(-self.coef, self.unit)

    def __add__(self, other: "ExactScalar") -> "ExactScalar":
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.unit != other.unit:
            raise UnitError(f"cannot add units {self.unit} and {other.unit}")
        return ExactScalar(self.coef + other.coef, self.unit)

    def __sub__(self, other: "ExactScalar") -> "ExactScalar":
        return self + (-other)

    def scale(self, r: Union[int, Fraction]) -> "ExactScalar":
        return ExactScalar(self.coef * Fraction(r), self.unit)

    def to_float(self, rho: Fraction, gq_value: float = 1.0) -> float:
        if self.unit == ONE:
            return float(self.coef)
        if self.unit == PI:
            return float(self.coef) * math.pi
        if self.unit == GQ:
            return float(self.coef) * gq_value
        gp_value = float(rho) * math.pi / gq_value
        return float(self.coef) * gp_value


Scalar = Union[ExactScalar, float]


@dataclass(frozen=True)
class ExactBackend:
    """Exact unit system; ``rho == g_q * g_p / pi`` (rational)."""

    rho: Fraction = Fraction(1, 2)

    kind = "exact"

    def __post_init__(self):
        if not isinstance(self.rho, Fraction):
            object.__setattr__(self, "rho", Fraction(self.rho))

    def zero(self, unit: str = ONE) -> ExactScalar:
        return ExactScalar(Fraction(0), unit)

    def q_coef(self, r) -> ExactScalar:
        return ExactScalar(Fraction(r), GQ)

    def p_coef(self, r) -> ExactScalar:
        return ExactScalar(Fraction(r), GP)

    def phase(self, pi_multiple) -> ExactScalar:
        return ExactScalar(Fraction(pi_multiple), PI)

    def mul_qp(self, a: ExactScalar, b: ExactScalar) -> ExactScalar:
        """Product of a q-coefficient with a p-coefficient (lands in pi)."""
        if a.is_zero() or b.is_zero():
            return self.zero(PI)
        units = {a.unit, b.unit}
        if units != {GQ, GP}:
            raise UnitError(f"invalid operand pairing: {a.unit} * {b.unit}")
        return ExactScalar(a.coef * b.coef * self.rho, PI)

    def ratio(self, x: ExactScalar, y: ExactScalar) -> Fraction:
        """x / y for like units; the result is a dimensionless rational."""
        if x.is_zero():
            return Fraction(0)
        if x.unit != y.unit or y.is_zero():
            raise UnitError(f"cannot divide {x.unit} by {y.unit}")
        return x.coef / y.coef

    def mod_2pi(self, s: ExactScalar) -> ExactScalar:
        if s.is_zero():
            return self.zero(PI)
        if s.unit != PI:
            raise UnitError(f"phase must be a pi multiple, got {s.unit}")
        return ExactScalar(s.coef % 2, PI)

    def eq(self, x: ExactScalar, y: ExactScalar) -> bool:
        if x.is_zero() and y.is_zero():
            return True
        return x.unit == y.unit and x.coef == y.coef

    def phase_eq(self, x: ExactScalar, y: ExactScalar) -> bool:
        return self.mod_2pi(x - y).is_zero()

    def omega_class(self, w: ExactScalar) -> str:
        """Classify a symplectic-form value: 'commute' (in 4*pi*Z),
        'anti' (in 4*pi*Z + 2*pi) or 'other'."""
        if w.is_zero():
            return "commute"
        if w.unit != PI:
            raise UnitError("symplectic form must be a pi multiple")
        r = w.coef % 4
        if r == 0:
            return "commute"
        if r == 2:
            return "anti"
        return "other"

    def scalar_to_json(self, s: ExactScalar) -> dict:
        return {"num": s.coef.numerator, "den": s.coef.denominator, "unit": s.unit}

    def scalar_from_json(self, d: dict) -> ExactScalar:
        return ExactScalar(Fraction(d["num"], d["den"]), d["unit"])


@dataclass(frozen=True)
class FloatBackend:
    tol: float = 1e-9

    kind = "float"

    def zero(self, unit: str = ONE) -> float:
        return 0.0

    def q_coef(self, r) -> float:
        return float(r)

    def p_coef(self, r) -> float:
        return float(r)

    def phase(self, pi_multiple) -> float:
        return float(pi_multiple) * math.pi

    def mul_qp(self, a: float, b: float) -> float:
        return a * b

    def ratio(self, x: float, y: float) -> float:
        return x / y

    def mod_2pi(self, s: float) -> float:
        r = math.fmod(s, 2 * math.pi)
        if r < 0:
            r += 2 * math.pi
        # collapse values within tolerance of the wrap point
        if 2 * math.pi - r <= self.tol:
            r = 0.0
        return r

    def eq(self, x: float, y: float) -> bool:
        return abs(x - y) <= self.tol

    def phase_eq(self, x: float, y: float) -> bool:
        return self.mod_2pi(x - y) <= self.tol or 2 * math.pi - self.mod_2pi(x - y) <= self.tol

    def omega_class(self, w: float) -> str:
        r = math.fmod(w, 4 * math.pi)
        if r < 0:
            r += 4 * math.pi
        if r <= self.tol or 4 * math.pi - r <= self.tol:
            return "commute"
        if abs(r - 2 * math.pi) <= self.tol:
            return "anti"
        return "other"

    def scalar_to_json(self, s: float) -> float:
        return float(s)

    def scalar_from_json(self, d) -> float:
        return float(d)


Backend = Union[ExactBackend, FloatBackend]


def circular_distance(a: float, b: float) -> float:
    """Distance between two phases on the circle [0, 2*pi)."""
    d = math.fmod(abs(a - b), 2 * math.pi)
    return min(d, 2 * math.pi - d)
