import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnn_sim.cvpauli import (
    ModeMismatchError,
    build_magic_square,
    commutes,
    identity_word,
    omega_class,
    pauli_adjoint,
    pauli_mul,
    pauli_power,
    symplectic_form,
    verify_magic_square,
    word_from_coeffs,
    word_from_json,
    words_equal,
    x_word,
    z_word,
)
from crnn_sim.scalars import ExactBackend, FloatBackend, UnitError

from oracles import GridQuadratures, GridState

FLOAT = FloatBackend()
EXACT = ExactBackend(rho=Fraction(1, 2))  # magic-square units


def test_symplectic_xz_anticommute():
    alpha = 0.83
    x = x_word(1, 0, alpha, FLOAT)
    z = z_word(1, 0, math.pi / (2 * alpha), FLOAT)
    w = symplectic_form(x, z)
    assert abs(w - 2 * math.pi) < 1e-12
    assert omega_class(x, z) == "anti"


def test_symplectic_xz_grid_oracle():
    # independent check: measure the commutator phase of the exponentiated
    # truncated quadratures; expect X Z = e^{-i omega/2} Z X with omega = 2pi
    alpha = 0.83
    g = GridQuadratures(n_points=256, length=30.0)
    X = g.word_operator(0.0, -2 * alpha)
    Z = g.word_operator(2 * (math.pi / (2 * alpha)), 0.0)
    psi = g.gaussian(sigma=1.0)
    phase = g.overlap_phase(X @ (Z @ psi), Z @ (X @ psi))
    assert abs(phase - math.pi) < 1e-6  # e^{-i*2pi/2} = -1


def test_symplectic_disjoint_modes_and_like_types():
    x1 = x_word(2, 0, 1.0, FLOAT)
    x2 = x_word(2, 1, 1.0, FLOAT)
    assert symplectic_form(x1, x2) == 0.0
    z1 = z_word(1, 0, 0.7, FLOAT)
    z1b = z_word(1, 0, -2.3, FLOAT)
    assert symplectic_form(z1, z1b) == 0.0


def test_symplectic_mode_mismatch():
    with pytest.raises(ModeMismatchError):
        symplectic_form(x_word(1, 0, 1.0, FLOAT), x_word(2, 0, 1.0, FLOAT))


def test_exact_invalid_unit_pairing():
    # q-coefficients cannot multiply q-coefficients in the unit system
    a = EXACT.q_coef(2)
    with pytest.raises(UnitError):
        EXACT.mul_qp(a, a)


def test_mul_bch_phase():
    alpha = 0.83
    x = x_word(1, 0, alpha, FLOAT)
    z = z_word(1, 0, math.pi / (2 * alpha), FLOAT)
    prod = pauli_mul(x, z)
    # theta = -omega/4 = -pi/2 (stored mod 2pi)
    assert abs(prod.theta - 3 * math.pi / 2) < 1e-12

    # grid-oracle cross-check of the same phase
    g = GridQuadratures(n_points=256, length=30.0)
    X = g.word_operator(0.0, -2 * alpha)
    Z = g.word_operator(2 * (math.pi / (2 * alpha)), 0.0)
    comb = g.word_operator(2 * (math.pi / (2 * alpha)), -2 * alpha)
    psi = g.gaussian(sigma=1.0)
    phase = g.overlap_phase(X @ (Z @ psi), comb @ psi)
    assert abs(phase - 3 * math.pi / 2) < 1e-6


def test_mul_identity():
    p = word_from_coeffs([0.3, -1.2], [0.5, 0.0], FLOAT, theta=1.1)
    assert words_equal(pauli_mul(identity_word(2, FLOAT), p), p)
    assert words_equal(pauli_mul(p, identity_word(2, FLOAT)), p)


def test_row1_product_is_identity():
    m = build_magic_square(1.0, FLOAT)
    prod = pauli_mul(pauli_mul(m[0, 0], m[0, 1]), m[0, 2])
    assert prod.is_identity()


def test_adjoint_and_power():
    alpha = 1.7
    x = x_word(1, 0, alpha, FLOAT)
    assert words_equal(pauli_adjoint(x), x_word(1, 0, -alpha, FLOAT))
    z = z_word(1, 0, 0.4, FLOAT)
    assert words_equal(pauli_power(z, 2), z_word(1, 0, 0.8, FLOAT))
    assert words_equal(pauli_mul(x, pauli_adjoint(x)), identity_word(1, FLOAT))


def test_power_scales_symplectic_form_quadratically():
    p1 = word_from_coeffs([0.3, 0.1], [-0.2, 0.9], FLOAT)
    p2 = word_from_coeffs([-1.0, 0.4], [0.6, 0.2], FLOAT)
    w = symplectic_form(p1, p2)
    for t in (0.5, 2.0, 3.7):
        ws = symplectic_form(pauli_power(p1, t), pauli_power(p2, t))
        assert abs(ws - t * t * w) < 1e-9


coeff = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)
vec2 = st.tuples(coeff, coeff)


@given(vec2, vec2, vec2, vec2)
def test_antisymmetry(a1, b1, a2, b2):
    p1 = word_from_coeffs(a1, b1, FLOAT)
    p2 = word_from_coeffs(a2, b2, FLOAT)
    assert abs(symplectic_form(p1, p2) + symplectic_form(p2, p1)) < 1e-9


@given(vec2, vec2, vec2, vec2, vec2, vec2)
@settings(max_examples=50)
def test_associativity_mod_phase(a1, b1, a2, b2, a3, b3):
    p1 = word_from_coeffs(a1, b1, FLOAT)
    p2 = word_from_coeffs(a2, b2, FLOAT)
    p3 = word_from_coeffs(a3, b3, FLOAT)
    left = pauli_mul(pauli_mul(p1, p2), p3)
    right = pauli_mul(p1, pauli_mul(p2, p3))
    assert words_equal(left, right)


@given(vec2, vec2)
def test_inverse_law(a, b):
    p = word_from_coeffs(a, b, FLOAT, theta=0.37)
    assert pauli_mul(p, pauli_adjoint(p)).is_identity()


@given(vec2, vec2, vec2, vec2)
def test_phase_consistency(a1, b1, a2, b2):
    p1 = word_from_coeffs(a1, b1, FLOAT)
    p2 = word_from_coeffs(a2, b2, FLOAT)
    w = symplectic_form(p1, p2)
    t12 = pauli_mul(p1, p2).theta
    t21 = pauli_mul(p2, p1).theta
    diff = FLOAT.mod_2pi(t21 - t12 - w / 2.0)
    assert diff < 1e-9 or 2 * math.pi - diff < 1e-9


@pytest.mark.parametrize("alpha", [1.0, 2.0, 1.0 / 3.0])
def test_magic_square_named_alphas(alpha):
    report = verify_magic_square(build_magic_square(alpha, FLOAT))
    assert report.passed, report.failures()
    assert report.classical_assignments == 0


def test_magic_square_random_alphas():
    rng = np.random.default_rng(7)
    for _ in range(100):
        alpha = float(rng.uniform(1e-3, 10.0))
        report = verify_magic_square(build_magic_square(alpha, FLOAT))
        assert report.passed, (alpha, report.failures())


def test_magic_square_exact_symbolic():
    report = verify_magic_square(build_magic_square(Fraction(1), EXACT))
    assert report.passed, report.failures()
    # also a non-unit rational alpha coefficient
    report = verify_magic_square(build_magic_square(Fraction(3, 7), EXACT))
    assert report.passed, report.failures()


def test_magic_square_column3_phase_is_pi():
    m = build_magic_square(Fraction(1), EXACT)
    prod = pauli_mul(pauli_mul(m[0, 2], m[1, 2]), m[2, 2])
    assert all(s.is_zero() for s in prod.vector())
    assert EXACT.phase_eq(prod.theta, EXACT.phase(1))


def test_corrupt_grid_fails():
    m = build_magic_square(1.0, FLOAT)
    grid = [list(row) for row in m.grid]
    grid[0][0] = identity_word(2, FLOAT)
    from crnn_sim.cvpauli import MagicSquare

    bad = MagicSquare(tuple(tuple(r) for r in grid))
    assert not verify_magic_square(bad).passed


def test_float_exact_agreement():
    # same inputs through both backends agree to 1e-9 after numeric
    # substitution of the formal units
    alpha = 1.25
    gq_value = math.pi / (2 * alpha)
    me = build_magic_square(Fraction(1), EXACT)
    mf = build_magic_square(alpha, FLOAT)
    for r in range(3):
        for c in range(3):
            we, wf = me[r, c], mf[r, c]
            for se, sf in zip(we.vector(), wf.vector()):
                assert abs(se.to_float(EXACT.rho, gq_value) - sf) < 1e-9
            assert abs(we.theta.to_float(EXACT.rho, gq_value) - FLOAT.mod_2pi(wf.theta)) < 1e-9
    we = symplectic_form(me[0, 0], me[2, 1])
    wf = symplectic_form(mf[0, 0], mf[2, 1])
    assert abs(we.to_float(EXACT.rho, gq_value) - wf) < 1e-9


def test_word_json_roundtrip():
    p = word_from_coeffs([0.25, -1.5], [2.0, 0.0], FLOAT, theta=0.7)
    assert words_equal(word_from_json(p.to_json(), FLOAT), p)
    q = word_from_coeffs([Fraction(1, 4)], [Fraction(-2)], EXACT)
    assert words_equal(word_from_json(q.to_json(), EXACT), q)


def test_grid_state_matches_dense_oracle():
    # the shift+phase fast path used by later tableau oracles agrees with
    # dense exponentiation
    dense = GridQuadratures(n_points=256, length=32.0)
    fast = GridState(1, n_points=256, spacing=32.0 / 256)
    a, b = 0.9, -2 * 4 * (32.0 / 256)  # b/2 = 4 grid steps
    psi = fast.gaussian([0.7], sigma=1.0)
    out_fast = fast.apply_word(psi, [a], [b], theta=0.2)
    out_dense = np.exp(1j * 0.2) * (dense.word_operator(a, b) @ psi)
    # ignore wrap-around tails
    core = slice(32, -32)
    assert np.max(np.abs(out_fast[core] - out_dense[core])) < 1e-6
