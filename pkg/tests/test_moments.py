from fractions import Fraction

import numpy as np
import pytest

from qbslab.moments import (MomentError, MomentSet, Poly2D, Variable,
                            rotation_rhs, solve_rotation_moments,
                            translation_moment, verify_recursion)

X = Poly2D.variable(Variable.X)
E = Poly2D.variable(Variable.SPREAD)


# ---------------------------------------------------------------- Poly2D

def test_poly_algebra_square():
    p = (X + E) * (X + E)
    assert p == X * X + 2 * (X * E) + E * E


def test_poly_pow_matches_repeated_mul():
    p = X + 2 * E + Poly2D.constant(3)
    q = p * p * p
    assert p ** 3 == q
    assert p ** 0 == Poly2D.constant(1)


def test_poly_diff_integrate_roundtrip():
    p = 3 * (X * X * E) + Poly2D.constant(5) * E
    # integrating the x-derivative restores p up to the x-free part
    back = p.diff(Variable.X).integrate(Variable.X)
    assert back == 3 * (X * X * E)


def test_poly_evaluate_matches_exact():
    p = X * X * E - 7 * E + Poly2D.constant(2)
    xv, ev = 1.5, 0.25
    exact = p.evaluate_exact(Fraction(3, 2), Fraction(1, 4))
    assert p.evaluate(xv, ev) == pytest.approx(float(exact), rel=0, abs=0)


def test_poly_evaluate_vectorized():
    p = 2 * X + E
    x = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(p.evaluate(x, 0.5), 2 * x + 0.5)


def test_poly_zero_and_text():
    z = Poly2D()
    assert z.is_zero
    assert z.to_text() == "0"
    assert (X - X).is_zero
    assert "x^2" in (X * X).to_text()


# ----------------------------------------------------- translation moments

def test_translation_moment_closed_form():
    # H_i = 2 (-eps)^i / ((i+1)(i+2)), checked against independent exact
    # arithmetic; the float evaluation may differ by an ulp at high order
    for eps in (0.0, 0.01, 0.02, 0.1):
        for i in range(8):
            expected = float(2 * Fraction(-eps) ** i / ((i + 1) * (i + 2)))
            got = translation_moment(i, eps)
            if expected == 0.0:
                assert got == 0.0
            else:
                assert got == pytest.approx(expected, rel=4e-16)


def test_translation_moment_first_values():
    assert translation_moment(0, 0.02) == 1.0
    assert translation_moment(1, 0.02) == pytest.approx(-0.02 / 3, rel=1e-15)
    assert translation_moment(2, 0.02) == pytest.approx(0.02 ** 2 / 6, rel=1e-15)


def test_translation_moment_rejects_negative_order():
    with pytest.raises(MomentError):
        translation_moment(-1, 0.02)


# -------------------------------------------------------- rotation moments

def test_rotation_order2_closed_form():
    """a^2 = eps^2 v^2 / (8 (1 - eps^2/2)) for both variables.

    Derived by hand from the order-2 recursion with a^0 = 1, a^1 = 0:
    the right side is constant, so two antidifferentiations give a pure
    quadratic in the moment's own variable.
    """
    for eps in (0.02, 0.1, 0.5):
        eq = Fraction(eps)
        coeff = eq * eq / (8 * (1 - eq * eq / 2))
        for var, v in ((Variable.X, X), (Variable.SPREAD, E)):
            ms = solve_rotation_moments(var, eps, 2)
            assert ms.polys[0] == Poly2D.constant(1)
            assert ms.polys[1].is_zero
            assert ms.polys[2] == coeff * (v * v)


def test_rotation_zero_eps_all_zero():
    for var in (Variable.X, Variable.SPREAD):
        ms = solve_rotation_moments(var, 0.0, 5)
        assert ms.polys[0] == Poly2D.constant(1)
        for p in ms.polys[1:]:
            assert p.is_zero


def test_rotation_recursion_residuals_exact_zero():
    for eps in (0.0, 0.02, 0.1, 0.5):
        for var in (Variable.X, Variable.SPREAD):
            ms = solve_rotation_moments(var, eps, 4)
            residuals = verify_recursion(ms)
            assert len(residuals) == 3
            assert all(r.is_zero for r in residuals)


def test_rotation_higher_order_residuals():
    ms = solve_rotation_moments(Variable.X, 0.3, 7)
    assert all(r.is_zero for r in verify_recursion(ms))


def test_rotation_moment_degree_growth():
    # each order adds at most one power of the own variable beyond the rhs
    ms = solve_rotation_moments(Variable.X, 0.1, 5)
    for n in range(2, 6):
        assert ms.polys[n].degree <= n


def test_rotation_rhs_denominator():
    # rhs(2) is the constant 1 / (2 (1 - eps^2/2))
    eps = 0.1
    eq = Fraction(eps)
    expected = Poly2D.constant(Fraction(1) / (2 * (1 - eq * eq / 2)))
    assert rotation_rhs(2, Variable.X, eps) == expected


def test_rotation_eps_bound():
    with pytest.raises(MomentError):
        solve_rotation_moments(Variable.X, 1.5, 3)
    # sqrt(2) itself is excluded, just below is fine
    solve_rotation_moments(Variable.X, 1.41, 2)


def test_rotation_max_order_validation():
    with pytest.raises(MomentError):
        solve_rotation_moments(Variable.X, 0.1, 1)


def test_moment_set_shape():
    ms = solve_rotation_moments(Variable.SPREAD, 0.2, 3)
    assert isinstance(ms, MomentSet)
    assert ms.max_order == 3
    assert len(ms.polys) == 4
    assert ms.variable is Variable.SPREAD
