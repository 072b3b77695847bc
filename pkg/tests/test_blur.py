import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from qbslab.blur import (BlurError, BlurKernel1D, BlurKernel2D,
                         fit_rotation_kernel, fit_translation_kernel,
                         gaussian_raw_moments, kernel_density)
from qbslab.core import BlurMeanSign
from qbslab.moments import Variable, solve_rotation_moments, translation_moment


def test_translation_fit_matches_moment_arithmetic():
    """Fitted mean and variance equal the exact moment combinations.

    mean = +/- H1 magnitude = eps/3; variance = H2 - H1^2 = eps^2/18,
    built here from the moment formula rather than the kernel code.
    """
    for eps in (0.01, 0.02, 0.1):
        h1 = translation_moment(1, eps)
        h2 = translation_moment(2, eps)
        k = fit_translation_kernel(eps, BlurMeanSign.PROPOSITION_LITERAL)
        assert k.mean == h1  # literal sign of the stated moments
        assert k.variance == pytest.approx(h2 - h1 * h1, rel=1e-14)
        assert k.variance == eps * eps / 18.0
        k2 = fit_translation_kernel(eps, BlurMeanSign.SECTION_FOUR_FOUR)
        assert k2.mean == -h1
        assert k2.variance == k.variance


def test_translation_fit_dirac_at_zero():
    k = fit_translation_kernel(0.0, BlurMeanSign.PROPOSITION_LITERAL)
    assert k.is_dirac
    assert k.mean == 0.0 and k.variance == 0.0
    assert not fit_translation_kernel(0.02, BlurMeanSign.PROPOSITION_LITERAL).is_dirac


def test_kernel_density_standard_values():
    k = BlurKernel1D(mean=0.0, variance=1.0, eps_transform=1.0)
    assert kernel_density(k, 0.0) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert kernel_density(k, 1.0) == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-14)
    shifted = BlurKernel1D(mean=0.5, variance=4.0, eps_transform=1.0)
    assert kernel_density(shifted, 0.5) == pytest.approx(norm.pdf(0.5, 0.5, 2.0), rel=1e-14)


def test_kernel_density_integrates_to_one():
    eps = 0.02
    k = fit_translation_kernel(eps, BlurMeanSign.PROPOSITION_LITERAL)
    sd = math.sqrt(k.variance)
    mass, _ = quad(lambda y: kernel_density(k, y), k.mean - 10 * sd, k.mean + 10 * sd)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_kernel_density_rejects_dirac():
    k = fit_translation_kernel(0.0, BlurMeanSign.PROPOSITION_LITERAL)
    with pytest.raises(BlurError):
        kernel_density(k, 0.0)


def test_gaussian_raw_moments_against_quadrature():
    mean, var = -0.3, 0.7
    sd = math.sqrt(var)
    got = gaussian_raw_moments(mean, var, 6)
    for k in range(7):
        expected, _ = quad(lambda y, k=k: y ** k * norm.pdf(y, mean, sd),
                           mean - 12 * sd, mean + 12 * sd)
        assert got[k] == pytest.approx(expected, rel=1e-9)


def test_gaussian_raw_moments_degenerate():
    got = gaussian_raw_moments(0.25, 0.0, 4)
    np.testing.assert_allclose(got, [0.25 ** k for k in range(5)])


def test_rotation_fit_from_order2_moments():
    eps = 0.1
    mx = solve_rotation_moments(Variable.X, eps, 2)
    me = solve_rotation_moments(Variable.SPREAD, eps, 2)
    k = fit_rotation_kernel(mx, me)
    assert isinstance(k, BlurKernel2D)
    # variance polynomials are the order-2 moments themselves
    eq = Fraction(eps)
    coeff = float(eq * eq / (8 * (1 - eq * eq / 2)))
    assert k.variance_x.evaluate(2.0, 0.0) == pytest.approx(coeff * 4.0, rel=1e-12)
    assert k.variance_spread.evaluate(0.0, 3.0) == pytest.approx(coeff * 9.0, rel=1e-12)
    assert not k.is_dirac


def test_rotation_fit_dirac_at_zero():
    mx = solve_rotation_moments(Variable.X, 0.0, 2)
    me = solve_rotation_moments(Variable.SPREAD, 0.0, 2)
    assert fit_rotation_kernel(mx, me).is_dirac


def test_rotation_fit_validates_roles():
    mx = solve_rotation_moments(Variable.X, 0.1, 2)
    me = solve_rotation_moments(Variable.SPREAD, 0.1, 2)
    with pytest.raises(BlurError):
        fit_rotation_kernel(me, mx)
    other = solve_rotation_moments(Variable.SPREAD, 0.2, 2)
    with pytest.raises(BlurError):
        fit_rotation_kernel(mx, other)
