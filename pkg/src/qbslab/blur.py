"""Gaussian blur kernels fitted to exact transform moments.

The translation kernel matches the first two closed-form moments: mean
+-eps/3 (sign selected by BlurMeanSign) and variance
eps^2/6 - (eps/3)^2 = eps^2/18.  The rotation kernel is a product of two
independent zero-mean Gaussians whose variances are the exact order-2
moment polynomials evaluated at the receiving location.  eps = 0
degenerates to a Dirac kernel in both cases and routes the engine to the
classical branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BlurMeanSign
from .moments import MomentSet, Poly2D, Variable


class BlurError(ValueError):
    pass


@dataclass(frozen=True)
class BlurKernel1D:
    """Normal displacement kernel for the one-dimensional model."""

    mean: float
    variance: float
    eps_transform: float

    @property
    def is_dirac(self) -> bool:
        return self.variance == 0.0 and self.mean == 0.0


@dataclass(frozen=True)
class BlurKernel2D:
    """Product-normal displacement kernel for the two-dimensional model.

    Means are zero; the variances vary with the receiving point and are
    stored as exact order-2 moment polynomials in (x, spread).
    """

    variance_x: Poly2D
    variance_spread: Poly2D
    eps_transform: float

    @property
    def is_dirac(self) -> bool:
        return self.variance_x.is_zero and self.variance_spread.is_zero


def fit_translation_kernel(eps: float, sign_mode: BlurMeanSign) -> BlurKernel1D:
    """Fit the translation blur by its first two moments."""
    if eps < 0 or not math.isfinite(eps):
        raise BlurError("eps_transform must be a finite real >= 0")
    mean = -eps / 3.0 if sign_mode is BlurMeanSign.PROPOSITION_LITERAL else eps / 3.0
    # second central moment simplifies exactly: eps^2/6 - eps^2/9 = eps^2/18
    return BlurKernel1D(mean=mean, variance=eps * eps / 18.0, eps_transform=eps)


def fit_rotation_kernel(moments_x: MomentSet, moments_spread: MomentSet) -> BlurKernel2D:
    """Fit the rotation blur from two solved moment sets.

    Both sets must carry order >= 2 and agree on eps_transform (exact float
    equality; mixing transforms is a hard error).
    """
    if moments_x.variable is not Variable.X or moments_spread.variable is not Variable.SPREAD:
        raise BlurError("expected a mid-price moment set and a spread moment set")
    if moments_x.max_order < 2 or moments_spread.max_order < 2:
        raise BlurError("rotation kernel needs moments up to order 2")
    if moments_x.eps_transform != moments_spread.eps_transform:
        raise BlurError("moment sets were solved at different eps_transform values")
    return BlurKernel2D(variance_x=moments_x.polys[2],
                        variance_spread=moments_spread.polys[2],
                        eps_transform=moments_x.eps_transform)


def kernel_density(kernel: BlurKernel1D, y) -> np.ndarray | float:
    """Normal pdf of the displacement kernel at y.

    Dirac kernels have no density; callers branch to the classical engine
    instead of evaluating them.
    """
    if kernel.variance <= 0.0:
        raise BlurError("kernel_density requires variance > 0 (Dirac kernels have no density)")
    y = np.asarray(y, dtype=float)
    inv = 1.0 / math.sqrt(2.0 * math.pi * kernel.variance)
    out = inv * np.exp(-((y - kernel.mean) ** 2) / (2.0 * kernel.variance))
    if out.shape == ():
        return float(out)
    return out


def gaussian_raw_moments(mean: float, variance: float, max_order: int) -> list:
    """Raw moments m_0..m_max of a normal law, by the standard recursion."""
    if max_order < 0:
        raise BlurError("max_order must be >= 0")
    out = [1.0]
    if max_order >= 1:
        out.append(mean)
    for j in range(2, max_order + 1):
        out.append(mean * out[j - 1] + (j - 1) * variance * out[j - 2])
    return out
