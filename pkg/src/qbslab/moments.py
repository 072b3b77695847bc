"""Exact blur moments for the translation and rotation transforms.

The translation case has closed-form constant moments.  The rotation case
couples the moments of successive orders through a second-order ODE in the
observed variable; this module solves that recursion exactly over the
rationals, so residual checks are identities rather than tolerance tests.

Polynomials are bivariate in (x, e), where x is the mid-price and e the
half bid-offer spread, with Fraction coefficients keyed by exponent pairs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

_SQRT2_BOUND = 2  # |eps| < sqrt(2) <=> eps**2 < 2, checked exactly


class Variable(enum.Enum):
    X = "x"
    SPREAD = "spread"


class MomentError(ValueError):
    """Raised for unsupported orders or out-of-range transform magnitudes."""


class Poly2D:
    """Sparse bivariate polynomial over the rationals.

    Terms map (i, j) -> Fraction with no stored zero coefficients; i is the
    power of x, j the power of e.  Instances are treated as immutable.
    """

    __slots__ = ("terms", "_float_terms")

    def __init__(self, terms: dict | None = None):
        cleaned = {}
        if terms:
            for (i, j), c in terms.items():
                c = Fraction(c)
                if c != 0:
                    cleaned[(int(i), int(j))] = c
        self.terms = cleaned
        self._float_terms = None

    @classmethod
    def constant(cls, c) -> "Poly2D":
        return cls({(0, 0): Fraction(c)})

    @classmethod
    def variable(cls, var: Variable) -> "Poly2D":
        key = (1, 0) if var is Variable.X else (0, 1)
        return cls({key: Fraction(1)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(i + j for i, j in self.terms)

    def __eq__(self, other):
        if not isinstance(other, Poly2D):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "Poly2D":
        if not isinstance(other, Poly2D):
            other = Poly2D.constant(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return Poly2D(out)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self) -> "Poly2D":
        return Poly2D({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "Poly2D":
        if not isinstance(other, Poly2D):
            other = Poly2D.constant(other)
        return self + (-other)

    def __mul__(self, other) -> "Poly2D":
        if isinstance(other, Poly2D):
            out: dict = {}
            for (i1, j1), c1 in self.terms.items():
                for (i2, j2), c2 in other.terms.items():
                    k = (i1 + i2, j1 + j2)
                    out[k] = out.get(k, Fraction(0)) + c1 * c2
            return Poly2D(out)
        c = Fraction(other)
        return Poly2D({k: v * c for k, v in self.terms.items()})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n: int) -> "Poly2D":
        if n < 0:
            raise ValueError("negative polynomial powers are not defined")
        out = Poly2D.constant(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def diff(self, var: Variable) -> "Poly2D":
        out = {}
        for (i, j), c in self.terms.items():
            if var is Variable.X and i > 0:
                out[(i - 1, j)] = c * i
            elif var is Variable.SPREAD and j > 0:
                out[(i, j - 1)] = c * j
        return Poly2D(out)

    def integrate(self, var: Variable) -> "Poly2D":
        """Antiderivative with integration constant zero."""
        out = {}
        for (i, j), c in self.terms.items():
            if var is Variable.X:
                out[(i + 1, j)] = c / (i + 1)
            else:
                out[(i, j + 1)] = c / (j + 1)
        return Poly2D(out)

    def evaluate(self, x, e=0.0):
        """Evaluate at floats or arrays (float arithmetic)."""
        if self._float_terms is None:
            self._float_terms = [(i, j, float(c)) for (i, j), c in sorted(self.terms.items())]
        x = np.asarray(x, dtype=float)
        e = np.asarray(e, dtype=float)
        out = np.zeros(np.broadcast(x, e).shape)
        for i, j, c in self._float_terms:
            out = out + c * np.power(x, i) * np.power(e, j)
        if out.shape == ():
            return float(out)
        return out

    def evaluate_exact(self, x, e=0) -> Fraction:
        x = Fraction(x)
        e = Fraction(e)
        total = Fraction(0)
        for (i, j), c in self.terms.items():
            total += c * x**i * e**j
        return total

    def to_text(self) -> str:
        """Canonical text form: terms as 'c * x^i * e^j' joined by ' + '.

        Terms are ordered by descending total degree, then descending x
        power.  The zero polynomial renders as '0'.
        """
        if not self.terms:
            return "0"
        keys = sorted(self.terms, key=lambda k: (-(k[0] + k[1]), -k[0]))
        return " + ".join(f"{self.terms[k]} * x^{k[0]} * e^{k[1]}" for k in keys)

    def __repr__(self):
        return f"Poly2D({self.to_text()})"


@dataclass(frozen=True)
class MomentSet:
    """Solved moments a^0..a^max_order for one variable at one transform size."""

    variable: Variable
    eps_transform: float
    max_order: int
    polys: tuple

    def __post_init__(self):
        if len(self.polys) != self.max_order + 1:
            raise MomentError("polys must hold orders 0..max_order")


def translation_moment(order: int, eps: float) -> float:
    """Closed-form moment of the shift-transform blur: 2*(-eps)^i/((i+1)(i+2))."""
    if order < 0:
        raise MomentError("moment order must be >= 0")
    return 2.0 * (-eps) ** order / ((order + 1) * (order + 2))


def _rotation_base(variable: Variable) -> tuple:
    """(own, other) variable polynomials for the order-n source term."""
    x = Poly2D.variable(Variable.X)
    e = Poly2D.variable(Variable.SPREAD)
    if variable is Variable.X:
        return (x, e)
    return (e, x)


def rotation_rhs(order: int, variable: Variable, eps: float) -> Poly2D:
    """Source polynomial of the order-n rotation moment equation.

    For the mid-price: ((eps^2/2) x - eps e)^(n-2) / (n (n-1) (1 - eps^2/2)^(n-1)),
    and with (x, e) swapped and the sign of the cross term flipped for the
    spread.  The binary-float eps is converted to an exact rational first.
    Requires eps^2 < 2.
    """
    if order < 2:
        raise MomentError("rotation_rhs is defined for orders >= 2")
    eq = Fraction(eps)
    if eq * eq >= _SQRT2_BOUND:
        raise MomentError("|eps_transform| must be < sqrt(2) in the rotation case")
    own, other = _rotation_base(variable)
    half_sq = eq * eq / 2
    if variable is Variable.X:
        base = own * half_sq - other * eq
    else:
        base = own * half_sq + other * eq
    denom = Fraction(order) * Fraction(order - 1) * (1 - half_sq) ** (order - 1)
    return base ** (order - 2) * (Fraction(1) / denom)


def solve_rotation_moments(variable: Variable, eps: float, max_order: int) -> MomentSet:
    """Solve the rotation moment recursion exactly up to max_order.

    Order n satisfies
        [(-1)^n a^(n-2) + 2n d(a^(n-1))/dv + n(n-1) d2(a^n)/dv2] / n! = rhs(n)
    where v is the moment's own variable (x for mid-price moments, e for
    spread moments).  a^0 = 1, a^1 = 0, and each a^n is obtained by two
    exact antidifferentiations in v with both integration constants zero.
    """
    if max_order < 2:
        raise MomentError("max_order must be >= 2")
    eq = Fraction(eps)
    if eq * eq >= _SQRT2_BOUND:
        raise MomentError("|eps_transform| must be < sqrt(2) in the rotation case")
    v = Variable.X if variable is Variable.X else Variable.SPREAD
    polys = [Poly2D.constant(1), Poly2D()]
    fact = Fraction(2)  # n! running value, starts at 2! for n = 2
    for n in range(2, max_order + 1):
        if n > 2:
            fact *= n
        rhs = rotation_rhs(n, variable, eps)
        sign = Fraction(-1) ** n
        second = rhs * fact - polys[n - 2] * sign - polys[n - 1].diff(v) * (2 * n)
        second = second * (Fraction(1) / (Fraction(n) * Fraction(n - 1)))
        polys.append(second.integrate(v).integrate(v))
    return MomentSet(variable=variable, eps_transform=float(eps),
                     max_order=max_order, polys=tuple(polys))


def verify_recursion(moments: MomentSet) -> list:
    """Recompute each order's equation from the stored polynomials.

    Returns the list of residual polynomials for orders 2..max_order; every
    residual of a correctly solved set is identically zero (exact rational
    arithmetic, no tolerance).
    """
    v = Variable.X if moments.variable is Variable.X else Variable.SPREAD
    residuals = []
    fact = Fraction(2)
    for n in range(2, moments.max_order + 1):
        if n > 2:
            fact *= n
        lhs = (moments.polys[n - 2] * (Fraction(-1) ** n)
               + moments.polys[n - 1].diff(v) * (2 * n)
               + moments.polys[n].diff(v).diff(v) * (n * (n - 1)))
        lhs = lhs * (Fraction(1) / fact)
        residuals.append(lhs - rotation_rhs(n, moments.variable, moments.eps_transform))
    return residuals
