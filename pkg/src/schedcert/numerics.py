"""Arithmetic layer: exact rationals or floats with a fixed tolerance.

Every quantity in the package flows through one of two modes:

* ``exact``  -- ``fractions.Fraction`` everywhere, comparisons are exact.
* ``float``  -- IEEE doubles, comparisons use an absolute tolerance TAU_NUM.

The mode is decided once per instance (see ``Instance.numeric``) and recorded
in every artifact the package emits, so a certificate always says which
arithmetic backs it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

TAU_NUM = 1e-9  # absolute comparison tolerance in float mode

EXACT = "exact"
FLOAT = "float"


def to_fraction(x):
    """Parse a number as an exact rational.

    Accepts int, Fraction, and strings in either "num/den" or decimal form.
    Floats are converted through their shortest decimal repr, which is the
    value the user actually typed in JSON.
    """
    if isinstance(x, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)  # handles both "3/4" and "0.75"
    if isinstance(x, float):
        return Fraction(repr(x))
    raise ValueError(f"cannot interpret {x!r} as a rational")


def is_exactable(x) -> bool:
    """True if x arrived in a form we treat as exact (int or string)."""
    return isinstance(x, (int, str, Fraction)) and not isinstance(x, bool)


def number_to_json(x):
    """Serialize a number: ints stay ints, other rationals become "num/den",
    floats stay floats."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return x
    return float(x)


def number_from_json(x):
    """Inverse of number_to_json: int/str -> Fraction, float -> float."""
    if isinstance(x, float) and not x.is_integer():
        return x
    if isinstance(x, float):
        return Fraction(int(x))
    return to_fraction(x)


@dataclass(frozen=True)
class Numeric:
    """Comparison context for one instance.

    In exact mode all operands are Fractions and comparisons are literal.
    In float mode comparisons allow an absolute slack of ``tol``.
    """

    mode: str = EXACT
    tol: float = TAU_NUM

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    def convert(self, x):
        """Coerce a parsed number into this mode's representation."""
        if self.exact:
            return to_fraction(x)
        return float(x)

    def eq(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol

    def leq(self, a, b) -> bool:
        if self.exact:
            return a <= b
        return a <= b + self.tol

    def geq(self, a, b) -> bool:
        return self.leq(b, a)

    def lt(self, a, b) -> bool:
        """Strictly less, beyond tolerance in float mode."""
        if self.exact:
            return a < b
        return a < b - self.tol

    def is_zero(self, a) -> bool:
        return self.eq(a, 0)

    def nonneg(self, a) -> bool:
        return self.leq(0, a)

    def close_rel(self, a, b, rel) -> bool:
        """|a-b| <= rel * max(|a|, |b|, 1); used for stated relative
        tolerances regardless of mode."""
        scale = max(abs(a), abs(b), 1)
        return abs(a - b) <= rel * scale


def exact_div(a, b):
    """Division that never silently demotes exact operands to float.

    Python's ``/`` on two ints produces a float; this wrapper keeps int and
    Fraction operands in Fraction arithmetic and only uses float division
    when one side already is a float.
    """
    if isinstance(a, float) or isinstance(b, float):
        return a / b
    return Fraction(a) / Fraction(b)


def as_float(x) -> float:
    return float(x)


def sqrt(x, numeric: Numeric):
    """Square root; exact only when x is a perfect rational square."""
    if numeric.exact:
        f = to_fraction(x)
        num = math.isqrt(f.numerator)
        den = math.isqrt(f.denominator)
        if num * num == f.numerator and den * den == f.denominator:
            return Fraction(num, den)
        raise ValueError(f"sqrt({x}) is irrational; use float mode")
    return math.sqrt(x)
