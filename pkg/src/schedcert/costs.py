"""Cost-function catalog.

A closed set of nondecreasing cost shapes with g(0) = 0:

* ``linear``            g(t) = a*t
* ``power``             g(t) = t**c, c > 0 (convex for c >= 1, concave below)
* ``log``               g(t) = ln(1 + t)
* ``piecewise_linear``  continuous piecewise-linear through given points

Each shape knows its value, right derivative, antiderivative G(t) = int_0^t g,
its kinks, and the exact infimum of the shifted difference
inf_{t >= T} [g(t - r1) - g(t - r2)] used by the equal-density dual pass.

Shapes declare whether exact rational arithmetic is closed under their
operations (``exact_capable``); instances pick float mode otherwise.
Validation rejects anything decreasing or with g(0) != 0; the representation
cannot express jump discontinuities, which is intentional.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import CostFunctionError
from .numerics import to_fraction

LINEAR = "linear"
CONVEX = "convex"
CONCAVE = "concave"
GENERAL = "general"


class CostFunction:
    """Base class; concrete shapes implement the numeric kernel."""

    kind = "abstract"
    shape_class = GENERAL
    exact_capable = False

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t):
        """Right derivative g'(t); may be +inf at 0 for concave shapes."""
        raise NotImplementedError

    def antiderivative(self, t):
        """G(t) = int_0^t g(u) du."""
        raise NotImplementedError

    def inverse(self, v, exact=True):
        """Smallest t with g(t) = v, or None if v is never reached.

        With exact=True the result must be exactly representable, else a
        ValueError is raised; exact=False always returns a float.
        """
        raise NotImplementedError

    def breakpoints(self):
        """Interior kinks (piecewise-linear only)."""
        return []

    def shifted_diff_inf(self, r1, r2, T):
        """inf over t >= T of g(t - r1) - g(t - r2), for r1 <= r2 <= T.

        Exact for every catalog shape: the difference is monotone for
        convex/concave shapes and piecewise linear for the pwl shape, so the
        infimum sits at T, at a shifted kink, or in the t -> infinity limit.
        """
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, CostFunction) and self.to_json() == other.to_json()

    def __repr__(self):
        return f"CostFunction({self.to_json()})"


class LinearCost(CostFunction):
    kind = "linear"
    shape_class = LINEAR
    exact_capable = True

    def __init__(self, a=1):
        self.a = to_fraction(a) if not isinstance(a, float) else a
        if self.a <= 0:
            raise CostFunctionError("linear cost needs slope a > 0")

    def value(self, t):
        return self.a * t

    def derivative(self, t):
        return self.a

    def antiderivative(self, t):
        return self.a * t * t / 2

    def inverse(self, v, exact=True):
        t = v / self.a
        return t if exact else float(t)

    def shifted_diff_inf(self, r1, r2, T):
        return self.a * (r2 - r1)

    def to_json(self):
        from .numerics import number_to_json

        return {"kind": "linear", "a": number_to_json(self.a)}


class PowerCost(CostFunction):
    kind = "power"

    def __init__(self, c):
        if isinstance(c, float) and c.is_integer():
            c = int(c)
        self.c = c if isinstance(c, (int, float)) else to_fraction(c)
        if isinstance(self.c, Fraction) and self.c.denominator == 1:
            self.c = int(self.c)
        if self.c <= 0:
            raise CostFunctionError("power cost needs exponent c > 0")
        if self.c == 1:
            self.shape_class = LINEAR
        elif self.c > 1:
            self.shape_class = CONVEX
        else:
            self.shape_class = CONCAVE
        self.exact_capable = isinstance(self.c, int)

    def value(self, t):
        if isinstance(self.c, int):
            return t**self.c
        return float(t) ** float(self.c)

    def derivative(self, t):
        c = self.c
        if isinstance(c, int):
            return c * t ** (c - 1) if c != 1 else t * 0 + 1
        tf = float(t)
        if tf == 0.0:
            return math.inf if c < 1 else 0.0
        return float(c) * tf ** (float(c) - 1.0)

    def antiderivative(self, t):
        c = self.c
        if isinstance(c, int):
            if isinstance(t, float):
                return t ** (c + 1) / (c + 1)
            return t ** (c + 1) / Fraction(c + 1)
        return float(t) ** (float(c) + 1.0) / (float(c) + 1.0)

    def inverse(self, v, exact=True):
        if not exact:
            return float(v) ** (1.0 / float(self.c))
        if not isinstance(self.c, int):
            raise ValueError("non-integer power has no exact inverse")
        f = to_fraction(v)
        num = round(f.numerator ** (1 / self.c))
        den = round(f.denominator ** (1 / self.c))
        for dn in (num - 1, num, num + 1):
            for dd in (den - 1, den, den + 1):
                if dn >= 0 and dd > 0 and dn**self.c == f.numerator and dd**self.c == f.denominator:
                    return Fraction(dn, dd)
        raise ValueError(f"{v} has no exact {self.c}-th root")

    def shifted_diff_inf(self, r1, r2, T):
        if self.shape_class == CONCAVE:
            return 0  # difference decreases to zero
        # linear (c == 1) is constant, convex is nondecreasing: value at T
        return self.value(T - r1) - self.value(T - r2)

    def to_json(self):
        from .numerics import number_to_json

        c = self.c
        return {"kind": "power", "c": number_to_json(c) if not isinstance(c, float) else c}


class LogCost(CostFunction):
    kind = "log"
    shape_class = CONCAVE
    exact_capable = False

    def value(self, t):
        return math.log1p(float(t))

    def derivative(self, t):
        return 1.0 / (1.0 + float(t))

    def antiderivative(self, t):
        tf = float(t)
        return (1.0 + tf) * math.log1p(tf) - tf

    def inverse(self, v, exact=True):
        if exact:
            raise ValueError("log cost has no exact inverse")
        return math.expm1(float(v))

    def shifted_diff_inf(self, r1, r2, T):
        return 0.0

    def to_json(self):
        return {"kind": "log"}


class PiecewiseLinearCost(CostFunction):
    """Continuous piecewise-linear cost through (t_i, v_i), starting (0, 0);
    the final slope continues beyond the last point."""

    kind = "piecewise_linear"
    exact_capable = True

    def __init__(self, points):
        pts = [(to_fraction(t), to_fraction(v)) for t, v in points]
        if len(pts) < 2:
            raise CostFunctionError("need at least two points")
        if pts[0] != (0, 0):
            raise CostFunctionError("first point must be (0, 0)")
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t1 <= t0:
                raise CostFunctionError("abscissae must increase strictly")
            if v1 < v0:
                raise CostFunctionError("cost must be nondecreasing")
        self.points = pts
        self.slopes = [(v1 - v0) / (t1 - t0) for (t0, v0), (t1, v1) in zip(pts, pts[1:])]
        # cumulative areas at the breakpoints
        self.areas = [Fraction(0)]
        for ((t0, v0), (t1, v1)) in zip(pts, pts[1:]):
            self.areas.append(self.areas[-1] + (v0 + v1) * (t1 - t0) / 2)
        if all(s == self.slopes[0] for s in self.slopes):
            self.shape_class = LINEAR
        elif all(a <= b for a, b in zip(self.slopes, self.slopes[1:])):
            self.shape_class = CONVEX
        elif all(a >= b for a, b in zip(self.slopes, self.slopes[1:])):
            self.shape_class = CONCAVE
        else:
            self.shape_class = GENERAL

    def _segment(self, t):
        """Index i such that t lies in [t_i, t_{i+1}) (last segment extends)."""
        pts = self.points
        lo, hi = 0, len(pts) - 1
        if t >= pts[-1][0]:
            return len(pts) - 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pts[mid][0] <= t:
                lo = mid
            else:
                hi = mid
        return lo

    def value(self, t):
        i = self._segment(t)
        t0, v0 = self.points[i]
        return v0 + self.slopes[i] * (t - t0)

    def derivative(self, t):
        return self.slopes[self._segment(t)]

    def antiderivative(self, t):
        i = self._segment(t)
        t0, v0 = self.points[i]
        d = t - t0
        return self.areas[i] + v0 * d + self.slopes[i] * d * d / 2

    def inverse(self, v, exact=True):
        pts = self.points
        if v <= 0:
            return 0 if exact else 0.0
        for i, ((t0, v0), (t1, v1)) in enumerate(zip(pts, pts[1:])):
            if v0 < v <= v1:
                t = t0 + (v - v0) / self.slopes[i]
                return t if exact else float(t)
        if self.slopes[-1] == 0:
            return None  # never reached
        t = pts[-1][0] + (v - pts[-1][1]) / self.slopes[-1]
        return t if exact else float(t)

    def breakpoints(self):
        return [t for t, _ in self.points[1:]]

    def shifted_diff_inf(self, r1, r2, T):
        cands = [T]
        for bp in self.breakpoints():
            for r in (r1, r2):
                if bp + r >= T:
                    cands.append(bp + r)
        best = min(self.value(t - r1) - self.value(t - r2) for t in cands)
        limit = self.slopes[-1] * (r2 - r1)
        return min(best, limit)

    def to_json(self):
        from .numerics import number_to_json

        return {
            "kind": "piecewise_linear",
            "points": [[number_to_json(t), number_to_json(v)] for t, v in self.points],
        }


def cost_from_json(d) -> CostFunction:
    kind = d.get("kind")
    if kind == "linear":
        return LinearCost(d.get("a", 1))
    if kind == "power":
        return PowerCost(d["c"])
    if kind == "log":
        return LogCost()
    if kind == "piecewise_linear":
        return PiecewiseLinearCost(d["points"])
    raise CostFunctionError(f"unknown cost kind {kind!r}")
