"""Cost catalog: values, antiderivatives, kinks, shifted-difference infima."""

import math
from fractions import Fraction

import pytest

from schedcert.costs import (
    CONCAVE,
    CONVEX,
    GENERAL,
    LINEAR,
    LinearCost,
    LogCost,
    PiecewiseLinearCost,
    PowerCost,
    cost_from_json,
)
from schedcert.errors import CostFunctionError

F = Fraction


def test_linear_basics():
    g = LinearCost(2)
    assert g.value(F(3)) == 6
    assert g.derivative(F(3)) == 2
    assert g.antiderivative(F(3)) == 9
    assert g.inverse(F(6)) == 3
    assert g.shape_class == LINEAR
    assert g.exact_capable


def test_power_integer_exact():
    g = PowerCost(2)
    assert g.value(F(3, 2)) == F(9, 4)
    assert g.derivative(F(3, 2)) == 3
    assert g.antiderivative(F(3)) == 9  # t^3/3
    assert g.inverse(F(9, 4)) == F(3, 2)
    assert g.shape_class == CONVEX
    assert g.exact_capable


def test_power_sqrt_float():
    g = PowerCost("1/2")
    assert g.value(4) == pytest.approx(2.0)
    assert g.derivative(4) == pytest.approx(0.25)
    assert g.derivative(0) == math.inf
    assert g.antiderivative(1) == pytest.approx(2 / 3)
    assert g.shape_class == CONCAVE
    assert not g.exact_capable


def test_log_shape():
    g = LogCost()
    assert g.value(0) == 0
    assert g.value(math.e - 1) == pytest.approx(1.0)
    assert g.derivative(1) == pytest.approx(0.5)
    # d/dt [(1+t)ln(1+t) - t] = ln(1+t)
    assert g.antiderivative(1) == pytest.approx(2 * math.log(2) - 1)
    assert g.inverse(1.0, exact=False) == pytest.approx(math.e - 1)


def test_piecewise_linear_eval():
    g = PiecewiseLinearCost([(0, 0), (1, 2), (3, 3)])
    assert g.value(F(1, 2)) == 1
    assert g.value(2) == F(5, 2)
    assert g.value(5) == 4  # final slope 1/2 continues
    assert g.derivative(F(1, 2)) == 2
    assert g.derivative(2) == F(1, 2)
    assert g.antiderivative(1) == 1
    assert g.antiderivative(3) == 6
    assert g.antiderivative(5) == 6 + 3 * 2 + F(1, 2) * 4 / 2
    assert g.breakpoints() == [1, 3]
    assert g.shape_class == CONCAVE
    assert g.inverse(F(5, 2)) == 2


def test_piecewise_classification():
    assert PiecewiseLinearCost([(0, 0), (1, 1), (2, 3)]).shape_class == CONVEX
    assert PiecewiseLinearCost([(0, 0), (1, 2), (2, 3)]).shape_class == CONCAVE
    assert PiecewiseLinearCost([(0, 0), (1, 1), (2, 2)]).shape_class == LINEAR
    assert (
        PiecewiseLinearCost([(0, 0), (1, 2), (2, 3), (3, 6)]).shape_class == GENERAL
    )


def test_piecewise_validation():
    with pytest.raises(CostFunctionError):
        PiecewiseLinearCost([(1, 0), (2, 1)])  # must start at 0
    with pytest.raises(CostFunctionError):
        PiecewiseLinearCost([(0, 0), (1, 2), (2, 1)])  # decreasing
    with pytest.raises(CostFunctionError):
        PiecewiseLinearCost([(0, 0), (0, 1)])  # non-increasing abscissae


def test_shifted_diff_inf_linear_constant():
    g = LinearCost(3)
    assert g.shifted_diff_inf(F(0), F(2), F(5)) == 6


def test_shifted_diff_inf_convex_at_left():
    g = PowerCost(2)
    # difference (t-0)^2 - (t-1)^2 = 2t - 1 is increasing: inf at T=2 -> 3
    assert g.shifted_diff_inf(F(0), F(1), F(2)) == 3


def test_shifted_diff_inf_concave_limit_zero():
    assert PowerCost("1/2").shifted_diff_inf(0, 1, 2) == 0
    assert LogCost().shifted_diff_inf(0, 1, 2) == 0


def test_shifted_diff_inf_piecewise():
    # concave pwl: slopes 2 then 1/2; difference g(t) - g(t-1) decreases to
    # the limit slope_last * 1 = 1/2
    g = PiecewiseLinearCost([(0, 0), (1, 2), (3, 3)])
    assert g.shifted_diff_inf(F(0), F(1), F(1)) == F(1, 2)
    # convex pwl: inf attained at T itself
    h = PiecewiseLinearCost([(0, 0), (2, 1), (3, 3)])
    assert h.shifted_diff_inf(F(0), F(1), F(1)) == h.value(1) - h.value(0)


def test_json_round_trip():
    for g in (
        LinearCost(F(3, 2)),
        PowerCost(3),
        PowerCost("1/2"),
        LogCost(),
        PiecewiseLinearCost([(0, 0), (1, 2), (3, 3)]),
    ):
        assert cost_from_json(g.to_json()) == g
