"""Expression grammar: precedence, error reporting, print/parse round trips."""

import math

import numpy as np
import pytest

from gaugeforge.jets import (
    ArityError,
    CoordinateChart,
    ParseError,
    ScalarField,
    UnknownIdentifierError,
    parse_expr,
)

CHART = CoordinateChart(
    ("t", "r", "theta", "phi"),
    ((-1.0, 1.0), (4.0, 100.0), (0.2, math.pi - 0.2), (0.1, 6.1)),
)
PT = (0.3, 5.0, 1.2, 2.5)


def val(source, point=PT, constants=None):
    return parse_expr(source, CHART, constants)(point)


# ---------------------------------------------------------------- precedence


def test_additive_left_associative():
    assert val("2-3-4") == -5.0
    assert val("2-3+4") == 3.0


def test_multiplicative_left_associative():
    assert val("2/3/4") == pytest.approx(2.0 / 12.0, rel=1e-15)
    assert val("8/2*4") == 16.0


def test_power_right_associative():
    assert val("2^3^2") == pytest.approx(512.0, rel=1e-12)


def test_power_binds_above_product():
    assert val("2*3^2") == 18.0
    assert val("3^2*2") == 18.0


def test_unary_minus_binds_tighter_than_power():
    # '-' is part of the unary production, so -x^2 means (-x)^2
    assert val("-3^2") == 9.0
    f = parse_expr("-r^2", CHART)
    assert f(PT) == 25.0
    assert parse_expr("-(r^2)", CHART)(PT) == -25.0


def test_nested_unary():
    assert val("--5") == 5.0
    assert val("-(-5)") == 5.0
    assert val("r--theta") == PT[1] + PT[2]


def test_call_and_parens():
    assert val("sin(theta)^2+cos(theta)^2") == pytest.approx(1.0, rel=1e-15)
    assert val("(r+1)*(r-1)") == 24.0


def test_numbers():
    assert val("0.5") == 0.5
    assert val(".5") == 0.5
    assert val("2.") == 2.0
    assert val("1e2") == 100.0
    assert val("1.5E-2") == 0.015
    assert val("2e+1") == 20.0


def test_whitespace_insensitive():
    assert val("  r +  theta\t* 2 ") == val("r+theta*2")


# ---------------------------------------------------------------- constants


def test_constants_substituted_at_parse():
    f = parse_expr("1-2*m/r", CHART, constants={"m": 1.0})
    assert f(PT) == pytest.approx(0.6, rel=1e-15)
    # unknown name without the binding
    with pytest.raises(UnknownIdentifierError):
        parse_expr("1-2*m/r", CHART)


def test_constant_does_not_shadow_coordinate():
    # coordinates win over nothing; constants fill the gap only for non-coordinates
    f = parse_expr("r+a", CHART, constants={"a": 2.0})
    assert f(PT) == 7.0


# ---------------------------------------------------------------- errors


@pytest.mark.parametrize(
    "source,exc,offset",
    [
        ("r +", ParseError, 3),
        ("", ParseError, 0),
        ("2*)r", ParseError, 2),
        ("r^", ParseError, 2),
        ("(r+1", ParseError, 4),
        ("r 2", ParseError, 2),
        ("3..5", ParseError, 2),
        ("sin(r,theta)", ArityError, 0),
        ("sin()", ArityError, 0),
        ("bogus+1", UnknownIdentifierError, 0),
        ("r+qq", UnknownIdentifierError, 2),
    ],
)
def test_error_offsets(source, exc, offset):
    with pytest.raises(exc) as info:
        parse_expr(source, CHART)
    assert info.value.offset == offset


def test_error_hierarchy():
    assert issubclass(UnknownIdentifierError, ParseError)
    assert issubclass(ArityError, ParseError)
    assert issubclass(ParseError, ValueError)


# ---------------------------------------------------------------- round trips


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        kind = rng.integers(0, 3)
        if kind == 0:
            return f"{rng.uniform(0.5, 3.0):.3f}"
        if kind == 1:
            return ("t", "r", "theta", "phi")[rng.integers(0, 4)]
        return f"{rng.integers(1, 5)}"
    op = rng.integers(0, 6)
    a = _random_expr(rng, depth - 1)
    b = _random_expr(rng, depth - 1)
    if op == 0:
        return f"({a}+{b})"
    if op == 1:
        return f"({a}-{b})"
    if op == 2:
        return f"({a}*{b})"
    if op == 3:
        return f"({a}/({b}+4))"
    if op == 4:
        fn = ("sin", "cos", "exp")[rng.integers(0, 3)]
        return f"{fn}({a})"
    return f"({a})^{rng.integers(1, 4)}"


def test_round_trip_100_random_expressions():
    rng = np.random.default_rng(2024)
    pts = [(0.2, 6.0, 1.0, 1.5), (0.5, 8.0, 0.7, 4.0), (-0.3, 12.0, 2.1, 3.0)]
    for _ in range(100):
        source = _random_expr(rng, 4)
        f = parse_expr(source, CHART)
        printed = f.to_source()
        g = parse_expr(printed, CHART)
        assert g.to_source() == printed  # printing is a fixed point
        for pt in pts:
            assert f(pt) == g(pt)


@pytest.mark.parametrize(
    "source",
    ["-r^2", "-(r^2)", "2-3-4", "2/3/4", "2^3^2", "-sin(r)", "r--theta",
     "-(r^2*sin(theta)^2)", "1/(1-2/r)", "-1/(1-2/r)"],
)
def test_round_trip_preserves_value(source):
    f = parse_expr(source, CHART)
    g = parse_expr(f.to_source(), CHART)
    for pt in [PT, (0.1, 9.0, 0.5, 0.9)]:
        assert f(pt) == g(pt)


# ---------------------------------------------------------------- field combinators


def test_combinators_build_fields():
    r = ScalarField.coordinate(CHART, 1)
    th = ScalarField.coordinate(CHART, 2)
    f = 2.0 * r + th * th - 1.0
    assert f(PT) == pytest.approx(2 * 5.0 + 1.44 - 1.0, rel=1e-15)
    g = -f
    assert g(PT) == -f(PT)
    # combinator output still prints and re-parses
    h = parse_expr(f.to_source(), CHART)
    assert h(PT) == f(PT)


def test_combinator_rejects_mixed_charts():
    other = CoordinateChart(("t", "x", "y", "z"), ((-1, 1),) * 4)
    a = ScalarField.coordinate(CHART, 1)
    b = ScalarField.coordinate(other, 1)
    with pytest.raises(ValueError):
        _ = a + b
