import math
import random

import pytest

from curvedlattice.expr import (
    BinOp,
    Call,
    DerivativeError,
    EvalError,
    Neg,
    Num,
    Param,
    ParseError,
    Var,
    diff_t,
    evaluate,
    param_names,
    parse,
    to_source,
    uses_variable,
)


def test_parse_metric_exponent():
    ast = parse("exp(r*t + q*x)")
    expected = Call(
        "exp",
        BinOp("+", BinOp("*", Param("r"), Var("t")), BinOp("*", Param("q"), Var("x"))),
    )
    assert ast == expected


def test_parse_incomplete_expression_offset():
    with pytest.raises(ParseError) as err:
        parse("2*")
    assert err.value.offset == 2


def test_parse_right_associative_power():
    ast = parse("(1 - (q*x)^2)^0.5")
    inner = BinOp("-", Num(1.0), BinOp("^", BinOp("*", Param("q"), Var("x")), Num(2.0)))
    assert ast == BinOp("^", inner, Num(0.5))
    # chained powers nest to the right
    assert parse("2^3^2") == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))


def test_parse_precedence():
    # unary minus binds looser than ^, tighter than * /
    assert parse("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert parse("2^-3") == BinOp("^", Num(2.0), Neg(Num(3.0)))
    assert parse("a-b+c") == BinOp("+", BinOp("-", Param("a"), Param("b")), Param("c"))
    assert parse("a/b/c") == BinOp("/", BinOp("/", Param("a"), Param("b")), Param("c"))


@pytest.mark.parametrize("source", ["", "   ", "1+", "(1+2", "sin 3", "foo(2)", "1..2", "x y"])
def test_parse_rejects_malformed(source):
    with pytest.raises(ParseError):
        parse(source)


def test_eval_examples():
    assert evaluate(parse("exp(r*t+q*x)"), x=0.0, t=0.0, params={"r": 1.7, "q": -3.0}) == 1.0
    assert evaluate(parse("(1-(q*x)^2)^0.5"), x=4.0, t=0.0, params={"q": 0.25}) == 0.0
    assert evaluate(parse("q*x"), x=3.0, t=0.0, params={"q": 0.002}) == pytest.approx(0.006, rel=1e-15)


def test_eval_unbound_parameter():
    with pytest.raises(EvalError, match="unbound parameter 'q'"):
        evaluate(parse("q*x"), x=1.0, t=0.0)


@pytest.mark.parametrize(
    "source,x",
    [
        ("sqrt(x)", -1.0),
        ("log(x)", 0.0),
        ("1/x", 0.0),
        ("x^0.5", -2.0),
        ("exp(x)", 1e6),  # overflow
    ],
)
def test_eval_domain_errors(source, x):
    with pytest.raises(EvalError):
        evaluate(parse(source), x=x, t=0.0)


def test_eval_integer_power_of_negative_base():
    assert evaluate(parse("x^3"), x=-2.0, t=0.0) == -8.0


def test_diff_t_examples():
    ast = parse("exp(r*t+q*x)")
    assert diff_t(ast) == BinOp("*", Param("r"), ast)
    assert diff_t(parse("q*x")) == Num(0.0)
    d = diff_t(parse("r*t+q*x"))
    for x, t in [(0.0, 0.0), (2.5, -1.0), (-3.0, 7.0)]:
        assert evaluate(d, x=x, t=t, params={"r": 0.5, "q": 0.1}) == 0.5


def test_diff_t_rejects_abs():
    with pytest.raises(DerivativeError):
        diff_t(parse("abs(t)"))


def test_tree_queries():
    ast = parse("exp(r*t+q*x)")
    assert param_names(ast) == frozenset({"r", "q"})
    assert uses_variable(ast, "t")
    assert uses_variable(ast, "x")
    assert not uses_variable(parse("q*x"), "t")


# ---------------------------------------------------------------------------
# Property tests over randomly generated trees (seeded, deterministic)

_SAFE_FUNCS = ("sin", "cos", "tanh", "exp", "cosh", "sinh")


def _random_tree(rng, depth, with_abs=False):
    roll = rng.random()
    if depth <= 0 or roll < 0.25:
        kind = rng.randrange(3)
        if kind == 0:
            return Num(round(rng.uniform(0.0, 4.0), 3))
        if kind == 1:
            return Var(rng.choice(("x", "t")))
        return Param(rng.choice(("q", "r", "c")))
    if roll < 0.40:
        return Neg(_random_tree(rng, depth - 1, with_abs))
    if roll < 0.60:
        funcs = _SAFE_FUNCS + (("abs",) if with_abs else ())
        return Call(rng.choice(funcs), _random_tree(rng, depth - 1, with_abs))
    op = rng.choice(("+", "-", "*", "/", "^"))
    lhs = _random_tree(rng, depth - 1, with_abs)
    rhs = _random_tree(rng, depth - 1, with_abs)
    if op == "^":
        # keep powers tame so evaluation stays in range
        rhs = Num(float(rng.randrange(1, 4)))
    return BinOp(op, lhs, rhs)


def test_roundtrip_print_parse():
    rng = random.Random(20240817)
    for _ in range(400):
        ast = _random_tree(rng, depth=5, with_abs=True)
        assert parse(to_source(ast)) == ast


def test_diff_t_matches_finite_difference():
    rng = random.Random(7)
    params = {"q": 0.7, "r": 1.3, "c": 0.4}
    h = 1e-6
    checked = 0
    attempts = 0
    while checked < 120 and attempts < 3000:
        attempts += 1
        ast = _random_tree(rng, depth=4, with_abs=False)
        x = rng.uniform(-2.0, 2.0)
        t = rng.uniform(-2.0, 2.0)
        try:
            d = evaluate(diff_t(ast), x=x, t=t, params=params)
            fp = evaluate(ast, x=x, t=t + h, params=params)
            fm = evaluate(ast, x=x, t=t - h, params=params)
            f0 = evaluate(ast, x=x, t=t, params=params)
        except (EvalError, DerivativeError):
            continue
        if abs(f0) > 1e6 or abs(d) > 1e6:
            continue  # cancellation in the stencil would dominate
        fd = (fp - fm) / (2 * h)
        assert abs(fd - d) <= 1e-6 * max(1.0, abs(d)), to_source(ast)
        checked += 1
    assert checked >= 120
