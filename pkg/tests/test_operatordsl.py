import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from basinscope.errors import DegreeOverflow
from basinscope.kimfamily import build_operator
from basinscope.operatordsl import (
    KIM_SOURCE,
    Div,
    ExponentError,
    ExprSyntaxError,
    Neg,
    Num,
    Pow,
    Var,
    compile_operator,
    compile_source,
    evaluate,
    parse,
    symbolic_derivative,
    tokenize,
)
from basinscope.rational import apply, derivative_at

from conftest import random_lambdas

CORPUS = [
    "z^2",
    "z^4",
    "-z^4",
    "(z^2+1)/(z-1)",
    "z - (z^3-1)/(3*z^2)",
    "z^2 + lam",
    "lam*z*(1-z)",
    "(3+2i)*z^3 - 2.5",
    "1/z",
    "(z^2-lam)/(2*z)",
    "z^5*(2+z)*(2+2*z+z^2)/((1+2*z)*(1+2*z+2*z^2))",
    KIM_SOURCE,
    "((z+1)^2 - lam)/(z^3 + 0.5i)",
    "z/(1+z/(1+z))",
    "-(-z)^3 + --z",
    "(z-1)^7/(z+2)^3",
    "2i*z^2 - 1i",
    "z^0 + lam^2",
    "(lam+z)*(lam-z)/(lam*z+1)",
    "z^3/(z^2+lam*z+1) - z",
]


def test_parse_and_evaluate_square():
    assert evaluate(parse("z^2"), 2 + 1j) == pytest.approx(3 + 4j)


def test_unary_minus_binds_looser_than_power():
    assert parse("-z^4") == Neg(Pow(Var("z"), 4))
    assert evaluate(parse("-z^4"), 2 + 0j) == -16


def test_imaginary_literal():
    assert parse("2.5i") == Num(2.5j)
    assert evaluate(parse("(3+2i)"), 0j) == 3 + 2j


def test_div_records_span():
    node = parse("z + (z^2+1)/(z-1)")
    assert isinstance(node.right, Div)
    start, end = node.right.span
    assert start == 4 and end == 17


@pytest.mark.parametrize("src", ["z^-1", "z^2.5", "z^(2)", "z^lam"])
def test_bad_exponents(src):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(src)
    if src != "z^lam":
        assert isinstance(exc.value, ExponentError)


@pytest.mark.parametrize(
    "src,col,expected",
    [
        ("1+", 3, "z"),
        ("(z+1", 5, ")"),
        ("4z", 2, "*"),
        ("z $ 2", 3, None),
        ("foo", 1, "lam"),
        ("", 1, "number"),
        ("z*)", 3, "("),
    ],
)
def test_syntax_error_positions(src, col, expected):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(src)
    assert exc.value.line == 1 and exc.value.column == col
    if expected:
        assert expected in exc.value.expected


def test_error_line_numbers():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("z +\n  * 2")
    assert (exc.value.line, exc.value.column) == (2, 3)


@given(st.text(alphabet="z lam0123456789.i+-*/^()\n", max_size=40))
def test_parse_is_total(src):
    try:
        parse(src)
    except ExprSyntaxError:
        pass


@given(st.text(max_size=30))
def test_parse_is_total_on_arbitrary_text(src):
    try:
        parse(src)
    except ExprSyntaxError:
        pass


def test_tokenize_kinds():
    kinds = [t.kind for t in tokenize("lam*z^2 + 1.5i")]
    assert kinds == ["name", "op", "name", "op", "number", "op", "number", "end"]


def test_compile_examples():
    op = compile_operator(parse("z^4"))
    assert op.num.coeffs == (0, 0, 0, 0, 1) and op.den.coeffs == (1,)
    assert apply(compile_source("(z^2+1)/(z-1)"), 2 + 0j) == pytest.approx(5)


def test_degree_overflow():
    with pytest.raises(DegreeOverflow):
        compile_source("(z^2+1)^40")
    compile_source("(z+1)^64")


def test_kim_string_matches_builtin(rng):
    ast = parse(KIM_SOURCE)
    for lam in random_lambdas(rng, 100):
        z = complex(*rng.uniform(-2, 2, 2))
        got = evaluate(ast, z, lam)
        ref = apply(build_operator(lam), z)
        assert abs(got - ref) <= 1e-12 * max(1, abs(ref))


def test_kim_string_at_one_is_quintic_map(rng):
    op = compile_source(KIM_SOURCE, 1)
    for _ in range(50):
        z = complex(*rng.uniform(-2, 2, 2))
        ref = z**5 * (2 + z) * (2 + 2 * z + z**2) / ((1 + 2 * z) * (1 + 2 * z + 2 * z**2))
        assert abs(apply(op, z) - ref) <= 1e-12 * max(1, abs(ref))


def test_symbolic_derivative_examples(rng):
    d = symbolic_derivative(parse("z^4"))
    for _ in range(10):
        z = complex(*rng.uniform(-2, 2, 2))
        assert evaluate(d, z) == pytest.approx(4 * z**3, rel=1e-14)
    assert symbolic_derivative(parse("lam")) == Num(0j)
    dk = symbolic_derivative(parse(KIM_SOURCE))
    assert evaluate(dk, 1 + 0j, 5) == pytest.approx(64 / 11, rel=1e-10)


@pytest.mark.parametrize("src", CORPUS)
def test_compile_round_trip(src, rng):
    lam = complex(*rng.uniform(-3, 3, 2))
    ast = parse(src)
    op = compile_operator(ast, lam)
    for _ in range(100):
        z = complex(*rng.uniform(-2, 2, 2))
        direct = evaluate(ast, z, lam)
        if not np.isfinite(direct) or abs(direct) > 1e8:
            continue
        assert abs(apply(op, z) - direct) <= 1e-10 * max(1, abs(direct))


@pytest.mark.parametrize("src", CORPUS)
def test_derivative_matches_finite_differences(src, rng):
    lam = complex(*rng.uniform(-3, 3, 2))
    ast = parse(src)
    d = symbolic_derivative(ast)
    op = compile_operator(ast, lam)
    h = 1e-6
    checked = 0
    for _ in range(50):
        z = complex(*rng.uniform(-2, 2, 2))
        if abs(op.den(z)) < 1e-2 * op.den.scale:
            continue
        fd = (evaluate(ast, z + h, lam) - evaluate(ast, z - h, lam)) / (2 * h)
        exact = evaluate(d, z, lam)
        assert abs(exact - fd) <= 1e-5 * max(1, abs(exact))
        assert abs(derivative_at(op, z) - exact) <= 1e-8 * max(1, abs(exact))
        checked += 1
    assert checked > 10
