import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from douglas_energy.expr import (
    MAX_DEPTH,
    BinOp,
    Call,
    ExprError,
    Neg,
    Num,
    Pow,
    Var,
    depth,
    eval_expression,
    parse_expression,
    polynomial_degree,
)
from douglas_energy.quadrature import EvaluationError


def variables(node):
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Num):
        return set()
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return variables(node.operand if isinstance(node, Neg) else node.base if isinstance(node, Pow) else node.arg)


def test_parse_examples():
    tree = parse_expression("x0^2 - x1^2", 4)
    assert variables(tree) == {0, 1}
    assert tree == BinOp("-", Pow(Var(0), 2), Pow(Var(1), 2))
    with pytest.raises(ExprError, match="out of range") as info:
        parse_expression("x5", 3)
    assert info.value.offset == 0
    tree = parse_expression("3*cos(x0) + x1*x2", 3)
    assert isinstance(tree.left.right, Call)
    assert eval_expression(tree, [1.0, 0.0, 0.0]) == pytest.approx(3 * math.cos(1.0))


def test_eval_examples():
    assert eval_expression(parse_expression("2.5", 3), [0.3, 0.4, 0.5]) == 2.5
    assert eval_expression(parse_expression("x0", 3), [1.0, 0.0, 0.0]) == 1.0
    h = math.sqrt(0.5)
    assert eval_expression(parse_expression("x0^2 - x1^2", 3), [h, h, 0.0]) == pytest.approx(0.0, abs=1e-16)


def test_precedence_and_associativity():
    pts = np.array([[2.0, 3.0, 5.0]])
    ev = lambda s: eval_expression(parse_expression(s, 3), pts)[0]
    assert ev("x0 - x1 - x2") == -6.0
    assert ev("x2 / x0 / x0") == 1.25
    assert ev("x0 + x1 * x2") == 17.0
    assert ev("(x0 + x1) * x2") == 25.0
    assert ev("x0 * x1 ^ 2") == 18.0
    assert ev("-x0^2") == 4.0  # unary minus binds to the base
    assert ev("- -x0") == 2.0
    assert ev(" x0\t+\n1e-1 ") == pytest.approx(2.1)
    assert ev("abs(-x1) + exp(0) + sin(0)") == 4.0


def test_batch_evaluation():
    pts = np.random.default_rng(1).standard_normal((7, 3))
    out = eval_expression(parse_expression("x0*x1 - x2", 3), pts)
    assert np.allclose(out, pts[:, 0] * pts[:, 1] - pts[:, 2])


@pytest.mark.parametrize(
    "src,offset",
    [
        ("", 0),
        ("x0 +", 4),
        ("(x0", 3),
        ("x0)", 2),
        ("y0", 0),
        ("x0 $ 1", 3),
        ("x0^-1", 3),
        ("x0^1.5", 3),
        ("tan(x0)", 0),
        ("sin x0", 4),
        ("é + x0", 0),
        ("x0 + é", 5),
        ("2 3", 2),
    ],
)
def test_rejections_carry_offsets(src, offset):
    with pytest.raises(ExprError) as info:
        parse_expression(src, 3)
    assert info.value.offset == offset
    assert f"byte {offset}" in str(info.value)


def test_utf8_offsets_count_bytes():
    with pytest.raises(ExprError) as info:
        parse_expression("x0 + ππ", 3)
    assert info.value.offset == 5
    with pytest.raises(ExprError) as info:
        parse_expression("sin(x0) ++ ¿", 3)
    assert info.value.offset == 11


def test_depth_limit():
    ok = "(" * 30 + "x0" + ")" * 30
    assert depth(parse_expression(ok, 1)) == 1
    for src in ("(" * 200 + "x0" + ")" * 200, "-" * 500 + "x0", "sin(" * 70 + "x0" + ")" * 70):
        with pytest.raises(ExprError, match="nested deeper"):
            parse_expression(src, 1)
    with pytest.raises(ExprError, match="nested deeper"):
        parse_expression("+".join(["x0"] * 100), 1)
    tree = parse_expression("+".join(["x0"] * MAX_DEPTH), 1)
    assert depth(tree) == MAX_DEPTH


def test_runtime_faults_raise_evaluation_error():
    with pytest.raises(EvaluationError):
        eval_expression(parse_expression("x0 / 0", 2), [1.0, 0.0])
    with pytest.raises(EvaluationError):
        eval_expression(parse_expression("exp(x0 * 1000)", 2), [1.0, 0.0])
    with pytest.raises(EvaluationError):
        eval_expression(parse_expression("x0^99999999999999999999", 2), [1.5, 0.0])
    # division parses fine; only evaluation can fault
    assert isinstance(parse_expression("1/x1", 2), BinOp)


def test_polynomial_degree():
    assert polynomial_degree(parse_expression("x0^2*x1 - 3", 3)) == 3
    assert polynomial_degree(parse_expression("x0/2", 3)) == 1
    assert polynomial_degree(parse_expression("cos(1) * x0", 3)) == 1
    assert polynomial_degree(parse_expression("cos(x0)", 3)) is None
    assert polynomial_degree(parse_expression("1/x0", 3)) is None


def test_parse_rejects_non_strings():
    with pytest.raises(ExprError):
        parse_expression(None, 3)


ALPHABET = "x0123456789.eE+-*/^() sincoexpab\t\nπ$"


@settings(max_examples=400, deadline=None)
@given(st.text(alphabet=ALPHABET, max_size=60))
def test_parser_is_total(src):
    try:
        tree = parse_expression(src, 3)
    except ExprError as exc:
        assert 0 <= exc.offset <= len(src.encode("utf-8"))
        return
    assert depth(tree) <= MAX_DEPTH


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40))
def test_parser_is_total_on_arbitrary_text(src):
    try:
        parse_expression(src, 4)
    except ExprError as exc:
        assert 0 <= exc.offset <= len(src.encode("utf-8"))
