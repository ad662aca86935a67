"""A small expression language for boundary data u(x0, ..., x_{n-1}).

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' uint)?
    base   := number | ident | '(' expr ')' | func '(' expr ')' | '-' base
    ident  := 'x' uint            (index below n)
    func   := 'sin' | 'cos' | 'exp' | 'abs'

Note that '-' binds tighter than '^' here, so ``-x0^2`` is ``(-x0)^2``.
Errors report the byte offset into the UTF-8 encoded source.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .quadrature import EvaluationError

MAX_DEPTH = 64
FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}


class ExprError(ValueError):
    """Parse failure at a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(src: str) -> list[_Tok]:
    out = []
    pos = 0
    byte = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprError(f"unexpected character {src[pos]!r}", byte)
        text = m.group()
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, text, byte))
        byte += len(text.encode("utf-8"))
        pos = m.end()
    out.append(_Tok("end", "", byte))
    return out


class _Parser:
    """Recursive descent; every method returns (node, depth of node)."""

    def __init__(self, src: str, n: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.n = n
        self.open = 0  # bracket groups currently on the parser stack

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def _expect(self, text: str) -> None:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ExprError(f"expected {text!r}, found {found!r}", self.tok.offset)
        self._take()

    @staticmethod
    def _node(node: Node, d: int, offset: int) -> tuple[Node, int]:
        if d > MAX_DEPTH:
            raise ExprError(f"expression nested deeper than {MAX_DEPTH}", offset)
        return node, d

    def parse(self) -> Node:
        if self.tok.kind == "end":
            raise ExprError("empty expression", self.tok.offset)
        node, _ = self.expr()
        if self.tok.kind != "end":
            raise ExprError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self) -> tuple[Node, int]:
        node, d = self.term()
        while self.tok.text in ("+", "-"):
            t = self._take()
            right, dr = self.term()
            node, d = self._node(BinOp(t.text, node, right), 1 + max(d, dr), t.offset)
        return node, d

    def term(self) -> tuple[Node, int]:
        node, d = self.factor()
        while self.tok.text in ("*", "/"):
            t = self._take()
            right, dr = self.factor()
            node, d = self._node(BinOp(t.text, node, right), 1 + max(d, dr), t.offset)
        return node, d

    def factor(self) -> tuple[Node, int]:
        node, d = self.base()
        if self.tok.text == "^":
            caret = self._take()
            t = self.tok
            if t.kind != "number" or not t.text.isdigit():
                raise ExprError("exponent must be a non-negative integer", t.offset)
            self._take()
            node, d = self._node(Pow(node, int(t.text)), d + 1, caret.offset)
        return node, d

    def base(self, nesting: int = 0) -> tuple[Node, int]:
        # nesting counts consecutive unary minus signs on the parser stack
        t = self.tok
        if nesting > MAX_DEPTH:
            raise ExprError(f"expression nested deeper than {MAX_DEPTH}", t.offset)
        if t.text == "-":
            self._take()
            inner, d = self.base(nesting + 1)
            return self._node(Neg(inner), d + 1, t.offset)
        if t.kind == "number":
            self._take()
            return Num(float(t.text)), 1
        if t.text == "(":
            self._take()
            node, d = self._group(t.offset)
            return node, d
        if t.kind == "name":
            self._take()
            if t.text in FUNCTIONS:
                self._expect("(")
                arg, d = self._group(t.offset)
                return self._node(Call(t.text, arg), d + 1, t.offset)
            m = re.fullmatch(r"x(\d+)", t.text)
            if m is None:
                raise ExprError(f"unknown identifier {t.text!r}", t.offset)
            index = int(m.group(1))
            if index >= self.n:
                raise ExprError(f"variable index {index} out of range for n={self.n}", t.offset)
            return Var(index), 1
        found = t.text or "end of input"
        raise ExprError(f"unexpected {found!r}", t.offset)

    def _group(self, offset: int) -> tuple[Node, int]:
        # brackets nest the parser itself; bound them so deep input cannot exhaust the stack
        self.open += 1
        if self.open > MAX_DEPTH:
            raise ExprError(f"expression nested deeper than {MAX_DEPTH}", offset)
        node, d = self.expr()
        self._expect(")")
        self.open -= 1
        return node, d


def parse_expression(src: str, n: int) -> Node:
    """Parse ``src`` into a tree over variables x0..x{n-1}."""
    if not isinstance(src, str):
        raise ExprError("expression must be a string", 0)
    if n < 1:
        raise ValueError("n must be positive")
    return _Parser(src, n).parse()


def depth(node: Node) -> int:
    if isinstance(node, (Num, Var)):
        return 1
    if isinstance(node, (Neg, Pow, Call)):
        child = node.operand if isinstance(node, Neg) else node.base if isinstance(node, Pow) else node.arg
        return 1 + depth(child)
    return 1 + max(depth(node.left), depth(node.right))


def _eval(node: Node, pts: np.ndarray) -> np.ndarray:
    if isinstance(node, Num):
        return np.full(pts.shape[0], node.value)
    if isinstance(node, Var):
        return pts[:, node.index]
    if isinstance(node, Neg):
        return -_eval(node.operand, pts)
    if isinstance(node, Pow):
        return _eval(node.base, pts) ** node.exponent
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, pts))
    a = _eval(node.left, pts)
    b = _eval(node.right, pts)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b


def eval_expression(node: Node, points) -> np.ndarray | float:
    """Evaluate on one point (n,) or a batch (N, n); non-finite results raise EvaluationError."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    with np.errstate(all="ignore"):
        out = _eval(node, pts)
    bad = ~np.isfinite(out)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(f"expression is not finite at {pts[i].tolist()}", pts[i])
    return float(out[0]) if single else out


def polynomial_degree(node: Node) -> int | None:
    """Total degree when the tree is a polynomial (division by constants only), else None."""
    if isinstance(node, Num):
        return 0
    if isinstance(node, Var):
        return 1
    if isinstance(node, Neg):
        return polynomial_degree(node.operand)
    if isinstance(node, Pow):
        d = polynomial_degree(node.base)
        return None if d is None else d * node.exponent
    if isinstance(node, Call):
        return 0 if polynomial_degree(node.arg) == 0 else None
    a = polynomial_degree(node.left)
    b = polynomial_degree(node.right)
    if a is None or b is None:
        return None
    if node.op in "+-":
        return max(a, b)
    if node.op == "*":
        return a + b
    return a if b == 0 else None
