"""Scalar expression language for chart data.

Expressions are real-valued formulas over named variables. Coordinate
formulas use x1, x2, ... while fiber profiles may add one extra variable
(conventionally "w"). The grammar supports +, -, *, /, ^ (right
associative, real exponents), unary minus, parentheses, decimal and
scientific literals, and the functions sin, cos, tan, exp, log, sqrt,
cosh, sinh. Precedence from tightest to loosest: ^, unary -, * /, + -.

Derivatives come from a forward-mode hyper-dual evaluation, which is
exact to rounding for first and mixed second partials. A central
finite-difference fallback is provided for every derivative entry point
so the two routes can be checked against each other.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping

from .errors import EvalDomainError, ParseError, UnboundVariableError

__all__ = [
    "ScalarExpr",
    "parse",
    "coordinate_expr",
    "profile_expr",
    "unparse",
    "evaluate",
    "evaluate_env",
    "partial",
    "partial_env",
    "second_partial",
    "second_partial_env",
    "partial_fd",
    "second_partial_fd",
    "gradient",
    "FUNCTION_NAMES",
]

FUNCTION_NAMES = ("cos", "cosh", "exp", "log", "sin", "sinh", "sqrt", "tan")

_EPS = math.ulp(1.0)
_FD_STEP_SCALE = _EPS ** (1.0 / 3.0)
_FD2_STEP_SCALE = _EPS ** 0.25


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Num | Var | Unary | Binary | Call


@dataclass(frozen=True)
class ScalarExpr:
    """A parsed expression together with its source and variable set."""

    root: Node
    source: str
    variables: tuple[str, ...]

    def coordinate_indexes(self) -> tuple[int, ...]:
        """0-based indexes of every x<k> variable referenced."""
        out = []
        for name in self.variables:
            m = re.fullmatch(r"x([1-9]\d*)", name)
            if m:
                out.append(int(m.group(1)) - 1)
        return tuple(sorted(out))


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    start: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {source[pos]!r} at offset {pos}",
                offset=pos,
                expected=("number", "name", "operator", "'('", "')'"),
            )
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append(_Token(m.lastgroup, m.group(), m.start()))
    tokens.append(_Token("end", "", len(source)))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_ATOM_EXPECTED = ("number", "variable or function name", "'('", "'-'")


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, expected: tuple[str, ...]) -> ParseError:
        tok = self.peek()
        shown = tok.text if tok.kind != "end" else "end of input"
        return ParseError(
            f"{message}, got {shown!r} at offset {tok.start}",
            offset=tok.start,
            expected=expected,
        )

    def parse(self) -> Node:
        node = self.expr()
        if self.peek().kind != "end":
            raise self.fail(
                "trailing input after expression",
                expected=("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"),
            )
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.advance().text
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.peek().text == "-":
            self.advance()
            return Unary(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().text == "^":
            self.advance()
            # Right associative; the exponent may carry its own unary minus.
            return Binary("^", base, self.factor())
        return base

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if self.peek().text == "(":
                if tok.text not in FUNCTION_NAMES:
                    raise ParseError(
                        f"unknown function {tok.text!r} at offset {tok.start}",
                        offset=tok.start,
                        expected=FUNCTION_NAMES,
                    )
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            return Var(tok.text)
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.fail("expected a value", expected=_ATOM_EXPECTED)

    def expect(self, text: str) -> None:
        if self.peek().text != text:
            raise self.fail(f"expected {text!r}", expected=(f"'{text}'",))
        self.advance()


def _collect_variables(node: Node, seen: set[str]) -> None:
    if isinstance(node, Var):
        seen.add(node.name)
    elif isinstance(node, Unary):
        _collect_variables(node.operand, seen)
    elif isinstance(node, Binary):
        _collect_variables(node.left, seen)
        _collect_variables(node.right, seen)
    elif isinstance(node, Call):
        _collect_variables(node.arg, seen)


def parse(source: str) -> ScalarExpr:
    """Parse source text into a ScalarExpr.

    Raises ParseError with the byte offset of the first bad token and
    the set of tokens that would have been legal there.
    """
    root = _Parser(source).parse()
    seen: set[str] = set()
    _collect_variables(root, seen)
    return ScalarExpr(root=root, source=source, variables=tuple(sorted(seen)))


def coordinate_expr(source: str, dim: int | None = None) -> ScalarExpr:
    """Parse an expression restricted to coordinate variables x1..xn."""
    expr = parse(source)
    for name in expr.variables:
        m = re.fullmatch(r"x([1-9]\d*)", name)
        if m is None:
            raise ParseError(
                f"variable {name!r} is not a coordinate (expected x1, x2, ...)",
                offset=expr.source.find(name),
                expected=("x<k>",),
            )
        if dim is not None and int(m.group(1)) > dim:
            raise ParseError(
                f"variable {name!r} exceeds chart dimension {dim}",
                offset=expr.source.find(name),
                expected=tuple(f"x{k}" for k in range(1, dim + 1)),
            )
    return expr


def profile_expr(source: str, fiber_var: str = "w", dim: int | None = None) -> ScalarExpr:
    """Parse an expression over x1..xn plus one named fiber variable."""
    expr = parse(source)
    for name in expr.variables:
        if name == fiber_var:
            continue
        m = re.fullmatch(r"x([1-9]\d*)", name)
        if m is None or (dim is not None and int(m.group(1)) > dim):
            raise ParseError(
                f"variable {name!r} not allowed here (expected {fiber_var!r} or x1..x{dim or 'n'})",
                offset=expr.source.find(name),
                expected=(fiber_var, "x<k>"),
            )
    return expr


# ---------------------------------------------------------------------------
# Unparser

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _PREC["neg"]
    return 5


def _unparse(node: Node) -> str:
    if isinstance(node, Num):
        text = repr(node.value)
        return text[:-2] if text.endswith(".0") else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_unparse(node.arg)})"
    if isinstance(node, Unary):
        inner = _unparse(node.operand)
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Binary):
        lp, rp = _prec(node.left), _prec(node.right)
        left = _unparse(node.left)
        right = _unparse(node.right)
        if node.op == "^":
            # The grammar only allows an atom on the left of ^.
            if lp < 5:
                left = f"({left})"
            if rp < _PREC["neg"]:
                right = f"({right})"
        else:
            if lp < _PREC[node.op]:
                left = f"({left})"
            if rp <= _PREC[node.op]:
                right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an expression node: {node!r}")


def unparse(expr: ScalarExpr) -> str:
    """Render the tree back to source text that reparses identically."""
    return _unparse(expr.root)


# ---------------------------------------------------------------------------
# Plain evaluation


def _pow_val(base: float, exponent: float) -> float:
    if base == 0.0 and exponent == 0.0:
        return 1.0
    if base == 0.0 and exponent < 0.0:
        raise EvalDomainError("zero raised to a negative power")
    if base < 0.0 and exponent != round(exponent):
        raise EvalDomainError(
            f"negative base {base!r} with non-integer exponent {exponent!r}"
        )
    try:
        return math.pow(base, exponent)
    except OverflowError:
        return math.inf


def _call_val(func: str, a: float) -> float:
    if func == "log":
        if a <= 0.0:
            raise EvalDomainError(f"log of non-positive value {a!r}")
        return math.log(a)
    if func == "sqrt":
        if a < 0.0:
            raise EvalDomainError(f"sqrt of negative value {a!r}")
        return math.sqrt(a)
    try:
        return getattr(math, func)(a)
    except OverflowError:
        return math.inf


def _eval(node: Node, env: Mapping[str, float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return float(env[node.name])
        except KeyError:
            raise UnboundVariableError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Unary):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        return _call_val(node.func, _eval(node.arg, env))
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if right == 0.0:
            raise EvalDomainError("division by zero")
        return left / right
    return _pow_val(left, right)


def evaluate_env(expr: ScalarExpr, env: Mapping[str, float]) -> float:
    """Evaluate with variables bound by name."""
    return _eval(expr.root, env)


def _coord_env(x) -> dict[str, float]:
    return {f"x{k + 1}": float(val) for k, val in enumerate(x)}


def evaluate(expr: ScalarExpr, x) -> float:
    """Evaluate with x1..xn bound to the entries of x (0-based array)."""
    return _eval(expr.root, _coord_env(x))


# ---------------------------------------------------------------------------
# Hyper-dual forward-mode derivatives
#
# A hyper-dual number tracks (f, df/ds, df/dt, d2f/dsdt) along two seed
# directions s and t, giving exact first and mixed second derivatives in
# one evaluation pass.


class _HD:
    __slots__ = ("a", "a1", "a2", "a12")

    def __init__(self, a: float, a1: float = 0.0, a2: float = 0.0, a12: float = 0.0):
        self.a = a
        self.a1 = a1
        self.a2 = a2
        self.a12 = a12


def _hd_add(u: _HD, v: _HD) -> _HD:
    return _HD(u.a + v.a, u.a1 + v.a1, u.a2 + v.a2, u.a12 + v.a12)


def _hd_sub(u: _HD, v: _HD) -> _HD:
    return _HD(u.a - v.a, u.a1 - v.a1, u.a2 - v.a2, u.a12 - v.a12)


def _hd_mul(u: _HD, v: _HD) -> _HD:
    return _HD(
        u.a * v.a,
        u.a1 * v.a + u.a * v.a1,
        u.a2 * v.a + u.a * v.a2,
        u.a12 * v.a + u.a1 * v.a2 + u.a2 * v.a1 + u.a * v.a12,
    )


def _hd_div(u: _HD, v: _HD) -> _HD:
    if v.a == 0.0:
        raise EvalDomainError("division by zero")
    b = v.a
    inv = _HD(
        1.0 / b,
        -v.a1 / (b * b),
        -v.a2 / (b * b),
        (2.0 * v.a1 * v.a2 / b - v.a12) / (b * b),
    )
    return _hd_mul(u, inv)


def _hd_chain(u: _HD, f: float, d1: float, d2: float) -> _HD:
    """Lift a scalar function with value f, slope d1, curvature d2 at u.a."""
    return _HD(
        f,
        d1 * u.a1,
        d1 * u.a2,
        d1 * u.a12 + d2 * u.a1 * u.a2,
    )


def _hd_call(func: str, u: _HD) -> _HD:
    a = u.a
    val = _call_val(func, a)
    needs_deriv = u.a1 != 0.0 or u.a2 != 0.0 or u.a12 != 0.0
    if func == "sin":
        return _hd_chain(u, val, math.cos(a), -val)
    if func == "cos":
        return _hd_chain(u, val, -math.sin(a), -val)
    if func == "tan":
        sec2 = 1.0 + val * val
        return _hd_chain(u, val, sec2, 2.0 * val * sec2)
    if func == "exp":
        return _hd_chain(u, val, val, val)
    if func == "log":
        return _hd_chain(u, val, 1.0 / a, -1.0 / (a * a))
    if func == "sqrt":
        if a == 0.0:
            if needs_deriv:
                raise EvalDomainError("derivative of sqrt at zero")
            return _HD(0.0)
        return _hd_chain(u, val, 0.5 / val, -0.25 / (val * a))
    if func == "cosh":
        return _hd_chain(u, val, math.sinh(a), val)
    if func == "sinh":
        return _hd_chain(u, val, math.cosh(a), val)
    raise EvalDomainError(f"unknown function {func!r}")


def _pow_deriv_coeff(a: float, r: float, order: int) -> float:
    """d^order/da^order of a^r as coeff * a^(r - order), handled at a = 0."""
    coeff = 1.0
    for k in range(order):
        coeff *= r - k
    if coeff == 0.0:
        return 0.0
    if a == 0.0:
        power = r - order
        if power > 0.0:
            return 0.0
        if power == 0.0:
            return coeff
        raise EvalDomainError(f"derivative of x^{r} is singular at zero")
    return coeff * _pow_val(a, r - order)


def _hd_pow(u: _HD, node_right: Node, v: _HD) -> _HD:
    if isinstance(node_right, Num) or (v.a1 == 0.0 and v.a2 == 0.0 and v.a12 == 0.0):
        r = v.a
        val = _pow_val(u.a, r)
        needs_deriv = u.a1 != 0.0 or u.a2 != 0.0 or u.a12 != 0.0
        if not needs_deriv:
            return _HD(val)
        d1 = _pow_deriv_coeff(u.a, r, 1)
        d2 = _pow_deriv_coeff(u.a, r, 2)
        return _hd_chain(u, val, d1, d2)
    if u.a <= 0.0:
        raise EvalDomainError(
            f"variable exponent requires a positive base, got {u.a!r}"
        )
    return _hd_call("exp", _hd_mul(v, _hd_call("log", u)))


def _eval_hd(node: Node, env: Mapping[str, _HD]) -> _HD:
    if isinstance(node, Num):
        return _HD(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundVariableError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Unary):
        u = _eval_hd(node.operand, env)
        return _HD(-u.a, -u.a1, -u.a2, -u.a12)
    if isinstance(node, Call):
        return _hd_call(node.func, _eval_hd(node.arg, env))
    left = _eval_hd(node.left, env)
    right = _eval_hd(node.right, env)
    if node.op == "+":
        return _hd_add(left, right)
    if node.op == "-":
        return _hd_sub(left, right)
    if node.op == "*":
        return _hd_mul(left, right)
    if node.op == "/":
        return _hd_div(left, right)
    return _hd_pow(left, node.right, right)


def _hd_env(env: Mapping[str, float], seed1: str | None, seed2: str | None) -> dict[str, _HD]:
    out = {}
    for name, value in env.items():
        out[name] = _HD(
            float(value),
            1.0 if name == seed1 else 0.0,
            1.0 if name == seed2 else 0.0,
        )
    return out


def partial_env(expr: ScalarExpr, env: Mapping[str, float], name: str) -> float:
    """Exact first partial with respect to a named variable."""
    return _eval_hd(expr.root, _hd_env(env, name, None)).a1


def second_partial_env(
    expr: ScalarExpr, env: Mapping[str, float], name1: str, name2: str
) -> float:
    """Exact mixed second partial with respect to two named variables."""
    return _eval_hd(expr.root, _hd_env(env, name1, name2)).a12


def partial(expr: ScalarExpr, x, q: int) -> float:
    """Exact partial d/dx^q at x (q is 0-based, so q=0 means x1)."""
    return partial_env(expr, _coord_env(x), f"x{q + 1}")


def second_partial(expr: ScalarExpr, x, q: int, r: int) -> float:
    """Exact second partial d2/dx^q dx^r at x (0-based indexes)."""
    return second_partial_env(expr, _coord_env(x), f"x{q + 1}", f"x{r + 1}")


def gradient(expr: ScalarExpr, x) -> list[float]:
    """All first partials d/dx^q for q = 0..len(x)-1."""
    env = _coord_env(x)
    return [partial_env(expr, env, f"x{q + 1}") for q in range(len(x))]


# ---------------------------------------------------------------------------
# Finite-difference fallbacks


def _fd_step(value: float, scale: float) -> float:
    return scale * max(1.0, abs(value))


def partial_fd(expr: ScalarExpr, x, q: int) -> float:
    """Central-difference estimate of d/dx^q, for cross-checking."""
    env = _coord_env(x)
    name = f"x{q + 1}"
    h = _fd_step(env[name], _FD_STEP_SCALE)
    hi = dict(env, **{name: env[name] + h})
    lo = dict(env, **{name: env[name] - h})
    return (_eval(expr.root, hi) - _eval(expr.root, lo)) / (2.0 * h)


def second_partial_fd(expr: ScalarExpr, x, q: int, r: int) -> float:
    """Central-difference estimate of d2/dx^q dx^r, for cross-checking."""
    env = _coord_env(x)
    nq, nr = f"x{q + 1}", f"x{r + 1}"
    hq = _fd_step(env[nq], _FD2_STEP_SCALE)
    if q == r:
        hi = dict(env, **{nq: env[nq] + hq})
        lo = dict(env, **{nq: env[nq] - hq})
        center = _eval(expr.root, env)
        return (_eval(expr.root, hi) - 2.0 * center + _eval(expr.root, lo)) / (hq * hq)
    hr = _fd_step(env[nr], _FD2_STEP_SCALE)

    def at(dq: float, dr: float) -> float:
        shifted = dict(env, **{nq: env[nq] + dq, nr: env[nr] + dr})
        return _eval(expr.root, shifted)

    return (at(hq, hr) - at(hq, -hr) - at(-hq, hr) + at(-hq, -hr)) / (4.0 * hq * hr)
