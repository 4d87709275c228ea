"""Tiny scalar-function language for the nonlinearities f(t) and g(t).

Grammar (the caret is right-associative, unary minus binds below it):

    expr    := term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := unary ('^' factor)?
    unary   := '-'? primary
    primary := number | 't' | ident | ident '(' args ')' | '(' expr ')'

Identifiers that are not function names are free parameters, bound at
evaluation time.  `euler` is the constant e.  Numbers are plain decimals
with optional scientific exponent.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import EvalDomainError, ParseError, UnboundParameterError

FUNCTIONS = {
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "abs": 1,
    "sinh": 1,
    "cosh": 1,
    "tanh": 1,
    "pow": 2,
    "min": 2,
    "max": 2,
}

RESERVED = set(FUNCTIONS) | {"t", "euler"}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    """The free variable t."""


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Num | Var | Param | Neg | Bin | Call

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad = len(text) - len(stripped)
            raise ParseError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad))
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append((m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, expected):
        kind, _value, pos = self.peek()
        raise ParseError(message, _byte_offset(self.text, pos), expected)

    def expect(self, kind):
        if self.peek()[0] != kind:
            self.fail(f"expected {kind!r}", {kind})
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("trailing input", {"+", "-", "*", "/", "^", "end"})
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = Bin(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        node = self.unary()
        if self.peek()[0] == "^":
            self.advance()
            node = Bin("^", node, self.factor())  # right-associative
        return node

    def unary(self) -> Expr:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.primary())
        return self.primary()

    def primary(self) -> Expr:
        kind, value, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            self.advance()
            if self.peek()[0] == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", _byte_offset(self.text, pos),
                                     set(FUNCTIONS))
                self.advance()
                args = [self.expr()]
                while self.peek()[0] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[value]:
                    raise ParseError(
                        f"function {value!r} takes {FUNCTIONS[value]} argument(s), got {len(args)}",
                        _byte_offset(self.text, pos), {f"{FUNCTIONS[value]} argument(s)"})
                return Call(value, tuple(args))
            if value == "t":
                return Var()
            if value == "euler":
                return Num(math.e)
            if value in FUNCTIONS:
                raise ParseError(f"function name {value!r} needs an argument list",
                                 _byte_offset(self.text, pos), {"("})
            return Param(value)
        self.fail("expected a value", {"number", "t", "identifier", "("})


def parse_expr(text: str) -> Expr:
    """Parse an expression string into an AST; raises ParseError on bad input."""
    if not isinstance(text, str):
        raise ParseError("input must be a string", 0)
    return _Parser(text).parse()


def _domain(fn, subexpr_fmt, x):
    try:
        return fn(x)
    except ValueError:
        raise EvalDomainError(subexpr_fmt(), x) from None
    except OverflowError:
        return math.copysign(math.inf, x) if fn is math.sinh else math.inf


def eval_expr(e: Expr, t: float, params=None) -> float:
    """Evaluate the AST at variable value t with the given parameter map.

    Arithmetic follows IEEE double semantics (division can produce inf/nan);
    log and sqrt of out-of-domain arguments raise EvalDomainError instead of
    returning nan, as do the domain violations of pow.
    """
    params = params or {}

    def ev(node) -> float:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return t
        if isinstance(node, Param):
            try:
                return float(params[node.name])
            except KeyError:
                raise UnboundParameterError(node.name) from None
        if isinstance(node, Neg):
            return -ev(node.child)
        if isinstance(node, Bin):
            a = ev(node.left)
            b = ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                try:
                    return a / b
                except ZeroDivisionError:
                    if a == 0.0:
                        return math.nan
                    return math.copysign(math.inf, a)
            # caret
            try:
                return math.pow(a, b)
            except ValueError:
                raise EvalDomainError(format_expr(node), a) from None
            except OverflowError:
                return math.inf
        if isinstance(node, Call):
            args = [ev(a) for a in node.args]
            name = node.func
            if name == "exp":
                try:
                    return math.exp(args[0])
                except OverflowError:
                    return math.inf
            if name == "log":
                return _domain(math.log, lambda: format_expr(node), args[0])
            if name == "sqrt":
                return _domain(math.sqrt, lambda: format_expr(node), args[0])
            if name == "abs":
                return abs(args[0])
            if name == "sinh":
                return _domain(math.sinh, lambda: format_expr(node), args[0])
            if name == "cosh":
                try:
                    return math.cosh(args[0])
                except OverflowError:
                    return math.inf
            if name == "tanh":
                return math.tanh(args[0])
            if name == "pow":
                try:
                    return math.pow(args[0], args[1])
                except ValueError:
                    raise EvalDomainError(format_expr(node), args[0]) from None
                except OverflowError:
                    return math.inf
            if name == "min":
                return min(args)
            if name == "max":
                return max(args)
        raise TypeError(f"not an expression node: {node!r}")

    return float(ev(e))


# binary precedence used by the printer; a child is parenthesized when the
# grammar slot it lands in cannot produce it directly
_LEVEL = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def format_expr(e: Expr) -> str:
    """Render an AST to text that parses back to a structurally equal tree."""

    def paren(node) -> str:
        return "(" + fmt(node) + ")"

    def fmt(node) -> str:
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Var):
            return "t"
        if isinstance(node, Param):
            return node.name
        if isinstance(node, Call):
            return node.func + "(" + ", ".join(fmt(a) for a in node.args) + ")"
        if isinstance(node, Neg):
            # the grammar's unary takes a primary, so any compound child
            # needs parens ('-t^2' would re-parse as (-t)^2)
            if isinstance(node.child, (Bin, Neg)):
                return "-" + paren(node.child)
            return "-" + fmt(node.child)
        if isinstance(node, Bin):
            lv = _LEVEL[node.op]
            if node.op == "^":
                # left slot is a unary: any binary child needs parens;
                # right slot is a factor, so only +-*/ children do
                left = paren(node.left) if isinstance(node.left, Bin) else fmt(node.left)
                right = (paren(node.right)
                         if isinstance(node.right, Bin) and _LEVEL[node.right.op] < lv
                         else fmt(node.right))
                return left + "^" + right
            left = paren(node.left) if isinstance(node.left, Bin) and _LEVEL[node.left.op] < lv else fmt(node.left)
            right = (paren(node.right)
                     if isinstance(node.right, Bin) and _LEVEL[node.right.op] <= lv
                     else fmt(node.right))
            if lv == 1:
                return f"{left} {node.op} {right}"
            return left + node.op + right
        raise TypeError(f"not an expression node: {node!r}")

    return fmt(e)


def free_parameters(e: Expr) -> set:
    """Names of all parameters appearing in the tree."""
    out = set()

    def walk(node):
        if isinstance(node, Param):
            out.add(node.name)
        elif isinstance(node, Neg):
            walk(node.child)
        elif isinstance(node, Bin):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Call):
            for a in node.args:
                walk(a)

    walk(e)
    return out
