"""Infix expression language for propensities, Lyapunov functions and state predicates.

Grammar (lowest to highest precedence)::

    expr    := orexpr
    orexpr  := andexpr ('or' andexpr)*
    andexpr := notexpr ('and' notexpr)*
    notexpr := 'not' notexpr | cmp
    cmp     := sum (('<'|'<='|'>'|'>='|'=='|'!=') sum)?
    sum     := term (('+'|'-') term)*
    term    := unary (('*'|'/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom (('^'|'**') unary)?
    atom    := number | name | name '(' args ')' | '(' expr ')'

Numbers are read exactly as rationals. Exponents must evaluate to integers, so
every expression has a rational value and can be evaluated exactly.
"""
from fractions import Fraction
import re

import numpy as np

from .errors import EvaluationError, ParseError

FUNCTIONS = {"min": None, "max": None, "hill": 3}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|<=|>=|==|!=|[-+*/^(),<>]))"
)


def tokenize(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + 1
            while col <= len(text) and text[col - 1].isspace():
                col += 1
            raise ParseError(f"unexpected character {text[col - 1]!r}", 1, col)
        kind = m.lastgroup
        start = m.start(kind) + 1
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, 1, tok[2])

    def accept(self, *values):
        kind, val, _ = self.peek()
        if kind in ("op", "name") and val in values:
            self.i += 1
            return val
        return None

    def expect(self, value):
        if self.accept(value) is None:
            got = self.peek()[1] or "end of input"
            self.fail(f"expected {value!r}, got {got!r}")

    def parse(self):
        node = self.orexpr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return node

    def orexpr(self):
        node = self.andexpr()
        while self.accept("or"):
            node = ("or", node, self.andexpr())
        return node

    def andexpr(self):
        node = self.notexpr()
        while self.accept("and"):
            node = ("and", node, self.notexpr())
        return node

    def notexpr(self):
        if self.accept("not"):
            return ("not", self.notexpr())
        return self.cmp()

    def cmp(self):
        node = self.sum()
        op = self.accept("<", "<=", ">", ">=", "==", "!=")
        if op:
            node = ("cmp", op, node, self.sum())
        return node

    def sum(self):
        node = self.term()
        while True:
            op = self.accept("+", "-")
            if not op:
                return node
            node = ("bin", op, node, self.term())

    def term(self):
        node = self.unary()
        while True:
            op = self.accept("*", "/")
            if not op:
                return node
            node = ("bin", op, node, self.unary())

    def unary(self):
        if self.accept("-"):
            return ("neg", self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.accept("^", "**"):
            node = ("bin", "^", node, self.unary())
        return node

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            return ("num", Fraction(val))
        if kind == "name":
            if val in ("and", "or", "not"):
                self.fail(f"unexpected keyword {val!r}", (kind, val, col))
            if self.accept("("):
                args = [self.orexpr()]
                while self.accept(","):
                    args.append(self.orexpr())
                self.expect(")")
                if val not in FUNCTIONS:
                    raise ParseError(f"unknown function {val!r}", 1, col)
                arity = FUNCTIONS[val]
                if arity is not None and len(args) != arity:
                    raise ParseError(f"{val} takes {arity} arguments", 1, col)
                if arity is None and len(args) < 2:
                    raise ParseError(f"{val} takes at least 2 arguments", 1, col)
                return ("call", val, tuple(args))
            return ("var", val)
        if kind == "op" and val == "(":
            node = self.orexpr()
            self.expect(")")
            return node
        self.fail(f"unexpected token {val or 'end of input'!r}", (kind, val, col))


def parse_expr(text):
    """Parse an expression string into a tuple-based syntax tree."""
    return _Parser(text).parse()


def names(node, acc=None):
    """Variable names referenced by a syntax tree."""
    acc = set() if acc is None else acc
    tag = node[0]
    if tag == "var":
        acc.add(node[1])
    elif tag in ("neg", "not"):
        names(node[1], acc)
    elif tag in ("bin", "cmp"):
        names(node[2], acc)
        names(node[3], acc)
    elif tag in ("and", "or"):
        names(node[1], acc)
        names(node[2], acc)
    elif tag == "call":
        for a in node[2]:
            names(a, acc)
    return acc


# evaluation ------------------------------------------------------------------

def _as_int_exponent(e, exact):
    if exact:
        if Fraction(e).denominator != 1:
            raise EvaluationError(f"non-integer exponent {e}")
        return int(e)
    arr = np.asarray(e, dtype=float)
    if not np.all(arr == np.round(arr)):
        raise EvaluationError("non-integer exponent")
    if arr.ndim == 0:
        return int(arr)
    if np.all(arr == arr.flat[0]):
        return int(arr.flat[0])
    return arr.astype(np.int64)


def _div(a, b, exact):
    if exact:
        if b == 0:
            raise EvaluationError("division by zero")
        return Fraction(a) / Fraction(b)
    b = np.asarray(b, dtype=float)
    if np.any(b == 0):
        raise EvaluationError("division by zero")
    return np.asarray(a, dtype=float) / b


def _pow(a, e, exact):
    k = _as_int_exponent(e, exact)
    if exact:
        a = Fraction(a)
        if a == 0 and k < 0:
            raise EvaluationError("division by zero in negative power")
        return a ** k
    a = np.asarray(a, dtype=float)
    if np.any(np.asarray(k) < 0) and np.any(a == 0):
        raise EvaluationError("division by zero in negative power")
    return np.power(a, k)


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _truth(v, exact):
    if exact:
        return Fraction(1 if v else 0)
    return np.asarray(v, dtype=float)


def evaluate(node, env, exact=False):
    """Evaluate a tree.

    With ``exact=False`` the environment holds floats or numpy arrays and the
    evaluation is vectorized. With ``exact=True`` it holds ints or Fractions.
    """
    tag = node[0]
    if tag == "num":
        return node[1] if exact else float(node[1])
    if tag == "var":
        try:
            return env[node[1]]
        except KeyError:
            raise EvaluationError(f"unknown name {node[1]!r}") from None
    if tag == "neg":
        return -evaluate(node[1], env, exact)
    if tag == "bin":
        op = node[1]
        a = evaluate(node[2], env, exact)
        b = evaluate(node[3], env, exact)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return _div(a, b, exact)
        return _pow(a, b, exact)
    if tag == "cmp":
        a = evaluate(node[2], env, exact)
        b = evaluate(node[3], env, exact)
        return _truth(_CMP[node[1]](a, b), exact)
    if tag == "not":
        v = evaluate(node[1], env, exact)
        return _truth(v == 0, exact)
    if tag in ("and", "or"):
        a = evaluate(node[1], env, exact) != 0
        b = evaluate(node[2], env, exact) != 0
        if exact:
            return _truth((a and b) if tag == "and" else (a or b), True)
        return _truth(np.logical_and(a, b) if tag == "and" else np.logical_or(a, b), False)
    if tag == "call":
        fn = node[1]
        args = [evaluate(a, env, exact) for a in node[2]]
        if fn == "hill":
            x, K, n = args
            xn = _pow(x, n, exact)
            return _div(xn, _pow(K, n, exact) + xn, exact)
        if exact:
            return min(args) if fn == "min" else max(args)
        red = np.minimum if fn == "min" else np.maximum
        out = args[0]
        for a in args[1:]:
            out = red(out, a)
        return out
    raise EvaluationError(f"bad node {tag!r}")


class Expr:
    """A parsed expression that remembers its source text."""

    __slots__ = ("source", "tree")

    def __init__(self, source):
        self.source = source.strip()
        self.tree = parse_expr(self.source)

    def names(self):
        return names(self.tree)

    def __call__(self, env, exact=False):
        return evaluate(self.tree, env, exact)

    def __eq__(self, other):
        return isinstance(other, Expr) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    def __repr__(self):
        return f"Expr({self.source!r})"
