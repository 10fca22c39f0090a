"""Scalar expression language for chart components.

Expressions are immutable, hash-consed trees over the chart variables
``x1..x4``.  Structurally equal subtrees are the same object, so equality is
identity and common subexpressions are shared for free; that sharing is what
keeps second derivatives of the Fubini-Study metric cheap to evaluate.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = ("-" | "+") , unary | power ;
    power   = primary , [ "^" , unary ] ;          (* right associative *)
    primary = number | "x1" | "x2" | "x3" | "x4" | "pi"
            | func , "(" , expr , ")" | "(" , expr , ")" ;
    func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "atan" ;
    number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ]
            | "." , digits , [ exponent ] ;

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)``.
"""

from __future__ import annotations

import math
import weakref
from typing import Callable, Iterable, Sequence

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "atan")
BINARY = ("add", "sub", "mul", "div", "pow")
NVARS = 4

_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}

_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    """A node of the expression tree.  Build through the module functions."""

    __slots__ = ("op", "args", "value", "__weakref__")

    def __init__(self, op, args, value):
        self.op = op
        self.args = args
        self.value = value

    # structural identity comes from interning
    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    @property
    def is_const(self):
        return self.op == "const"

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, other):
        return power(self, _coerce(other))

    def __rpow__(self, other):
        return power(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self


def _intern(op, args=(), value=None):
    key = (op, value, tuple(id(a) for a in args))
    node = _table.get(key)
    if node is None:
        node = Expr(op, tuple(args), value)
        _table[key] = node
    return node


def _coerce(value):
    if isinstance(value, Expr):
        return value
    return const(value)


def const(value) -> Expr:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"non-finite literal {value}")
    if value == 0.0:
        value = 0.0  # drop the sign of zero
    return _intern("const", value=value)


def var(index: int) -> Expr:
    """Chart variable, 0-based (``var(0)`` is ``x1``)."""
    if not 0 <= index < NVARS:
        raise ValueError(f"variable index {index} out of range")
    return _intern("var", value=index)


ZERO = const(0.0)
ONE = const(1.0)
X = tuple(var(i) for i in range(NVARS))


def _is(e, v):
    return e.op == "const" and e.value == v


# --- safe scalar primitives (shared by folding, tree evaluation and codegen)

def _safe_div(a, b):
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


def _safe_pow(a, b):
    if a == 0.0 and b < 0:
        raise DomainError("zero raised to a negative power")
    if a < 0.0 and b != int(b):
        raise DomainError("negative base with non-integer exponent")
    try:
        r = a ** (int(b) if b == int(b) else b)
    except OverflowError:
        raise DomainError("overflow in power") from None
    r = float(r)
    if not math.isfinite(r):
        raise DomainError("overflow in power")
    return r


def _safe_log(a):
    if a <= 0.0:
        raise DomainError("log of non-positive value")
    return math.log(a)


def _safe_sqrt(a):
    if a < 0.0:
        raise DomainError("sqrt of negative value")
    return math.sqrt(a)


def _safe_exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError("overflow in exp") from None


_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _safe_exp,
    "log": _safe_log,
    "sqrt": _safe_sqrt,
    "atan": math.atan,
}


def _fold(fn, *vals):
    try:
        r = fn(*vals)
    except DomainError:
        return None
    if not math.isfinite(r):
        return None
    return const(r)


# --- smart constructors: light, correctness-preserving folding only

def add(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        folded = _fold(lambda x, y: x + y, a.value, b.value)
        if folded is not None:
            return folded
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    return _intern("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        folded = _fold(lambda x, y: x - y, a.value, b.value)
        if folded is not None:
            return folded
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if a is b:
        return ZERO
    if b.op == "neg":
        return add(a, b.args[0])
    return _intern("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        folded = _fold(lambda x, y: x * y, a.value, b.value)
        if folded is not None:
            return folded
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    if b.is_const and not a.is_const:
        a, b = b, a
    return _intern("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        folded = _fold(_safe_div, a.value, b.value)
        if folded is not None:
            return folded
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if a is b:
        return ONE
    return _intern("div", (a, b))


def power(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        folded = _fold(_safe_pow, a.value, b.value)
        if folded is not None:
            return folded
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return ONE
    return _intern("pow", (a, b))


def neg(a: Expr) -> Expr:
    if a.is_const:
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    return _intern("neg", (a,))


def func(name: str, a: Expr) -> Expr:
    if name not in _SCALAR_FUNCS:
        raise ValueError(f"unknown function {name!r}")
    if a.is_const:
        folded = _fold(_SCALAR_FUNCS[name], a.value)
        if folded is not None:
            return folded
    return _intern(name, (a,))


def sin(a):
    return func("sin", _coerce(a))


def cos(a):
    return func("cos", _coerce(a))


def exp(a):
    return func("exp", _coerce(a))


def log(a):
    return func("log", _coerce(a))


def sqrt(a):
    return func("sqrt", _coerce(a))


def atan(a):
    return func("atan", _coerce(a))


_BUILD = {"add": add, "sub": sub, "mul": mul, "div": div, "pow": power}


# --- traversal helpers

def _postorder(roots: Iterable[Expr]):
    seen = set()
    order = []
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in seen:
                continue
            if expanded:
                seen.add(id(node))
                order.append(node)
            else:
                stack.append((node, True))
                for child in node.args:
                    if id(child) not in seen:
                        stack.append((child, False))
    return order


def node_count(e: Expr) -> int:
    """Number of nodes in the tree, counting shared subtrees once per use."""
    counts = {}
    for node in _postorder([e]):
        counts[id(node)] = 1 + sum(counts[id(c)] for c in node.args)
    return counts[id(e)]


def variables(e: Expr) -> set:
    return {n.value for n in _postorder([e]) if n.op == "var"}


# --- evaluation

def _apply(node, vals):
    op = node.op
    if op == "add":
        return vals[0] + vals[1]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "div":
        return _safe_div(vals[0], vals[1])
    if op == "pow":
        return _safe_pow(vals[0], vals[1])
    if op == "neg":
        return -vals[0]
    return _SCALAR_FUNCS[op](vals[0])


def evaluate(e: Expr, p: Sequence[float]) -> float:
    """Evaluate ``e`` at the point ``p`` by walking the tree.

    Raises DomainError on log/sqrt of a negative number, division by zero,
    or a non-finite intermediate.
    """
    values = {}
    for node in _postorder([e]):
        if node.op == "const":
            v = node.value
        elif node.op == "var":
            v = float(p[node.value])
        else:
            v = _apply(node, [values[id(c)] for c in node.args])
            if not math.isfinite(v):
                raise DomainError(f"non-finite value in {node.op}")
        values[id(node)] = v
    return values[id(e)]


def compile_exprs(exprs: Sequence[Expr]) -> Callable[[Sequence[float]], tuple]:
    """Generate one Python function evaluating every expression at a point.

    Shared subtrees are computed once.  The returned callable maps a point
    to a tuple of floats and raises DomainError like :func:`evaluate`.
    """
    order = _postorder(exprs)
    names = {}
    lines = ["def _raw(p):", "    x1, x2, x3, x4 = p"]
    for k, node in enumerate(order):
        op = node.op
        if op == "const":
            names[id(node)] = repr(node.value)
            continue
        if op == "var":
            names[id(node)] = f"x{node.value + 1}"
            continue
        a = [names[id(c)] for c in node.args]
        if op in ("add", "sub", "mul"):
            rhs = f"{a[0]} {_SYMBOL[op]} {a[1]}"
        elif op == "div":
            rhs = f"{a[0]} / {a[1]}"
        elif op == "neg":
            rhs = f"-{a[0]}"
        elif op == "pow":
            ex = node.args[1]
            if ex.is_const and ex.value == int(ex.value) and abs(ex.value) <= 64:
                rhs = f"{a[0]} ** {int(ex.value)}"
            else:
                rhs = f"_pow({a[0]}, {a[1]})"
        else:
            rhs = f"_{op}({a[0]})"
        name = f"t{k}"
        lines.append(f"    {name} = {rhs}")
        names[id(node)] = name
    lines.append("    return (" + "".join(names[id(e)] + ", " for e in exprs) + ")")
    namespace = {
        "_pow": _safe_pow,
        "_sin": math.sin,
        "_cos": math.cos,
        "_atan": math.atan,
        "_exp": math.exp,
        "_log": _safe_log,
        "_sqrt": _safe_sqrt,
    }
    exec(compile("\n".join(lines), "<curv4-expr>", "exec"), namespace)
    raw = namespace["_raw"]
    isfinite = math.isfinite

    def compiled(p):
        try:
            out = raw(p)
        except ZeroDivisionError:
            raise DomainError("division by zero") from None
        except OverflowError:
            raise DomainError("overflow") from None
        except ValueError as exc:
            raise DomainError(str(exc)) from None
        for v in out:
            if not isfinite(v):
                raise DomainError("non-finite result")
        return out

    return compiled


# --- symbolic differentiation

def differentiate(e: Expr, index: int, _memo=None) -> Expr:
    """Symbolic partial derivative with respect to ``x{index+1}``."""
    memo = {} if _memo is None else _memo
    for node in _postorder([e]):
        if id(node) in memo:
            continue
        op = node.op
        if op == "const":
            d = ZERO
        elif op == "var":
            d = ONE if node.value == index else ZERO
        else:
            args = node.args
            da = [memo[id(c)] for c in args]
            if op == "add":
                d = add(da[0], da[1])
            elif op == "sub":
                d = sub(da[0], da[1])
            elif op == "mul":
                d = add(mul(da[0], args[1]), mul(args[0], da[1]))
            elif op == "div":
                # (a/b)' = a'/b - a b'/b^2
                d = sub(div(da[0], args[1]), div(mul(args[0], da[1]), power(args[1], const(2))))
            elif op == "neg":
                d = neg(da[0])
            elif op == "pow":
                base, ex = args
                if ex.is_const:
                    d = mul(mul(ex, power(base, const(ex.value - 1.0))), da[0])
                else:
                    # a^b (b' log a + b a'/a)
                    d = mul(node, add(mul(da[1], log(base)), div(mul(ex, da[0]), base)))
            elif op == "sin":
                d = mul(cos(args[0]), da[0])
            elif op == "cos":
                d = neg(mul(sin(args[0]), da[0]))
            elif op == "exp":
                d = mul(node, da[0])
            elif op == "log":
                d = div(da[0], args[0])
            elif op == "sqrt":
                d = div(da[0], mul(const(2), node))
            elif op == "atan":
                d = div(da[0], add(ONE, power(args[0], const(2))))
            else:  # pragma: no cover
                raise ValueError(op)
        memo[id(node)] = d
    return memo[id(e)]


def gradient(e: Expr) -> list:
    return [differentiate(e, k) for k in range(NVARS)]


# --- printing

def _fmt_const(v):
    text = repr(v)
    return f"({text})" if v < 0 else text


def to_string(e: Expr) -> str:
    """Render ``e`` in the parseable grammar with minimal parentheses."""
    cache = {}
    for node in _postorder([e]):
        op = node.op
        if op == "const":
            s, prec = _fmt_const(node.value), 5
        elif op == "var":
            s, prec = f"x{node.value + 1}", 5
        elif op in BINARY:
            (ls, lp), (rs, rp) = cache[id(node.args[0])], cache[id(node.args[1])]
            prec = _PRECEDENCE[op]
            if op == "pow":
                if lp <= prec:
                    ls = f"({ls})"
                if rp < 5:
                    rs = f"({rs})"
            else:
                if lp < prec:
                    ls = f"({ls})"
                if rp <= prec if op in ("sub", "div") else rp < prec:
                    rs = f"({rs})"
            s = f"{ls} {_SYMBOL[op]} {rs}" if op in ("add", "sub") else f"{ls}{_SYMBOL[op]}{rs}"
        elif op == "neg":
            inner, ip = cache[id(node.args[0])]
            prec = 3
            s = f"-({inner})" if ip < 4 else f"-{inner}"
        else:
            s, prec = f"{op}({cache[id(node.args[0])][0]})", 5
        cache[id(node)] = (s, prec)
    return cache[id(e)][0]


# --- parsing

class _Parser:
    def __init__(self, source: str):
        self.src = source
        self.tokens = self._tokenize(source)
        self.i = 0

    def _bytepos(self, charpos):
        return len(self.src[:charpos].encode("utf-8")) + 1

    def _tokenize(self, s):
        toks = []
        i, n = 0, len(s)
        while i < n:
            c = s[i]
            if c.isspace():
                i += 1
                continue
            start = i
            if c.isdigit() or (c == "." and i + 1 < n and s[i + 1].isdigit()):
                while i < n and s[i].isdigit():
                    i += 1
                if i < n and s[i] == ".":
                    i += 1
                    while i < n and s[i].isdigit():
                        i += 1
                if i < n and s[i] in "eE":
                    j = i + 1
                    if j < n and s[j] in "+-":
                        j += 1
                    if j < n and s[j].isdigit():
                        i = j
                        while i < n and s[i].isdigit():
                            i += 1
                toks.append(("num", s[start:i], start))
            elif c.isalpha() or c == "_":
                while i < n and (s[i].isalnum() or s[i] == "_"):
                    i += 1
                toks.append(("id", s[start:i], start))
            elif c in "+-*/^()":
                toks.append((c, c, start))
                i += 1
            else:
                raise ExprSyntaxError(self._bytepos(start), f"unexpected character {c!r}")
        toks.append(("end", "", n))
        return toks

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, tok, expected):
        found = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ExprSyntaxError(self._bytepos(tok[2]), f"expected {expected}, found {found}")

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.error(tok, "operator or end of input")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self):
        kind = self.peek()[0]
        if kind == "-":
            self.advance()
            return neg(self.unary())
        if kind == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "^":
            self.advance()
            return power(base, self.unary())
        return base

    def primary(self):
        tok = self.advance()
        kind, text, pos = tok
        if kind == "num":
            return const(float(text))
        if kind == "(":
            e = self.expr()
            close = self.peek()
            if close[0] != ")":
                self.error(close, "')'")
            self.advance()
            return e
        if kind == "id":
            if text in ("x1", "x2", "x3", "x4"):
                return var(int(text[1]) - 1)
            if text == "pi":
                return const(math.pi)
            if text in FUNCTIONS:
                opening = self.peek()
                if opening[0] != "(":
                    self.error(opening, f"'(' after {text}")
                self.advance()
                arg = self.expr()
                close = self.peek()
                if close[0] != ")":
                    self.error(close, "')'")
                self.advance()
                return func(text, arg)
            raise UnknownIdentifier(self._bytepos(pos), text)
        self.error(tok, "number, variable, function or '('")


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression.

    >>> evaluate(parse("x1^2 + x2*x3"), (1, 2, 3, 0))
    7.0
    """
    return _Parser(source).parse()


def as_expr(value) -> Expr:
    """Accept an Expr, a number, or source text."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    return const(value)
