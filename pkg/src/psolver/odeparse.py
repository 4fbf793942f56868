"""Expression trees for ODE input and solution output.

Text grammar (``^`` binds tighter than unary minus, which binds tighter than
``*``/``/``, which bind tighter than ``+``/``-``)::

    ode     := "y'" "=" expr | "diff(" y ["(" x ")"] "," x ")" "=" expr
    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ["^" exponent]
    exponent:= ["-"] INT | "(" ["-"] INT ["/" INT] ")"
    primary := INT | "I" | NAME | NAME "(" expr ")" | "Int(" expr "," NAME ")" | "(" expr ")"

Implicit multiplication is rejected.  The printer is faithful to the tree, so
``parse_expr(print_expr(e)) == e`` for trees in canonical shape (no ``Neg`` of
a literal, no ``Div`` of two literals, flattened ``Add``/``Mul``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from gmpy2 import mpq

from .errors import BasisError, ParseError, UnsupportedFunctionError
from .symkernel import GaussianRational, MultiPoly, RationalFunction

SUPPORTED_FUNCTIONS = ("exp", "ln", "sin", "cos", "tan")


# ---------------------------------------------------------------------------
# Nodes
# ---------------------------------------------------------------------------


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return print_expr(self)


@dataclass(frozen=True)
class Num(Expr):
    value: object  # mpq

    def __post_init__(self):
        object.__setattr__(self, "value", mpq(self.value))


@dataclass(frozen=True)
class Imag(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Add(Expr):
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Mul(Expr):
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: object  # mpq

    def __post_init__(self):
        object.__setattr__(self, "exp", mpq(self.exp))


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr


@dataclass(frozen=True)
class Integral(Expr):
    integrand: Expr
    var: str


@dataclass(frozen=True)
class OdeSpec:
    rhs: Expr
    indep: str = "x"
    dep: str = "y"


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),=']))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Tok]:
    toks = []
    pos = 0
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(p):
        line = max(i for i, s in enumerate(line_starts) if s <= p)
        return line + 1, p - line_starts[line] + 1

    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            ws = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + ws]!r}", *where(pos + ws))
        kind = m.lastgroup
        start = m.start(kind)
        tok = m.group(kind)
        if kind == "num" and "." in tok:
            raise ParseError("decimal literals are not supported; use p/q", *where(start))
        toks.append(_Tok(kind, tok, *where(start)))
        pos = m.end()
    end = where(len(text))
    toks.append(_Tok("eof", "", *end))
    return toks


class _Parser:
    def __init__(self, text: str, indep: str = "x", dep: str = "y", allow_integral: bool = True):
        self.toks = _tokenize(text)
        self.i = 0
        self.indep = indep
        self.dep = dep
        self.allow_integral = allow_integral

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def expect_name(self) -> str:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        name = self.tok.text
        self.i += 1
        return name

    def at_end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected token {self.tok.text!r}")

    # expr := term (("+"|"-") term)*
    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            right = self.term()
            if op == "+":
                left = Add(left.args + (right,)) if isinstance(left, Add) else Add((left, right))
            else:
                left = Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            right = self.unary()
            if op == "*":
                left = Mul(left.args + (right,)) if isinstance(left, Mul) else Mul((left, right))
            elif isinstance(left, Num) and isinstance(right, Num):
                if right.value == 0:
                    raise self.error("division by zero literal")
                left = Num(left.value / right.value)
            else:
                left = Div(left, right)
        return left

    def unary(self) -> Expr:
        if self.accept("-"):
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        tok = self.tok
        if self.accept("("):
            sign = -1 if self.accept("-") else 1
            p = self.integer()
            q = 1
            if self.accept("/"):
                q = self.integer()
                if q == 0:
                    raise self.error("zero denominator in exponent", tok)
            self.expect(")")
            return mpq(sign * p, q)
        sign = -1 if self.accept("-") else 1
        if self.tok.kind != "num":
            raise self.error("exponents must be numeric: use x^k or x^(p/q)")
        return mpq(sign * self.integer())

    def integer(self) -> int:
        if self.tok.kind != "num":
            raise self.error("expected an integer")
        v = int(self.tok.text)
        self.i += 1
        return v

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(int(tok.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            name = tok.text
            self.i += 1
            if name == "I":
                return Imag()
            if self.tok.kind == "op" and self.tok.text == "(":
                self.i += 1
                if name == "Int":
                    if not self.allow_integral:
                        raise self.error("integral nodes are not allowed here", tok)
                    integrand = self.expr()
                    self.expect(",")
                    v = self.expect_name()
                    self.expect(")")
                    return Integral(integrand, v)
                if name == self.dep:
                    # y(x) is accepted as a synonym for y
                    arg = self.expect_name()
                    if arg != self.indep:
                        raise self.error(f"{self.dep} must be written {self.dep}({self.indep})", tok)
                    self.expect(")")
                    return Var(name)
                if name == "log":
                    name = "ln"
                if name not in SUPPORTED_FUNCTIONS:
                    raise UnsupportedFunctionError(
                        f"function not in supported kernel set: {name!r}", tok.line, tok.col
                    )
                arg = self.expr()
                self.expect(")")
                return Func(name, arg)
            if name in SUPPORTED_FUNCTIONS or name == "Int":
                raise self.error(f"function {name!r} needs an argument", tok)
            return Var(name)
        raise self.error(f"unexpected token {tok.text or 'end of input'!r}")


def parse_expr(text: str, allow_integral: bool = True) -> Expr:
    """Parse a bare expression."""
    p = _Parser(text, allow_integral=allow_integral)
    e = p.expr()
    p.at_end()
    return e


def _contains(e: Expr, kind) -> bool:
    if isinstance(e, kind):
        return True
    return any(_contains(c, kind) for c in children(e))


def parse_ode(text: str) -> OdeSpec:
    """Parse ``y' = <expr>`` or ``diff(y,x) = <expr>``."""
    toks = _tokenize(text)
    p = _Parser(text, allow_integral=False)
    if toks[0].kind == "name" and toks[0].text == "diff":
        p.i = 1
        p.expect("(")
        dep = p.expect_name()
        indep = None
        if p.accept("("):
            indep = p.expect_name()
            p.expect(")")
        p.expect(",")
        x = p.expect_name()
        if indep is not None and indep != x:
            raise p.error("inconsistent independent variable")
        indep = x
        p.expect(")")
    elif toks[0].kind == "name":
        dep = p.expect_name()
        if p.accept("("):
            indep = p.expect_name()
            p.expect(")")
        else:
            indep = "x"
        p.expect("'")
    else:
        raise p.error("an ODE must start with y' = or diff(y,x) =")
    if dep == indep:
        raise p.error("dependent and independent variables must differ")
    p.dep, p.indep = dep, indep
    p.expect("=")
    rhs = p.expr()
    p.at_end()
    for v in free_vars(rhs):
        if v not in (dep, indep):
            raise ParseError(f"unknown symbol {v!r}: only {indep} and {dep} may appear", 1, 1)
    return OdeSpec(rhs=rhs, indep=indep, dep=dep)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _level(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Num):
        if e.value.denominator != 1:
            return 2
        return 3 if e.value < 0 else 5
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _wrap(e: Expr, need: int) -> str:
    s = _text(e)
    return f"({s})" if _level(e) < need else s


def _fmt_exp(k) -> str:
    if k.denominator == 1 and k >= 0:
        return str(k.numerator)
    return f"({k})"


def _text(e: Expr) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Imag):
        return "I"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        out = _wrap(e.args[0], 1)
        for a in e.args[1:]:
            out += " + " + _wrap(a, 2)
        return out
    if isinstance(e, Sub):
        return f"{_wrap(e.left, 1)} - {_wrap(e.right, 2)}"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, 3)
    if isinstance(e, Mul):
        return "*".join([_wrap(e.args[0], 2)] + [_wrap(a, 3) for a in e.args[1:]])
    if isinstance(e, Div):
        return f"{_wrap(e.left, 2)}/{_wrap(e.right, 3)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, 5)}^{_fmt_exp(e.exp)}"
    if isinstance(e, Func):
        return f"{e.name}({_text(e.arg)})"
    if isinstance(e, Integral):
        return f"Int({_text(e.integrand)}, {e.var})"
    raise TypeError(f"not an expression: {e!r}")


def to_json(e: Expr):
    if isinstance(e, Num):
        v = e.value
        if v.denominator == 1:
            return {"int": str(v.numerator)}
        return {"rat": [str(v.numerator), str(v.denominator)]}
    if isinstance(e, Imag):
        return {"const": "I"}
    if isinstance(e, Var):
        return {"var": e.name}
    if isinstance(e, Add):
        return {"op": "+", "args": [to_json(a) for a in e.args]}
    if isinstance(e, Sub):
        return {"op": "-", "args": [to_json(e.left), to_json(e.right)]}
    if isinstance(e, Neg):
        return {"op": "neg", "args": [to_json(e.arg)]}
    if isinstance(e, Mul):
        return {"op": "*", "args": [to_json(a) for a in e.args]}
    if isinstance(e, Div):
        return {"op": "/", "args": [to_json(e.left), to_json(e.right)]}
    if isinstance(e, Pow):
        return {"op": "^", "args": [to_json(e.base), to_json(Num(e.exp))]}
    if isinstance(e, Func):
        return {"fn": e.name, "arg": to_json(e.arg)}
    if isinstance(e, Integral):
        return {"Int": {"integrand": to_json(e.integrand), "var": e.var}}
    raise TypeError(f"not an expression: {e!r}")


def from_json(d) -> Expr:
    if "int" in d:
        return Num(int(d["int"]))
    if "rat" in d:
        p, q = d["rat"]
        return Num(mpq(int(p), int(q)))
    if "const" in d:
        return Imag()
    if "var" in d:
        return Var(d["var"])
    if "fn" in d:
        return Func(d["fn"], from_json(d["arg"]))
    if "Int" in d:
        return Integral(from_json(d["Int"]["integrand"]), d["Int"]["var"])
    op, args = d["op"], [from_json(a) for a in d["args"]]
    if op == "+":
        return Add(tuple(args))
    if op == "*":
        return Mul(tuple(args))
    if op == "-":
        return Sub(*args)
    if op == "neg":
        return Neg(args[0])
    if op == "/":
        return Div(*args)
    if op == "^":
        return Pow(args[0], args[1].value)
    raise ValueError(f"unknown op {op!r}")


def print_expr(e: Expr, format: str = "text") -> str:
    """Render as re-parseable text or as the JSON tree encoding."""
    if format == "text":
        return _text(e)
    if format == "json":
        return json.dumps(to_json(e), sort_keys=True)
    raise ValueError(f"unknown format {format!r}")


# ---------------------------------------------------------------------------
# Structure helpers and builders
# ---------------------------------------------------------------------------


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, (Add, Mul)):
        return e.args
    if isinstance(e, (Sub, Div)):
        return (e.left, e.right)
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Func):
        return (e.arg,)
    if isinstance(e, Integral):
        return (e.integrand,)
    return ()


def free_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    out = set()
    for c in children(e):
        out |= free_vars(c)
    if isinstance(e, Integral):
        out.add(e.var)
    return out


def integrals(e: Expr) -> List[Integral]:
    found = [e] if isinstance(e, Integral) else []
    for c in children(e):
        found.extend(integrals(c))
    return found


ZERO_E = Num(0)
ONE_E = Num(1)


def num(v) -> Expr:
    """Literal for a scalar, Gaussian values included."""
    if isinstance(v, GaussianRational):
        if v.im == 0:
            return Num(v.re)
        im = Imag() if v.im == 1 else (Neg(Imag()) if v.im == -1 else Mul((Num(v.im), Imag())))
        if v.re == 0:
            return im
        if v.im < 0:
            return Sub(Num(v.re), Imag() if v.im == -1 else Mul((Num(-v.im), Imag())))
        return Add((Num(v.re), im))
    return Num(v)


def _is_num(e: Expr, v=None) -> bool:
    return isinstance(e, Num) and (v is None or e.value == v)


def _neg_parts(e: Expr) -> Optional[Expr]:
    """If ``e`` reads as ``-t``, return ``t``."""
    if isinstance(e, Neg):
        return e.arg
    if isinstance(e, Num) and e.value < 0:
        return Num(-e.value)
    if isinstance(e, Mul) and isinstance(e.args[0], Num) and e.args[0].value < 0:
        c = -e.args[0].value
        rest = e.args[1:]
        return mul(*rest) if c == 1 else Mul((Num(c),) + rest)
    if isinstance(e, Mul) and isinstance(e.args[0], Neg):
        return Mul((e.args[0].arg,) + e.args[1:])
    if isinstance(e, Div):
        t = _neg_parts(e.left)
        if t is not None:
            return div(t, e.right)
    return None


def add(*args: Expr) -> Expr:
    terms: List[Expr] = []
    const = mpq(0)
    for a in args:
        for t in (a.args if isinstance(a, Add) else (a,)):
            if isinstance(t, Num):
                const += t.value
            else:
                terms.append(t)
    if const:
        terms.append(Num(const))
    if not terms:
        return ZERO_E
    acc = terms[0]
    for t in terms[1:]:
        n = _neg_parts(t)
        if n is not None:
            acc = Sub(acc, n)
        elif isinstance(acc, Add):
            acc = Add(acc.args + (t,))
        else:
            acc = Add((acc, t))
    return acc


def neg(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(-e.value)
    n = _neg_parts(e)
    if n is not None:
        return n
    if isinstance(e, Sub):
        return Sub(e.right, e.left)
    if isinstance(e, Mul) and isinstance(e.args[0], Num):
        return mul(Num(-e.args[0].value), *e.args[1:])
    if isinstance(e, Mul):
        return Mul((neg(e.args[0]),) + e.args[1:])
    if isinstance(e, Div):
        return div(neg(e.left), e.right)
    return Neg(e)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return neg(b)
    return add(a, neg(b))


def mul(*args: Expr) -> Expr:
    numer: List[Expr] = []
    denom: List[Expr] = []
    coeff = mpq(1)
    sign = 1

    def take(t: Expr, into_num: bool):
        nonlocal coeff, sign
        if isinstance(t, Num):
            coeff = coeff * t.value if into_num else coeff / t.value
        elif isinstance(t, Neg):
            sign = -sign
            take(t.arg, into_num)
        elif isinstance(t, Mul):
            for s in t.args:
                take(s, into_num)
        elif isinstance(t, Div):
            take(t.left, into_num)
            take(t.right, not into_num)
        elif isinstance(t, Pow) and t.exp < 0:
            take(Pow(t.base, -t.exp) if t.exp != -1 else t.base, not into_num)
        else:
            (numer if into_num else denom).append(t)

    for a in args:
        take(a, True)
    coeff *= sign
    if coeff == 0:
        return ZERO_E
    c_num = Num(coeff.numerator) if coeff.numerator != 1 else None
    top: List[Expr] = ([c_num] if c_num is not None and coeff.numerator != -1 else []) + numer
    neg_top = coeff.numerator == -1
    if not top:
        top_e = ONE_E
    elif len(top) == 1:
        top_e = top[0]
    else:
        top_e = Mul(tuple(top))
    if neg_top:
        top_e = neg(top_e) if top_e != ONE_E else Num(-1)
    bottom: List[Expr] = ([Num(coeff.denominator)] if coeff.denominator != 1 else []) + denom
    if not bottom:
        return top_e
    bottom_e = bottom[0] if len(bottom) == 1 else Mul(tuple(bottom))
    if isinstance(top_e, Num) and isinstance(bottom_e, Num):
        return Num(top_e.value / bottom_e.value)
    return Div(top_e, bottom_e)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 1):
        return a
    if isinstance(b, Num):
        if b.value == 0:
            raise ZeroDivisionError("division by zero literal")
        return mul(Num(1 / b.value), a)
    if _is_num(a, 0):
        return ZERO_E
    return mul(a, Pow(b, -1))


def power(b: Expr, k) -> Expr:
    k = mpq(k)
    if k == 0:
        return ONE_E
    if k == 1:
        return b
    if isinstance(b, Num) and k.denominator == 1:
        return Num(b.value ** int(k))
    if isinstance(b, Pow):
        return power(b.base, b.exp * k) if k.denominator == 1 else Pow(b, k)
    if k < 0:
        return Div(ONE_E, power(b, -k))
    return Pow(b, k)


def func(name: str, arg: Expr) -> Expr:
    if name == "exp" and _is_num(arg, 0):
        return ONE_E
    if name == "ln" and _is_num(arg, 1):
        return ZERO_E
    return Func(name, arg)


# ---------------------------------------------------------------------------
# Calculus on trees
# ---------------------------------------------------------------------------


def diff(e: Expr, var: str) -> Expr:
    """Formal derivative; an integral differentiates to its integrand in its own variable."""
    if isinstance(e, (Num, Imag)):
        return ZERO_E
    if isinstance(e, Var):
        return ONE_E if e.name == var else ZERO_E
    if isinstance(e, Add):
        return add(*[diff(a, var) for a in e.args])
    if isinstance(e, Sub):
        return sub(diff(e.left, var), diff(e.right, var))
    if isinstance(e, Neg):
        return neg(diff(e.arg, var))
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = diff(a, var)
            if not _is_num(da, 0):
                terms.append(mul(*(e.args[:i] + (da,) + e.args[i + 1:])))
        return add(*terms) if terms else ZERO_E
    if isinstance(e, Div):
        dl, dr = diff(e.left, var), diff(e.right, var)
        if _is_num(dr, 0):
            return div(dl, e.right)
        return div(sub(mul(dl, e.right), mul(e.left, dr)), power(e.right, 2))
    if isinstance(e, Pow):
        db = diff(e.base, var)
        if _is_num(db, 0):
            return ZERO_E
        return mul(Num(e.exp), power(e.base, e.exp - 1), db)
    if isinstance(e, Func):
        da = diff(e.arg, var)
        if _is_num(da, 0):
            return ZERO_E
        if e.name == "exp":
            return mul(e, da)
        if e.name == "ln":
            return div(da, e.arg)
        if e.name == "sin":
            return mul(Func("cos", e.arg), da)
        if e.name == "cos":
            return neg(mul(Func("sin", e.arg), da))
        if e.name == "tan":
            return mul(add(ONE_E, power(e, 2)), da)
        raise UnsupportedFunctionError(f"function not in supported kernel set: {e.name!r}")
    if isinstance(e, Integral):
        if e.var == var:
            return e.integrand
        d = diff(e.integrand, var)
        return ZERO_E if _is_num(d, 0) else Integral(d, e.var)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Polynomial conversions
# ---------------------------------------------------------------------------


def expr_to_poly(e: Expr, vars: Sequence[str] = ()) -> MultiPoly:
    """Convert a polynomial expression; variables missing from ``vars`` are appended."""
    names = list(vars)
    for v in sorted(free_vars(e)):
        if v not in names:
            names.append(v)
    names = tuple(names)

    def go(t: Expr) -> MultiPoly:
        if isinstance(t, Num):
            return MultiPoly.const(t.value, names)
        if isinstance(t, Imag):
            return MultiPoly.const(GaussianRational(0, 1), names)
        if isinstance(t, Var):
            return MultiPoly.var(t.name, names)
        if isinstance(t, Add):
            out = MultiPoly.zero(names)
            for a in t.args:
                out = out + go(a)
            return out
        if isinstance(t, Sub):
            return go(t.left) - go(t.right)
        if isinstance(t, Neg):
            return -go(t.arg)
        if isinstance(t, Mul):
            out = MultiPoly.const(1, names)
            for a in t.args:
                out = out * go(a)
            return out
        if isinstance(t, Div):
            d = go(t.right)
            if not d.is_constant() or d.is_zero():
                raise ValueError("not a polynomial expression")
            return go(t.left).scale(d.constant_value().inverse())
        if isinstance(t, Pow):
            if t.exp.denominator != 1 or t.exp < 0:
                raise ValueError("not a polynomial expression")
            return go(t.base) ** int(t.exp)
        raise ValueError("not a polynomial expression")

    return go(e)


def poly_to_expr(p: MultiPoly, subst: Optional[Dict[str, Expr]] = None) -> Expr:
    """Render a polynomial as a tree, replacing variables through ``subst``."""
    subst = subst or {}
    terms = []
    for e, c in p.sorted_terms():
        factors = []
        for v, k in zip(p.vars, e):
            if k:
                base = subst.get(v, Var(v))
                factors.append(power(base, k))
        terms.append(mul(num(c), *factors))
    return add(*terms) if terms else ZERO_E


def unsubstitute(p: Union[MultiPoly, RationalFunction], table) -> Expr:
    """Replace basis variables by their kernel expressions."""
    known = set(table.varlist)
    used = set(p.num.used_vars() + p.den.used_vars()) if isinstance(p, RationalFunction) else set(p.used_vars())
    unknown = used - known
    if unknown:
        raise BasisError(f"unknown basis variable(s): {', '.join(sorted(unknown))}")
    subst = table.kernel_exprs()
    if isinstance(p, RationalFunction):
        num_p, den_p = p.num, p.den
        lifted = []
        # exp(a) in the denominator reads better as exp(-a) upstairs
        for i, v in enumerate(den_p.vars):
            k = subst.get(v)
            if not (isinstance(k, Func) and k.name == "exp"):
                continue
            m = min(e[i] for e in den_p.terms)
            if m:
                one = tuple(m if j == i else 0 for j in range(len(den_p.vars)))
                den_p = den_p / MultiPoly.monomial(one, den_p.vars)
                lifted.append(func("exp", neg(mul(num(m), k.arg))))
        n = mul(poly_to_expr(num_p, subst), *lifted) if lifted else poly_to_expr(num_p, subst)
        if den_p == 1:
            return n
        return div(n, poly_to_expr(den_p, subst))
    return poly_to_expr(p, subst)
