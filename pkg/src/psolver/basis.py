"""Function basis: elementary kernels as new polynomial variables.

Every kernel met in an expression (exp, ln, sin, cos, tan, a fractional power,
and, for checking output, an unevaluated integral) becomes a variable ``u_k``.
The table records each kernel's partial derivatives as rational functions in
``(x, y, u_1, ..., u_m)`` so that the total derivative of anything built from
the table stays inside it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import BasisError, UnsupportedFunctionError
from .odeparse import (
    Add, Div, Expr, Func, Imag, Integral, Mul, Neg, Num, OdeSpec, Pow, Sub, Var,
    unsubstitute,
)
from .symkernel import (
    I_UNIT, MultiPoly, RationalFunction, squarefree_split,
)

KERNEL_KINDS = ("exp", "ln", "sin", "cos", "tan", "rational_power", "int")
DEFAULT_KERNEL_CAP = 25


@dataclass(frozen=True)
class FunctionKernel:
    kind: str
    arg: RationalFunction
    expr: Expr
    exponent: Optional[object] = None  # mpq for rational_power
    var: Optional[str] = None  # integration variable for "int"

    @property
    def argument(self) -> Expr:
        if self.kind == "rational_power":
            return self.expr.base
        if self.kind == "int":
            return self.expr.integrand
        return self.expr.arg


@dataclass
class BasisTable:
    indep: str = "x"
    dep: str = "y"
    entries: List[Tuple[str, FunctionKernel]] = field(default_factory=list)
    dx: Dict[str, RationalFunction] = field(default_factory=dict)
    dy: Dict[str, RationalFunction] = field(default_factory=dict)
    denominators: List[MultiPoly] = field(default_factory=list)
    cap: int = DEFAULT_KERNEL_CAP

    @property
    def varlist(self) -> Tuple[str, ...]:
        return (self.indep, self.dep) + tuple(n for n, _ in self.entries)

    @property
    def unames(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def kernel(self, name: str) -> FunctionKernel:
        for n, k in self.entries:
            if n == name:
                return k
        raise BasisError(f"unknown basis variable {name!r}")

    def kernel_exprs(self) -> Dict[str, Expr]:
        return {n: k.expr for n, k in self.entries}

    def copy(self) -> "BasisTable":
        return BasisTable(self.indep, self.dep, list(self.entries), dict(self.dx),
                          dict(self.dy), list(self.denominators), self.cap)

    def zero(self) -> MultiPoly:
        return MultiPoly.zero(self.varlist)

    def poly(self, text: str) -> MultiPoly:
        """Parse a polynomial in the table's variables (handy in tests)."""
        return MultiPoly.from_string(text, self.varlist).with_vars(self.varlist)

    def derivative_of(self, name: str, var: str) -> RationalFunction:
        """Partial derivative of a table variable with respect to x or y."""
        vl = self.varlist
        one = MultiPoly.const(1, vl)
        if name == var:
            return RationalFunction.from_poly(one)
        if name in (self.indep, self.dep):
            return RationalFunction.from_poly(MultiPoly.zero(vl))
        d = self.dx if var == self.indep else self.dy
        return d[name]


def total_derivative(f, var: str, table: BasisTable) -> RationalFunction:
    """d f / d var for f in (x, y, u), applying the chain rule through the basis."""
    vl = table.varlist
    if isinstance(f, MultiPoly):
        f = RationalFunction.from_poly(f)
    f = f.with_vars(vl)
    out = f.derivative(var)
    d = table.dx if var == table.indep else table.dy
    used = set(f.num.used_vars()) | set(f.den.used_vars())
    for name in table.unames:
        if name not in used:
            continue
        du = d[name]
        if not du.is_zero():
            out = out + f.derivative(name) * du
    return out.with_vars(vl)


# ---------------------------------------------------------------------------
# Building tables
# ---------------------------------------------------------------------------


class _Builder:
    """Accumulates kernels while walking expressions."""

    def __init__(self, table: BasisTable, allow_new: bool = True):
        self.t = table
        self.allow_new = allow_new
        self.index: Dict[tuple, str] = {}
        for name, k in table.entries:
            self.index[self._key(k.kind, k.arg, k.exponent, k.var)] = name

    @staticmethod
    def _key(kind, arg: RationalFunction, exponent, var):
        return (kind, arg.num, arg.den, exponent, var)

    # conversions ---------------------------------------------------------
    def const(self, c) -> RationalFunction:
        return RationalFunction.from_poly(MultiPoly.const(c, self.t.varlist))

    def var(self, name: str) -> RationalFunction:
        return RationalFunction.from_poly(MultiPoly.var(name, self.t.varlist))

    def walk(self, e: Expr) -> RationalFunction:
        if isinstance(e, Num):
            return self.const(e.value)
        if isinstance(e, Imag):
            return self.const(I_UNIT)
        if isinstance(e, Var):
            if e.name in (self.t.indep, self.t.dep) or e.name in self.t.unames:
                return self.var(e.name)
            raise BasisError(f"unknown variable {e.name!r}")
        if isinstance(e, Add):
            out = self.walk(e.args[0])
            for a in e.args[1:]:
                out = out + self.walk(a)
            return out
        if isinstance(e, Sub):
            return self.walk(e.left) - self.walk(e.right)
        if isinstance(e, Neg):
            return -self.walk(e.arg)
        if isinstance(e, Mul):
            out = self.walk(e.args[0])
            for a in e.args[1:]:
                out = out * self.walk(a)
            return out
        if isinstance(e, Div):
            d = self.walk(e.right)
            if d.is_zero():
                raise BasisError("division by zero")
            return self.walk(e.left) / d
        if isinstance(e, Pow):
            b = self.walk(e.base)
            k = e.exp
            if k.denominator == 1:
                if b.is_zero() and k < 0:
                    raise BasisError("division by zero")
                return b ** int(k)
            return self.fractional_power(b, k)
        if isinstance(e, Func):
            a = self.walk(e.arg)
            return self.function(e.name, a)
        if isinstance(e, Integral):
            return self.integral(self.walk(e.integrand), e.var)
        raise TypeError(f"not an expression: {e!r}")

    # kernels ---------------------------------------------------------------
    def function(self, name: str, a: RationalFunction) -> RationalFunction:
        if name == "exp":
            return self.exponential(a)
        if name == "ln":
            if a.is_zero():
                raise BasisError("ln(0) is undefined")
            if a.is_constant() and a == 1:
                return self.const(0)
            return self.var(self.insert("ln", a))
        if name in ("sin", "cos"):
            if a.is_zero():
                return self.const(0 if name == "sin" else 1)
            return self.var(self.insert(name, a))
        if name == "tan":
            if a.is_zero():
                return self.const(0)
            return self.var(self.insert("tan", a))
        raise UnsupportedFunctionError(f"function not in supported kernel set: {name!r}")

    def exponential(self, a: RationalFunction) -> RationalFunction:
        # exp(sum c_k t_k / D) = prod exp(t_k/D)^c_k, integer c_k pulled out
        out = self.const(1)
        vl = self.t.varlist
        a = a.with_vars(vl)
        for e, c in a.num.sorted_terms():
            r = RationalFunction(MultiPoly({e: c}, vl), a.den)
            k = r.num.lc()
            if k.im == 0 and k.re.denominator == 1:
                base = RationalFunction(r.num.scale(k.inverse()), r.den, reduce=False)
                kpow = int(k.re)
            else:
                base, kpow = r, 1
            u = self.var(self.insert("exp", base))
            out = out * (u ** kpow)
        return out

    def fractional_power(self, b: RationalFunction, k) -> RationalFunction:
        if b.is_zero():
            if k < 0:
                raise BasisError("division by zero")
            return self.const(0)
        whole = k.numerator // k.denominator
        frac = k - whole
        u = self.var(self.insert("rational_power", b, exponent=frac))
        return (b ** whole) * u

    def integral(self, h: RationalFunction, var: str) -> RationalFunction:
        other = self.t.dep if var == self.t.indep else self.t.indep
        if var not in (self.t.indep, self.t.dep):
            raise BasisError(f"integration variable {var!r} is not {self.t.indep} or {self.t.dep}")
        if not total_derivative(h, other, self.t).is_zero():
            raise BasisError("integrand depends on the other variable")
        return self.var(self.insert("int", h, var=var))

    def insert(self, kind: str, a: RationalFunction, exponent=None, var=None) -> str:
        t = self.t
        a = a.with_vars(t.varlist)
        key = self._key(kind, a, exponent, var)
        if key in self.index:
            return self.index[key]
        if not self.allow_new:
            raise BasisError(f"expression needs a kernel missing from the basis: {kind}")
        if kind in ("sin", "cos"):
            partner = "cos" if kind == "sin" else "sin"
            first = self._add(kind, a)
            second = self._add(partner, a)
            s, c = (first, second) if kind == "sin" else (second, first)
            self._set_trig_derivatives(s, c, a)
            return first
        name = self._add(kind, a, exponent, var)
        self._set_derivatives(name)
        return name

    def _add(self, kind, a, exponent=None, var=None) -> str:
        t = self.t
        if len(t.entries) >= t.cap:
            raise BasisError(f"closure did not terminate within cap ({t.cap} kernels)")
        name = f"u{len(t.entries) + 1}"
        while name in (t.indep, t.dep):
            name = "_" + name
        arg_expr = unsubstitute(a, t)
        if kind == "rational_power":
            expr = Pow(arg_expr, exponent)
        elif kind == "int":
            expr = Integral(arg_expr, var)
        else:
            expr = Func(kind, arg_expr)
        t.entries.append((name, FunctionKernel(kind, a, expr, exponent, var)))
        self.index[self._key(kind, a, exponent, var)] = name
        return name

    def _set_trig_derivatives(self, s: str, c: str, a: RationalFunction) -> None:
        t = self.t
        us, uc = self.var(s), self.var(c)
        for v, d in ((t.indep, t.dx), (t.dep, t.dy)):
            da = total_derivative(a, v, t)
            d[s] = (da * uc).with_vars(t.varlist)
            d[c] = (-(da * us)).with_vars(t.varlist)
        self._denominators()

    def _set_derivatives(self, name: str) -> None:
        t = self.t
        k = t.kernel(name)
        u = self.var(name)
        a = k.arg
        for v, d in ((t.indep, t.dx), (t.dep, t.dy)):
            if k.kind == "int":
                d[name] = a if v == k.var else self.const(0)
                continue
            da = total_derivative(a, v, t)
            if k.kind == "exp":
                r = da * u
            elif k.kind == "ln":
                r = da / a
            elif k.kind == "tan":
                r = da * (u * u + 1)
            else:  # rational_power
                r = da * u * RationalFunction.from_poly(MultiPoly.const(k.exponent, t.varlist)) / a
            d[name] = r.with_vars(t.varlist)
        self._denominators()

    def _denominators(self) -> None:
        t = self.t
        dens = [r.den for r in list(t.dx.values()) + list(t.dy.values())]
        t.denominators = [f.with_vars(t.varlist) for f in squarefree_split(dens)]


def close_basis(spec: OdeSpec, cap: int = DEFAULT_KERNEL_CAP) -> BasisTable:
    """Collect the kernels of ``spec.rhs`` and close the set under differentiation."""
    table = BasisTable(indep=spec.indep, dep=spec.dep, cap=cap)
    b = _Builder(table)
    b.walk(spec.rhs)
    _finalize(table)
    return table


def _finalize(table: BasisTable) -> None:
    vl = table.varlist
    for d in (table.dx, table.dy):
        for k in d:
            d[k] = d[k].with_vars(vl)
    table.denominators = [f.with_vars(vl) for f in table.denominators]


def rationalize(e: Expr, table: BasisTable, allow_new: bool = True) -> Tuple[RationalFunction, BasisTable]:
    """Express ``e`` as a rational function over ``table`` (extended if allowed)."""
    t = table.copy() if allow_new else table
    b = _Builder(t, allow_new=allow_new)
    r = b.walk(e)
    _finalize(t)
    return r.with_vars(t.varlist), t


def dbasis(table: BasisTable) -> List[Tuple[str, RationalFunction, RationalFunction]]:
    """Partial derivatives ``(u_i, du_i/dx, du_i/dy)`` in table order."""
    return [(n, table.dx[n], table.dy[n]) for n in table.unames]


def polynomialize(spec: OdeSpec, table: BasisTable) -> Tuple[MultiPoly, MultiPoly]:
    """Write ``rhs = M/N`` with M, N polynomial in the basis and coprime."""
    r, _ = rationalize(spec.rhs, table, allow_new=False)
    return r.num, r.den


def delta(table: BasisTable) -> MultiPoly:
    """Product of the table's pairwise-coprime denominator factors."""
    out = MultiPoly.const(1, table.varlist)
    for f in table.denominators:
        out = out * f
    return out


def trig_pairs(table: BasisTable) -> List[Tuple[str, str]]:
    sins = {}
    coss = {}
    for name, k in table.entries:
        key = (k.arg.num, k.arg.den)
        if k.kind == "sin":
            sins[key] = name
        elif k.kind == "cos":
            coss[key] = name
    return [(s, coss[k]) for k, s in sins.items() if k in coss]


def reduce_pythagorean(p: MultiPoly, pairs: Sequence[Tuple[str, str]]) -> MultiPoly:
    """Rewrite sin^2 as 1 - cos^2 for each (sin, cos) pair of the same argument."""
    for s, c in pairs:
        if p.degree_in(s) < 2:
            continue
        cc = MultiPoly.var(c, p.vars)
        one_minus = MultiPoly.const(1, p.vars) - cc * cc
        out = MultiPoly.zero(p.vars)
        sv = MultiPoly.var(s, p.vars)
        for k, coeff in p.coeffs_in(s).items():
            out = out + coeff * sv ** (k % 2) * one_minus ** (k // 2)
        p = out
    return p
