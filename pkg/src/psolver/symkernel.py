"""Exact arithmetic over the Gaussian rationals Q(i).

Scalars are :class:`GaussianRational`; polynomials are sparse
:class:`MultiPoly` objects mapping dense exponent tuples to coefficients over
an ordered variable list.  Terms are ordered graded-lexicographically with the
*last* variable of the list the most significant one, so for the pipeline's
variable list ``(x, y, u1, ..., um)`` we have ``x < y < u1 < ... < um``.

All values are treated as immutable once built.
"""

from __future__ import annotations

import heapq
from operator import add as _add, sub as _sub
from typing import Dict, Iterable, Iterator, Optional, Sequence, Tuple, Union

from gmpy2 import mpq

Exponent = Tuple[int, ...]
_MPQ0 = mpq(0)


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


class GaussianRational:
    """A number ``re + I*im`` with ``re`` and ``im`` rational."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            self.re, self.im = re.re, re.im + mpq(im)
            return
        self.re = mpq(re)
        self.im = mpq(im)

    @staticmethod
    def _raw(re, im) -> "GaussianRational":
        g = object.__new__(GaussianRational)
        g.re = re
        g.im = im
        return g

    # the four integer fields of the data model
    @property
    def re_num(self):
        return self.re.numerator

    @property
    def re_den(self):
        return self.re.denominator

    @property
    def im_num(self):
        return self.im.numerator

    @property
    def im_den(self):
        return self.im.denominator

    def is_real(self) -> bool:
        return self.im == 0

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._raw(self.re, -self.im)

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, type(mpq(0)))):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __neg__(self) -> "GaussianRational":
        return GaussianRational._raw(-self.re, -self.im)

    def __add__(self, other) -> "GaussianRational":
        o = _as_gr(other)
        if o is None:
            return NotImplemented
        return GaussianRational._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other) -> "GaussianRational":
        o = _as_gr(other)
        if o is None:
            return NotImplemented
        return GaussianRational._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other) -> "GaussianRational":
        return (-self) + other

    def __mul__(self, other) -> "GaussianRational":
        o = _as_gr(other)
        if o is None:
            return NotImplemented
        if self.im == 0 and o.im == 0:
            return GaussianRational._raw(self.re * o.re, self.im)
        return GaussianRational._raw(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        if self.im == 0:
            if self.re == 0:
                raise ZeroDivisionError("division by zero in Q(i)")
            return GaussianRational._raw(1 / self.re, self.im)
        n = self.re * self.re + self.im * self.im
        return GaussianRational._raw(self.re / n, -self.im / n)

    def __truediv__(self, other) -> "GaussianRational":
        o = _as_gr(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other) -> "GaussianRational":
        return _as_gr(other) * self.inverse()

    def __pow__(self, k: int) -> "GaussianRational":
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __repr__(self) -> str:
        return f"GaussianRational({self})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return "I" if self.im == 1 else ("-I" if self.im == -1 else f"{self.im}*I")
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        im = "I" if mag == 1 else f"{mag}*I"
        return f"{self.re} {sign} {im}"

    def digit_length(self) -> int:
        """Total decimal digits of all numerators and denominators."""
        parts = [self.re] if self.im == 0 else [self.re, self.im]
        return sum(len(str(abs(p.numerator))) + len(str(p.denominator)) for p in parts)


_MPQ = type(mpq(0))


def _as_gr(v) -> Optional[GaussianRational]:
    if isinstance(v, GaussianRational):
        return v
    if isinstance(v, (int, _MPQ)):
        return GaussianRational._raw(mpq(v), mpq(0))
    try:
        from fractions import Fraction

        if isinstance(v, Fraction):
            return GaussianRational._raw(mpq(v.numerator, v.denominator), mpq(0))
    except ImportError:  # pragma: no cover
        pass
    return None


def gr(v=0, im=0) -> GaussianRational:
    """Coerce ``v`` (int, mpq, Fraction, str ``"p/q"`` or GaussianRational)."""
    if isinstance(v, str):
        return GaussianRational(mpq(v), im)
    if im == 0:
        g = _as_gr(v)
        if g is None:
            raise TypeError(f"cannot coerce {v!r} to a Gaussian rational")
        return g
    return GaussianRational(v, im)


ZERO = GaussianRational._raw(mpq(0), mpq(0))
ONE = GaussianRational._raw(mpq(1), mpq(0))
I_UNIT = GaussianRational._raw(mpq(0), mpq(1))

Scalar = Union[int, GaussianRational]


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


def order_key(e: Exponent) -> tuple:
    """Graded-lex key; later variables are more significant."""
    return (sum(e), e[::-1])


def _heap_key(e: Exponent) -> tuple:
    # heapq is a min-heap: negate the order key, carry the exponent along
    return (-sum(e), tuple(-i for i in reversed(e)), e)


def _add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple([i + j for i, j in zip(a, b)])


class MultiPoly:
    """Sparse multivariate polynomial over Q(i)."""

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, terms: Optional[Dict[Exponent, GaussianRational]] = None,
                 vars: Sequence[str] = ()):
        self.vars = tuple(vars)
        n = len(self.vars)
        clean = {}
        if terms:
            for e, c in terms.items():
                c = gr(c)
                if c:
                    if len(e) != n:
                        raise ValueError(f"exponent {e} does not match varlist {self.vars}")
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @staticmethod
    def _make(terms: Dict[Exponent, GaussianRational], vars: Tuple[str, ...]) -> "MultiPoly":
        # trusted constructor: terms already clean, dense and keyed correctly
        p = object.__new__(MultiPoly)
        p.vars = vars
        p.terms = terms
        p._hash = None
        return p

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, vars: Sequence[str] = ()) -> "MultiPoly":
        return cls._make({}, tuple(vars))

    @classmethod
    def const(cls, c, vars: Sequence[str] = ()) -> "MultiPoly":
        vars = tuple(vars)
        c = gr(c)
        return cls._make({(0,) * len(vars): c} if c else {}, vars)

    @classmethod
    def var(cls, name: str, vars: Sequence[str]) -> "MultiPoly":
        vars = tuple(vars)
        if name not in vars:
            raise KeyError(f"unknown variable {name!r}")
        e = [0] * len(vars)
        e[vars.index(name)] = 1
        return cls._make({tuple(e): ONE}, vars)

    @classmethod
    def monomial(cls, exp: Exponent, vars: Sequence[str], coeff=1) -> "MultiPoly":
        return cls({tuple(exp): coeff}, vars)

    @classmethod
    def from_string(cls, text: str, vars: Sequence[str] = ()) -> "MultiPoly":
        from .odeparse import expr_to_poly, parse_expr

        return expr_to_poly(parse_expr(text), vars)

    # -- variable lists -----------------------------------------------------
    def with_vars(self, vars: Sequence[str]) -> "MultiPoly":
        """Re-express over ``vars``; every used variable must be present."""
        vars = tuple(vars)
        if vars == self.vars:
            return self
        idx = []
        for i, v in enumerate(self.vars):
            if v in vars:
                idx.append(vars.index(v))
            else:
                idx.append(None)
        n = len(vars)
        out = {}
        for e, c in self.terms.items():
            ne = [0] * n
            for i, k in enumerate(e):
                if k:
                    j = idx[i]
                    if j is None:
                        raise ValueError(f"variable {self.vars[i]!r} missing from {vars}")
                    ne[j] = k
            out[tuple(ne)] = c
        return MultiPoly._make(out, vars)

    def used_vars(self) -> Tuple[str, ...]:
        used = [False] * len(self.vars)
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used[i] = True
        return tuple(v for v, u in zip(self.vars, used) if u)

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            return other
        return MultiPoly.const(other, self.vars)

    def _align(self, other) -> Tuple["MultiPoly", "MultiPoly"]:
        other = self._coerce(other)
        if other.vars == self.vars:
            return self, other
        merged = self.vars + tuple(v for v in other.vars if v not in self.vars)
        return self.with_vars(merged), other.with_vars(merged)

    # -- queries ------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self) -> GaussianRational:
        return self.terms.get((0,) * len(self.vars), ZERO)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree_in(self, name: str) -> int:
        if name not in self.vars:
            return 0 if self.terms else -1
        i = self.vars.index(name)
        if not self.terms:
            return -1
        return max(e[i] for e in self.terms)

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda t: order_key(t[0]), reverse=True)

    def leading_term(self) -> Tuple[Exponent, GaussianRational]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        e = max(self.terms, key=order_key)
        return e, self.terms[e]

    def lc(self) -> GaussianRational:
        return self.leading_term()[1]

    def is_real(self) -> bool:
        return all(c.im == 0 for c in self.terms.values())

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self) -> "MultiPoly":
        return MultiPoly._make({e: -c for e, c in self.terms.items()}, self.vars)

    def __add__(self, other) -> "MultiPoly":
        a, b = self._align(other)
        if not b.terms:
            return a
        out = dict(a.terms)
        for e, c in b.terms.items():
            s = out.get(e)
            if s is None:
                out[e] = c
            else:
                s = s + c
                if s:
                    out[e] = s
                else:
                    del out[e]
        return MultiPoly._make(out, a.vars)

    __radd__ = __add__

    def __sub__(self, other) -> "MultiPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        a, b = self._align(other)
        if not a.terms or not b.terms:
            return MultiPoly._make({}, a.vars)
        if len(a.terms) < len(b.terms):
            a, b = b, a
        bt = [(e, c.re, c.im) for e, c in b.terms.items()]
        real = all(not c.im for c in a.terms.values()) and all(not i for _, _, i in bt)
        if real:
            acc: Dict[Exponent, object] = {}
            for e1, c1 in a.terms.items():
                r1 = c1.re
                for e2, r2, _ in bt:
                    e = tuple(map(_add, e1, e2))
                    s = acc.get(e)
                    acc[e] = r1 * r2 if s is None else s + r1 * r2
            zero = _MPQ0
            return MultiPoly._make({e: GaussianRational._raw(v, zero) for e, v in acc.items() if v},
                                   a.vars)
        are: Dict[Exponent, object] = {}
        aim: Dict[Exponent, object] = {}
        for e1, c1 in a.terms.items():
            r1, i1 = c1.re, c1.im
            for e2, r2, i2 in bt:
                e = tuple(map(_add, e1, e2))
                re = r1 * r2 - i1 * i2
                im = r1 * i2 + i1 * r2
                s = are.get(e)
                if s is None:
                    are[e] = re
                    aim[e] = im
                else:
                    are[e] = s + re
                    aim[e] = aim[e] + im
        out = {}
        for e, re in are.items():
            im = aim[e]
            if re or im:
                out[e] = GaussianRational._raw(re, im)
        return MultiPoly._make(out, a.vars)

    def __rmul__(self, other) -> "MultiPoly":
        return self.scale(other)

    def scale(self, c) -> "MultiPoly":
        c = gr(c)
        if not c:
            return MultiPoly._make({}, self.vars)
        if c == ONE:
            return self
        return MultiPoly._make({e: v * c for e, v in self.terms.items()}, self.vars)

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = MultiPoly.const(1, self.vars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __truediv__(self, c) -> "MultiPoly":
        if isinstance(c, MultiPoly):
            q = exact_divide(self, c)
            if q is None:
                raise ArithmeticError("polynomial division is not exact")
            return q
        return self.scale(gr(c).inverse())

    def monic(self) -> "MultiPoly":
        """Normalize so the leading coefficient is 1 (zero stays zero)."""
        if not self.terms:
            return self
        return self.scale(self.lc().inverse())

    def conjugate(self) -> "MultiPoly":
        return MultiPoly._make({e: c.conjugate() for e, c in self.terms.items()}, self.vars)

    def derivative(self, name: str) -> "MultiPoly":
        return partial_derivative(self, name)

    def subs(self, name: str, value) -> "MultiPoly":
        """Substitute a polynomial (or scalar) for variable ``name``."""
        if name not in self.vars:
            return self
        value = self._coerce(value)
        p, value = self._align(value)
        i = p.vars.index(name)
        by_power: Dict[int, Dict[Exponent, GaussianRational]] = {}
        for e, c in p.terms.items():
            k = e[i]
            rest = e[:i] + (0,) + e[i + 1:]
            by_power.setdefault(k, {})[rest] = c
        out = MultiPoly._make({}, p.vars)
        powers = {0: MultiPoly.const(1, p.vars)}
        for k in sorted(by_power):
            if k not in powers:
                powers[k] = value ** k
            out = out + MultiPoly._make(by_power[k], p.vars) * powers[k]
        return out

    def coeffs_in(self, name: str) -> Dict[int, "MultiPoly"]:
        """View as a univariate polynomial in ``name``: power -> coefficient."""
        i = self.vars.index(name)
        out: Dict[int, Dict[Exponent, GaussianRational]] = {}
        for e, c in self.terms.items():
            out.setdefault(e[i], {})[e[:i] + (0,) + e[i + 1:]] = c
        return {k: MultiPoly._make(v, self.vars) for k, v in out.items()}

    def evaluate(self, values: Dict[str, GaussianRational]) -> "MultiPoly":
        """Substitute scalars for some variables."""
        p = self
        for k, v in values.items():
            p = p.subs(k, v)
        return p

    # -- comparison / display ------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            other_c = _as_gr(other)
            if other_c is None:
                return NotImplemented
            return self.is_constant() and self.constant_value() == other_c
        if self.vars == other.vars:
            return self.terms == other.terms
        a, b = self._align(other)
        return a.terms == b.terms

    def __hash__(self) -> int:
        if self._hash is None:
            used = self.used_vars()
            p = self.with_vars(used)
            self._hash = hash((used, frozenset(p.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"MultiPoly({str(self)!r})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(self.vars, e) if k
            )
            parts.append(_term_str(c, mono))
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __iter__(self) -> Iterator[Tuple[Exponent, GaussianRational]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)


def _term_str(c: GaussianRational, mono: str) -> str:
    if not mono:
        s = str(c)
        return f"({s})" if (c.re != 0 and c.im != 0) else s
    if c == ONE:
        return mono
    if c == -ONE:
        return "-" + mono
    if c.im == 0:
        return f"{c.re}*{mono}"
    if c.re == 0:
        if c.im == 1:
            return f"I*{mono}"
        if c.im == -1:
            return f"-I*{mono}"
        return f"{c.im}*I*{mono}"
    return f"({c})*{mono}"


def poly_arith(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    """Add, subtract or multiply two polynomials (``op`` in add/sub/mul)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown polynomial operation {op!r}")


def partial_derivative(p: MultiPoly, name: str) -> MultiPoly:
    if name not in p.vars:
        raise KeyError(f"unknown variable {name!r}")
    i = p.vars.index(name)
    out = {}
    for e, c in p.terms.items():
        k = e[i]
        if k:
            out[e[:i] + (k - 1,) + e[i + 1:]] = c * k
    return MultiPoly._make(out, p.vars)


def exact_divide(p: MultiPoly, f: MultiPoly) -> Optional[MultiPoly]:
    """Return ``q`` with ``p == q*f`` exactly, or None when ``f`` does not divide ``p``."""
    if f.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    p, f = p._align(f)
    if p.is_zero():
        return p
    fe, fc = f.leading_term()
    finv = fc.inverse()
    if len(f.terms) == 1:
        out = {}
        for e, c in p.terms.items():
            d = tuple([i - j for i, j in zip(e, fe)])
            if min(d) < 0:
                return None
            out[d] = c * finv
        return MultiPoly._make(out, p.vars)
    rem = dict(p.terms)
    quot = {}
    f_rest = [(e, c) for e, c in f.terms.items() if e != fe]
    # max-heap of remainder exponents; stale entries are skipped on pop
    heap = [_heap_key(e) for e in rem]
    heapq.heapify(heap)
    while rem:
        while True:
            k = heapq.heappop(heap)
            re_ = k[2]
            if re_ in rem:
                break
        rc = rem.pop(re_)
        d = tuple(map(_sub, re_, fe))
        if min(d) < 0:
            return None
        qc = rc * finv
        quot[d] = qc
        for e, c in f_rest:
            t = tuple(map(_add, e, d))
            s = rem.get(t)
            if s is None:
                rem[t] = -(qc * c)
                heapq.heappush(heap, _heap_key(t))
            else:
                v = s - qc * c
                if v:
                    rem[t] = v
                else:
                    del rem[t]
    return MultiPoly._make(quot, p.vars)


# -- gcd -------------------------------------------------------------------


def _one(vars) -> MultiPoly:
    return MultiPoly.const(1, vars)


def _zero(vars) -> MultiPoly:
    return MultiPoly.zero(vars)


def _content(p: MultiPoly, name: str) -> MultiPoly:
    g = None
    for c in p.coeffs_in(name).values():
        g = c if g is None else _gcd(g, c)
        if g.is_constant():
            return _one(p.vars)
    return g.monic() if g is not None else p


def _prem(a: MultiPoly, b: MultiPoly, name: str) -> MultiPoly:
    db = b.degree_in(name)
    cb = b.coeffs_in(name)
    lcb = cb[db]
    x = MultiPoly.var(name, a.vars)
    r = a
    while not r.is_zero():
        dr = r.degree_in(name)
        if dr < db:
            break
        lcr = r.coeffs_in(name)[dr]
        r = lcb * r - lcr * (x ** (dr - db)) * b
    return r


def _gcd(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    if a.is_constant() or b.is_constant():
        return _one(a.vars)
    va, vb = set(a.used_vars()), set(b.used_vars())
    for v in sorted(va - vb, key=a.vars.index):
        a = _content(a, v)
        if a.is_constant():
            return _one(a.vars)
    for v in sorted(vb - va, key=b.vars.index):
        b = _content(b, v)
        if b.is_constant():
            return _one(b.vars)
    common = set(a.used_vars()) & set(b.used_vars())
    if not common:
        return _one(a.vars)
    v = max(common, key=a.vars.index)
    ca, cb = _content(a, v), _content(b, v)
    c = _gcd(ca, cb)
    pa = exact_divide(a, ca)
    pb = exact_divide(b, cb)
    if pa.degree_in(v) < pb.degree_in(v):
        pa, pb = pb, pa
    while True:
        r = _prem(pa, pb, v)
        if r.is_zero():
            break
        if r.degree_in(v) == 0:
            return c
        pa, pb = pb, exact_divide(r, _content(r, v)).monic()
    pb = exact_divide(pb, _content(pb, v))
    return (c * pb).monic()


def poly_gcd(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    """Normalized (monic) gcd; ``gcd(a, 0)`` is ``a`` made monic."""
    a, b = a._align(b)
    if a.is_zero() and b.is_zero():
        raise ValueError("gcd(0, 0) is undefined")
    return _gcd(a, b)


def poly_lcm(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    g = poly_gcd(a, b)
    return (exact_divide(a, g) * b).monic()


def resultant(a: MultiPoly, b: MultiPoly, name: str) -> MultiPoly:
    """Sylvester resultant of ``a`` and ``b`` with respect to ``name``.

    Computed as a fraction-free (Bareiss) determinant, so every intermediate
    division is exact.
    """
    a, b = a._align(b)
    m, n = a.degree_in(name), b.degree_in(name)
    if a.is_zero() or b.is_zero():
        return _zero(a.vars)
    if m == 0 and n == 0:
        return _one(a.vars)
    if m == 0:
        return a ** n
    if n == 0:
        return b ** m
    ca, cb = a.coeffs_in(name), b.coeffs_in(name)
    z = _zero(a.vars)
    size = m + n
    mat = []
    for i in range(n):
        mat.append([ca.get(m - (j - i), z) if 0 <= j - i <= m else z for j in range(size)])
    for i in range(m):
        mat.append([cb.get(n - (j - i), z) if 0 <= j - i <= n else z for j in range(size)])
    sign = 1
    prev = _one(a.vars)
    for k in range(size - 1):
        if mat[k][k].is_zero():
            for i in range(k + 1, size):
                if not mat[i][k].is_zero():
                    mat[k], mat[i] = mat[i], mat[k]
                    sign = -sign
                    break
            else:
                return z
        piv = mat[k][k]
        for i in range(k + 1, size):
            lik = mat[i][k]
            for j in range(k + 1, size):
                num = mat[i][j] * piv - lik * mat[k][j]
                q = exact_divide(num, prev)
                if q is None:
                    raise ArithmeticError("Bareiss step not exact")
                mat[i][j] = q
            mat[i][k] = z
        prev = piv
    r = mat[size - 1][size - 1]
    return r if sign > 0 else -r


def squarefree_split(polys: Iterable[MultiPoly]) -> list:
    """Split polynomials into pairwise-coprime monic non-constant factors."""
    out: list = []
    for p in polys:
        if p.is_zero() or p.is_constant():
            continue
        pending = [p.monic()]
        while pending:
            q = pending.pop()
            if q.is_constant():
                continue
            for i, f in enumerate(out):
                g = poly_gcd(q, f)
                if not g.is_constant():
                    out.pop(i)
                    pending.extend([g, exact_divide(f, g), exact_divide(q, g)])
                    break
            else:
                out.append(q.monic())
    return out


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


class RationalFunction:
    """``num/den`` with gcd(num, den) a unit and ``den`` monic."""

    __slots__ = ("num", "den")

    def __init__(self, num: MultiPoly, den: Optional[MultiPoly] = None, reduce: bool = True):
        if den is None:
            den = MultiPoly.const(1, num.vars)
        num, den = num._align(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero():
            self.num, self.den = num, MultiPoly.const(1, num.vars)
            return
        if reduce and not den.is_constant():
            g = poly_gcd(num, den)
            if not g.is_constant():
                num = exact_divide(num, g)
                den = exact_divide(den, g)
        lc = den.lc()
        if lc != ONE:
            inv = lc.inverse()
            num, den = num.scale(inv), den.scale(inv)
        self.num, self.den = num, den

    @property
    def vars(self) -> Tuple[str, ...]:
        return self.num.vars

    @classmethod
    def from_poly(cls, p: MultiPoly) -> "RationalFunction":
        return cls(p, MultiPoly.const(1, p.vars), reduce=False)

    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, MultiPoly):
            return RationalFunction.from_poly(other)
        return RationalFunction.from_poly(MultiPoly.const(other, self.vars))

    def with_vars(self, vars) -> "RationalFunction":
        return RationalFunction(self.num.with_vars(vars), self.den.with_vars(vars), reduce=False)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den, reduce=False)

    def __add__(self, other) -> "RationalFunction":
        o = self._coerce(other)
        if o.is_zero():
            return self
        if self.is_zero():
            return o
        if self.den == o.den:
            return RationalFunction(self.num + o.num, self.den)
        g = poly_gcd(self.den, o.den)
        a = exact_divide(self.den, g)
        b = exact_divide(o.den, g)
        return RationalFunction(self.num * b + o.num * a, a * o.den)

    __radd__ = __add__

    def __sub__(self, other) -> "RationalFunction":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RationalFunction":
        return (-self) + other

    def __mul__(self, other) -> "RationalFunction":
        o = self._coerce(other)
        if self.is_zero() or o.is_zero():
            return RationalFunction(MultiPoly.zero(self.vars))
        if self.den.is_constant() and o.den.is_constant():
            return RationalFunction(self.num * o.num, self.den * o.den, reduce=False)
        g1 = poly_gcd(self.num, o.den)
        g2 = poly_gcd(o.num, self.den)
        n = exact_divide(self.num, g1) * exact_divide(o.num, g2)
        d = exact_divide(self.den, g2) * exact_divide(o.den, g1)
        return RationalFunction(n, d, reduce=False)

    __rmul__ = __mul__

    def inverse(self) -> "RationalFunction":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        return RationalFunction(self.den, self.num, reduce=False)

    def __truediv__(self, other) -> "RationalFunction":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "RationalFunction":
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "RationalFunction":
        if k < 0:
            return self.inverse() ** (-k)
        return RationalFunction(self.num ** k, self.den ** k, reduce=False)

    def derivative(self, name: str) -> "RationalFunction":
        """Formal partial derivative with respect to one variable."""
        if name not in self.vars:
            return RationalFunction(MultiPoly.zero(self.vars))
        dn = partial_derivative(self.num, name)
        dd = partial_derivative(self.den, name)
        if dd.is_zero():
            return RationalFunction(dn, self.den)
        return RationalFunction(dn * self.den - self.num * dd, self.den * self.den)

    def __eq__(self, other) -> bool:
        o = self._coerce(other) if not isinstance(other, RationalFunction) else other
        return (self.num * o.den - o.num * self.den).is_zero()

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"RationalFunction({str(self)!r})"

    def __str__(self) -> str:
        if self.den == 1:
            return str(self.num)
        return f"({self.num})/({self.den})"
