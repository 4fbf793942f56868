"""First integrals F(x, y) = C from a verified integrating factor.

F is built in two stages, F_x = R*M and F_y = -R*N: integrate one partial
derivative, then the part of the other one not yet accounted for (which must
be free of the first variable).  Antiderivatives come from an undetermined-
coefficient ansatz over the function basis

    q + sum_j a_j ln p_j

with the p_j the factors of the integrand's denominator and the a_j constant in
the integration variable.  Whatever resists becomes an unevaluated integral.
Correctness is judged only by :func:`verify_first_integral`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .basis import BasisTable, rationalize, reduce_pythagorean, total_derivative, trig_pairs
from .darboux import split_factors
from .errors import NO_DEADLINE, BasisError, Deadline, QuadratureError
from .intfact import IntegratingFactor
from .linalg import CoefficientMatcher, particular_solution
from .odeparse import (
    Add, Expr, Integral, Num, Sub, add, func, mul, print_expr, unsubstitute,
)
from .symkernel import (
    GaussianRational, MultiPoly, RationalFunction, exact_divide, poly_gcd, poly_lcm,
)

MAX_POOL = 400
MAX_TERM_SPLIT = 40


@dataclass
class FirstIntegral:
    expr: Expr
    constant_name: str = "C"

    def __str__(self) -> str:
        return f"{print_expr(self.expr)} = {self.constant_name}"


# ---------------------------------------------------------------------------
# Helpers on the basis
# ---------------------------------------------------------------------------


def _dep_vars(table: BasisTable, v: str) -> set:
    d = table.dx if v == table.indep else table.dy
    return {v} | {u for u in table.unames if not d[u].is_zero()}


def _free_content(p: MultiPoly, dep: set) -> MultiPoly:
    """Largest factor of ``p`` not involving the variables in ``dep``."""
    idx = [i for i, v in enumerate(p.vars) if v in dep]
    groups: Dict[tuple, Dict[tuple, object]] = {}
    for e, c in p.terms.items():
        key = tuple(e[i] for i in idx)
        rest = tuple(0 if i in idx else k for i, k in enumerate(e))
        groups.setdefault(key, {})[rest] = c
    g = None
    for terms in groups.values():
        q = MultiPoly._make(terms, p.vars)
        g = q if g is None else poly_gcd(g, q)
        if g.is_constant():
            return MultiPoly.const(1, p.vars)
    return g.monic()


def _multiplicities(p: MultiPoly) -> List[Tuple[MultiPoly, int]]:
    out = []
    for f in split_factors(p):
        e = 0
        q = p
        while True:
            r = exact_divide(q, f)
            if r is None:
                break
            q = r
            e += 1
        out.append((f, max(e, 1)))
    return out


def _is_special(p: MultiPoly, v: str, table: BasisTable) -> bool:
    d = total_derivative(p, v, table)
    return exact_divide(d.num, p) is not None


def _monomial_pool(vars_: Sequence[str], bounds: Dict[str, int], total: int) -> Optional[List[tuple]]:
    active = [i for i, v in enumerate(vars_) if bounds.get(v, 0) > 0]
    ranges = [range(min(bounds[vars_[i]], total) + 1) for i in active]
    out = []
    for combo in itertools.product(*ranges):
        if sum(combo) > total:
            continue
        e = [0] * len(vars_)
        for i, k in zip(active, combo):
            e[i] = k
        out.append(tuple(e))
        if len(out) > MAX_POOL:
            return None
    return out


# ---------------------------------------------------------------------------
# The ansatz integrator
# ---------------------------------------------------------------------------


@dataclass
class Antiderivative:
    q: RationalFunction
    logs: List[Tuple[RationalFunction, MultiPoly]]

    def to_expr(self, table: BasisTable) -> Expr:
        parts = []
        if not self.q.is_zero():
            parts.append(unsubstitute(self.q, table))
        for a, p in self.logs:
            parts.append(mul(unsubstitute(a, table), func("ln", unsubstitute(p, table))))
        return add(*parts) if parts else Num(0)


def _gr(re, im) -> GaussianRational:
    return GaussianRational(re, im)


def integrate_rf(h: RationalFunction, v: str, table: BasisTable) -> Optional[Antiderivative]:
    """Antiderivative of ``h`` in ``v`` of the ansatz form, or None."""
    vl = table.varlist
    h = h.with_vars(vl)
    if h.is_zero():
        return Antiderivative(RationalFunction.from_poly(MultiPoly.zero(vl)), [])
    dep = _dep_vars(table, v)
    A, B = h.num, h.den
    Bfree = _free_content(B, dep)
    facs = _multiplicities(exact_divide(B, Bfree)) if not exact_divide(B, Bfree).is_constant() else []
    qden = Bfree
    log_ps = []
    for p, e in facs:
        special = _is_special(p, v, table)
        k = e if special else e - 1
        if k:
            qden = qden * p ** k
        if not special:
            log_ps.append(p)
    rdens = [Bfree]
    lcs = MultiPoly.const(1, vl)
    for p in log_ps:
        top = p.coeffs_in(v)[p.degree_in(v)] if p.degree_in(v) > 0 else p
        lcs = lcs * _free_content(top, dep)
    if log_ps and not lcs.is_constant():
        rdens.append(Bfree * lcs)
    for rden in rdens:
        res = _solve_ansatz(A, B, v, table, dep, qden, log_ps, rden)
        if res is not None:
            return res
    return None


def _solve_ansatz(A, B, v, table, dep, qden, log_ps, rden) -> Optional[Antiderivative]:
    vl = table.varlist
    total = A.degree() + qden.degree() + 1
    bounds = {}
    for w in vl:
        extra = 1 if w in dep else 0
        bounds[w] = A.degree_in(w) + qden.degree_in(w) + extra
    pool = _monomial_pool(vl, bounds, total)
    if pool is None:
        return None
    lbounds = {w: A.degree_in(w) + B.degree_in(w) for w in vl if w not in dep}
    lpool = _monomial_pool(vl, lbounds, max(A.degree(), 0)) if log_ps else []
    if lpool is None:
        return None

    # derivatives of the dependent variables, as num/den
    dvars = {}
    for w in dep:
        d = table.derivative_of(w, v)
        if not d.is_zero():
            dvars[w] = d
    dq = total_derivative(qden, v, table)
    dps = [total_derivative(p, v, table) for p in log_ps]

    dens = [qden * qden * d.den for d in dvars.values()] + [dq.den * qden * qden, B]
    dens += [rden * d.den * p for d, p in zip(dps, log_ps)]
    W = MultiPoly.const(1, vl)
    for d in dens:
        W = poly_lcm(W, d)
    Fw = {w: exact_divide(W * d.num, d.den * qden) for w, d in dvars.items()}
    Fq = exact_divide(W * dq.num, dq.den * qden * qden)
    G = [exact_divide(W * d.num, rden * d.den * p) for d, p in zip(dps, log_ps)]

    b = CoefficientMatcher()
    col = 0
    for e in pool:
        m = MultiPoly._make({e: GaussianRational(1)}, vl)
        c = -(m * Fq)
        for w, F in Fw.items():
            k = e[vl.index(w)]
            if k:
                c = c + (MultiPoly._make({e: GaussianRational(1)}, vl)
                         .derivative(w)) * F
        b.add_column(col, c, "re")
        b.add_column(col + 1, c, "im")
        col += 2
    for Gj in G:
        for e in lpool:
            m = MultiPoly._make({e: GaussianRational(1)}, vl)
            c = m * Gj
            b.add_column(col, c, "re")
            b.add_column(col + 1, c, "im")
            col += 2
    b.add_constant(-exact_divide(A * W, B))
    rows, rhs = b.system()
    sol = particular_solution(rows, rhs, col)
    if sol is None:
        return None
    col = 0
    qn = MultiPoly.zero(vl)
    for e in pool:
        re, im = sol.get(col, 0), sol.get(col + 1, 0)
        if re or im:
            qn = qn + MultiPoly._make({e: _gr(re, im)}, vl)
        col += 2
    logs = []
    for p in log_ps:
        an = MultiPoly.zero(vl)
        for e in lpool:
            re, im = sol.get(col, 0), sol.get(col + 1, 0)
            if re or im:
                an = an + MultiPoly._make({e: _gr(re, im)}, vl)
            col += 2
        if not an.is_zero():
            logs.append((RationalFunction(an, rden), p))
    return Antiderivative(RationalFunction(qn, qden), logs)


def _special_kernels(table: BasisTable, v: str) -> List[int]:
    d = table.dx if v == table.indep else table.dy
    vl = table.varlist
    out = []
    for name, k in table.entries:
        if k.kind in ("exp", "rational_power") and not d[name].is_zero():
            out.append(vl.index(name))
    return out


def _integrate(h: RationalFunction, v: str, table: BasisTable,
               allow_int: Callable[[RationalFunction], bool]) -> Optional[List[Expr]]:
    """Antiderivative pieces; leftovers become integral nodes when ``allow_int`` agrees."""
    vl = table.varlist
    h = h.with_vars(vl)
    res = integrate_rf(h, v, table)
    if res is not None:
        return [res.to_expr(table)]
    # split the numerator by exponential class, then term by term
    idx = _special_kernels(table, v)
    groups: Dict[tuple, Dict[tuple, object]] = {}
    for e, c in h.num.terms.items():
        groups.setdefault(tuple(e[i] for i in idx), {})[e] = c
    pieces: List[RationalFunction] = []
    if len(groups) > 1:
        pieces = [RationalFunction(MultiPoly._make(t, vl), h.den) for t in groups.values()]
    elif 1 < len(h.num.terms) <= MAX_TERM_SPLIT:
        pieces = [RationalFunction(MultiPoly._make({e: c}, vl), h.den) for e, c in h.num.terms.items()]
    out: List[Expr] = []
    left = RationalFunction.from_poly(MultiPoly.zero(vl))
    for piece in pieces:
        r = integrate_rf(piece, v, table)
        if r is None and len(piece.num.terms) > 1 and len(piece.num.terms) <= MAX_TERM_SPLIT:
            for e, c in piece.num.terms.items():
                t = RationalFunction(MultiPoly._make({e: c}, vl), piece.den)
                rt = integrate_rf(t, v, table)
                if rt is None:
                    left = left + t
                else:
                    out.append(rt.to_expr(table))
        elif r is None:
            left = left + piece
        else:
            out.append(r.to_expr(table))
    if not pieces:
        left = h
    if not left.is_zero():
        if not allow_int(left):
            return None
        out.append(Integral(unsubstitute(left, table), v))
    return out


def _drop_constant(e: Expr) -> Expr:
    if isinstance(e, Add):
        args = [a for a in e.args if not isinstance(a, Num)]
        if len(args) == len(e.args):
            return e
        return add(*args) if args else Num(0)
    if isinstance(e, Sub) and isinstance(e.right, Num):
        return e.left
    return e


def integrate_term(t: Expr, var: str) -> Expr:
    """Antiderivative of ``t`` in ``var`` or an unevaluated integral node."""
    indep, dep = ("x", "y") if var in ("x", "y") else (var, "y")
    base = BasisTable(indep=indep, dep=dep)
    try:
        h, table = rationalize(t, base)
    except BasisError:
        return Integral(t, var)
    parts = _integrate(h, var, table, lambda r: True)
    if parts is None:
        return Integral(t, var)
    return add(*parts)


def first_integral(M: MultiPoly, N: MultiPoly, table: BasisTable, R: IntegratingFactor,
                   deadline: Deadline = NO_DEADLINE, constant_name: str = "C") -> FirstIntegral:
    """F with F_x = R*M and F_y = -R*N, checked by :func:`verify_first_integral`."""
    Rrf, t = R.as_rational(table)
    vl = t.varlist
    M, N = M.with_vars(vl), N.with_vars(vl)
    Fx = (Rrf * RationalFunction.from_poly(M)).with_vars(vl)
    Fy = (-(Rrf * RationalFunction.from_poly(N))).with_vars(vl)
    x, y = t.indep, t.dep
    for v1, h1, v2, h2 in ((y, Fy, x, Fx), (x, Fx, y, Fy)):
        deadline.check()

        def free_of_v2(r, t=t, v2=v2):
            return total_derivative(r, v2, t).is_zero()

        parts1 = _integrate(h1, v1, t, free_of_v2)
        if parts1 is None:
            continue
        G = add(*parts1)
        try:
            Grf, t2 = rationalize(G, t)
        except BasisError:
            continue
        rest = (h2.with_vars(t2.varlist) - total_derivative(Grf, v2, t2)).with_vars(t2.varlist)
        if not total_derivative(rest, v1, t2).is_zero():
            continue
        parts2 = _integrate(rest, v2, t2, lambda r: True)
        if parts2 is None:
            continue
        F = FirstIntegral(_drop_constant(add(G, *parts2)), constant_name)
        if verify_first_integral(F, M, N, table):
            return F
    raise QuadratureError("exactness violated: no first integral could be assembled")


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def verify_first_integral(F: Union[FirstIntegral, Expr], M: MultiPoly, N: MultiPoly,
                          table: BasisTable) -> bool:
    """N*F_x + M*F_y == 0 after rationalizing F over the (extended) basis."""
    e = F.expr if isinstance(F, FirstIntegral) else F
    try:
        Frf, t = rationalize(e, table)
    except BasisError:
        return False
    vl = t.varlist
    M, N = M.with_vars(vl), N.with_vars(vl)
    Fx = total_derivative(Frf, t.indep, t)
    Fy = total_derivative(Frf, t.dep, t)
    if Fx.is_zero() and Fy.is_zero():
        return False  # a constant is not a first integral
    r = RationalFunction.from_poly(N) * Fx + RationalFunction.from_poly(M) * Fy
    if r.is_zero():
        return True
    return reduce_pythagorean(r.num, trig_pairs(t)).is_zero()
