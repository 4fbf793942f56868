"""Integrating factors R = prod f_i^n_i * exp(P/Q) from Darboux pairs.

With D the cleared derivation and T the cleared divergence, R integrates the
ODE exactly when D[R]/R = -T.  For the product form this is linear in the n_i
and, once Q is fixed as a product of Darboux polynomials with cofactor sigma_Q,
also linear in the coefficients of P:

    Q * sum n_i g_i + D[P] - P * sigma_Q + Q * T = 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from gmpy2 import mpq

from .basis import BasisTable, rationalize, reduce_pythagorean, total_derivative, trig_pairs
from .darboux import DarbouxPair, monomials_upto, size_metric
from .dop import DOperator, apply
from .errors import NO_DEADLINE, Deadline
from .linalg import CoefficientMatcher, particular_solution
from .odeparse import Expr, func, mul, power, unsubstitute
from .symkernel import GaussianRational, MultiPoly, RationalFunction, exact_divide

MINIMAL_SUPPORT_LIMIT = 12


@dataclass
class ExpAnsatz:
    d_P: int = 2
    m_max: int = 1

    def __post_init__(self):
        if self.d_P < 0 or self.m_max < 0:
            raise ValueError("ansatz bounds must be nonnegative")


@dataclass
class IntegratingFactor:
    darboux_part: List[Tuple[MultiPoly, object, MultiPoly]]  # (f, n, g)
    exp_part: List[Tuple[MultiPoly, MultiPoly]] = field(default_factory=list)  # (P, Q)
    provenance: Dict[str, object] = field(default_factory=dict)

    @property
    def exponents(self) -> List[object]:
        return [n for _, n, _ in self.darboux_part]

    def nonzero_part(self) -> List[Tuple[MultiPoly, object, MultiPoly]]:
        return [(f, n, g) for f, n, g in self.darboux_part if n != 0]

    def log_derivative(self, op: DOperator) -> RationalFunction:
        """D[R]/R as a rational function."""
        vl = op.varlist
        out = RationalFunction.from_poly(MultiPoly.zero(vl))
        for f, n, g in self.darboux_part:
            if n:
                out = out + RationalFunction.from_poly(g.with_vars(vl).scale(n))
        for P, Q in self.exp_part:
            out = out + _exp_log_derivative(P.with_vars(vl), Q.with_vars(vl), op)
        return out

    def to_expr(self, table: BasisTable) -> Expr:
        factors = []
        for f, n, _ in self.darboux_part:
            if n:
                factors.append(power(unsubstitute(f, table), n))
        for P, Q in self.exp_part:
            factors.append(func("exp", unsubstitute(RationalFunction(P, Q), table)))
        if not factors:
            return power(unsubstitute(MultiPoly.const(1, table.varlist), table), 1)
        return mul(*factors)

    def as_rational(self, table: BasisTable) -> Tuple[RationalFunction, BasisTable]:
        """R over ``table``, extended by whatever kernels R needs."""
        return rationalize(self.to_expr(table), table)


def _exp_log_derivative(P: MultiPoly, Q: MultiPoly, op: DOperator) -> RationalFunction:
    sigma = exact_divide(apply(op, Q), Q)
    if sigma is None:
        raise ValueError("exponential denominator is not a Darboux polynomial")
    return RationalFunction(apply(op, P) - P * sigma, Q)


def _minimal_support(builder: CoefficientMatcher, nsel: int, ncols: int, always: Sequence[int] = (),
                     accept=None) -> Optional[Dict[int, mpq]]:
    """Solution using as few of the first ``nsel`` columns as possible."""
    rows, rhs = builder.system()
    full = particular_solution(rows, rhs, ncols)
    if full is None:
        return None
    if nsel > MINIMAL_SUPPORT_LIMIT:
        return full if accept is None or accept(full) else None
    for size in range(nsel + 1):
        for support in itertools.combinations(range(nsel), size):
            keep = set(support) | set(always)
            r, b = builder.system(keep)
            sol = particular_solution(r, b, ncols)
            if sol is not None and (accept is None or accept(sol)):
                return sol
    return None


# ---------------------------------------------------------------------------
# Searches
# ---------------------------------------------------------------------------


def _take(pairs: Sequence[DarbouxPair], numberf) -> List[DarbouxPair]:
    if numberf in (None, "all"):
        return list(pairs)
    numberf = int(numberf)
    if numberf < 1:
        raise ValueError("numberf must be positive or 'all'")
    return list(pairs[:numberf])


def solve_exponents(pairs: Sequence[DarbouxPair], T: MultiPoly, numberf=7) -> Optional[List[mpq]]:
    """Rational n with sum n_i g_i = -T, of minimal support among the first ``numberf`` pairs."""
    used = _take(pairs, numberf)
    b = CoefficientMatcher()
    for j, p in enumerate(used):
        b.add_column(j, p.g)
    b.add_constant(T)
    sol = _minimal_support(b, len(used), len(used))
    if sol is None:
        return None
    return [sol.get(j, mpq(0)) for j in range(len(used))]


def _product(polys: Sequence[MultiPoly], ks: Sequence[int], vl) -> MultiPoly:
    out = MultiPoly.const(1, vl)
    for p, k in zip(polys, ks):
        if k:
            out = out * p.with_vars(vl) ** k
    return out


def extended_search(pairs: Sequence[DarbouxPair], T: MultiPoly, op: DOperator,
                    ansatz: Optional[ExpAnsatz] = None, numberf=7,
                    deadline: Deadline = NO_DEADLINE) -> Optional[IntegratingFactor]:
    """Plain product first; otherwise the first Q (in size order) admitting a P."""
    ansatz = ansatz or ExpAnsatz()
    used = _take(pairs, numberf)
    vl = op.varlist
    T = T.with_vars(vl)
    prov = {"numberf": numberf, "offered": [p.f for p in used], "extended": True}
    n = solve_exponents(used, T, "all")
    if n is not None:
        return IntegratingFactor([(p.f, k, p.g) for p, k in zip(used, n)], [], prov)
    if ansatz.d_P == 0 and ansatz.m_max == 0:
        return None
    pool = monomials_upto(len(vl), ansatz.d_P)
    pool_polys = [MultiPoly.monomial(e, vl) for e in pool]
    d_pool = [apply(op, m) for m in pool_polys]
    qs = []
    for ks in itertools.product(range(ansatz.m_max + 1), repeat=len(used)):
        Q = _product([p.f for p in used], ks, vl)
        qs.append((size_metric(Q), ks, Q))
    qs.sort(key=lambda t: (t[0], t[1]))
    nu = len(used)
    for _, ks, Q in qs:
        deadline.check()
        sigma = MultiPoly.zero(vl)
        for p, k in zip(used, ks):
            if k:
                sigma = sigma + p.g.with_vars(vl).scale(k)
        b = CoefficientMatcher()
        for j, p in enumerate(used):
            b.add_column(j, Q * p.g.with_vars(vl))
        for a, (m, dm) in enumerate(zip(pool_polys, d_pool)):
            w = dm - m * sigma
            b.add_column(nu + 2 * a, w, "re")
            b.add_column(nu + 2 * a + 1, w, "im")
        b.add_constant(Q * T)
        ncols = nu + 2 * len(pool)
        p_cols = range(nu, ncols)

        def build_P(sol):
            P = MultiPoly.zero(vl)
            for a, m in enumerate(pool_polys):
                re = sol.get(nu + 2 * a, 0)
                im = sol.get(nu + 2 * a + 1, 0)
                if re or im:
                    P = P + m.scale(GaussianRational(re, im))
            return P

        def ok(sol):
            P = build_P(sol)
            if P.is_zero():
                return False
            r = RationalFunction(P, Q)
            return not r.is_constant()

        sol = _minimal_support(b, nu, ncols, always=p_cols, accept=ok)
        if sol is None:
            continue
        P = build_P(sol)
        r = RationalFunction(P, Q)
        nvec = [sol.get(j, mpq(0)) for j in range(nu)]
        R = IntegratingFactor([(p.f, k, p.g) for p, k in zip(used, nvec)], [(r.num, r.den)], prov)
        if verify(R, op, T):
            return R
    return None


def verify(R: IntegratingFactor, op: DOperator, T: MultiPoly) -> bool:
    """Exact check of D[R]/R + T == 0."""
    try:
        ld = R.log_derivative(op)
    except ValueError:
        return False
    return (ld + RationalFunction.from_poly(T.with_vars(op.varlist))).is_zero()


def find_integrating_factor(pairs: Sequence[DarbouxPair], T: MultiPoly, op: DOperator,
                            numberf=7, extended: bool = False, ansatz: Optional[ExpAnsatz] = None,
                            deadline: Deadline = NO_DEADLINE) -> Optional[IntegratingFactor]:
    """Plain search, or the exponential extension when ``extended`` is set."""
    if extended:
        R = extended_search(pairs, T, op, ansatz, numberf, deadline)
    else:
        used = _take(pairs, numberf)
        n = solve_exponents(used, T, "all")
        R = None
        if n is not None:
            R = IntegratingFactor([(p.f, k, p.g) for p, k in zip(used, n)], [],
                                  {"numberf": numberf, "offered": [p.f for p in used],
                                   "extended": False})
    if R is not None and not verify(R, op, T):
        raise AssertionError("integrating factor failed verification")
    return R


def same_up_to_constant(a: Union[Expr, IntegratingFactor], b: Union[Expr, IntegratingFactor],
                        table: BasisTable) -> bool:
    """True when a/b has zero total derivative in both variables."""
    ea = a.to_expr(table) if isinstance(a, IntegratingFactor) else a
    eb = b.to_expr(table) if isinstance(b, IntegratingFactor) else b
    ra, t = rationalize(ea, table)
    rb, t = rationalize(eb, t)
    ra = ra.with_vars(t.varlist)
    if rb.is_zero() or ra.is_zero():
        return ra.is_zero() and rb.is_zero()
    q = ra / rb
    return total_derivative(q, t.indep, t).is_zero() and total_derivative(q, t.dep, t).is_zero()


def is_integrating_factor(R: Expr, M: MultiPoly, N: MultiPoly, table: BasisTable) -> bool:
    """Exactness of R*M dx - R*N dy, i.e. d(R*N)/dx + d(R*M)/dy == 0."""
    r, t = rationalize(R, table)
    if r.is_zero():
        return False
    vl = t.varlist
    RM = r.with_vars(vl) * RationalFunction.from_poly(M.with_vars(vl))
    RN = r.with_vars(vl) * RationalFunction.from_poly(N.with_vars(vl))
    r = total_derivative(RN, t.indep, t) + total_derivative(RM, t.dep, t)
    return r.is_zero() or reduce_pythagorean(r.num, trig_pairs(t)).is_zero()
