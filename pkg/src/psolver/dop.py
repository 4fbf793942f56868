"""The denominator-cleared derivation along the ODE and its divergence term."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .basis import BasisTable, delta
from .errors import OperatorError
from .symkernel import MultiPoly, RationalFunction, exact_divide, partial_derivative, poly_gcd

MAX_CLEARING_RETRIES = 8


@dataclass(frozen=True)
class DOperator:
    coeff_x: MultiPoly
    coeff_y: MultiPoly
    coeff_u: Tuple[MultiPoly, ...]
    delta: MultiPoly
    table: BasisTable

    @property
    def varlist(self) -> Tuple[str, ...]:
        return self.table.varlist

    def coefficients(self) -> List[Tuple[str, MultiPoly]]:
        vl = self.varlist
        return [(vl[0], self.coeff_x), (vl[1], self.coeff_y)] + list(zip(vl[2:], self.coeff_u))

    def degree(self) -> int:
        return max(c.degree() for _, c in self.coefficients())

    def __call__(self, p: MultiPoly) -> MultiPoly:
        return apply(self, p)

    def __str__(self) -> str:
        parts = []
        for v, c in self.coefficients():
            if not c.is_zero():
                parts.append(f"({c})*d/d{v}")
        return " + ".join(parts) if parts else "0"


def _clear(r: RationalFunction, d: MultiPoly) -> MultiPoly:
    q = exact_divide(d * r.num, r.den)
    if q is None:
        raise ArithmeticError
    return q


def _cleared(M: MultiPoly, N: MultiPoly, table: BasisTable, d: MultiPoly):
    """Coefficients of d*[N*(dx + sum u_ix du_i) + M*(dy + sum u_iy du_i)]."""
    vl = table.varlist
    cu = []
    for name in table.unames:
        r = RationalFunction.from_poly(N) * table.dx[name] + RationalFunction.from_poly(M) * table.dy[name]
        cu.append(_clear(r.with_vars(vl), d).with_vars(vl))
    return cu


def _divergence_rf(M: MultiPoly, N: MultiPoly, table: BasisTable) -> RationalFunction:
    vl = table.varlist
    x, y = vl[0], vl[1]
    out = RationalFunction.from_poly(partial_derivative(N, x) + partial_derivative(M, y))
    for name in table.unames:
        out = out + RationalFunction.from_poly(partial_derivative(N, name)) * table.dx[name]
        out = out + RationalFunction.from_poly(partial_derivative(M, name)) * table.dy[name]
    return out.with_vars(vl)


def _delta_for(M: MultiPoly, N: MultiPoly, table: BasisTable) -> MultiPoly:
    d = delta(table)
    for _ in range(MAX_CLEARING_RETRIES):
        bad = None
        rfs = []
        for name in table.unames:
            rfs.append(RationalFunction.from_poly(N) * table.dx[name]
                       + RationalFunction.from_poly(M) * table.dy[name])
        rfs.append(_divergence_rf(M, N, table))
        for r in rfs:
            if exact_divide(d * r.num, r.den) is None:
                bad = r.den
                break
        if bad is None:
            return d
        # enlarge by the missing part of the offending denominator
        extra = exact_divide(bad, poly_gcd(d, bad))
        d = (d * extra).with_vars(table.varlist)
    raise OperatorError("could not clear derivative denominators")


def build_operator(M: MultiPoly, N: MultiPoly, table: BasisTable) -> DOperator:
    vl = table.varlist
    M, N = M.with_vars(vl), N.with_vars(vl)
    d = _delta_for(M, N, table)
    try:
        cu = _cleared(M, N, table, d)
    except ArithmeticError:
        raise OperatorError("derivative denominator does not divide the clearing product") from None
    return DOperator(coeff_x=d * N, coeff_y=d * M, coeff_u=tuple(cu), delta=d, table=table)


def apply(op: DOperator, p: MultiPoly) -> MultiPoly:
    """``sum_v coeff_v * dp/dv``."""
    vl = op.varlist
    extra = set(p.used_vars()) - set(vl)
    if extra:
        raise OperatorError(f"polynomial uses variables outside the operator: {sorted(extra)}")
    p = p.with_vars(vl)
    out = MultiPoly.zero(vl)
    for v, c in op.coefficients():
        if c.is_zero() or p.degree_in(v) <= 0:
            continue
        out = out + c * partial_derivative(p, v)
    return out


def divergence(M: MultiPoly, N: MultiPoly, table: BasisTable, op: DOperator = None) -> MultiPoly:
    """Cleared divergence T; the exponent equation reads ``sum n_i g_i = -T``."""
    vl = table.varlist
    M, N = M.with_vars(vl), N.with_vars(vl)
    d = op.delta if op is not None else _delta_for(M, N, table)
    r = _divergence_rf(M, N, table)
    q = exact_divide(d * r.num, r.den)
    if q is None:
        raise OperatorError("divergence is not polynomial after clearing")
    return q.with_vars(vl)
