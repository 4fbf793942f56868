"""Darboux (eigen-)polynomials of the cleared derivation.

A polynomial f is Darboux when D[f] = g*f for some polynomial cofactor g.  For
each candidate leading monomial L, f = L + (unknown combination of the smaller
monomials).  The top-degree part of f must be Darboux for the top-degree part
of D, which is a small system solved first.  With the top pinned, D[f] = g*f
is bilinear in the remaining coefficients of f and g and linear level by
level.  Symbolic division of D[f] by the monic f, asking the remainder to
vanish, is the fallback formulation; there the cofactor drops out as the
quotient."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .basis import BasisTable
from .dop import DOperator, apply, build_operator, divergence
from .errors import NO_DEADLINE, Deadline
from ._elim import Solution, _eval_poly, SolveStats, solve_system
from .symkernel import (
    ONE, ZERO, GaussianRational, MultiPoly, exact_divide, order_key, partial_derivative,
    poly_gcd, squarefree_split,
)

Exponent = Tuple[int, ...]


@dataclass(frozen=True)
class DarbouxPair:
    f: MultiPoly
    g: MultiPoly

    def check(self, op: DOperator) -> bool:
        return exact_divide(apply(op, self.f), self.f) == self.g


@dataclass
class DarbouxFamily:
    """Darboux polynomials ``L + sum coeff_a(params) m_a`` for every value of the params."""

    lead: Exponent
    coeffs: Dict[Exponent, MultiPoly]  # polynomials in the parameter names
    params: Tuple[str, ...]
    vars: Tuple[str, ...]

    def member(self, values: Dict[str, GaussianRational]) -> MultiPoly:
        terms = {self.lead: ONE}
        for e, c in self.coeffs.items():
            v = c.evaluate(values).constant_value()
            if v:
                terms[e] = v
        return MultiPoly(terms, self.vars)

    def contains(self, p: MultiPoly) -> bool:
        p = p.with_vars(self.vars).monic()
        if p.is_zero() or p.leading_term()[0] != self.lead:
            return False
        eqs = []
        for e in set(self.coeffs) | set(p.terms):
            if e == self.lead:
                continue
            c = self.coeffs.get(e)
            target = p.terms.get(e, GaussianRational(0))
            if c is None:
                if target:
                    return False
                continue
            eqs.append(c - target)
        sols, _ = solve_system(eqs, self.params, mode="all")
        return bool(sols)


@dataclass
class SearchConfig:
    max_degree: int = 1
    mode: str = "fast"
    guess: bool = False
    candidate_cap: int = 200
    depth_cap: int = 12

    def __post_init__(self):
        if self.max_degree < 1:
            raise ValueError("max_degree must be at least 1")
        if self.mode not in ("fast", "all"):
            raise ValueError("mode must be 'fast' or 'all'")


class EigenList(list):
    """Sorted Darboux pairs plus search diagnostics."""

    def __init__(self, pairs=(), truncated=False, families=(), stats=None):
        super().__init__(pairs)
        self.truncated = truncated
        self.families = list(families)
        self.stats = stats or SolveStats()

    def polys(self) -> List[MultiPoly]:
        return [p.f for p in self]

    def covers(self, f: MultiPoly) -> bool:
        """True if ``f`` is, up to a unit, a returned polynomial, a family member,
        or a product of returned polynomials."""
        f = f.monic()
        if any(p.f == f for p in self):
            return True
        if any(fam.contains(f) for fam in self.families):
            return True
        rest = f
        for p in sorted(self, key=lambda p: size_metric(p.f)):
            if p.f.is_constant():
                continue
            q = exact_divide(rest, p.f.with_vars(rest.vars))
            while q is not None:
                rest = q
                q = exact_divide(rest, p.f.with_vars(rest.vars))
        return rest.is_constant()


def size_metric(f: MultiPoly) -> tuple:
    digits = sum(c.digit_length() for c in f.terms.values())
    return (f.degree(), len(f.terms), digits, str(f))


def monomials_upto(nvars: int, degree: int) -> List[Exponent]:
    """All exponent tuples of total degree <= ``degree`` in ascending term order."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    out = sorted(set(out), key=order_key)
    return out


# ---------------------------------------------------------------------------
# Ansatz for one leading monomial
# ---------------------------------------------------------------------------


def _ansatz_system(op: DOperator, lead: Exponent, lower: List[Exponent], names=None):
    vl = op.varlist
    if names is None:
        names = tuple(f"c{i}" for i in range(len(lower)))
    one = MultiPoly.const(1, names)
    fcoef: Dict[Exponent, MultiPoly] = {lead: one}
    for e, n in zip(lower, names):
        fcoef[e] = MultiPoly.var(n, names)
    # D[f] with symbolic coefficients
    rem: Dict[Exponent, MultiPoly] = {}
    for e, c in fcoef.items():
        dm = apply(op, MultiPoly.monomial(e, vl))
        for t, k in dm.terms.items():
            add = c.scale(k)
            s = rem.get(t)
            rem[t] = add if s is None else s + add
    rem = {t: c for t, c in rem.items() if not c.is_zero()}
    f_rest = [(e, c) for e, c in fcoef.items() if e != lead]
    out: Dict[Exponent, MultiPoly] = {}
    while rem:
        t = max(rem, key=order_key)
        a = rem.pop(t)
        d = tuple(i - j for i, j in zip(t, lead))
        if min(d) < 0:
            out[t] = a
            continue
        for e, c in f_rest:
            s = tuple(i + j for i, j in zip(e, d))
            v = rem.get(s)
            sub = a * c
            v = -sub if v is None else v - sub
            if v.is_zero():
                rem.pop(s, None)
            else:
                rem[s] = v
    return names, list(out.values())


def _top_operator(op: DOperator) -> DOperator:
    """The part of D whose coefficients have the maximal total degree."""
    d = op.degree()

    def top(c: MultiPoly) -> MultiPoly:
        return MultiPoly({e: v for e, v in c.terms.items() if sum(e) == d}, c.vars)

    return DOperator(top(op.coeff_x), top(op.coeff_y), tuple(top(c) for c in op.coeff_u),
                     op.delta, op.table)


def _merge(stats: SolveStats, st: SolveStats) -> None:
    for k in ("branches", "stuck", "depth_hits", "dropped_roots"):
        setattr(stats, k, getattr(stats, k) + getattr(st, k))


def _bilinear(op: DOperator, top_op: DOperator, lead: Exponent, lower: List[Exponent],
              names: Tuple[str, ...], fixed: Dict[str, GaussianRational], cfg: SearchConfig,
              deadline: Deadline, stats: SolveStats,
              g_top: Optional[MultiPoly] = None) -> Optional[List[Solution]]:
    """Solve D[f] = g*f with unknown coefficients for f and for the cofactor g.

    When ``fixed`` pins the whole top-degree part of f, the top part of g is
    known too; the remaining unknowns enter bilinearly and every degree level is
    linear given the levels above, so pencils of Darboux polynomials come out as
    linear families.  ``g_top`` pins the top part of g when it is known without
    pinning f, as for a top operator h*(x d/dx + y d/dy).
    """
    vl = op.varlist
    terms = {lead: ONE}
    for e, n in zip(lower, names):
        if n in fixed and fixed[n]:
            terms[e] = fixed[n]
    f_known = MultiPoly(terms, vl)
    free_c = [(e, n) for e, n in zip(lower, names) if n not in fixed]
    dg = max(op.degree() - 1, 0)
    g_known = MultiPoly.zero(vl)
    if g_top is not None:
        g_known = g_top
        dg -= 1
    elif all(sum(e) < sum(lead) for e, _ in free_c):
        g_known = exact_divide(apply(top_op, f_known), f_known)
        if g_known is None:
            return None
        dg -= 1
    gmonos = monomials_upto(len(vl), dg) if dg >= 0 else []
    dnames = tuple(f"d{j}" for j in range(len(gmonos)))
    unknowns = tuple(n for _, n in free_c) + dnames
    acc: Dict[Exponent, MultiPoly] = {}

    def add(p: MultiPoly, coeff: MultiPoly) -> None:
        for t, k in p.terms.items():
            c = coeff.scale(k)
            acc[t] = c if t not in acc else acc[t] + c

    add(apply(op, f_known) - g_known * f_known, MultiPoly.const(1, unknowns))
    cmonos = [(MultiPoly.monomial(e, vl), MultiPoly.var(n, unknowns)) for e, n in free_c]
    for m, cv in cmonos:
        add(apply(op, m) - g_known * m, cv)
    for me, dn in zip(gmonos, dnames):
        gm = MultiPoly.monomial(me, vl)
        dv = MultiPoly.var(dn, unknowns)
        add(-(gm * f_known), dv)
        for m, cv in cmonos:
            add(gm * m, -(dv * cv))
    eqs = [c for c in acc.values() if not c.is_zero()]
    sols, st = solve_system(eqs, unknowns, mode=cfg.mode, depth_cap=cfg.depth_cap, deadline=deadline)
    _merge(stats, st)
    out = []
    for s in sols:
        values = dict(fixed)
        values.update({n: s.values[n] for _, n in free_c})
        family = None
        if s.free and s.family is not None:
            family = {n: MultiPoly.const(v, unknowns) for n, v in fixed.items()}
            family.update({n: s.family[n] for _, n in free_c})
        out.append(Solution(values=values, free=s.free, family=family))
    return out


def _family_cofactor(top_op: DOperator, lead: Exponent, top_lower: List[Exponent],
                     top_names: Tuple[str, ...], sol: Solution) -> Optional[MultiPoly]:
    """The cofactor shared by every member of a family of top parts, if it looks shared."""
    if sol.family is None:
        return None
    params = sol.free
    points = [{p: ZERO for p in params}]
    points += [{p: (ONE if p == q else ZERO) for p in params} for q in params]
    points.append({p: GaussianRational(j + 2) for j, p in enumerate(params)})
    vl = top_op.varlist
    shared = None
    for pt in points:
        terms = {lead: ONE}
        for e, n in zip(top_lower, top_names):
            v = _eval_poly(sol.family[n].with_vars(params), pt)
            if v:
                terms[e] = v
        f = MultiPoly(terms, vl)
        g = exact_divide(apply(top_op, f), f)
        if g is None or (shared is not None and g != shared):
            return None
        shared = g
    return shared


def _pattern_search(op: DOperator, lead: Exponent, lower: List[Exponent], cfg: SearchConfig,
                    deadline: Deadline, stats: SolveStats, top_op: Optional[DOperator] = None):
    names, eqs = _ansatz_system(op, lead, lower)
    k = sum(lead)
    top_idx = [i for i, e in enumerate(lower) if sum(e) == k]
    sols = []
    if top_op is not None and len(top_idx) < len(lower):
        # The degree-k part of f is Darboux for the top part of D.  Solving that
        # small system first leaves the lower coefficients to linear pivots.
        top_names = tuple(names[i] for i in top_idx)
        _, top_eqs = _ansatz_system(top_op, lead, [lower[i] for i in top_idx], top_names)
        tops, st = solve_system(top_eqs, top_names, mode=cfg.mode, depth_cap=cfg.depth_cap,
                                deadline=deadline)
        _merge(stats, st)
        g_top = None
        if any(t.free for t in tops):
            # a continuum of top parts: solve for everything at once
            if len(tops) == 1:
                g_top = _family_cofactor(top_op, lead, [lower[i] for i in top_idx], top_names, tops[0])
            tops = [None]
        for t in tops:
            fixed = {n: t.values[n] for n in top_names} if t is not None else {}
            part = _bilinear(op, top_op, lead, lower, names, fixed, cfg, deadline, stats, g_top)
            if part is None:
                part, st = solve_system(eqs, names, mode=cfg.mode, depth_cap=cfg.depth_cap,
                                        deadline=deadline)
                _merge(stats, st)
            sols.extend(part)
    else:
        sols, st = solve_system(eqs, names, mode=cfg.mode, depth_cap=cfg.depth_cap, deadline=deadline)
        _merge(stats, st)
    vl = op.varlist
    found = []
    families = []
    for s in sols:
        terms = {lead: ONE}
        for e, n in zip(lower, names):
            v = s.values.get(n)
            if v:
                terms[e] = v
        found.append(MultiPoly(terms, vl))
        if s.free and s.family is not None:
            params = tuple(s.free)
            coeffs = {}
            for e, n in zip(lower, names):
                c = s.family[n].with_vars(params) if n in s.family else None
                if c is not None and not c.is_zero():
                    coeffs[e] = c
            families.append(DarbouxFamily(lead=lead, coeffs=coeffs, params=params, vars=vl))
    return found, families


# ---------------------------------------------------------------------------
# Deduplication
# ---------------------------------------------------------------------------


def _is_product(f: MultiPoly, factors: Sequence[MultiPoly], depth: int = 0) -> bool:
    if depth > 8:
        return False
    for h in factors:
        if h.degree() >= f.degree():
            continue
        q = exact_divide(f, h)
        if q is None:
            continue
        if q.is_constant():
            return True
        qm = q.monic()
        if any(qm == h2 for h2 in factors) or _is_product(qm, factors, depth + 1):
            return True
    return False


def _collect(cands: Sequence[MultiPoly], op: DOperator) -> List[DarbouxPair]:
    pairs: List[DarbouxPair] = []
    seen = set()
    for f in sorted((c.monic() for c in cands), key=size_metric):
        if f.is_constant() or f in seen:
            continue
        seen.add(f)
        g = exact_divide(apply(op, f), f)
        if g is None:
            continue
        if _is_product(f, [p.f for p in pairs]):
            continue
        pairs.append(DarbouxPair(f, g))
    return pairs


# ---------------------------------------------------------------------------
# Guessing
# ---------------------------------------------------------------------------


def split_factors(p: MultiPoly) -> List[MultiPoly]:
    """Monomial content, then repeated factors exposed by gcd with partial derivatives."""
    if p.is_zero() or p.is_constant():
        return []
    vl = p.vars
    pieces = []
    for i, v in enumerate(vl):
        k = min(e[i] for e in p.terms)
        if k:
            pieces.append(MultiPoly.var(v, vl))
            p = exact_divide(p, MultiPoly.var(v, vl) ** k)
    if p.is_constant():
        return pieces
    rest = [p]
    for v in p.used_vars():
        g = poly_gcd(p, partial_derivative(p, v))
        if not g.is_constant():
            rest.append(g)
            rest.append(exact_divide(p, g))
    return squarefree_split(pieces + rest)


def guess_candidates(M: MultiPoly, N: MultiPoly, table: BasisTable, max_degree: int = 1,
                     op: Optional[DOperator] = None) -> List[MultiPoly]:
    """Seed polynomials, kept only if they pass the divisibility test."""
    vl = table.varlist
    M, N = M.with_vars(vl), N.with_vars(vl)
    if op is None:
        op = build_operator(M, N, table)
    T = divergence(M, N, table, op)
    seeds: List[MultiPoly] = []
    seeds += squarefree_split(split_factors(M) + split_factors(N) + split_factors(T))
    y = MultiPoly.var(table.dep, vl)
    for u in table.unames:
        uu = MultiPoly.var(u, vl)
        for k in range(1, max_degree + 1):
            for c in (1, -1):
                seeds.append(y ** k - uu.scale(c))
    seeds += split_factors(op.delta.with_vars(vl))
    out = []
    seen = set()
    for s in seeds:
        s = s.with_vars(vl).monic()
        if s.is_constant() or s in seen:
            continue
        seen.add(s)
        if exact_divide(apply(op, s), s) is not None:
            out.append(s)
    return out


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def eigenpol_search(op: DOperator, cfg: Optional[SearchConfig] = None,
                    deadline: Deadline = NO_DEADLINE, M: Optional[MultiPoly] = None,
                    N: Optional[MultiPoly] = None) -> EigenList:
    """Darboux pairs up to ``cfg.max_degree``, sorted by :func:`size_metric`."""
    cfg = cfg or SearchConfig()
    vl = op.varlist
    nv = len(vl)
    stats = SolveStats()
    cands: List[MultiPoly] = []
    families: List[DarbouxFamily] = []
    truncated = False
    allmono = monomials_upto(nv, cfg.max_degree)
    top_op = _top_operator(op)
    for k in range(1, cfg.max_degree + 1):
        found_k = []
        for idx, lead in enumerate(allmono):
            if sum(lead) != k:
                continue
            deadline.check()
            lower = allmono[:idx]
            found, fams = _pattern_search(op, lead, lower, cfg, deadline, stats, top_op)
            found_k.extend(found)
            families.extend(fams)
        if len(found_k) > cfg.candidate_cap:
            found_k = sorted(found_k, key=size_metric)[: cfg.candidate_cap]
            truncated = True
        cands.extend(found_k)
    if cfg.guess:
        if M is None or N is None:
            M, N = op.coeff_y, op.coeff_x
        cands.extend(guess_candidates(M, N, op.table, cfg.max_degree, op))
    pairs = _collect(cands, op)
    for p in pairs:
        assert exact_divide(apply(op, p.f), p.f) == p.g
    return EigenList(pairs, truncated=truncated, families=families, stats=stats)
