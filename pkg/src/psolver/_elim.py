"""Case-splitting elimination for small polynomial systems over Q(i).

Only the solutions with coordinates in Q(i) are reported.  Positive-dimensional
components come back as a representative point plus a parametrization in the
unknowns left free.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
from gmpy2 import mpq

from .errors import NO_DEADLINE, Deadline
from .symkernel import (
    ZERO, GaussianRational, MultiPoly, RationalFunction, exact_divide, poly_gcd, resultant,
)

FREE_VALUE_TRIES = (0, 1, -1, 2, 3)
RESULTANT_POOL = 8
RESULTANT_MAX_SIZE = 10
RESULTANT_TRIES = 4


@dataclass
class Solution:
    values: Dict[str, GaussianRational]
    free: Tuple[str, ...] = ()
    # unknown -> polynomial in the free unknowns (None when not polynomial)
    family: Optional[Dict[str, MultiPoly]] = None


@dataclass
class SolveStats:
    branches: int = 0
    stuck: int = 0
    depth_hits: int = 0
    dropped_roots: int = 0


# ---------------------------------------------------------------------------
# Univariate roots
# ---------------------------------------------------------------------------


def _to_mpc(c: GaussianRational):
    return mpmath.mpc(mpmath.mpf(int(c.re.numerator)) / int(c.re.denominator),
                      mpmath.mpf(int(c.im.numerator)) / int(c.im.denominator))


def _rationalize(v) -> mpq:
    fr = Fraction(mpmath.nstr(v, 45, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)).limit_denominator(10 ** 18)
    return mpq(fr.numerator, fr.denominator)


def _eval_univariate(coeffs: Sequence[GaussianRational], z: GaussianRational) -> GaussianRational:
    out = ZERO
    for c in coeffs:  # highest degree first
        out = out * z + c
    return out


def gaussian_roots(p: MultiPoly, v: str, stats: Optional[SolveStats] = None) -> List[GaussianRational]:
    """Distinct roots of a univariate polynomial lying in Q(i), verified exactly."""
    p = p.with_vars((v,)) if set(p.used_vars()) <= {v} else None
    if p is None:
        raise ValueError("polynomial is not univariate")
    if p.is_zero() or p.is_constant():
        return []
    roots: List[GaussianRational] = []
    low = min(e[0] for e in p.terms)
    if low:
        roots.append(ZERO)
        p = MultiPoly._make({(e[0] - low,): c for e, c in p.terms.items()}, p.vars)
    if p.degree() >= 2:
        g = poly_gcd(p, p.derivative(v))
        if not g.is_constant():
            p = exact_divide(p, g)
    p = p.monic()
    n = p.degree()
    if n <= 0:
        return roots
    coeffs = [p.terms.get((k,), ZERO) for k in range(n, -1, -1)]
    if n == 1:
        return roots + [-coeffs[1]]
    candidates = []
    with mpmath.workdps(60):
        try:
            approx = mpmath.polyroots([_to_mpc(c) for c in coeffs], maxsteps=400, extraprec=200)
        except mpmath.libmp.NoConvergence:
            try:
                approx = mpmath.polyroots([_to_mpc(c) for c in coeffs], maxsteps=4000, extraprec=800)
            except mpmath.libmp.NoConvergence:
                approx = []
                if stats is not None:
                    stats.dropped_roots += n
        for z in approx:
            z = mpmath.mpc(z)
            candidates.append(GaussianRational(_rationalize(z.real), _rationalize(z.imag)))
    for z in candidates:
        if z in roots:
            continue
        if not _eval_univariate(coeffs, z):
            roots.append(z)
        elif stats is not None:
            stats.dropped_roots += 1  # not in Q(i)
    return roots


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------


def _normalize(eqs: List[MultiPoly]) -> Optional[List[MultiPoly]]:
    out = []
    seen = set()
    for e in eqs:
        if e.is_zero():
            continue
        if e.is_constant():
            return None
        m = e.monic()
        if m not in seen:
            seen.add(m)
            out.append(m)
    out.sort(key=lambda q: (len(q.terms), q.degree()))
    return out


def _linear_pivot(eqs: List[MultiPoly], order: Dict[str, int]):
    """Best (eq index, unknown) where the unknown occurs linearly with constant coefficient."""
    best = None
    for i, e in enumerate(eqs):
        for v in e.used_vars():
            if e.degree_in(v) != 1:
                continue
            c1 = e.coeffs_in(v)[1]
            if not c1.is_constant():
                continue
            key = (len(e.terms), e.degree(), -order[v])
            if best is None or key < best[0]:
                best = (key, i, v, c1.constant_value())
        if best is not None and best[0][0] <= 2:
            break
    return None if best is None else best[1:]


def _poly_linear_pivot(eqs: List[MultiPoly], order: Dict[str, int]):
    best = None
    for i, e in enumerate(eqs):
        for v in e.used_vars():
            if e.degree_in(v) != 1:
                continue
            c1 = e.coeffs_in(v)[1]
            key = (e.degree(), len(c1.terms), len(e.terms), -order[v])
            if best is None or key < best[0]:
                best = (key, i, v, c1)
    return None if best is None else best[1:]


def _resultant_step(eqs: List[MultiPoly], derived=frozenset()):
    """An implied equation from the cheapest pair with one variable eliminated.

    Returns ("res", r), or ("split", i, j, g) when the pair shares a factor g,
    which is what a vanishing resultant means.
    """
    cands = []
    pool = eqs[:RESULTANT_POOL]
    for i, a in enumerate(pool):
        va = set(a.used_vars())
        for j in range(i + 1, len(pool)):
            b = pool[j]
            vb = set(b.used_vars())
            for v in sorted(va & vb):
                size = a.degree_in(v) + b.degree_in(v)
                if size <= RESULTANT_MAX_SIZE:
                    cands.append(((len(va | vb), size, a.degree() + b.degree()), i, j, v))
    cands.sort(key=lambda t: t[0])
    known = set(eqs) | derived
    for _, i, j, v in cands[:RESULTANT_TRIES]:
        r = resultant(eqs[i], eqs[j], v)
        if r.is_zero():
            g = poly_gcd(eqs[i], eqs[j])
            if not g.is_constant():
                return "split", i, j, g
        elif r.monic() not in known:
            return "res", r
    return None


class _System:
    def __init__(self, unknowns: Sequence[str], mode: str, depth_cap: int, deadline: Deadline,
                 conj_filter: bool):
        self.unknowns = tuple(unknowns)
        self.order = {v: i for i, v in enumerate(self.unknowns)}
        self.mode = mode
        self.depth_cap = depth_cap
        self.deadline = deadline
        self.conj_filter = conj_filter
        self.stats = SolveStats()
        self.solutions: List[Solution] = []

    def run(self, eqs, ineqs=()):
        self._solve(list(eqs), list(ineqs), [], 0)
        return self.solutions

    # substitution records are (unknown, numerator, denominator)
    def _substitute(self, eqs, ineqs, v, num, den):
        const_den = den.is_constant()
        if const_den:
            val = num.scale(den.constant_value().inverse())
        npow = [MultiPoly.const(1, num.vars)]
        dpow = [MultiPoly.const(1, den.vars)]

        def powers(k):
            while len(npow) <= k:
                npow.append(npow[-1] * num)
                dpow.append(dpow[-1] * den)

        def homog(e, k):
            # den^k * e(v = num/den)
            powers(k)
            r = MultiPoly.zero(e.vars)
            for j, c in e.coeffs_in(v).items():
                r = r + c * npow[j] * dpow[k - j]
            return r

        new_eqs = []
        for e in eqs:
            k = e.degree_in(v)
            if k <= 0:
                new_eqs.append(e)
            elif const_den:
                new_eqs.append(e.subs(v, val))
            else:
                new_eqs.append(homog(e, k))
        new_ineqs = []
        for q in ineqs:
            k = q.degree_in(v)
            if k > 0:
                q = q.subs(v, val) if const_den else homog(q, k)
            if q.is_zero():
                return None
            if not q.is_constant():
                new_ineqs.append(q)
        return new_eqs, new_ineqs

    def _solve(self, eqs, ineqs, subs, depth, derived=frozenset()):
        # derived: resultants already added on this path, never re-added
        self.deadline.check()
        while True:
            eqs = _normalize(eqs)
            if eqs is None:
                return
            # strip factors known to be nonzero
            changed = True
            while changed and ineqs:
                changed = False
                for i, e in enumerate(eqs):
                    for q in ineqs:
                        d = exact_divide(e, q)
                        if d is not None:
                            if d.is_constant():
                                return
                            eqs[i] = d
                            changed = True
            if not eqs:
                self._leaf(ineqs, subs)
                return
            piv = _linear_pivot(eqs, self.order)
            if piv is not None:
                i, v, c = piv
                e = eqs.pop(i)
                rest = e - e.coeffs_in(v)[1] * MultiPoly.var(v, e.vars)
                num = -rest.scale(c.inverse())
                one = MultiPoly.const(1, e.vars)
                r = self._substitute(eqs, ineqs, v, num, one)
                if r is None:
                    return
                eqs, ineqs = r
                subs = subs + [(v, num, one)]
                continue
            break
        if depth >= self.depth_cap:
            self.stats.depth_hits += 1
            return
        self.stats.branches += 1
        # an equation divisible by an unknown splits into v = 0 or the cofactor
        for i, e in enumerate(eqs):
            for v in e.used_vars():
                if all(m[e.vars.index(v)] > 0 for m in e.terms):
                    z = MultiPoly.zero(e.vars)
                    r = self._substitute(eqs, ineqs, v, z, MultiPoly.const(1, e.vars))
                    if r is not None:
                        self._solve(r[0], r[1], subs + [(v, z, MultiPoly.const(1, e.vars))], depth + 1)
                    vv = MultiPoly.var(v, e.vars)
                    rest = e
                    while exact_divide(rest, vv) is not None:
                        rest = exact_divide(rest, vv)
                    self._solve(eqs[:i] + [rest] + eqs[i + 1:], ineqs + [vv], subs, depth + 1)
                    return
        for i, e in enumerate(eqs):
            used = e.used_vars()
            if len(used) == 1:
                v = used[0]
                roots = gaussian_roots(e, v, self.stats)
                if self.conj_filter:
                    roots = [z for z in roots if z.im >= 0 or z.conjugate() not in roots]
                one = MultiPoly.const(1, e.vars)
                for z in roots:
                    val = MultiPoly.const(z, e.vars)
                    r = self._substitute(eqs[:i] + eqs[i + 1:], ineqs, v, val, one)
                    if r is not None:
                        self._solve(r[0], r[1], subs + [(v, val, one)], depth + 1)
                return
        step = _resultant_step(eqs, derived)
        if step is not None and step[0] == "split":
            # V(a, b) = V(g) u V(a/g, b/g); degrees drop, so no depth is charged
            _, i, j, g = step
            rest = [e for k, e in enumerate(eqs) if k not in (i, j)]
            self._solve(rest + [g], ineqs, subs, depth, derived)
            self._solve(rest + [exact_divide(eqs[i], g), exact_divide(eqs[j], g)], ineqs, subs, depth,
                        derived)
            return
        if step is not None:
            self._solve(eqs + [step[1]], ineqs, subs, depth + 1, derived | {step[1].monic()})
            return
        if self.mode != "all":
            self.stats.stuck += 1
            return
        piv = _poly_linear_pivot(eqs, self.order)
        if piv is None:
            self.stats.stuck += 1
            return
        i, v, c1 = piv
        e = eqs[i]
        # coefficient vanishes
        self._solve(eqs + [c1], ineqs, subs, depth + 1)
        # coefficient nonzero: v = -rest / c1
        rest = e - c1 * MultiPoly.var(v, e.vars)
        r = self._substitute(eqs[:i] + eqs[i + 1:], ineqs + [c1], v, -rest, c1)
        if r is not None:
            self._solve(r[0], r[1], subs + [(v, -rest, c1)], depth + 1)

    def _leaf(self, ineqs, subs):
        assigned = {v for v, _, _ in subs}
        free = tuple(v for v in self.unknowns if v not in assigned)
        sym = _back_substitute(subs, free, self.unknowns)
        for val in FREE_VALUE_TRIES:
            point = {v: GaussianRational(val) for v in free}
            values = _evaluate_family(sym, point)
            if values is None:
                continue
            if any(_eval_poly(q, values) == ZERO for q in ineqs):
                continue
            fam = None
            if free and all(r.is_polynomial() for r in sym.values()):
                fam = {v: r.num.scale(r.den.constant_value().inverse()) for v, r in sym.items()}
            self.solutions.append(Solution(values=values, free=free, family=fam))
            return


def _eval_poly(p: MultiPoly, values: Dict[str, GaussianRational]) -> GaussianRational:
    out = ZERO
    for e, c in p.terms.items():
        t = c
        for v, k in zip(p.vars, e):
            if k:
                t = t * values[v] ** k
        out = out + t
    return out


def _back_substitute(subs, free, unknowns) -> Dict[str, RationalFunction]:
    """Express every unknown as a rational function of the free ones."""
    if subs:
        vars_ = subs[0][1].vars
    else:
        vars_ = tuple(unknowns)
    sym: Dict[str, RationalFunction] = {
        v: RationalFunction.from_poly(MultiPoly.var(v, vars_)) for v in free
    }
    for v, num, den in reversed(subs):
        sym[v] = _eval_rf(num, sym) / _eval_rf(den, sym)
    return sym


def _eval_rf(p: MultiPoly, sym: Dict[str, RationalFunction]) -> RationalFunction:
    out = RationalFunction.from_poly(MultiPoly.zero(p.vars))
    for e, c in p.terms.items():
        t = RationalFunction.from_poly(MultiPoly.const(c, p.vars))
        for v, k in zip(p.vars, e):
            if k:
                t = t * sym[v] ** k
        out = out + t
    return out


def _evaluate_family(sym, point) -> Optional[Dict[str, GaussianRational]]:
    values = {}
    for v, r in sym.items():
        d = _eval_poly(r.den, point)
        if d == ZERO:
            return None
        values[v] = _eval_poly(r.num, point) / d
    return values


def solve_system(eqs: Sequence[MultiPoly], unknowns: Sequence[str], mode: str = "fast",
                 depth_cap: int = 12, deadline: Deadline = NO_DEADLINE,
                 conj_filter: Optional[bool] = None, ineqs: Sequence[MultiPoly] = ()):
    """All Q(i) solutions reachable by the elimination strategy of ``mode``.

    Returns ``(solutions, stats)``.  In ``fast`` mode, of a complex-conjugate pair
    of roots of a univariate equation only the one with nonnegative imaginary
    part is followed.
    """
    if conj_filter is None:
        conj_filter = mode == "fast"
    unknowns = tuple(unknowns)
    eqs = [e.with_vars(unknowns) for e in eqs]
    ineqs = [q.with_vars(unknowns) for q in ineqs]
    s = _System(unknowns, mode, depth_cap, deadline, conj_filter)
    sols = s.run(eqs, ineqs)
    return sols, s.stats
