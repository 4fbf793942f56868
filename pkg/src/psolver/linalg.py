"""Sparse exact linear algebra over Q (gmpy2 rationals)."""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple


from gmpy2 import mpq

Row = Dict[int, "mpq"]


def rref(rows: Sequence[Row], rhs: Sequence, ncols: int) -> Optional[Tuple[List[Row], List, List[int]]]:
    """Reduce ``A x = b`` to reduced row-echelon form, pivoting column by column.

    Pivots land on the earliest possible columns, so later columns are the free
    ones.  Returns ``(rows, rhs, pivot_columns)`` or None when inconsistent.
    """
    work = [(dict(r), mpq(b)) for r, b in zip(rows, rhs)]
    work = [(r, b) for r, b in work if r or b]
    for r, b in work:
        if not r and b:
            return None
    by_col: Dict[int, set] = {}
    for i, (r, _) in enumerate(work):
        for c in r:
            by_col.setdefault(c, set()).add(i)
    pivot_rows: List[int] = []
    pivot_cols: List[int] = []
    used = set()
    for col in range(ncols):
        cand = [i for i in by_col.get(col, ()) if i not in used]
        if not cand:
            continue
        p = min(cand, key=lambda i: (len(work[i][0]), i))
        prow, pb = work[p]
        inv = 1 / prow[col]
        prow = {c: v * inv for c, v in prow.items()}
        pb = pb * inv
        work[p] = (prow, pb)
        used.add(p)
        pivot_rows.append(p)
        pivot_cols.append(col)
        for i in list(by_col.get(col, ())):
            if i == p:
                continue
            r, b = work[i]
            f = r[col]
            for c, v in prow.items():
                nv = r.get(c, 0) - f * v
                if nv:
                    if c not in r:
                        by_col.setdefault(c, set()).add(i)
                    r[c] = nv
                else:
                    r.pop(c, None)
                    s = by_col.get(c)
                    if s is not None:
                        s.discard(i)
            b = b - f * pb
            work[i] = (r, b)
            if not r and b:
                return None
    for i, (r, b) in enumerate(work):
        if i not in used and not r and b:
            return None
    return [work[i][0] for i in pivot_rows], [work[i][1] for i in pivot_rows], pivot_cols


def solve_linear(rows: Sequence[Row], rhs: Sequence, ncols: int) -> Optional[Dict[int, "mpq"]]:
    """Particular solution of ``A x = b`` with all free variables set to zero."""
    red = rref(rows, rhs, ncols)
    if red is None:
        return None
    prow, pb, pcols = red
    sol = {}
    for r, b, c in zip(prow, pb, pcols):
        if b:
            sol[c] = b
    return sol


def nullity(rows: Sequence[Row], ncols: int) -> int:
    red = rref(rows, [0] * len(rows), ncols)
    return ncols - len(red[2])


class CoefficientMatcher:
    """Coefficient matching of ``sum_j x_j * col_j + rhs = 0`` into real rows.

    Columns and the constant are polynomials over Q(i); the unknowns are real,
    so each monomial contributes one row for the real and one for the
    imaginary part.  A complex unknown is two columns, "re" and "im".
    """

    def __init__(self):
        self.rows: Dict[tuple, Dict[int, mpq]] = {}
        self.rhs: Dict[tuple, mpq] = {}

    def add_column(self, j: int, p, part: str = "re") -> None:
        # part "re": real unknown times p; part "im": unknown times I*p
        for e, c in p.terms.items():
            re, im = (c.re, c.im) if part == "re" else (-c.im, c.re)
            if re:
                r = self.rows.setdefault((e, 0), {})
                r[j] = r.get(j, 0) + re
            if im:
                r = self.rows.setdefault((e, 1), {})
                r[j] = r.get(j, 0) + im

    def add_constant(self, p) -> None:
        for e, c in p.terms.items():
            if c.re:
                self.rows.setdefault((e, 0), {})
                self.rhs[(e, 0)] = self.rhs.get((e, 0), 0) - c.re
            if c.im:
                self.rows.setdefault((e, 1), {})
                self.rhs[(e, 1)] = self.rhs.get((e, 1), 0) - c.im

    def system(self, keep_cols: Optional[set] = None):
        keys = sorted(self.rows, key=lambda k: (str(k[0]), k[1]))
        rows, rhs = [], []
        for k in keys:
            r = self.rows[k]
            if keep_cols is not None:
                r = {j: v for j, v in r.items() if j in keep_cols}
            r = {j: v for j, v in r.items() if v}
            rows.append(r)
            rhs.append(self.rhs.get(k, 0))
        return rows, rhs


particular_solution = solve_linear
