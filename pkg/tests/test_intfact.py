import pytest
from gmpy2 import mpq

from psolver.darboux import DarbouxPair, SearchConfig, eigenpol_search
from psolver.intfact import (
    ExpAnsatz, IntegratingFactor, extended_search, find_integrating_factor, is_integrating_factor,
    same_up_to_constant, solve_exponents, verify,
)
from psolver.dop import apply
from psolver.odeparse import mul, num, parse_expr
from psolver.symkernel import exact_divide

from conftest import EQ3, EQ4, KAMKE21, SECTION4


def pairs_for(s, *fs):
    out = []
    for f in fs:
        p = s.poly(f)
        out.append(DarbouxPair(p, exact_divide(apply(s.op, p), p)))
    return out


def search(s, degree=1):
    return eigenpol_search(s.op, SearchConfig(degree), M=s.M, N=s.N)


class TestSolveExponents:
    def test_section4(self, setup):
        s = setup(SECTION4)
        pairs = pairs_for(s, "y", "u1", "y + u3")
        assert solve_exponents(pairs, s.T) == [-1, -1, -1]

    def test_minimal_support(self, setup):
        # n_x + n_y = -2; the single-factor answer wins, on the smaller factor
        s = setup("y' = y/x")
        pairs = pairs_for(s, "x", "y")
        assert solve_exponents(pairs, s.T) == [-2, 0]

    def test_exact(self, setup):
        s = setup("y' = -x/y")
        assert solve_exponents([], s.T) == []

    def test_inconsistent(self, setup):
        s = setup(KAMKE21)
        assert solve_exponents(search(s), s.T) is None

    def test_numberf_monotone(self, setup):
        s = setup(SECTION4)
        pairs = search(s)
        k = next(k for k in range(1, len(pairs) + 1) if solve_exponents(pairs, s.T, k) is not None)
        for k2 in range(k, len(pairs) + 1):
            assert solve_exponents(pairs, s.T, k2) is not None
        assert solve_exponents(pairs, s.T, "all") is not None

    def test_numberf_validation(self, setup):
        s = setup(SECTION4)
        with pytest.raises(ValueError):
            solve_exponents(search(s), s.T, 0)


class TestExtended:
    def test_kamke21(self, setup):
        s = setup(KAMKE21)
        R = extended_search(search(s), s.T, s.op)
        assert R is not None and verify(R, s.op, s.T)
        assert same_up_to_constant(R, parse_expr("exp(-cos(x))/(y - sin(x))^2"), s.table)
        assert R.provenance["extended"]

    @pytest.mark.parametrize("ode, want", [
        (EQ3, "exp(-y - 1/x)/x^2"),
        (EQ4, "exp(-y - sin(x))"),
    ])
    def test_section5(self, setup, ode, want):
        s = setup(ode)
        R = extended_search(search(s), s.T, s.op)
        assert same_up_to_constant(R, parse_expr(want), s.table)
        assert is_integrating_factor(R.to_expr(s.table), s.M, s.N, s.table)

    def test_zero_bounds_match_plain(self, setup):
        for ode in (SECTION4, KAMKE21):
            s = setup(ode)
            pairs = search(s)
            plain = solve_exponents(pairs, s.T, "all")
            R = extended_search(pairs, s.T, s.op, ExpAnsatz(0, 0), numberf="all")
            assert (R is None) == (plain is None)
            if R is not None:
                assert R.exponents == plain and R.exp_part == []

    def test_plain_preferred(self, setup):
        s = setup(SECTION4)
        R = extended_search(search(s), s.T, s.op)
        assert R.exp_part == []

    def test_bad_ansatz(self):
        with pytest.raises(ValueError):
            ExpAnsatz(-1, 1)


class TestVerify:
    def test_section4(self, setup):
        s = setup(SECTION4)
        R = find_integrating_factor(search(s), s.T, s.op)
        assert verify(R, s.op, s.T)
        assert same_up_to_constant(R, parse_expr("1/(y*cos(x)*(y + exp(x)))"), s.table)

    def test_perturbed(self, setup):
        s = setup(SECTION4)
        R = find_integrating_factor(search(s), s.T, s.op)
        f, n, g = next(t for t in R.darboux_part if t[1])
        bad = IntegratingFactor([(f, n + 1, g)] + [t for t in R.darboux_part if t[0] != f])
        assert not verify(bad, s.op, s.T)

    def test_scaling(self, setup):
        s = setup(SECTION4)
        R = find_integrating_factor(search(s), s.T, s.op)
        assert is_integrating_factor(mul(num(5), R.to_expr(s.table)), s.M, s.N, s.table)

    def test_plain_kamke_absent(self, setup):
        s = setup(KAMKE21)
        assert find_integrating_factor(search(s), s.T, s.op) is None

    def test_trivial(self, setup):
        s = setup("y' = -x/y")
        R = find_integrating_factor(search(s), s.T, s.op)
        assert R.nonzero_part() == [] and R.exp_part == []
        assert same_up_to_constant(R, parse_expr("1"), s.table)

    def test_exponents_are_rational(self, setup):
        s = setup(SECTION4)
        R = find_integrating_factor(search(s), s.T, s.op)
        assert all(isinstance(n, type(mpq(0))) for n in R.exponents)
