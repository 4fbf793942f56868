import pytest
from hypothesis import given, strategies as st

from psolver.darboux import SearchConfig, eigenpol_search
from psolver.intfact import IntegratingFactor, extended_search, find_integrating_factor
from psolver.odeparse import Integral, children, diff, expr_to_poly, parse_expr, print_expr
from psolver.quadrature import FirstIntegral, first_integral, integrate_term, verify_first_integral

from conftest import KAMKE21, LOGSINE, SECTION4


def has_integral(e):
    if isinstance(e, Integral):
        return True
    return any(has_integral(c) for c in children(e))


def factor(s, extended=False):
    pairs = eigenpol_search(s.op, SearchConfig(1), M=s.M, N=s.N)
    if extended:
        return extended_search(pairs, s.T, s.op)
    return find_integrating_factor(pairs, s.T, s.op)


class TestFirstIntegral:
    def test_section4(self, setup):
        s = setup(SECTION4)
        F = first_integral(s.M, s.N, s.table, factor(s))
        assert isinstance(F, FirstIntegral) and str(F).endswith(" = C")
        assert verify_first_integral(F, s.M, s.N, s.table)

    def test_kamke21_unevaluated(self, setup):
        s = setup(KAMKE21)
        F = first_integral(s.M, s.N, s.table, factor(s, extended=True))
        assert "Int(exp(-cos(x)), x)" in print_expr(F.expr)
        assert verify_first_integral(F, s.M, s.N, s.table)

    def test_rational(self, setup):
        s = setup("y' = y/x")
        F = first_integral(s.M, s.N, s.table, factor(s))
        assert verify_first_integral(F, s.M, s.N, s.table)
        assert print_expr(F.expr) == "-y/x"

    def test_logsine(self, setup):
        s = setup(LOGSINE)
        F = first_integral(s.M, s.N, s.table, factor(s))
        assert print_expr(F.expr) == "-y^2/2 + (x*ln(x) - cos(x) - x)"

    def test_exact(self, setup):
        s = setup("y' = -x/y")
        F = first_integral(s.M, s.N, s.table, IntegratingFactor([]))
        assert verify_first_integral(F, s.M, s.N, s.table)

    def test_constant_name(self, setup):
        s = setup("y' = y/x")
        F = first_integral(s.M, s.N, s.table, factor(s), constant_name="K")
        assert str(F).endswith(" = K")


class TestVerify:
    def test_kamke21_closed_form(self, setup):
        # the known implicit solution, solved for the constant
        s = setup(KAMKE21)
        F = parse_expr("exp(-cos(x))/(y - sin(x)) + Int(exp(-cos(x)), x)")
        assert verify_first_integral(F, s.M, s.N, s.table)

    def test_wrong(self, setup):
        s = setup("y' = y/x")
        assert not verify_first_integral(parse_expr("x"), s.M, s.N, s.table)

    def test_circle(self, setup):
        s = setup("y' = -x/y")
        assert verify_first_integral(parse_expr("x^2 + y^2"), s.M, s.N, s.table)

    def test_constant_rejected(self, setup):
        s = setup("y' = -x/y")
        assert not verify_first_integral(parse_expr("3"), s.M, s.N, s.table)

    def test_log_form(self, setup):
        s = setup("y' = y/x")
        assert verify_first_integral(parse_expr("ln(y) - ln(x)"), s.M, s.N, s.table)


class TestIntegrateTerm:
    @pytest.mark.parametrize("t, want", [
        ("2*x*exp(x^2)", "exp(x^2)"),
        ("cos(x)", "sin(x)"),
        ("1/x", "ln(x)"),
        ("x^3", "x^4/4"),
    ])
    def test_closed(self, t, want):
        assert print_expr(integrate_term(parse_expr(t), "x")) == want

    @pytest.mark.parametrize("t", ["exp(-cos(x))", "x*exp(-sin(x))"])
    def test_unevaluated(self, t):
        got = integrate_term(parse_expr(t), "x")
        assert isinstance(got, Integral) and got.integrand == parse_expr(t)

    @given(st.lists(st.integers(-4, 4), min_size=1, max_size=5))
    def test_polynomial_round_trip(self, cs):
        p = " + ".join(f"({c})*x^{k}" for k, c in enumerate(cs))
        t = parse_expr(p)
        got = integrate_term(t, "x")
        assert not has_integral(got)
        vl = ("x", "y")
        assert expr_to_poly(diff(got, "x"), vl) == expr_to_poly(t, vl)

    @pytest.mark.parametrize("t", ["sin(x)*exp(x)", "x*cos(x)", "exp(2*x)", "x*ln(x)"])
    def test_differentiates_back(self, setup, t):
        # y - G is a first integral of y' = t exactly when G' = t
        got = integrate_term(parse_expr(t), "x")
        assert not has_integral(got)
        s = setup(f"y' = {t}")
        assert verify_first_integral(parse_expr(f"y - ({print_expr(got)})"), s.M, s.N, s.table)
