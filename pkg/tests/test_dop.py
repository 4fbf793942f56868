import pytest
from hypothesis import given, strategies as st

from psolver.basis import dbasis
from psolver.dop import apply
from psolver.errors import OperatorError
from psolver.symkernel import MultiPoly, RationalFunction

from conftest import KAMKE21, LOGSINE, SECTION4, gaussian, polys


class TestBuild:
    def test_section4(self, setup):
        s = setup(SECTION4)
        want = ["u1*u3", "y*(u1*u3 + y + u3)", "-u2*u1*u3", "u1^2*u3", "u3^2*u1"]
        assert [s.op.coeff_x, s.op.coeff_y, *s.op.coeff_u] == [s.poly(w) for w in want]
        assert s.op.delta == s.poly("1")

    def test_logsine(self, setup):
        s = setup(LOGSINE)
        want = ["x*y", "x*(u1 + u2)", "y", "x*y*u3", "-x*y*u2"]
        assert [s.op.coeff_x, s.op.coeff_y, *s.op.coeff_u] == [s.poly(w) for w in want]
        assert s.op.delta == s.poly("x")

    def test_rational_degenerates(self, setup):
        s = setup("y' = y/x")
        assert s.op.coeff_x == s.poly("x") and s.op.coeff_y == s.poly("y")
        assert list(s.op.coeff_u) == [] and s.op.delta == s.poly("1")


class TestApply:
    def test_section4(self, setup):
        s = setup(SECTION4)
        assert apply(s.op, s.poly("u1")) == s.poly("-u2*u1*u3")
        assert apply(s.op, s.poly("y")) == s.poly("y*(u1*u3 + y + u3)")
        assert apply(s.op, s.poly("7")).is_zero()

    def test_variable_mismatch(self, setup):
        s = setup(SECTION4)
        with pytest.raises(OperatorError):
            apply(s.op, MultiPoly.from_string("z", ("z",)))

    def test_consistent_with_dbasis(self, setup):
        s = setup(LOGSINE)
        for u, dx, dy in dbasis(s.table):
            d = apply(s.op, s.poly(u))
            R = RationalFunction.from_poly
            assert R(d) == (dx * R(s.N) + dy * R(s.M)) * R(s.op.delta)

    @pytest.mark.parametrize("ode", [SECTION4, LOGSINE, KAMKE21])
    @given(data=st.data())
    def test_derivation_and_linearity(self, setup, ode, data):
        s = setup(ode)
        vl = s.table.varlist
        p = data.draw(polys(vars=vl, max_deg=2, max_terms=4))
        q = data.draw(polys(vars=vl, max_deg=2, max_terms=4))
        a, b = data.draw(gaussian()), data.draw(gaussian())
        assert apply(s.op, p * q) == p * apply(s.op, q) + q * apply(s.op, p)
        assert apply(s.op, p.scale(a) + q.scale(b)) == apply(s.op, p).scale(a) + apply(s.op, q).scale(b)


class TestDivergence:
    def test_section4(self, setup):
        s = setup(SECTION4)
        assert s.T == s.poly("-u2*u3 + 2*u1*u3 + 2*y + u3")

    def test_kamke21(self, setup):
        s = setup(KAMKE21)
        sin = [n for n, k in s.table.entries if k.kind == "sin"][0]
        assert s.T == s.poly(f"2*y - {sin}")

    def test_exact(self, setup):
        assert setup("y' = -x/y").T.is_zero()
