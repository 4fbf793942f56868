import pytest
from hypothesis import HealthCheck, settings, strategies as st

from psolver.basis import close_basis, polynomialize
from psolver.dop import build_operator, divergence
from psolver.odeparse import parse_ode
from psolver.symkernel import GaussianRational, MultiPoly

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SECTION4 = "y' = y*(cos(x) + y*exp(-x) + 1)/cos(x)"
KAMKE21 = "y' = y^2 - y*sin(x) + cos(x)"
LOGSINE = "y' = (ln(x) + sin(x))/y"
EQ1 = "y' = exp(x)/y^2 + 9*exp(x)^2/y^2 - 6*y*exp(x) + y^4"
EQ2 = "y' = (y^2*ln(x)^5 + 4*y*ln(x)^3 + 4*ln(x) + y^2)*y^2/((y*ln(x)^2 + 2)^2*x)"
EQ3 = "y' = (y + 1 + exp(y)*x^4)/(x^2*y)"
EQ4 = "y' = (-cos(x)*x*y - cos(x)*x - cos(x) + y + 1 + x*exp(y))/(1 + x*y)"


class Setup:
    def __init__(self, text):
        self.spec = parse_ode(text)
        self.table = close_basis(self.spec)
        self.M, self.N = polynomialize(self.spec, self.table)
        self.op = build_operator(self.M, self.N, self.table)
        self.T = divergence(self.M, self.N, self.table, self.op)

    def poly(self, text):
        return MultiPoly.from_string(text, self.table.varlist)


@pytest.fixture(scope="session")
def setup():
    cache = {}

    def get(text):
        if text not in cache:
            cache[text] = Setup(text)
        return cache[text]
    return get


def gaussian():
    small = st.integers(-4, 4)
    return st.builds(lambda a, b, c: GaussianRational(a, 0) if c else GaussianRational(a, b),
                     small, small, st.booleans())


def polys(vars=("x", "y"), max_deg=3, max_terms=5):
    n = len(vars)
    mono = st.tuples(*[st.integers(0, max_deg) for _ in range(n)]).filter(lambda e: sum(e) <= max_deg)
    return st.dictionaries(mono, gaussian(), max_size=max_terms).map(lambda d: MultiPoly(d, vars))
