"""Walk one ODE through every stage: basis, derivation, Darboux pairs, R, F."""

from psolver.basis import close_basis, dbasis, polynomialize
from psolver.darboux import SearchConfig, eigenpol_search
from psolver.dop import build_operator, divergence
from psolver.intfact import find_integrating_factor
from psolver.odeparse import parse_ode, print_expr, unsubstitute
from psolver.quadrature import first_integral

ODE = "y' = y*(cos(x) + y*exp(-x) + 1)/cos(x)"

spec = parse_ode(ODE)
table = close_basis(spec)
M, N = polynomialize(spec, table)
print(ODE)
print("basis:", ", ".join(f"{n} = {print_expr(k.expr)}" for n, k in table.entries))
for u, dx, dy in dbasis(table):
    print(f"  d{u}/dx = {dx}   d{u}/dy = {dy}")
print("M =", M)
print("N =", N)

op = build_operator(M, N, table)
T = divergence(M, N, table, op)
print("Delta =", op.delta, "  T =", T)

pairs = eigenpol_search(op, SearchConfig(1), M=M, N=N)
for p in pairs:
    print(f"  f = {print_expr(unsubstitute(p.f, table)):24s} g = {print_expr(unsubstitute(p.g, table))}")

R = find_integrating_factor(pairs, T, op)
print("R =", print_expr(R.to_expr(table)))
print(first_integral(M, N, table, R))
