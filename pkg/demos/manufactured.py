"""Plant Darboux factors in a random ODE and check the search recovers them."""

import sys

from psolver.cli import Pipeline, RunConfig, manufacture, run
from psolver.odeparse import expr_to_poly, parse_expr

count = int(sys.argv[1]) if len(sys.argv) > 1 else 10
hits = 0
for seed in range(count):
    e = manufacture(seed, 2)
    pl = Pipeline()
    code, report = run(RunConfig("intfact", degree=2, all_solutions=True), e.ode, pl)
    vl = pl.table.varlist
    found = code == 0 and all(pl.pairs.covers(expr_to_poly(parse_expr(f), vl)) for f in e.planted)
    hits += found
    print(f"seed {seed:3d}  {'ok  ' if found else 'MISS'}  planted {e.planted}  R = {report['R'] and report['R']['expr']}")
print(f"{hits}/{count} recovered")
