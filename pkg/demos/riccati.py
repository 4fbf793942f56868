"""A Riccati equation that needs an exponential factor; its first integral keeps an Int node."""

from psolver.cli import RunConfig, render_text, run

ODE = "y' = y^2 - y*sin(x) + cos(x)"

for extended in (False, True):
    cfg = RunConfig("solve", extended=extended)
    code, report = run(cfg, ODE)
    print(f"--- extended={extended}, exit {code}")
    print(render_text(cfg, report, code))
