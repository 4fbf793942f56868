"""Command-line front end.

Subcommands follow the solver's stages (basis, dbasis, dop, eigenpol,
eigenpval, intfact, solve) plus ``check`` for verifying a candidate integrating
factor or first integral, ``corpus`` for JSON-lines fixture files and
``manufacture`` for generating ODEs with a known integrating factor.

Exit codes: 0 success, 1 no integrating factor (or unverified candidate),
2 input error, 3 time limit.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .basis import BasisTable, close_basis, dbasis, polynomialize
from .darboux import SearchConfig, eigenpol_search
from .dop import build_operator, divergence
from .errors import (
    BasisError, Deadline, OperatorError, ParseError, PSolverError, QuadratureError,
    TimeLimitExceeded,
)
from .intfact import find_integrating_factor, is_integrating_factor, same_up_to_constant
from .odeparse import OdeSpec, parse_expr, parse_ode, poly_to_expr, print_expr, unsubstitute
from .quadrature import first_integral, verify_first_integral
from .symkernel import GaussianRational, MultiPoly, RationalFunction, partial_derivative, poly_gcd

DEFAULT_TIME_LIMIT = 500.0
STAGES = ("basis", "dbasis", "dop", "eigenpol", "eigenpval", "intfact", "solve")
SUBCOMMANDS = STAGES + ("check", "corpus", "manufacture")

EXIT_OK, EXIT_NO_R, EXIT_INPUT, EXIT_TIME = 0, 1, 2, 3


def default_time_limit() -> float:
    env = os.environ.get("PSOLVE_TIME_LIMIT")
    if env:
        try:
            v = float(env)
        except ValueError:
            v = 0
        if v > 0:
            return v
    return DEFAULT_TIME_LIMIT


@dataclass
class RunConfig:
    subcommand: str = "solve"
    degree: int = 1
    numberf: object = 7
    all_solutions: bool = False
    extended: bool = False
    guess: bool = False
    json: bool = False
    time_limit: float = field(default_factory=default_time_limit)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        if int(self.degree) < 1:
            raise ValueError("degree must be at least 1")
        self.degree = int(self.degree)
        if self.numberf != "all":
            self.numberf = int(self.numberf)
            if self.numberf < 1:
                raise ValueError("numberf must be a positive integer or 'all'")
        if not self.time_limit > 0:
            raise ValueError("time limit must be positive")


def _empty_report() -> dict:
    return {"ode": None, "basis": None, "dbasis": None, "dop": None, "eigenpairs": None,
            "R": None, "solution": None, "timings": {}, "truncated": None}


def _text(e) -> str:
    return print_expr(e)


def _rf_text(r: RationalFunction, table: BasisTable) -> str:
    return _text(unsubstitute(r, table))


@dataclass
class Pipeline:
    """Intermediate objects of one run, kept for callers that want more than the report."""

    spec: Optional[OdeSpec] = None
    table: Optional[BasisTable] = None
    M: Optional[MultiPoly] = None
    N: Optional[MultiPoly] = None
    op: object = None
    T: Optional[MultiPoly] = None
    pairs: object = None
    R: object = None
    F: object = None


def _timed(report: dict, name: str, fn):
    t0 = time.perf_counter()
    try:
        return fn()
    finally:
        report["timings"][name] = round(time.perf_counter() - t0, 6)


def _stage_index(cfg: RunConfig) -> int:
    if cfg.subcommand in STAGES:
        return STAGES.index(cfg.subcommand)
    return len(STAGES) - 1


def _pipeline(cfg: RunConfig, ode_text: str, report: dict, deadline: Deadline, pl: Pipeline) -> int:
    upto = _stage_index(cfg)
    spec = parse_ode(ode_text)
    pl.spec = spec
    table = _timed(report, "basis", lambda: close_basis(spec))
    M, N = polynomialize(spec, table)
    pl.table, pl.M, pl.N = table, M, N
    report["ode"] = {
        "input": _text(spec.rhs),
        "indep": spec.indep,
        "dep": spec.dep,
        "M": str(M),
        "N": str(N),
    }
    report["basis"] = [{"name": n, "kernel": _text(k.expr)} for n, k in table.entries]
    report["dbasis"] = [{"name": n, "dx": _rf_text(dx, table), "dy": _rf_text(dy, table)}
                        for n, dx, dy in dbasis(table)]
    if upto < STAGES.index("dop"):
        return EXIT_OK
    op = _timed(report, "dop", lambda: build_operator(M, N, table))
    T = divergence(M, N, table, op)
    pl.op, pl.T = op, T
    report["dop"] = {
        "delta": str(op.delta),
        "coefficients": [{"var": v, "coeff": str(c)} for v, c in op.coefficients()],
        "T": str(T),
    }
    if upto < STAGES.index("eigenpol"):
        return EXIT_OK
    scfg = SearchConfig(max_degree=cfg.degree, mode="all" if cfg.all_solutions else "fast",
                        guess=cfg.guess)
    pairs = _timed(report, "eigenpol", lambda: eigenpol_search(op, scfg, deadline, M=M, N=N))
    pl.pairs = pairs
    report["eigenpairs"] = [
        {"f": _text(unsubstitute(p.f, table)), "g": _text(unsubstitute(p.g, table)),
         "f_basis": str(p.f), "g_basis": str(p.g)}
        for p in pairs
    ]
    report["truncated"] = {"candidates": pairs.truncated, "stuck_branches": pairs.stats.stuck,
                           "dropped_roots": pairs.stats.dropped_roots,
                           "families": len(pairs.families)}
    if upto < STAGES.index("intfact"):
        return EXIT_OK
    R = _timed(report, "intfact", lambda: find_integrating_factor(
        pairs, T, op, numberf=cfg.numberf, extended=cfg.extended, deadline=deadline))
    pl.R = R
    if R is None:
        return EXIT_NO_R
    report["R"] = {
        "expr": _text(R.to_expr(table)),
        "factors": [{"f": _text(unsubstitute(f, table)), "n": str(n)} for f, n, _ in R.nonzero_part()],
        "exponential": [{"P": _text(unsubstitute(P, table)), "Q": _text(unsubstitute(Q, table))}
                        for P, Q in R.exp_part],
    }
    if upto < STAGES.index("solve"):
        return EXIT_OK
    try:
        F = _timed(report, "solve", lambda: first_integral(M, N, table, R, deadline))
    except QuadratureError as e:
        report["solution"] = None
        report["error"] = str(e)
        return EXIT_NO_R
    pl.F = F
    report["solution"] = {"F": _text(F.expr), "equation": str(F), "verified": True}
    return EXIT_OK


def run(cfg: RunConfig, ode_text: str, pipeline: Optional[Pipeline] = None) -> Tuple[int, dict]:
    """Run the pipeline up to ``cfg.subcommand``; returns (exit code, report)."""
    report = _empty_report()
    pl = pipeline if pipeline is not None else Pipeline()
    deadline = Deadline(cfg.time_limit)
    try:
        code = _pipeline(cfg, ode_text, report, deadline, pl)
    except TimeLimitExceeded as e:
        report["error"] = str(e)
        return EXIT_TIME, report
    except (ParseError, BasisError, OperatorError) as e:
        report["error"] = str(e)
        return EXIT_INPUT, report
    return code, report


# ---------------------------------------------------------------------------
# Human-readable output
# ---------------------------------------------------------------------------


def render_text(cfg: RunConfig, report: dict, code: int) -> str:
    lines: List[str] = []
    ode = report["ode"]
    upto = _stage_index(cfg)
    if ode:
        dep = ode["dep"]
        lines.append(f"{dep}' = {ode['input']}")
        lines.append(f"considered as {dep}' = M/N with")
        lines.append(f"  M = {ode['M']}")
        lines.append(f"  N = {ode['N']}")
        if report["basis"]:
            lines.append("basis of functions: "
                         + ", ".join(f"{b['name']} = {b['kernel']}" for b in report["basis"]))
        else:
            lines.append("basis of functions: empty")
    if upto >= STAGES.index("dbasis") and cfg.subcommand == "dbasis" and report["dbasis"] is not None:
        for d in report["dbasis"]:
            lines.append(f"  d{d['name']}/d{ode['indep']} = {d['dx']}")
            lines.append(f"  d{d['name']}/d{ode['dep']} = {d['dy']}")
    if cfg.subcommand == "dop" and report["dop"]:
        dop = report["dop"]
        lines.append(f"Delta = {dop['delta']}")
        lines.append("D = " + " + ".join(f"({c['coeff']})*d/d{c['var']}"
                                         for c in dop["coefficients"] if c["coeff"] != "0"))
        lines.append(f"T = {dop['T']}")
    if cfg.subcommand in ("eigenpol", "eigenpval") and report["eigenpairs"] is not None:
        lines.append("eigen_p = [" + ", ".join(p["f"] for p in report["eigenpairs"]) + "]")
        if cfg.subcommand == "eigenpval":
            lines.append("eigen_p_val = [" + ", ".join(p["g"] for p in report["eigenpairs"]) + "]")
    trunc = report["truncated"]
    if trunc and (trunc["candidates"] or trunc["stuck_branches"]):
        lines.append(f"note: search incomplete (truncated={trunc['candidates']}, "
                     f"stuck branches={trunc['stuck_branches']})")
    if upto >= STAGES.index("intfact") and cfg.subcommand in ("intfact", "solve"):
        if report["R"]:
            lines.append(f"the integrating factor will be R = {report['R']['expr']}")
        elif code == EXIT_NO_R:
            lines.append(f"no integrating factor found at degree {cfg.degree}")
    if cfg.subcommand == "solve" and report["solution"]:
        lines.append(f"first integral: {report['solution']['equation']}")
    if report.get("error"):
        lines.append(f"error: {report['error']}")
    return "\n".join(lines)


def dump_json(report: dict) -> str:
    return json.dumps(report, indent=2)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _lhs(text: str) -> str:
    # accept "F = C" as well as a bare F
    return text.split("=")[0] if "=" in text else text


def check(ode_text: str, intfact: Optional[str] = None, solution: Optional[str] = None) -> Tuple[int, dict]:
    """Verify a candidate integrating factor and/or first integral for the ODE."""
    report: Dict[str, object] = {"ode": ode_text}
    try:
        spec = parse_ode(ode_text)
        table = close_basis(spec)
        M, N = polynomialize(spec, table)
        if intfact is not None:
            report["R"] = {"expr": intfact, "verified": is_integrating_factor(parse_expr(intfact), M, N, table)}
        if solution is not None:
            F = parse_expr(_lhs(solution))
            report["solution"] = {"F": print_expr(F), "verified": verify_first_integral(F, M, N, table)}
    except (ParseError, BasisError, OperatorError) as e:
        report["error"] = str(e)
        return EXIT_INPUT, report
    checks = [v["verified"] for k, v in report.items() if isinstance(v, dict)]
    return (EXIT_OK if checks and all(checks) else EXIT_NO_R), report


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

EXPECT = ("solved", "intfact_only", "unsolved")
OPTION_KEYS = ("degree", "numberf", "all_solutions", "extended", "guess", "time_limit")


@dataclass
class CorpusEntry:
    id: str
    ode: str
    options: Dict[str, object] = field(default_factory=dict)
    expected_R: Optional[str] = None
    expected_solution: Optional[str] = None
    expect: str = "solved"
    planted: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.expect not in EXPECT:
            raise ValueError(f"expect must be one of {', '.join(EXPECT)}")
        bad = set(self.options) - set(OPTION_KEYS)
        if bad:
            raise ValueError(f"unknown option(s): {', '.join(sorted(bad))}")
        parse_ode(self.ode)
        if self.expected_R is not None:
            parse_expr(self.expected_R)
        if self.expected_solution is not None:
            parse_expr(_lhs(self.expected_solution))

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusEntry":
        if not isinstance(d, dict) or "id" not in d or "ode" not in d:
            raise ValueError("entry needs 'id' and 'ode'")
        known = {k: d[k] for k in ("id", "ode", "options", "expected_R", "expected_solution",
                                   "expect", "planted") if k in d}
        return cls(**known)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and v != [] and v != {}}


@dataclass
class EntryResult:
    id: str
    passed: bool
    reason: str
    seconds: float


def evaluate_entry(entry: CorpusEntry, time_limit: Optional[float] = None) -> EntryResult:
    opts = dict(entry.options)
    if time_limit is not None:
        opts.setdefault("time_limit", time_limit)
    sub = "intfact" if entry.expect == "intfact_only" else "solve"
    cfg = RunConfig(subcommand=sub, **opts)
    pl = Pipeline()
    t0 = time.perf_counter()
    code, report = run(cfg, entry.ode, pl)
    dt = time.perf_counter() - t0

    def result(ok, why):
        return EntryResult(entry.id, ok, why, round(dt, 3))

    if code == EXIT_TIME:
        return result(False, "time limit")
    if code == EXIT_INPUT:
        return result(False, f"input error: {report.get('error')}")
    if entry.expect == "unsolved":
        return result(code == EXIT_NO_R and pl.R is None, f"exit {code}")
    if pl.R is None:
        return result(False, "no integrating factor")
    if entry.expected_R is not None and not same_up_to_constant(pl.R, parse_expr(entry.expected_R), pl.table):
        return result(False, "R differs from expected_R")
    if entry.expect == "solved":
        if code != EXIT_OK or pl.F is None:
            return result(False, report.get("error") or "no first integral")
        if entry.expected_solution is not None and not verify_first_integral(
                parse_expr(_lhs(entry.expected_solution)), pl.M, pl.N, pl.table):
            return result(False, "expected_solution does not verify")
    if dt > cfg.time_limit:
        return result(False, "time limit")
    return result(True, "ok")


def corpus_run(path: str, time_limit: Optional[float] = None) -> Tuple[int, List[EntryResult]]:
    """Evaluate every JSON-lines entry in ``path``; exit code 0 iff all pass."""
    results: List[EntryResult] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            entry = CorpusEntry.from_dict(json.loads(line))
        except (ValueError, TypeError, PSolverError) as e:
            results.append(EntryResult(f"line {lineno}", False, f"malformed entry: {e}", 0.0))
            continue
        try:
            results.append(evaluate_entry(entry, time_limit))
        except Exception as e:  # one broken entry must not stop the run
            results.append(EntryResult(entry.id, False, f"{type(e).__name__}: {e}", 0.0))
    code = EXIT_OK if all(r.passed for r in results) else EXIT_NO_R
    return code, results


def render_corpus(results: Sequence[EntryResult]) -> str:
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.id}  {r.seconds:.3f}s  {r.reason}" for r in results]
    n = sum(r.passed for r in results)
    lines.append(f"{n}/{len(results)} passed")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Manufactured ODEs
# ---------------------------------------------------------------------------

_EXPONENTS = (mpq(-3), mpq(-2), mpq(-1), mpq(1), mpq(2), mpq(3), mpq(-1, 2), mpq(1, 2), mpq(3, 2))


def _random_poly(rng: random.Random, degree: int, vl: Tuple[str, ...]) -> MultiPoly:
    d = rng.randint(1, degree)
    monos = [(i, j) for i in range(d + 1) for j in range(d + 1 - i)]
    terms = {}
    # at least one monomial of top degree so the draw really has degree d
    top = [m for m in monos if sum(m) == d]
    picks = {rng.choice(top)} | {m for m in monos if rng.random() < 0.5}
    for m in picks:
        re = rng.choice((-3, -2, -1, 1, 2, 3))
        im = rng.choice((-2, -1, 1, 2)) if rng.random() < 0.15 else 0
        terms[m] = GaussianRational(re, im)
    return MultiPoly(terms, vl).monic()


def _squarefree(p: MultiPoly) -> bool:
    return all(poly_gcd(p, partial_derivative(p, v)).is_constant() for v in p.used_vars())


def manufacture(seed: int, degree: int = 1, max_factors: int = 3, retries: int = 200) -> CorpusEntry:
    """An ODE with integrating factor 1/prod(f_i) built from W = sum n_i log f_i.

    M = -W_x*h and N = W_y*h with h = prod f_i, so N*W_x + M*W_y = 0 and W is a
    first integral.  Degenerate draws (repeated or non-coprime factors, M or N
    zero, common factors of M and N) are redrawn.
    """
    if degree < 1:
        raise ValueError("degree must be at least 1")
    rng = random.Random(seed)
    vl = ("x", "y")
    for _ in range(retries):
        fs = [_random_poly(rng, degree, vl) for _ in range(rng.randint(1, max_factors))]
        ns = [rng.choice(_EXPONENTS) for _ in fs]
        if any(f.is_constant() or not _squarefree(f) for f in fs):
            continue
        if any(not poly_gcd(a, b).is_constant() for i, a in enumerate(fs) for b in fs[i + 1:]):
            continue
        h = MultiPoly.const(1, vl)
        for f in fs:
            h = h * f
        Wx = RationalFunction.from_poly(MultiPoly.zero(vl))
        Wy = Wx
        for f, n in zip(fs, ns):
            Wx = Wx + RationalFunction(f.derivative("x").scale(n), f)
            Wy = Wy + RationalFunction(f.derivative("y").scale(n), f)
        hr = RationalFunction.from_poly(h)
        M, N = -(Wx * hr), Wy * hr
        if not (M.is_polynomial() and N.is_polynomial()) or M.is_zero() or N.is_zero():
            continue
        M, N = M.num, N.num
        if not poly_gcd(M, N).is_constant():
            continue
        ode = f"y' = ({print_expr(poly_to_expr(M))})/({print_expr(poly_to_expr(N))})"
        R = RationalFunction(MultiPoly.const(1, vl), h)
        return CorpusEntry(
            id=f"manufactured-{seed}-d{degree}",
            ode=ode,
            options={"degree": degree, "all_solutions": True},
            expected_R=print_expr(unsubstitute(R, BasisTable())),
            expect="solved",
            planted=[print_expr(poly_to_expr(f)) for f in fs],
        )
    raise RuntimeError(f"no usable draw for seed {seed} after {retries} attempts")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _numberf(text: str):
    if text == "all":
        return "all"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'all'")
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer or 'all'")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number")
    if not v > 0:
        raise argparse.ArgumentTypeError("expected a positive number")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer")
    if v < 1:
        raise argparse.ArgumentTypeError("expected an integer >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a single JSON document")
    common.add_argument("--time-limit", type=_positive_float, default=None,
                        help=f"seconds (default {DEFAULT_TIME_LIMIT:g}, or $PSOLVE_TIME_LIMIT)")
    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--degree", type=_positive_int, default=1, help="maximal Darboux degree")
    search.add_argument("--numberf", type=_numberf, default=7,
                        help="how many Darboux polynomials to offer (integer or 'all')")
    search.add_argument("--all-solutions", action="store_true",
                        help="exhaustive Darboux search instead of one root per conjugate pair")
    search.add_argument("--extended", action="store_true", help="also try exponential factors exp(P/Q)")
    search.add_argument("--guess", action="store_true", help="add seeds from factors of M, N, T")

    p = argparse.ArgumentParser(prog="psolve", description="Integrating factors and first integrals of y' = M/N.")
    sub = p.add_subparsers(dest="subcommand", required=True)
    helps = {
        "solve": "integrating factor and first integral",
        "intfact": "integrating factor",
        "basis": "basis of functions",
        "dbasis": "derivatives of the basis functions",
        "dop": "the cleared derivation D",
        "eigenpol": "Darboux polynomials",
        "eigenpval": "Darboux polynomials with cofactors",
    }
    for name in STAGES:
        sp = sub.add_parser(name, parents=[common, search], help=helps[name])
        sp.add_argument("ode", help="e.g. \"y' = y/x\", or - to read stdin")
    sp = sub.add_parser("check", parents=[common], help="verify a candidate R and/or first integral")
    sp.add_argument("ode")
    sp.add_argument("--intfact", help="candidate integrating factor")
    sp.add_argument("--solution", help="candidate first integral F (or 'F = C')")
    sp = sub.add_parser("corpus", parents=[common], help="run a JSON-lines fixture file")
    sp.add_argument("path")
    sp = sub.add_parser("manufacture", help="print JSON-lines entries with a known integrating factor")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--degree", type=_positive_int, default=1)
    sp.add_argument("--count", type=_positive_int, default=1)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    out = sys.stdout
    if args.subcommand == "manufacture":
        for k in range(args.count):
            out.write(json.dumps(manufacture(args.seed + k, args.degree).to_dict()) + "\n")
        return EXIT_OK
    limit = args.time_limit if args.time_limit is not None else default_time_limit()
    if args.subcommand == "corpus":
        try:
            code, results = corpus_run(args.path, limit)
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
        if args.json:
            out.write(json.dumps([asdict(r) for r in results], indent=2) + "\n")
        else:
            out.write(render_corpus(results) + "\n")
        return code
    ode = sys.stdin.read().strip() if args.ode == "-" else args.ode
    if args.subcommand == "check":
        code, report = check(ode, args.intfact, args.solution)
        if args.json:
            out.write(dump_json(report) + "\n")
        else:
            for key in ("R", "solution"):
                if key in report:
                    v = report[key]
                    shown = v.get("expr") or v.get("F")
                    out.write(f"{key}: {shown}: {'verified' if v['verified'] else 'NOT verified'}\n")
            if "error" in report:
                out.write(f"error: {report['error']}\n")
        return code
    cfg = RunConfig(subcommand=args.subcommand, degree=args.degree, numberf=args.numberf,
                    all_solutions=args.all_solutions, extended=args.extended, guess=args.guess,
                    json=args.json, time_limit=limit)
    code, report = run(cfg, ode)
    out.write((dump_json(report) if cfg.json else render_text(cfg, report, code)) + "\n")
    return code


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
