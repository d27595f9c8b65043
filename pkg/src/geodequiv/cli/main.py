"""Command-line entry point.

Exit status: 0 when every expected verdict holds, 1 on a verification
failure, 2 on an input error.
"""

from __future__ import annotations

import argparse
import inspect
import sys
import time
from pathlib import Path

import sympy as sp

from .. import cone as cone_mod
from .. import gallery, numcheck
from ..chart import Metric, christoffel, ricci, riemann, scalar_curvature, stress_energy
from ..expr import AssumptionError, EvaluationError, ParseError, VerdictKind, to_text, working_precision
from ..suite import CHECKS, PairContext, run_checks
from .pairfile import PairFile, PairFileError, from_pair, parse_pairfile, serialize
from .report import Record, Report

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _read_pairfile(path: str) -> PairFile:
    try:
        text = Path(path).read_text() if path != "-" else sys.stdin.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_pairfile(text, source=path)


def _rational_or_name(text: str):
    try:
        return sp.Rational(text)
    except (TypeError, ValueError, sp.SympifyError):
        if text.isidentifier():
            return text
        raise InputError(f"expected a rational or a name, got {text!r}")


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _check_records(ctx: PairContext, expected: dict[str, VerdictKind], seed: int) -> list[Record]:
    records = []
    for name, kind in expected.items():
        (res,), dt = _timed(lambda: run_checks(ctx, [name], {name: kind}, seed))
        records.append(Record(res.name, res.anchor, res.verdict, res.ok, kind.value, dt))
    return records


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check_pair(args) -> Report:
    pf = _read_pairfile(args.input)
    expected = pf.expectations()
    if args.checks:
        expected = {c: expected.get(c, VerdictKind.ZERO) for c in args.checks.split(",")}
        unknown = [c for c in expected if c not in CHECKS]
        if unknown:
            raise InputError(f"unknown check(s): {', '.join(unknown)}")
    ctx = pf.context()
    report = Report("check-pair", args.input, args.seed, args.precision)
    report.records = _check_records(ctx, expected, args.seed)
    return report


def _gallery_kwargs(name: str, args) -> dict:
    builder = gallery._BUILDERS[name]
    params = inspect.signature(builder).parameters
    given = {"n": args.n, "h": args.h, "C": args.C}
    kw = {}
    for key, value in given.items():
        if value is None:
            continue
        if key == "C" and "c" in params:
            kw["c"] = _rational_or_name(value)
        elif key in params:
            kw[key] = _rational_or_name(value) if key == "C" else value
        else:
            raise InputError(f"gallery entry {name!r} does not take --{key}")
    return kw


def cmd_gallery(args) -> Report:
    if args.list or not args.name:
        report = Report("gallery", "list", args.seed, args.precision)
        report.info = {n: gallery.entry_note(n) for n in gallery.names()}
        return report
    if args.name not in gallery.names():
        raise InputError(f"unknown gallery entry {args.name!r}; choose from {', '.join(gallery.names())}")
    entry = gallery.entry(args.name, **_gallery_kwargs(args.name, args))
    report = Report("gallery", entry.name, args.seed, args.precision)
    report.info = {"note": entry.note}
    if args.export:
        pf = from_pair(entry.pair, entry.endomorphism, entry.expected)
        Path(args.export).write_text(serialize(pf))
        report.info["exported"] = args.export
    ctx = PairContext(entry.pair, entry.endomorphism)
    report.records = _check_records(ctx, entry.expected, args.seed)
    if entry.min_poly_degree is not None:
        from ..projective import minimal_poly_degree

        (deg, coeffs), dt = _timed(lambda: minimal_poly_degree(ctx.solution.A))
        report.records.append(
            Record(
                "min-poly-degree",
                "degree of the minimal polynomial of A at the sample point",
                None,
                deg == entry.min_poly_degree,
                str(entry.min_poly_degree),
                dt,
                {"degree": deg, "coefficients": [to_text(c) for c in coeffs]},
            )
        )
    return report


def cmd_cone(args) -> Report:
    try:
        Q = [sp.Rational(q) for q in args.Q.split(",")]
    except (TypeError, ValueError) as exc:
        raise InputError(f"--Q expects comma-separated rationals: {exc}") from exc
    if len(Q) < 2:
        raise InputError("--Q needs at least two entries")
    report = Report("cone", f"diag({', '.join(map(str, Q))}) over the unit {len(Q) - 1}-sphere", args.seed, args.precision)
    cm = cone_mod.spherical_cone(len(Q) - 1)
    T = cone_mod.pullback_constant(cm, sp.diag(*Q))
    seed = args.seed
    flat, dt = _timed(lambda: riemann(cm.metric).verdict(seed))
    report.records.append(Record("cone-flat", "R^a_bcd of dr^2 + r^2 g vanishes", flat, flat.is_zero, "zero", dt))
    par, dt = _timed(lambda: cone_mod.check_parallel(cm, T, seed))
    report.records.append(Record("parallel", "covariant derivative of T on the cone", par, par.is_zero, "zero", dt))
    s, dt0 = _timed(lambda: cone_mod.project_from_cone(cm, T, seed))
    frob, dt = _timed(lambda: cone_mod.check_cone_solution(cm.base, s, seed))
    report.records.append(
        Record(
            "frobenius",
            "a_{ij,k} = lambda_i g_jk + lambda_j g_ik, lambda_{i,j} = mu g_ij - a_ij, mu_{,i} = -2 lambda_i",
            frob,
            frob.is_zero,
            "zero",
            dt0 + dt,
            {"mu": to_text(s.mu)},
        )
    )
    back, dt = _timed(lambda: (cone_mod.lift_solution(cm, s) - T).canonical().verdict(seed))
    report.records.append(Record("lift-round-trip", "lifting (a, lambda, mu) reproduces T", back, back.is_zero, "zero", dt))
    return report


def _specialization(items, chart) -> dict:
    out = {}
    for item in items or []:
        name, eq, text = item.partition("=")
        name = name.strip()
        if not eq or name not in chart.functions:
            raise InputError(f"--specialize expects <declared name>=<expression>, got {item!r}")
        out[name] = chart.parse(text) if chart.functions[name] else sp.Rational(text)
    return out


def cmd_geodesic_test(args) -> Report:
    if args.input:
        pf = _read_pairfile(args.input)
        ctx = pf.context()
        numeric = _specialization(args.specialize, ctx.pair.chart)
        subject = args.input
    else:
        entry = gallery.entry(args.gallery or "warped", **({"n": args.n} if args.n else {}))
        ctx = PairContext(entry.pair)
        numeric = dict(entry.numeric)
        numeric.update(_specialization(args.specialize, ctx.pair.chart))
        subject = entry.name
    g, gbar = ctx.pair.g, ctx.pair.gbar
    if ctx.pair.chart.functions:
        missing = set(ctx.pair.chart.functions) - set(numeric)
        if missing:
            raise InputError(f"specialize the opaque names {sorted(missing)} with --specialize")
        g, gbar = numcheck.specialize(g, numeric), numcheck.specialize(gbar, numeric)
    report = Report("geodesic-test", subject, args.seed, args.precision)
    report.info = {"runs": args.runs, "h": args.h, "N": args.N, "threshold": args.threshold}
    for k, run in enumerate(numcheck.random_runs(g, args.runs, args.seed, args.h, args.N)):
        def one():
            traj = numcheck.integrate_geodesic(run)
            return traj, numcheck.projective_deviation_details(traj, gbar)

        (traj, dev), dt = _timed(one)
        ok = dev.maximum < args.threshold if args.expect == "below" else dev.maximum > args.threshold
        report.records.append(
            Record(
                f"run-{k + 1}",
                "gbar-acceleration of a g-geodesic is parallel to its velocity",
                None,
                ok,
                f"{args.expect} {args.threshold:g}",
                dt,
                {
                    "deviation": float(f"{dev.maximum:.6e}"),
                    "energy_drift": float(f"{numcheck.energy_drift(traj):.6e}"),
                    "skipped": dev.skipped,
                },
            )
        )
    return report


_CURVATURE = {
    "christoffel": ("ull", lambda g: christoffel(g)),
    "riemann": ("ulll", lambda g: riemann(g)),
    "ricci": ("ll", lambda g: ricci(g)),
    "stress": ("ll", lambda g: stress_energy(g)),
}


def cmd_curvature(args) -> Report:
    pf = _read_pairfile(args.input)
    chart = pf.chart()
    if args.metric == "gbar":
        if pf.gbar is None and pf.A is None:
            raise InputError("file has no [gbar] or [A] block")
        g: Metric = pf.context().pair.gbar
    else:
        g = pf.metric(chart)
    report = Report("curvature", f"{args.input} ({args.metric})", args.seed, args.precision)
    whats = ["christoffel", "riemann", "ricci", "scalar", "stress"] if args.what == "all" else [args.what]
    for what in whats:
        if what == "scalar":
            value, dt = _timed(lambda: scalar_curvature(g))
            report.records.append(Record("scalar", "R = g^{jl} R_jl", None, True, None, dt, {"value": to_text(value)}))
            continue
        _, build = _CURVATURE[what]
        T, dt = _timed(lambda: build(g))
        comps = {
            ",".join(str(i + 1) for i in idx): to_text(T[idx]) for idx in T.indices() if T[idx] != 0
        }
        report.records.append(Record(what, f"nonzero components of {what}", None, True, None, dt, {"components": comps}))
    return report


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", choices=["json", "text"], default="text")
    common.add_argument("--precision", type=int, default=200, help="interval precision in bits (default 200)")
    common.add_argument("--seed", type=int, default=0, help="seed for witness-point sampling (default 0)")
    common.add_argument("--output", help="write the report to a file instead of stdout")

    p = argparse.ArgumentParser(prog="geodequiv", description="Exact checks for geodesically equivalent metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curvature", parents=[common], help="curvature of the metric in a PairFile")
    c.add_argument("--input", required=True)
    c.add_argument("--what", choices=["all", "christoffel", "riemann", "ricci", "scalar", "stress"], default="all")
    c.add_argument("--metric", choices=["g", "gbar"], default="g")
    c.set_defaults(run=cmd_curvature)

    c = sub.add_parser("check-pair", parents=[common], help="run the expected checks of a PairFile")
    c.add_argument("--input", required=True)
    c.add_argument("--checks", help="comma-separated check names (overrides the [expect] block)")
    c.set_defaults(run=cmd_check_pair)

    c = sub.add_parser("gallery", parents=[common], help="build and check a gallery entry")
    c.add_argument("name", nargs="?")
    c.add_argument("--list", action="store_true")
    c.add_argument("--n", type=int)
    c.add_argument("--h", choices=["flat", "ppwave", "sphere"])
    c.add_argument("--C")
    c.add_argument("--export", help="also write the entry as a PairFile")
    c.set_defaults(run=cmd_gallery)

    c = sub.add_parser("cone", parents=[common], help="cone correspondence for a constant parallel field")
    c.add_argument("--Q", default="1,2,3", help="diagonal of the constant Cartesian tensor (default 1,2,3)")
    c.set_defaults(run=cmd_cone)

    c = sub.add_parser("geodesic-test", parents=[common], help="numerical projective-deviation test")
    src = c.add_mutually_exclusive_group()
    src.add_argument("--input")
    src.add_argument("--gallery")
    c.add_argument("--n", type=int)
    c.add_argument("--specialize", action="append", help="name=expression for an opaque function or constant")
    c.add_argument("--runs", type=int, default=20)
    c.add_argument("--h", type=float, default=1e-3)
    c.add_argument("--N", type=int, default=1000)
    c.add_argument("--threshold", type=float, default=1e-6)
    c.add_argument("--expect", choices=["below", "above"], default="below")
    c.set_defaults(run=cmd_geodesic_test)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    t0 = time.perf_counter()
    try:
        with working_precision(args.precision):
            report = args.run(args)
    except (PairFileError, ParseError, InputError, AssumptionError, EvaluationError, ValueError, KeyError) as exc:
        print(f"geodequiv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report.wall_time = time.perf_counter() - t0
    text = report.render(args.report)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.ok else EXIT_FAIL


def main() -> None:
    sys.exit(run())
