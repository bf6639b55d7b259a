"""Command-line interface: ``particle-approx <subcommand> ...``.

Exit codes: 0 success, 1 domain error (numerical failure or a failed bound
check), 2 usage error (bad arguments, unreadable input, invalid config).
"""

from __future__ import annotations

import argparse
import io as _stringio
import logging
import math
import sys
from pathlib import Path

import yaml

from .bounds import THEOREMS, TRUNCATED, VARIANTS, BoundInputError, BoundInputs, theorem_bound
from .corpus import indicator_corpus, smooth_corpus
from .discretize import (
    DiscretizationError,
    build_density_approx,
    decomposition_residual,
    make_grid,
    quantity_decomposition_residual,
    weak_error_density,
)
from .fields import NORM_NAMES, BoxDomain, FieldEvaluationError, NormData
from .harness import StudyError, run_study, verify_bounds
from .io import ConfigError, FormatError, fmt, load_study_config, read_field_file, write_pc_file, write_study_csv
from .library import make_builtin
from .quadrature import QuadratureError, QuadratureSpec, integrate_box
from .truncation import TruncationError, find_truncation_L

DOMAIN_ERRORS = (QuadratureError, TruncationError, StudyError, DiscretizationError, FieldEvaluationError)
USAGE_ERRORS = (ConfigError, FormatError, BoundInputError, OSError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _param(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, yaml.safe_load(value)


def _add_field_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--field", help="builtin field name")
    src.add_argument("--field-file", help="grid field file")
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
                   help="builtin parameter, value parsed as YAML (repeatable)")


def _add_quad(p):
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--rel-tol", type=float, default=1e-12)
    p.add_argument("--max-panels", type=int, default=256)


def _field(args):
    if args.field_file:
        if not Path(args.field_file).is_file():
            raise UsageError(f"field file not found: {args.field_file}")
        return read_field_file(args.field_file)
    return make_builtin(args.field, **dict(args.param))


def _quad(args):
    return QuadratureSpec(points=args.points, rel_tol=args.rel_tol, max_panels=args.max_panels)


def cmd_discretize(args, out):
    rho = _field(args)
    box = BoxDomain(*args.box) if args.box else rho.integration_box()
    if box is None:
        raise UsageError(f"{rho.name} has no declared support; pass --box")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    spec = _quad(args)
    pc = build_density_approx(rho, make_grid(box, args.n), spec)
    if args.output:
        write_pc_file(args.output, pc)
    print(f"n={args.n}", file=out)
    print("box=" + ",".join(fmt(b) for b in box.as_tuple()), file=out)
    print(f"mass={fmt(pc.mass())}", file=out)
    print(f"reference_mass={fmt(integrate_box(rho, box, spec))}", file=out)
    print(f"min={fmt(pc.values.min())}", file=out)
    print(f"max={fmt(pc.values.max())}", file=out)
    return 0


def _norms(args, role):
    values = {}
    for name in NORM_NAMES:
        v = getattr(args, f"{role}_{name}")
        if v is None:
            v = args.default_norm
        if v is not None:
            values[name] = v
    return NormData(**values)


def cmd_bound(args, out):
    if args.theorem in TRUNCATED and (args.eps is None or args.L is None):
        raise UsageError(f"{args.theorem} requires --eps and --L")
    inputs = BoundInputs(
        delta1=args.delta1,
        delta2=args.delta2,
        n=args.n,
        rho_norms=_norms(args, "rho"),
        phi_norms=_norms(args, "phi"),
        omega_norms=_norms(args, "omega"),
        L=args.L,
        eps=args.eps,
    )
    report = theorem_bound(args.theorem, args.variant, inputs, dict(args.override) or None)
    for line in report.as_lines():
        print(line, file=out)
    return 0


def cmd_truncate(args, out):
    if not args.eps > 0:
        raise UsageError(f"--eps must be > 0, got {args.eps!r}")
    if not args.resolution > 0:
        raise UsageError(f"--resolution must be > 0, got {args.resolution!r}")
    rho = _field(args)
    result = find_truncation_L(rho, args.eps, args.total_mass, args.resolution, _quad(args))
    for line in result.as_lines():
        print(line, file=out)
    return 0


def cmd_study(args, out):
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config not found: {path}")
    config = load_study_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    results = [run_study(case, workers=args.threads) for case in config.build_cases()]

    buf = _stringio.StringIO()
    write_study_csv(buf, results)
    target = args.output or (str(path.parent / config.output) if config.output else None)
    if target:
        Path(target).write_text(buf.getvalue(), encoding="utf-8")
        summary = out
    else:
        out.write(buf.getvalue())
        summary = sys.stderr

    ok = True
    for res in results:
        report = verify_bounds(res.records, slack=args.slack)
        ok &= report.passed
        for line in report.summary_lines(res.case.name):
            print(line, file=summary)
    print("study: " + ("PASS" if ok else "FAIL"), file=summary)
    return 0 if ok else 1


def cmd_selftest(args, out):
    tol = args.residual_tol
    if not tol >= 0:
        raise UsageError("--residual-tol must be >= 0")
    checks = []
    for tol_case, cases in ((tol, smooth_corpus()), (100 * tol, indicator_corpus())):
        for case in cases:
            for n in (4, 8):
                grid = make_grid(case.box, n)
                r = decomposition_residual(case.rho, grid, case.phi, case.spec)
                q = quantity_decomposition_residual(case.rho, case.omega, grid, case.phi, case.spec)
                checks.append((f"residual density {case.name} N={n}", r, tol_case))
                checks.append((f"residual quantity {case.name} N={n}", q, tol_case))

    # Measured errors must not depend on the Gauss order.
    case = smooth_corpus()[0]
    grid = make_grid(case.box, 8)
    errs = []
    for points in (6, 10):
        spec = QuadratureSpec(points=points)
        errs.append(weak_error_density(case.rho, build_density_approx(case.rho, grid, spec), case.phi, spec))
    indep_tol = 1e-12 * max(1.0, abs(errs[0]))
    checks.append(("quadrature independence bump N=8", abs(errs[0] - errs[1]), indep_tol))

    ok = True
    for label, value, limit in checks:
        passed = math.isfinite(value) and value < limit
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {label}: {value:.3e} (limit {limit:.1e})", file=out)
    print("selftest: " + ("PASS" if ok else "FAIL"), file=out)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="particle-approx", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log estimated norms and progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("discretize", help="cell averages of a field on an N x N grid")
    _add_field_source(p)
    p.add_argument("--box", type=float, nargs=4, metavar=("L1LO", "L1HI", "L2LO", "L2HI"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--output", help="write the piecewise-constant dump here")
    _add_quad(p)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("bound", help="evaluate an error bound")
    p.add_argument("--theorem", choices=THEOREMS, required=True)
    p.add_argument("--variant", choices=VARIANTS, default="density")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta1", type=float, default=1.0)
    p.add_argument("--delta2", type=float, default=1.0)
    p.add_argument("--L", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--default-norm", type=float, help="value for every norm not given explicitly")
    for role in ("rho", "phi", "omega"):
        for name in NORM_NAMES:
            p.add_argument(f"--{role}-{name.replace('_', '-')}", dest=f"{role}_{name}", type=float)
    p.add_argument("--override", type=_param, action="append", default=[], metavar="NAME=VALUE",
                   help="replace a bound constant (repeatable)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("truncate", help="find the truncation half-width L")
    _add_field_source(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--total-mass", type=float)
    _add_quad(p)
    p.set_defaults(func=cmd_truncate)

    p = sub.add_parser("study", help="run convergence studies from a YAML config")
    p.add_argument("config")
    p.add_argument("--output", help="CSV path (overrides the config's output)")
    p.add_argument("--threads", type=int, default=1, help="worker threads per case")
    p.add_argument("--slack", type=float, default=0.0)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("selftest", help="check exact identities and quadrature independence")
    p.add_argument("--residual-tol", type=float, default=1e-9,
                   help="limit for smooth cases; indicator cases get 100x")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
