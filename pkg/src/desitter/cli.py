"""Command-line front end: basis evaluation, verification suites, expansions and transforms.

Every command builds its full report in memory and writes it only at the end,
so a configuration error (exit 2) never leaves partial output behind.  A failed
check exits with 1.  Reports carry no timing fields, so a fixed ``--seed``
reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import fnmatch
import io
import json
import os
import sys

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

CHARTS = ("S", "H", "O", "OC", "OT", "C", "SH")
SURFACES = ("hyperboloid", "cone")
BUILTIN_FIELDS = ("bump0", "bump1", "bump2", "zero")


class ConfigError(Exception):
    pass


def _apply_thread_cap() -> None:
    # BLAS pools read these at import time, so this runs before numpy loads.
    raw = os.environ.get("DESITTER_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DESITTER_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"DESITTER_THREADS must be a positive integer, got {raw!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


# ---------------------------------------------------------------------------
# argument parsing


def _parse_tol(text: str) -> tuple[str, float]:
    pattern, sep, value = text.partition("=")
    if not sep or not pattern:
        raise argparse.ArgumentTypeError(f"tolerance override must look like PATTERN=VALUE, got {text!r}")
    try:
        tol = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {value!r} is not a number") from None
    if not tol > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return pattern, tol


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="csv dumps grid values where a command has them")
    common.add_argument("--tol", type=_parse_tol, action="append", default=[], metavar="PATTERN=VALUE", help="override the tolerance of checks whose name matches the glob PATTERN")

    def chart_args(p, required=True, surface=True):
        p.add_argument("--chart", choices=CHARTS, required=required, default=None)
        if surface:
            p.add_argument("--surface", choices=SURFACES, default="hyperboloid")

    def spec_arg(p):
        p.add_argument("--spec", help="JSON file with truncation fields (rho_max, n_rho, cap, ...)")

    def field_arg(p, required=True):
        p.add_argument("--field", required=required, help="builtin:NAME (bump0, bump1, bump2, zero) or table:PATH to a grid CSV")

    parser = argparse.ArgumentParser(prog="desitter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval-basis", parents=[common], help="evaluate one basis function at points or on a grid")
    chart_args(p)
    p.add_argument("--label", required=True, help='JSON label, e.g. \'{"rho": 1.2, "j": 2, "l": 1, "m": 0}\'')
    p.add_argument("--point", action="append", default=[], help="comma-separated chart parameters; repeatable")
    p.add_argument("--eps", type=int, choices=(-1, 1), help="sheet sign for cone H points")
    spec_arg(p)

    p = sub.add_parser("check-commutators", parents=[common], help="commutation relations of the generator operators")
    chart_args(p)
    p.add_argument("--pairs", type=int, default=100)

    p = sub.add_parser("check-laplacian", parents=[common], help="-F by generator composition against the chart Laplacian")
    chart_args(p, required=False)
    p.add_argument("--points", type=int, default=50)

    p = sub.add_parser("check-casimir-w", parents=[common], help="Casimir and subgroup eigenvalues of random basis functions, W annihilation")
    chart_args(p)
    p.add_argument("--labels", type=int, default=20)
    p.add_argument("--points", type=int, default=50)

    p = sub.add_parser("orthogonality", parents=[common], help="Gram matrices over discrete labels")
    chart_args(p, required=False, surface=False)

    p = sub.add_parser("expand", parents=[common], help="expansion coefficients of a field")
    chart_args(p)
    spec_arg(p)
    field_arg(p)
    p.add_argument("--threshold", type=float, default=0.0, help="drop coefficients with |c| at or below this")
    p.add_argument("--max-entries", type=int, default=None)

    p = sub.add_parser("synth", parents=[common], help="evaluate a truncated expansion from an expand report")
    p.add_argument("--coeffs", required=True, help="JSON written by expand")
    p.add_argument("--point", action="append", default=[], help="comma-separated chart parameters; repeatable")
    field_arg(p, required=False)

    p = sub.add_parser("plancherel", parents=[common], help="Plancherel identity and roundtrip error")
    chart_args(p, required=False)
    spec_arg(p)
    field_arg(p, required=False)

    p = sub.add_parser("gg", parents=[common], help="orispherical transform values and equivariance")
    field_arg(p, required=False)
    p.add_argument("--k", action="append", default=[], help="comma-separated cone vector k0..k4; repeatable")
    p.add_argument("--samples", type=int, default=20, help="random group elements for the equivariance checks")

    p = sub.add_parser("transition", parents=[common], help="transition coefficients between cone bases")
    p.add_argument("--label-a", help="JSON label with chart")
    p.add_argument("--label-b", help="JSON label with chart")
    p.add_argument("--samples", type=int, default=3, help="random S labels for the S-to-C row-sum checks")

    p = sub.add_parser("selftest", parents=[common], help="special-function oracles and fast geometric checks")
    p.add_argument("--quick", action="store_true", help="oracles on a 20-point grid only")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{what} {text!r} is not a comma-separated list of numbers") from None
    if len(vals) != n:
        raise ConfigError(f"{what} needs {n} numbers, got {len(vals)}")
    return vals


def _load_json(path: str, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path!r} is not valid JSON: {exc}") from None


def _spec(args):
    from .transforms import TruncationSpec

    if getattr(args, "spec", None) is None:
        return TruncationSpec()
    d = _load_json(args.spec, "spec file")
    if not isinstance(d, dict):
        raise ConfigError("spec file must hold a JSON object")
    return TruncationSpec.from_dict(d)


def _label(text: str, chart: str | None = None):
    from .bases import SpectralLabel

    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"label is not valid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("label must be a JSON object")
    if chart is not None:
        if d.setdefault("chart", chart) != chart:
            raise ConfigError(f"label chart {d['chart']!r} differs from --chart {chart}")
    return SpectralLabel.from_dict(d)


def _field(spec_text: str | None, grid=None):
    """A builtin field callable, or the values of a grid CSV on ``grid``."""
    from . import transforms as tr

    if spec_text is None:
        return None
    kind, sep, name = spec_text.partition(":")
    if not sep:
        raise ConfigError(f"field must be builtin:NAME or table:PATH, got {spec_text!r}")
    if kind == "builtin":
        if name == "zero":
            return lambda *x: 0.0 * x[0]
        if name in ("bump0", "bump1", "bump2"):
            alpha, center = tr.BUMP_BATTERY[int(name[-1])]
            return tr.gaussian_bump(alpha, center)
        raise ConfigError(f"unknown builtin field {name!r}; choose from {', '.join(BUILTIN_FIELDS)}")
    if kind == "table":
        if grid is None:
            raise ConfigError("table fields need a quadrature grid")
        try:
            with open(name, newline="") as fh:
                return tr.read_grid_csv(fh, grid)
        except OSError as exc:
            raise ConfigError(f"cannot read table {name!r}: {exc.strerror}") from None
    raise ConfigError(f"unknown field kind {kind!r}")


def _hyperboloid_only(args) -> None:
    if args.surface != "hyperboloid":
        raise ConfigError(f"{args.command} works on the hyperboloid only")


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}
    cfg["tol"] = [list(t) for t in args.tol]
    return cfg


# ---------------------------------------------------------------------------
# commands; each returns (checks, result, csv_payload)


def cmd_eval_basis(args, rng):
    import numpy as np

    from .bases import basis_field, eigenvalues
    from .charts import ChartId, ChartPoint, Surface
    from .generators import casimir_F, casimir_scale
    from .transforms import build_grid, evaluate_on_grid
    from .checks import Check

    lab = _label(args.label, args.chart)
    surface = Surface(args.surface)
    f = basis_field(lab, surface)
    if not args.point:
        grid = build_grid(args.chart, surface, _spec(args))
        vals = evaluate_on_grid(f, grid)
        result = {"label": lab.to_dict(), "n_nodes": int(vals.size), "max_abs": float(np.max(np.abs(vals)))}
        return [], result, (grid, vals)
    eps = None
    if lab.chart is ChartId.H and surface is Surface.CONE:
        eps = lab.eps if args.eps is None else args.eps
    points = [ChartPoint(args.chart, surface, _floats(t, 4, "point"), eps) for t in args.point]
    p = np.array([pt.params for pt in points]).T
    e = None if eps is None else np.full(p.shape[1], float(eps))
    vals = np.asarray(f(list(p), e), dtype=complex)
    scale = casimir_scale(f, p, lab.chart, surface, e)
    res = np.abs(np.asarray(casimir_F(f, p, lab.chart, surface, e)) - eigenvalues(lab)["F"] * vals) / scale
    checks = [Check(f"eval-basis/F-eigenvalue/{i}", "eigenvalue equation", float(r), 1e-6) for i, r in enumerate(res)]
    result = {"label": lab.to_dict(), "values": [{"point": pt.to_dict(), "re": v.real, "im": v.imag} for pt, v in zip(points, vals)]}
    return checks, result, None


def cmd_check_commutators(args, rng):
    from .checks import commutator_checks

    if args.pairs < 1:
        raise ConfigError("--pairs must be positive")
    return commutator_checks(args.chart, args.surface, rng, n_pairs=args.pairs), None, None


def cmd_check_laplacian(args, rng):
    from .checks import laplacian_checks

    if args.points < 1:
        raise ConfigError("--points must be positive")
    charts = [args.chart] if args.chart else CHARTS
    out = []
    for c in charts:
        out += laplacian_checks(c, rng, n=args.points, surface=args.surface)
    return out, None, None


def cmd_check_casimir_w(args, rng):
    from .checks import eigen_checks

    if args.labels < 1 or args.points < 1:
        raise ConfigError("--labels and --points must be positive")
    return eigen_checks(args.chart, args.surface, rng, n_labels=args.labels, n_points=args.points), None, None


def cmd_orthogonality(args, rng):
    from .checks import orthogonality_checks

    out = []
    for c in [args.chart] if args.chart else CHARTS:
        out += orthogonality_checks(c, rng)
    return out, None, None


def _expansion_checks(f, coeffs, label: str):
    from .checks import Check
    from .transforms import plancherel_check, roundtrip_error

    lhs, rhs = plancherel_check(f, coeffs)
    rel = abs(lhs - rhs) / lhs if lhs > 0 else abs(rhs)
    return [
        Check(f"plancherel/{coeffs.chart.value}/{label}", "Plancherel identity", rel, 1e-2),
        Check(f"roundtrip/{coeffs.chart.value}/{label}", "expansion roundtrip", roundtrip_error(f, coeffs), 1e-2),
    ], {"norm_squared": lhs, "plancherel_sum": rhs}


def cmd_expand(args, rng):
    from .transforms import analyze, plan_for

    _hyperboloid_only(args)
    if args.threshold < 0:
        raise ConfigError("--threshold must be nonnegative")
    spec = _spec(args)
    grid = plan_for(args.chart, spec).grid
    f = _field(args.field, grid)
    coeffs = analyze(f, args.chart, spec)
    checks, sums = _expansion_checks(f, coeffs, args.field)
    result = dict(sums, coefficients=coeffs.to_dict(args.threshold, args.max_entries))
    return checks, result, None


def cmd_synth(args, rng):
    from .charts import ChartPoint, Surface
    from .checks import Check
    from .transforms import CoefficientSet, evaluate_on_grid, plan_for, synthesize, synthesize_on_grid

    d = _load_json(args.coeffs, "coefficient file")
    if isinstance(d, dict) and "result" in d:
        d = d["result"].get("coefficients", d)
    coeffs = CoefficientSet.from_dict(d)
    if args.point:
        points = [ChartPoint(coeffs.chart, Surface.HYPERBOLOID, _floats(t, 4, "point")) for t in args.point]
        vals = [synthesize(coeffs, pt) for pt in points]
        result = {"values": [{"point": pt.to_dict(), "re": v.real, "im": v.imag} for pt, v in zip(points, vals)]}
        return [], result, None
    grid = plan_for(coeffs.chart, coeffs.spec).grid
    vals = synthesize_on_grid(coeffs)
    checks = []
    f = _field(args.field, grid)
    if f is not None:
        import numpy as np

        fv = evaluate_on_grid(f, grid)
        w = grid.weights
        den = float(np.sum(w * np.abs(fv) ** 2))
        err = float(np.sqrt(np.sum(w * np.abs(fv - vals) ** 2) / den)) if den > 0 else float(np.sqrt(np.sum(w * np.abs(vals) ** 2)))
        checks.append(Check(f"roundtrip/{coeffs.chart.value}/{args.field}", "expansion roundtrip", err, 1e-2))
    return checks, {"chart": coeffs.chart.value, "n_nodes": int(vals.size)}, (grid, vals)


def cmd_plancherel(args, rng):
    from .checks import plancherel_checks
    from .transforms import analyze, plan_for

    _hyperboloid_only(args)
    spec = _spec(args)
    charts = [args.chart] if args.chart else CHARTS
    if args.field is None:
        out = []
        for c in charts:
            out += plancherel_checks(c, spec)
        return out, None, None
    checks, sums = [], {}
    for c in charts:
        f = _field(args.field, plan_for(c, spec).grid)
        ch, s = _expansion_checks(f, analyze(f, c, spec), args.field)
        checks += ch
        sums[c] = s
    return checks, sums, None


def cmd_gg(args, rng):
    from .checks import gg_checks
    from .transforms import gaussian_bump, gg_transform, hyperboloid_point

    if args.samples < 0:
        raise ConfigError("--samples must be nonnegative")
    psi = _field(args.field) if args.field else gaussian_bump(2.0, hyperboloid_point(0.3, (0.2, 0.5, -0.4, 0.7)))
    values = []
    for text in args.k:
        k = _floats(text, 5, "cone vector")
        v = gg_transform(psi, k)
        values.append({"k": list(k), "re": v.real, "im": v.imag})
    checks = gg_checks(rng, n=args.samples) if args.samples else []
    return checks, {"values": values} if values else None, None


def cmd_transition(args, rng):
    from .charts import Surface
    from .checks import transition_checks
    from .transforms import TruncationSpec, build_section_grid, transition_coefficients

    if (args.label_a is None) != (args.label_b is None):
        raise ConfigError("give both --label-a and --label-b, or neither")
    if args.label_a is None:
        if args.samples < 1:
            raise ConfigError("--samples must be positive")
        return transition_checks(rng, n=args.samples), None, None
    a, b = _label(args.label_a), _label(args.label_b)
    if a.chart.value == "H" or b.chart.value == "H":
        raise ConfigError("transition coefficients use the single-sheet cone charts (not H)")
    grid = build_section_grid(b.chart, TruncationSpec(n_radial=240, n_angle=24, n_circle=25), extent=12.0)
    t = transition_coefficients(a, b, Surface.CONE, grid)
    return [], {"label_a": a.to_dict(), "label_b": b.to_dict(), "re": t.real, "im": t.imag}, None


def cmd_selftest(args, rng):
    from .checks import chart_identity_checks, commutator_checks, cone_match_checks, laplacian_checks, specfn_checks

    out = specfn_checks(quick=args.quick, seed=args.seed)
    if args.quick:
        return out, None, None
    out += chart_identity_checks(rng)
    for c, s in (("S", "hyperboloid"), ("H", "hyperboloid"), ("O", "hyperboloid"), ("C", "hyperboloid"), ("H", "cone")):
        out += commutator_checks(c, s, rng)
    for c in CHARTS:
        out += laplacian_checks(c, rng)
    out += cone_match_checks(rng)
    return out, None, None


COMMANDS = {
    "eval-basis": cmd_eval_basis,
    "check-commutators": cmd_check_commutators,
    "check-laplacian": cmd_check_laplacian,
    "check-casimir-w": cmd_check_casimir_w,
    "orthogonality": cmd_orthogonality,
    "expand": cmd_expand,
    "synth": cmd_synth,
    "plancherel": cmd_plancherel,
    "gg": cmd_gg,
    "transition": cmd_transition,
    "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------
# driver


def _render(args, checks, result, csv_payload) -> str:
    from .checks import summarize
    from .transforms import write_grid_csv

    for c in checks:
        for pattern, tol in args.tol:
            if fnmatch.fnmatchcase(c.name, pattern):
                c.tol = tol
    if args.format == "csv":
        if csv_payload is None:
            raise ConfigError(f"{args.command} has no grid values to write as CSV")
        buf = io.StringIO()
        write_grid_csv(buf, *csv_payload)
        return buf.getvalue()
    report = {"command": args.command, "config": _config(args), "checks": [c.to_dict() for c in checks], "summary": summarize(checks)}
    if result is not None:
        report["result"] = result
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def run(argv: list[str] | None = None) -> int:
    """Parse ``argv``, run one command and write its report; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        _apply_thread_cap()
    except ConfigError as exc:
        print(f"desitter: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    import numpy as np

    from .bases import BasisError
    from .charts import ChartError
    from .generators import GeneratorError
    from .specfn import SpecialFunctionError
    from .transforms import TransformError

    try:
        rng = np.random.default_rng(args.seed)
        checks, result, csv_payload = COMMANDS[args.command](args, rng)
        text = _render(args, checks, result, csv_payload)
    except (ConfigError, BasisError, ChartError, GeneratorError, SpecialFunctionError, TransformError) as exc:
        print(f"desitter: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        try:
            with open(args.output, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"desitter: error: cannot write {args.output!r}: {exc.strerror}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
