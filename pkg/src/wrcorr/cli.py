"""Command-line interface: ``wrc <subcommand> [options]``.

Exit codes
----------
0  success
2  input or argument parse error
3  tied values in the input
4  capability or size cap exceeded (enumeration cap, unavailable method)
5  numerical failure (for example an unstable slope estimate)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional

from . import __version__
from .copulas import Family, parse_copula, parse_family
from .efficiency import ARE_COLUMNS, KENDALL_VS_SPEARMAN, are_table
from .errors import (
    CapExceededError,
    DegenerateSizeError,
    InsufficientRepsError,
    LengthMismatchError,
    MethodUnavailableError,
    ParameterOutOfDomainError,
    ROutOfRangeError,
    SlopeUnstableError,
    TiesPresentError,
    UnsupportedCombinationError,
    UnsupportedFamilyError,
    WrcError,
)
from .null_dist import (
    DEFAULT_CAP,
    asymptotic_quantile,
    exact_null,
    independence_test,
    kendall_null_sd,
    mc_null,
    quantile,
)
from .population import CURVE_PS, coefficient_curves, population_nu
from .power_sim import REFERENCE_STATISTICS, REFERENCE_THETAS, PowerStudyConfig, run_power_study
from .rank_core import KENDALL, Tail, WrcVariant, kendall, prepare_pairing, statistic_label, wrc

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_TIES = 3
EXIT_CAPABILITY = 4
EXIT_NUMERIC = 5

SEED_ENV = "WRC_SEED"
DEFAULT_LEVELS = (0.90, 0.95, 0.975, 0.99)
WRC_NAMES = ("lower", "upper", "sym-lower", "sym-upper")
VARIANT_CHOICES = WRC_NAMES + ("spearman", "kendall", "all")


class InputParseError(WrcError, ValueError):
    def __init__(self, message, line: Optional[int] = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


# --- input ------------------------------------------------------------------

def _read_text(path: str) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputParseError(f"cannot read {path}: {exc.strerror}") from exc


def _number(text: str) -> float:
    value = float(text.strip())
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def read_pairs(path: str, no_header: bool = False):
    """Two numeric columns from CSV text; a non-numeric first row is a header."""
    x, y = [], []
    rows = csv.reader(io.StringIO(_read_text(path)))
    for lineno, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputParseError(f"expected 2 columns, found {len(row)}", lineno)
        try:
            a, b = _number(row[0]), _number(row[1])
        except ValueError:
            if lineno == 1 and not no_header:
                continue
            raise InputParseError(f"non-numeric value in {row!r}", lineno) from None
        x.append(a)
        y.append(b)
    if not x:
        raise InputParseError("no data rows")
    return x, y


# --- option helpers -----------------------------------------------------------

def _split(values):
    out = []
    for v in values or []:
        out.extend(part.strip() for part in str(v).split(",") if part.strip())
    return out


def _int_list(values, default):
    items = _split(values)
    if not items:
        return list(default)
    out = []
    for item in items:
        lo, sep, hi = item.partition("-")
        try:
            if sep:
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(item))
        except ValueError:
            raise InputParseError(f"invalid integer list entry {item!r}") from None
    return out


def _float_list(values, default):
    items = _split(values)
    try:
        return [float(v) for v in items] if items else list(default)
    except ValueError as exc:
        raise InputParseError(f"invalid number: {exc}") from None


def _statistics(args, default_names=WRC_NAMES, default_p=(2,)):
    """Statistics from ``--variant`` and ``--p``."""
    names = _split(args.variant) or list(default_names)
    ps = _int_list(args.p, default_p)
    stats = []
    for name in names:
        if name not in VARIANT_CHOICES:
            raise InputParseError(f"unknown variant {name!r}; choose from {', '.join(VARIANT_CHOICES)}")
        if name == "all":
            stats.extend(WrcVariant.parse(f"{w}:{p}") for w in WRC_NAMES for p in ps)
        elif name == "spearman":
            stats.append(WrcVariant(Tail.LOWER, 1))
        elif name == "kendall":
            stats.append(KENDALL)
        else:
            stats.extend(WrcVariant.parse(f"{name}:{p}") for p in ps)
    return stats


def _single_statistic(args, default_names=("lower",)):
    stats = _statistics(args, default_names)
    if len(stats) != 1:
        raise InputParseError("this subcommand takes exactly one statistic (one --variant and one --p)")
    return stats[0]


def _label(stat) -> str:
    return statistic_label(stat)


def _variant_fields(stat):
    if stat == KENDALL:
        return "kendall", None
    return stat.label, stat.p


def _family_arg(name: str) -> Family:
    try:
        return parse_family(name)
    except ValueError:
        raise InputParseError(f"unknown copula family {name!r}") from None


def resolve_seed(value: Optional[int]) -> int:
    """Seed precedence: flag, then the ``WRC_SEED`` environment variable, then 0."""
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputParseError(f"{SEED_ENV}={env!r} is not an integer") from None


# --- output -----------------------------------------------------------------

def _fmt(value, digits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{digits}g}"
    return str(value)


def _round(value, digits: int):
    if isinstance(value, float) and math.isfinite(value):
        return float(f"{value:.{digits}g}")
    if isinstance(value, float):
        return None
    return value


def emit(command: str, fields, rows, args, metadata: Optional[dict] = None) -> None:
    """Write rows as CSV (header + one line per row) or as a JSON document."""
    digits = args.digits
    if args.format == "json":
        doc = {
            "command": command,
            "version": __version__,
            "metadata": {k: _round(v, digits) for k, v in (metadata or {}).items()},
            "rows": [{f: _round(r.get(f), digits) for f in fields} for r in rows],
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r.get(f), digits) for f in fields])
        text = buf.getvalue()
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- subcommands --------------------------------------------------------------

def run_compute(args) -> int:
    x, y = read_pairs(args.input, args.no_header)
    pairing = prepare_pairing(x, y)
    rows = []
    for stat in _statistics(args, default_p=(1, 2, 3, 4, 5)):
        value = kendall(pairing) if stat == KENDALL else wrc(stat, pairing)
        variant, p = _variant_fields(stat)
        rows.append({"statistic": _label(stat), "variant": variant, "p": p, "value": value})
    emit("compute", ("statistic", "variant", "p", "value"), rows, args, {"n": pairing.n})
    return EXIT_OK


def _null(stat, args, normalized):
    method = args.method or "exact"
    if method == "exact":
        return exact_null(stat, args.n, normalized=normalized, cap=args.cap, threads=args.threads)
    if method == "mc":
        return mc_null(stat, args.n, args.reps, resolve_seed(args.seed), normalized, args.threads)
    raise MethodUnavailableError(f"method {method!r} does not produce a null distribution")


def run_null_table(args) -> int:
    stat = _single_statistic(args)
    dist = _null(stat, args, args.normalized)
    vals, cum = dist.cdf_table()
    rows = [{"value": float(v), "cumulative_probability": float(c)} for v, c in zip(vals, cum)]
    meta = {"statistic": _label(stat), "n": args.n, "kind": dist.kind.value,
            "size": dist.size, "normalized": args.normalized, "seed": dist.seed}
    emit("null-table", ("value", "cumulative_probability"), rows, args, meta)
    return EXIT_OK


def run_quantiles(args) -> int:
    stats = _statistics(args, default_names=("lower",), default_p=(1, 2, 3, 4, 5))
    levels = _float_list(args.r, DEFAULT_LEVELS)
    ns = []
    for item in _split(args.n) or ["5"]:
        if item.lower() in ("inf", "infinity"):
            ns.append(math.inf)
        else:
            try:
                ns.append(int(item))
            except ValueError:
                raise InputParseError(f"invalid --n value {item!r}") from None
    method = args.method or "exact"
    rows = []
    for n in ns:
        for stat in stats:
            variant, p = _variant_fields(stat)
            if math.isinf(n) or method == "asymptotic":
                for r in levels:
                    if stat == KENDALL:
                        sd = 2.0 / 3.0 if math.isinf(n) else math.sqrt(n) * kendall_null_sd(n)
                        q = sd * asymptotic_quantile(WrcVariant(Tail.LOWER, 1), r)
                    else:
                        q = asymptotic_quantile(stat, r)
                    rows.append({"n": "inf" if math.isinf(n) else n, "statistic": _label(stat),
                                 "variant": variant, "p": p, "r": r, "quantile": q})
                continue
            ns_args = argparse.Namespace(**{**vars(args), "n": n, "method": method})
            dist = _null(stat, ns_args, normalized=True)
            for r in levels:
                rows.append({"n": n, "statistic": _label(stat), "variant": variant, "p": p, "r": r,
                             "quantile": quantile(dist, r)})
    emit("quantiles", ("n", "statistic", "variant", "p", "r", "quantile"), rows, args,
         {"method": method, "scale": "sqrt(n)"})
    return EXIT_OK


def run_test(args) -> int:
    x, y = read_pairs(args.input, args.no_header)
    stat = _single_statistic(args, default_names=("spearman",))
    report = independence_test(x, y, stat, method=args.method or "exact", alpha=args.alpha,
                               reps=args.reps, seed=resolve_seed(args.seed), cap=args.cap)
    row = report.as_dict()
    fields = ("statistic_name", "n", "statistic", "normalized", "critical_value", "p_value", "alpha",
              "method", "reject")
    emit("test", fields, [row], args, {"null_size": report.null_size})
    return EXIT_OK


def run_population(args) -> int:
    if not args.copula:
        raise InputParseError("--copula family:parameter is required")
    model = parse_copula(args.copula)
    method = args.method or "quadrature"
    rows = []
    for stat in _statistics(args):
        if stat == KENDALL:
            raise MethodUnavailableError("population values are available for the WRC family only")
        pc = population_nu(stat, model, method, reps=args.reps, seed=resolve_seed(args.seed))
        rows.append({"statistic": _label(stat), "variant": stat.label, "p": stat.p,
                     "copula": str(model), "method": pc.method.value, "value": pc.value,
                     "error_estimate": pc.error_estimate})
    emit("population", ("statistic", "variant", "p", "copula", "method", "value", "error_estimate"),
         rows, args)
    return EXIT_OK


def run_are_table(args) -> int:
    rows = are_table(args.p_max, step=args.step)
    fields = ("p",) + tuple(c[0] for c in ARE_COLUMNS)
    emit("are-table", fields, rows, args,
         {"reference": "spearman", "kendall_vs_spearman": KENDALL_VS_SPEARMAN, "slope_step": args.step})
    return EXIT_OK


def _power_config(args) -> PowerStudyConfig:
    text = args.copula or "clayton"
    name, _, par = text.partition(":")
    family = _family_arg(name)
    if par:
        try:
            thetas = [float(par)]
        except ValueError:
            raise InputParseError(f"invalid copula parameter {par!r}") from None
    else:
        thetas = _float_list(args.theta, REFERENCE_THETAS.get(family, ()))
    if not thetas:
        raise InputParseError(f"no theta values given for {family.value}")
    if args.variant or args.p:
        stats = _statistics(args)
    else:
        stats = REFERENCE_STATISTICS
    seed = resolve_seed(args.seed)
    return PowerStudyConfig(family, thetas, n=args.n, reps=args.reps, alpha=args.alpha,
                            statistics=stats, critical_source=args.method or "mc",
                            null_reps=args.null_reps,
                            null_seed=args.null_seed if args.null_seed is not None else seed,
                            seed=seed, threads=args.threads)


def run_power(args) -> int:
    report = run_power_study(_power_config(args))
    meta = {k: v for k, v in report.metadata.items() if k != "critical_values"}
    meta.update({f"critical_value[{k}]": v for k, v in report.metadata["critical_values"].items()})
    if args.layout == "wide":
        stats = report.statistics()
        rows = []
        for t in report.thetas():
            cells = [c for c in report.cells if c.theta == t]
            row = {"theta": t, "rho_s": cells[0].rho_s}
            row.update({c.statistic: c.rejection_rate for c in cells})
            rows.append(row)
        emit("power", ["theta", "rho_s"] + stats, rows, args, meta)
    else:
        rows = [dict(vars(c)) for c in report.cells]
        emit("power", report.CSV_FIELDS, rows, args, meta)
    if args.plot:
        from .plotting import plot_power
        print(plot_power(report, args.plot), file=sys.stderr)
    return EXIT_OK


def run_curves(args) -> int:
    families = ([_family_arg(f.partition(":")[0]) for f in _split(args.copula)]
                or [Family.CUADRAS_AUGE, Family.RAFTERY])
    for fam in families:
        if fam not in (Family.CUADRAS_AUGE, Family.RAFTERY):
            raise UnsupportedFamilyError("curves are drawn on [0, 1] for cuadras-auge and raftery only")
    ps = _int_list(args.p, CURVE_PS)
    rows = coefficient_curves(families, ps)
    emit("curves", ("family", "variant", "p", "theta", "value"), rows, args)
    if args.plot:
        from .plotting import plot_curves
        for path in plot_curves(rows, args.plot):
            print(path, file=sys.stderr)
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--digits", type=int, default=9, help="significant digits (default 9)")
    common.add_argument("--output", "-o", help="output file (default: standard output)")

    def stat_opts(p):
        p.add_argument("--variant", action="append",
                       help="lower, upper, sym-lower, sym-upper, spearman, kendall or all; "
                            "repeatable or comma separated")
        p.add_argument("--p", action="append", help="weight exponent(s), e.g. 2 or 1-5 or 2,3")

    def seed_opt(p):
        p.add_argument("--seed", type=int, default=None,
                       help=f"random seed (precedence: this flag, then ${SEED_ENV}, then 0)")

    parser = argparse.ArgumentParser(
        prog="wrc", description="Weighted rank correlation toolkit.",
        epilog=f"Exit codes: 0 ok, 2 parse error, 3 ties, 4 cap/capability, 5 numerical failure. "
               f"Seeds: --seed overrides ${SEED_ENV}, which overrides the default 0.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("compute", parents=[common], help="coefficients of paired data")
    p.add_argument("input", nargs="?", default="-", help="two-column CSV (default: stdin)")
    p.add_argument("--no-header", action="store_true", help="treat the first row as data")
    stat_opts(p)
    p.set_defaults(func=run_compute)

    p = sub.add_parser("null-table", parents=[common], help="null distribution as a CDF table")
    stat_opts(p)
    seed_opt(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("exact", "mc"))
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--normalized", action="store_true", help="scale values by sqrt(n)")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest n for exact enumeration")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=run_null_table)

    p = sub.add_parser("quantiles", parents=[common], help="null quantiles of sqrt(n) * statistic")
    stat_opts(p)
    seed_opt(p)
    p.add_argument("--n", action="append", help="sample size(s); 'inf' for the normal limit")
    p.add_argument("--r", action="append", help="probability level(s) (default .9,.95,.975,.99)")
    p.add_argument("--method", choices=("exact", "mc", "asymptotic"))
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=run_quantiles)

    p = sub.add_parser("test", parents=[common], help="one-sided independence test")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--no-header", action="store_true")
    stat_opts(p)
    seed_opt(p)
    p.add_argument("--method", choices=("exact", "mc", "asymptotic"))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.set_defaults(func=run_test)

    p = sub.add_parser("population", parents=[common], help="population coefficient of a copula")
    stat_opts(p)
    seed_opt(p)
    p.add_argument("--copula", help="family:parameter, e.g. clayton:0.75")
    p.add_argument("--method", choices=("closed-form", "quadrature", "mc"))
    p.add_argument("--reps", type=int, default=200_000)
    p.set_defaults(func=run_population)

    p = sub.add_parser("are-table", parents=[common], help="Pitman efficiencies versus Spearman")
    p.add_argument("--p-max", type=int, default=13)
    p.add_argument("--step", type=float, default=1e-3, help="finite-difference step in theta")
    p.set_defaults(func=run_are_table)

    p = sub.add_parser("power", parents=[common], help="Monte Carlo power study")
    stat_opts(p)
    seed_opt(p)
    p.add_argument("--copula", help="family (reference theta grid) or family:theta")
    p.add_argument("--theta", action="append", help="theta value(s), comma separated")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--reps", type=int, default=5000, help="samples per cell (50000 for full scale)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--method", choices=("mc", "asymptotic", "normal", "exact"),
                   help="critical-value source (normal: z quantile times the exact finite-n null sd)")
    p.add_argument("--null-reps", type=int, default=200_000)
    p.add_argument("--null-seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--layout", choices=("long", "wide"), default="long")
    p.add_argument("--plot", metavar="DIR", help="also write a PNG figure to DIR (needs matplotlib)")
    p.set_defaults(func=run_power)

    p = sub.add_parser("curves", parents=[common], help="coefficient-versus-theta curve data")
    p.add_argument("--copula", action="append", help="cuadras-auge and/or raftery")
    p.add_argument("--p", action="append", help="weight exponents (default 1,2,3,4,5,10)")
    p.add_argument("--plot", metavar="DIR", help="also write PNG figures to DIR (needs matplotlib)")
    p.set_defaults(func=run_curves)
    return parser


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, TiesPresentError):
        return EXIT_TIES
    if isinstance(exc, (CapExceededError, MethodUnavailableError, UnsupportedFamilyError,
                        UnsupportedCombinationError, InsufficientRepsError)):
        return EXIT_CAPABILITY
    if isinstance(exc, (SlopeUnstableError, ArithmeticError)):
        return EXIT_NUMERIC
    if isinstance(exc, (InputParseError, ParameterOutOfDomainError, ROutOfRangeError,
                        LengthMismatchError, DegenerateSizeError, ValueError)):
        return EXIT_PARSE
    raise exc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WrcError, ValueError, ArithmeticError) as exc:
        code = exit_code_for(exc)
        print(f"wrc {args.command}: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
