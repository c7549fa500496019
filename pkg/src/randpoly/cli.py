"""Command-line experiment harness; one JSON record per run on stdout or --out."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import shutil
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from colorama import Fore, Style, init

from randpoly import __version__
from randpoly.intpoly import AdmissibilityParams, parse_factors, parse_poly
from randpoly.model import model_from_name
from randpoly.primestats import (
    FieldSpec,
    factor_count_estimate,
    moment_estimate,
    pit_check,
    transitivity_verdict,
    z_statistic,
)
from randpoly.records import (
    DERIVED_ORACLE,
    PAPER_QUALITATIVE,
    experiment_record,
    make_check,
    save_distribution_csv,
    save_series_csv,
    save_weight_grid_csv,
    save_z_csv,
    write_record,
)
from randpoly.sieve import (
    ExceptionalTable,
    build_exceptional_table,
    cyclotomic_obstruction_mc,
    default_table,
    detect_power_form,
    divisor_probability_mc,
    power_sieve,
)
from randpoly.walks import (
    DEFAULT_EXACT_CAP,
    WalkParam,
    WalkSpace,
    a2_mixing,
    equidist_check,
    exact_distribution,
    fourier_inversion,
    konyagin_hypothesis,
    lambda_membership,
    lifted_sequence,
    minimal_annihilator,
)
from randpoly.weights import DEFAULT_SIEVE_CAP, PrimeRange, WeightSpec, eval_weight, w_mass, weight_property_report

logger = logging.getLogger(__name__)

THREADS_ENV = "RANDPOLY_THREADS"
# Commands that draw random samples and so need --seed
RANDOMIZED = frozenset({"z-stat", "divisor-mc", "irreducible-mc"})
# Flags that configure the harness rather than the experiment
HARNESS_KEYS = frozenset({"command", "debug", "no_progress", "assert_", "seed", "threads", "sieve_cap", "out", "csv"})

GRAY = Fore.LIGHTBLACK_EX

BASE_ART = [
    "             .  .  .",
    "         .  -=======-  .",
    "       .  -===========-  .",
    "      .  -====-   -====-  .",
    "     .  -===-       -===-  .",
    "     .  ===    . .    ===  .",
    "     .  ===     .     ===  .",
    "      .  ===         ===  .",
    "       .  ====     ====  .",
    "         .  =========  .",
    "             .  .  .",
]


# Ring glyphs take the colour of their half-plane, left of the imaginary axis first
HALF_PLANE = (Fore.CYAN, Fore.LIGHTRED_EX)
# Upper arc of the ring
ARC = Fore.CYAN
TAGLINE = "Random polynomials over prime fields"


def _glyph(ch: str, col: int, axis: int) -> str:
    if ch == " ":
        return ch
    if ch == "=":
        return HALF_PLANE[col >= axis] + ch
    if ch == "-":
        return ARC + ch
    return Fore.WHITE + ch


def print_banner(stream=None) -> None:
    """Roots-on-the-circle logo with version line; centred when the stream is a terminal."""

    stream = sys.stderr if stream is None else stream
    width = max(len(line) for line in BASE_ART)
    indent = ""
    if stream.isatty():
        indent = " " * max(0, (shutil.get_terminal_size().columns - width) // 2)
    for line in BASE_ART:
        print(indent + "".join(_glyph(ch, col, width // 2) for col, ch in enumerate(line)), file=stream)
    print(Fore.CYAN + f"randpoly [Version {__version__}]", file=stream)
    print(Fore.CYAN + TAGLINE, file=stream)
    print(file=stream)


def console(text: str = "", end: str = "\n") -> None:
    print(GRAY + text + Style.RESET_ALL, end=end, file=sys.stderr)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: Tuple[Tuple[str, object], ...]
    seed: Optional[int]
    threads: int
    sieve_cap: float
    out: Optional[str] = None
    csv: Optional[str] = None
    progress: bool = field(default=False, compare=False)

    def param(self, name: str):
        return dict(self.params)[name]

    def to_json(self) -> Dict[str, object]:
        return {
            "command": self.command,
            "params": dict(self.params),
            "seed": self.seed,
            "threads": self.threads,
            "sieve_cap": self.sieve_cap,
            "out": self.out,
            "csv": self.csv,
        }


def resolve_threads(flag: Optional[int], environ=None) -> int:
    """Flag wins over the environment, which wins over 1."""

    environ = os.environ if environ is None else environ
    if flag is not None:
        threads = flag
    elif environ.get(THREADS_ENV):
        try:
            threads = int(environ[THREADS_ENV])
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {environ[THREADS_ENV]!r}") from exc
    else:
        threads = 1
    if threads < 1:
        raise ValueError(f"Thread count must be positive, got {threads}")
    return threads


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    params = tuple(sorted((k, v) for k, v in vars(args).items() if k not in HARNESS_KEYS))
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ValueError(f"Seed must be an unsigned 64-bit integer, got {args.seed}")
    if args.command in RANDOMIZED and args.seed is None:
        raise ValueError(f"{args.command} draws random samples and needs --seed")
    return ExperimentConfig(
        args.command,
        params,
        args.seed,
        resolve_threads(args.threads),
        args.sieve_cap,
        args.out,
        args.csv,
        progress=not args.no_progress and sys.stdout.isatty(),
    )


@dataclass
class Outcome:
    results: Dict[str, object]
    checks: List[Dict[str, object]] = field(default_factory=list)
    table_hash: Optional[str] = None
    csv: Optional[Callable[[Path], int]] = None


# ---------------------------------------------------------------------------
# Shared argument handling


def _params(args: argparse.Namespace) -> AdmissibilityParams:
    return AdmissibilityParams(args.X, args.kappa, relaxed=args.relaxed)


def _table(args: argparse.Namespace, params: AdmissibilityParams) -> ExceptionalTable:
    if args.no_admissibility:
        return ExceptionalTable.empty(params)
    if args.table:
        try:
            data = json.loads(Path(args.table).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"Malformed table file {args.table}") from exc
        return ExceptionalTable.from_json(data)
    return default_table(params)


def _prime_range(X: float, config: ExperimentConfig) -> PrimeRange:
    return PrimeRange.for_weight(WeightSpec.h(X), cap=config.sieve_cap)


def _model(args: argparse.Namespace):
    return model_from_name(args.model, args.d, args.L, args.pmf)


def _space(args: argparse.Namespace) -> WalkSpace:
    mults = args.mult or [1] * len(args.primes)
    return WalkSpace(tuple(args.primes), tuple(mults), cap=args.exact_cap)


def _walk_param(space: WalkSpace, text: str) -> WalkParam:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"Malformed walk parameter {text!r}") from exc
    if isinstance(data, int):
        return WalkParam.scalar(space, data)
    if isinstance(data, list) and all(isinstance(v, list) for v in data):
        return WalkParam(space, tuple(tuple(v) for v in data))
    raise ValueError(f"Walk parameter must be an integer or a list of per-block lists: {text!r}")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_factor_count(args, config: ExperimentConfig) -> Outcome:
    params = _params(args)
    table = _table(args, params)
    report = factor_count_estimate(
        parse_factors(args.poly), args.X, params, table, prime_range=_prime_range(args.X, config),
        threads=config.threads, progress=config.progress, cache_dir=args.cache_dir,
    )
    checks = []
    if report.target is not None:
        gap = abs(report.estimate - report.target)
        checks.append(make_check("estimate-vs-factor-count", gap, args.tolerance, gap <= args.tolerance,
                                 PAPER_QUALITATIVE))
    return Outcome(report.to_json(), checks, table.hash)


def cmd_moments(args, config: ExperimentConfig) -> Outcome:
    params = _params(args)
    table = _table(args, params)
    report = moment_estimate(
        parse_factors(args.poly), args.X, args.m, params, table, prime_range=_prime_range(args.X, config),
        threads=config.threads, progress=config.progress, cache_dir=args.cache_dir,
    )
    checks = []
    if args.expect is not None:
        gap = abs(report.estimate - args.expect)
        checks.append(make_check("moment-vs-expected", gap, args.tolerance, gap <= args.tolerance,
                                 PAPER_QUALITATIVE))
    return Outcome(report.to_json(), checks, table.hash)


def cmd_transitivity(args, config: ExperimentConfig) -> Outcome:
    params = _params(args)
    table = _table(args, params)
    verdict = transitivity_verdict(
        parse_factors(args.poly), args.X, args.m, params, table, args.tolerance,
        prime_range=_prime_range(args.X, config), threads=config.threads, progress=config.progress,
        cache_dir=args.cache_dir,
    )
    gap = abs(verdict.report.estimate - verdict.bell)
    checks = [make_check("transitive", gap, args.tolerance, verdict.verdict.startswith(f"{args.m}-transitive"),
                         PAPER_QUALITATIVE)]
    return Outcome(verdict.to_json(), checks, table.hash)


def cmd_pit_check(args, config: ExperimentConfig) -> Outcome:
    K = FieldSpec.from_poly(parse_poly(args.field), assert_irreducible=args.assert_irreducible)
    report = pit_check(K, args.X, _prime_range(args.X, config), config.threads, config.progress, args.cache_dir)
    gap = abs(report.estimate - 1)
    return Outcome(report.to_json(), [make_check("prime-ideal-sum", gap, args.tolerance, gap <= args.tolerance,
                                                 PAPER_QUALITATIVE)])


def cmd_z_stat(args, config: ExperimentConfig) -> Outcome:
    params = _params(args)
    table = _table(args, params)
    w = WeightSpec.g(args.X, args.k) if args.k is not None else WeightSpec.h(args.X)
    # SieveCapError when the weight reaches past the configured cap
    PrimeRange.for_weight(w, cap=config.sieve_cap)
    report = z_statistic(_model(args), args.X, args.m, args.n, params, config.seed, args.k, table,
                         config.threads, config.progress, args.cache_dir)
    return Outcome(report.to_json(), [], table.hash, lambda path: save_z_csv(path, report.values))


def cmd_walk_exact(args, config: ExperimentConfig) -> Outcome:
    space = _space(args)
    alpha = _walk_param(space, args.alpha)
    model = _model(args)
    dist = exact_distribution(space, alpha, model, args.d)
    probs = dist.probabilities()
    total = sum(int(c) for c in dist.counts.flat)
    results = {
        "space": space.to_json(),
        "alpha": [list(b) for b in alpha.coords],
        "size": space.size,
        "mass_bits": dist.mass.bit_length(),
        "probability_at_zero": float(probs.flat[0]),
        "min_probability": float(probs.min()),
        "max_probability": float(probs.max()),
        "tv_to_uniform": float(0.5 * abs(probs - 1 / space.size).sum()),
    }
    checks = [make_check("mass", total - dist.mass, 0, total == dist.mass, DERIVED_ORACLE)]
    if args.fourier:
        gap = float(abs(fourier_inversion(space, alpha, model, args.d) - probs).max())
        checks.append(make_check("fourier-inversion", gap, 1e-9, gap <= 1e-9, DERIVED_ORACLE))
    return Outcome(results, checks, csv=lambda path: save_distribution_csv(path, dist.rows()))


def cmd_walk_mix2(args, config: ExperimentConfig) -> Outcome:
    space = WalkSpace.cyclic(args.primes, cap=args.exact_cap)
    report = a2_mixing(space, _model(args), args.d)
    checks = [
        make_check("pointwise-mixing", report.worst, float(space.Q) ** -10, report.holds, PAPER_QUALITATIVE),
        make_check("block-fourier", report.block_max, report.block_bound, report.block_holds, PAPER_QUALITATIVE),
    ]
    return Outcome(report.to_json(), checks)


def cmd_equidist(args, config: ExperimentConfig) -> Outcome:
    space = WalkSpace.single(args.p, cap=args.exact_cap)
    if args.alphas in ("nonzero", "admissible"):
        params = [WalkParam.scalar(space, a) for a in range(1, args.p)]
        if args.alphas == "admissible":
            params = [a for a in params if a.admissible(args.kappa)]
    else:
        params = [_walk_param(space, json.dumps(a)) for a in json.loads(args.alphas)]
    report = equidist_check(space, params, _model(args), args.d, args.method,
                            require_admissible=args.alphas == "admissible", kappa=args.kappa)
    checks = [make_check("deviation", report.deviation, args.tolerance, report.deviation <= args.tolerance,
                         PAPER_QUALITATIVE)]
    if args.alphas == "nonzero":
        checks.append(make_check("total-in-window", report.total, [0.9, 1.1], 0.9 <= report.total <= 1.1,
                                 PAPER_QUALITATIVE))
    results = report.to_json()
    results["params"] = [a.flat[0] for a in params]
    return Outcome(results, checks, csv=lambda path: save_series_csv(
        path, ["alpha", "nu_zero"], zip((a.flat[0] for a in params), report.values)))


def cmd_annihilator(args, config: ExperimentConfig) -> Outcome:
    results: Dict[str, object] = {}
    if args.seq:
        try:
            values = [int(v) for v in json.loads(args.seq)]
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise ValueError(f"Sequence must be a JSON list of integers: {args.seq!r}") from exc
    else:
        if not args.primes or args.alpha is None or args.beta is None or args.L is None:
            raise ValueError("Give --seq, or --primes with --alpha, --beta and --L")
        space = _space(args)
        seq = lifted_sequence(space, _walk_param(space, args.alpha), _walk_param(space, args.beta), args.L)
        values = list(seq.values)
        results["konyagin_hypothesis"] = konyagin_hypothesis(seq, args.L) if args.L >= 1 else None
    deg_bound = args.deg_bound if args.deg_bound is not None else len(values) // 2
    found = minimal_annihilator(values, args.coeff_bound, deg_bound)
    results.update(found.to_json())
    results["sequence"] = values
    checks = []
    if found.poly is not None:
        checks.append(make_check("annihilates", found.degree_searched, len(values) - 1,
                                 lambda_membership(found.poly, values, found.degree_searched), DERIVED_ORACLE))
    return Outcome(results, checks)


def cmd_power_sieve(args, config: ExperimentConfig) -> Outcome:
    P = parse_poly(args.poly)
    report = power_sieve(P, parse_poly(args.R), args.k, args.n_primes, args.prime_lo)
    results = report.to_json()
    if args.detect:
        results["form"] = detect_power_form(P).to_json()
    return Outcome(results)


def cmd_divisor_mc(args, config: ExperimentConfig) -> Outcome:
    report = divisor_probability_mc(parse_poly(args.divisor), _model(args), args.n, config.seed,
                                    config.threads, config.progress)
    lower = report.ci[0]
    checks = [make_check("sup-norm-bound", lower, report.sup_norm_bound, lower <= report.sup_norm_bound,
                         PAPER_QUALITATIVE)]
    return Outcome(report.to_json(), checks)


def cmd_weights_check(args, config: ExperimentConfig) -> Outcome:
    checks = weight_property_report(args.X, args.k, args.n_points, config.seed or 0)
    w = WeightSpec.g(args.X, args.k)
    results: Dict[str, object] = {"weight": w.to_json(), "n_points": args.n_points}
    if args.pnt:
        h = WeightSpec.h(args.X)
        mass = w_mass(h, PrimeRange.for_weight(h, cap=config.sieve_cap), threads=config.threads,
                      progress=config.progress, cache_dir=args.cache_dir)
        results["pnt_mass"] = mass
        checks.append(make_check("pnt-weight", abs(mass - 1), 0.02, abs(mass - 1) <= 0.02, PAPER_QUALITATIVE))
    results["passed"] = all(c["passed"] for c in checks)

    def grid_csv(path: Path) -> int:
        grid = [args.X / 2 + (args.X / 2) * i / (args.n_points - 1) for i in range(args.n_points)]
        return save_weight_grid_csv(path, grid, [float(v) for v in eval_weight(w, grid)])

    return Outcome(results, checks, csv=grid_csv)


def cmd_irreducible_mc(args, config: ExperimentConfig) -> Outcome:
    report = cyclotomic_obstruction_mc(_model(args), args.n_bound, args.n, config.seed, config.threads,
                                       config.progress)
    results = report.to_json()
    freq = report.frequency(2)
    results["freq_minus_one_root"] = freq
    expected = math.sqrt(2 / (math.pi * args.d))
    bound = max(0.003, 4 * math.sqrt(max(freq * (1 - freq), 1e-12) / args.n))
    gap = abs(freq - expected)
    checks = [make_check("minus-one-root-asymptotic", gap, bound, gap <= bound, PAPER_QUALITATIVE)]
    return Outcome(results, checks)


def cmd_table_build(args, config: ExperimentConfig) -> Outcome:
    params = AdmissibilityParams(args.X, args.kappa, relaxed=True)
    table = build_exceptional_table(params, args.enum_cap, progress=config.progress)
    provenance: Dict[str, int] = {}
    for entry in table.entries:
        provenance[entry.provenance] = provenance.get(entry.provenance, 0) + 1
    results: Dict[str, object] = {"size": len(table), "provenance": provenance, "hash": table.hash}
    if args.table_out:
        path = Path(args.table_out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(table.to_json(), sort_keys=True, indent=1), encoding="utf-8")
        results["written_to"] = str(path)
    if args.list:
        results["entries"] = [e.poly.to_json() for e in table.entries if e.provenance != "cyclotomic"]
    return Outcome(results, [], table.hash)


HANDLERS: Dict[str, Callable[[argparse.Namespace, ExperimentConfig], Outcome]] = {
    "factor-count": cmd_factor_count,
    "pit-check": cmd_pit_check,
    "moments": cmd_moments,
    "transitivity": cmd_transitivity,
    "z-stat": cmd_z_stat,
    "walk-exact": cmd_walk_exact,
    "walk-mix2": cmd_walk_mix2,
    "equidist": cmd_equidist,
    "annihilator": cmd_annihilator,
    "power-sieve": cmd_power_sieve,
    "divisor-mc": cmd_divisor_mc,
    "weights-check": cmd_weights_check,
    "irreducible-mc": cmd_irreducible_mc,
    "table-build": cmd_table_build,
}


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Seed (u64) for randomized runs")
    common.add_argument("--threads", type=int, default=None, help=f"Worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("--sieve-cap", type=float, default=DEFAULT_SIEVE_CAP, help="Largest X with primes up to e^X")
    common.add_argument("--out", default=None, help="Append the JSON record to this file instead of stdout")
    common.add_argument("--csv", default=None, help="Write the run's CSV series to this file")
    common.add_argument("--assert", dest="assert_", action="store_true", help="Exit 1 when a check fails")
    common.add_argument("--debug", action="store_true", help="Enable debug logging")
    common.add_argument("--no-progress", action="store_true", help="Disable progress bars")

    stats = argparse.ArgumentParser(add_help=False)
    stats.add_argument("--X", type=float, default=18.0)
    stats.add_argument("--kappa", type=float, default=0.005)
    stats.add_argument("--relaxed", action="store_true", help="Allow X and kappa outside the working range")
    stats.add_argument("--no-admissibility", action="store_true", help="Count every root, with an empty table")
    stats.add_argument("--table", default=None, help="Exceptional table JSON written by table-build")
    stats.add_argument("--cache-dir", default=None, help="Directory for cached prime segments")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", default="zero_one_monic")
    model.add_argument("--d", type=int, required=True)
    model.add_argument("--L", type=int, default=None, help="Upper end of the support for uniform_interval")
    model.add_argument("--pmf", default=None, help='JSON pmf for the custom model, e.g. {"0":"1/2","1":"1/2"}')

    walk = argparse.ArgumentParser(add_help=False)
    walk.add_argument("--exact-cap", type=int, default=DEFAULT_EXACT_CAP)

    parser = argparse.ArgumentParser(prog="randpoly", description="Random polynomial experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factor-count", parents=[common, stats], help="Weighted count of irreducible factors")
    p.add_argument("--poly", required=True)
    p.add_argument("--tolerance", type=float, default=0.1)

    p = sub.add_parser("moments", parents=[common, stats], help="m-th moment of admissible root counts")
    p.add_argument("--poly", required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--expect", type=float, default=None)
    p.add_argument("--tolerance", type=float, default=0.2)

    p = sub.add_parser("transitivity", parents=[common, stats], help="m-transitivity verdict")
    p.add_argument("--poly", required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--tolerance", type=float, default=0.25)

    p = sub.add_parser("pit-check", parents=[common, stats], help="Prime ideal theorem numerics")
    p.add_argument("--field", required=True, help="Defining polynomial of the number field")
    p.add_argument("--assert-irreducible", action="store_true")
    p.add_argument("--tolerance", type=float, default=0.05)

    p = sub.add_parser("z-stat", parents=[common, stats, model], help="Moment statistic Z over sampled P")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--k", type=int, default=None, help="Use g_{X,k} instead of h_X")
    p.add_argument("--n", type=int, default=10)

    p = sub.add_parser("walk-exact", parents=[common, model, walk], help="Exact walk distribution on V")
    p.add_argument("--primes", type=int, nargs="+", required=True)
    p.add_argument("--mult", type=int, nargs="+", default=None)
    p.add_argument("--alpha", required=True, help="Integer or JSON per-block lists")
    p.add_argument("--fourier", action="store_true", help="Cross-check by Fourier inversion")

    p = sub.add_parser("walk-mix2", parents=[common, model, walk], help="Exact alpha = 2 mixing on Z/QZ")
    p.add_argument("--primes", type=int, nargs="+", required=True)

    p = sub.add_parser("equidist", parents=[common, model, walk], help="Equidistribution at a fixed prime")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--alphas", default="admissible", help="admissible, nonzero, or a JSON list")
    p.add_argument("--kappa", type=float, default=0.005)
    p.add_argument("--method", choices=["auto", "exact", "fourier"], default="auto")
    p.add_argument("--tolerance", type=float, default=0.05)

    p = sub.add_parser("annihilator", parents=[common, walk], help="Minimal annihilator of a sequence")
    p.add_argument("--seq", default=None, help="JSON list of integers")
    p.add_argument("--primes", type=int, nargs="+", default=None)
    p.add_argument("--mult", type=int, nargs="+", default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--beta", default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--coeff-bound", type=int, default=1)
    p.add_argument("--deg-bound", type=int, default=None)

    p = sub.add_parser("power-sieve", parents=[common], help="Proper-power sieve")
    p.add_argument("--poly", required=True)
    p.add_argument("--R", default="[1]")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n-primes", type=int, default=50)
    p.add_argument("--prime-lo", type=int, default=None)
    p.add_argument("--detect", action="store_true", help="Also extract Phi * Q^k")

    p = sub.add_parser("divisor-mc", parents=[common, model], help="Monte Carlo divisor probability")
    p.add_argument("--divisor", required=True)
    p.add_argument("--n", type=int, default=100_000)

    p = sub.add_parser("weights-check", parents=[common], help="Weight function property suite")
    p.add_argument("--X", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-points", type=int, default=1000)
    p.add_argument("--pnt", action="store_true", help="Also sum log p h_X(log p) over primes")
    p.add_argument("--cache-dir", default=None)

    p = sub.add_parser("irreducible-mc", parents=[common, model], help="Cyclotomic obstruction frequencies")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--n-bound", type=int, default=3)

    p = sub.add_parser("table-build", parents=[common], help="Build the exceptional table")
    p.add_argument("--X", type=float, default=18.0)
    p.add_argument("--kappa", type=float, default=0.005)
    p.add_argument("--enum-cap", type=int, default=10)
    p.add_argument("--table-out", default=None)
    p.add_argument("--list", action="store_true", help="Include the non-cyclotomic entries")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    init(autoreset=True)
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.INFO)
    if sys.stderr.isatty():
        print_banner()

    try:
        config = resolve_config(args)
        start = time.perf_counter()
        outcome = HANDLERS[args.command](args, config)
        elapsed = time.perf_counter() - start
    except (ValueError, OSError) as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        console(f"{args.command}: {exc}")
        return 2

    record = experiment_record(args.command, config.to_json(), outcome.results, outcome.checks,
                               outcome.table_hash, {"seconds": elapsed})
    write_record(record, config.out)
    if config.csv and outcome.csv is not None:
        rows = outcome.csv(Path(config.csv))
        console(f"{rows} rows written to {config.csv}")

    failed = [c for c in outcome.checks if not c["passed"]]
    for c in failed:
        console(f"check {c['name']} failed: {c['value']} vs {c['bound']} ({c['source']})")
    if failed and args.assert_:
        return 1
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
