"""Command-line interface: ``pvsel select|simulate|bootstrap|check-specfun``.

Exit codes: 0 success, 1 failed self-check, 2 usage or configuration error,
3 numerical error (rank deficiency, degenerate fit, non-convergence).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import selfcheck
from .criteria import CriterionSpec, Kind, Schedule, parse_criteria
from .errors import ConfigError, DomainError, NumericalError
from .experiment import (
    BootstrapConfig,
    default_output_dir,
    emit_results,
    format_summary,
    load_config,
    preset_configs,
    run_bootstrap,
    run_experiments,
)
from .regcore import load_dataset
from .search import ModelFamily, select_many

log = logging.getLogger("pvsel")


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _family(args) -> ModelFamily:
    return ModelFamily.parse(args.family, args.order)


def _override(specs: list[CriterionSpec], a_n: float | None, c_n: float | None) -> list[CriterionSpec]:
    out = []
    for s in specs:
        if a_n is not None and s.kind in (Kind.MPV_MIN, Kind.MPV_MAX):
            s = replace(s, name=f"{s.name}[a={a_n:g}]", schedule=Schedule("const", a_n))
        elif c_n is not None and s.kind is Kind.PENALIZED_LL:
            s = replace(s, name=f"{s.name}[c={c_n:g}]", schedule=Schedule("const", c_n))
        s.penalty(2)
        out.append(s)
    return out


def _fmt_subset(subset, names) -> str:
    if not subset:
        return "{}"
    if names:
        return "{" + ", ".join(f"{i}:{names[i - 1]}" for i in subset) + "}"
    return "{" + ", ".join(str(i) for i in subset) + "}"


def cmd_select(args) -> int:
    d = load_dataset(args.data, args.response, delimiter=args.delimiter,
                     header=False if args.no_header else None)
    if d.M >= d.n:
        raise ConfigError(f"need more rows than regressors, got n={d.n}, M={d.M}")
    specs = _override(parse_criteria(args.criteria), args.a_n, args.c_n)
    results = select_many(d, _family(args), specs, keep_scores=args.scores)
    print(f"n={d.n} M={d.M} family={results[0].family.kind.value}")
    if results[0].family.order is not None:
        print("order: " + ",".join(str(i) for i in results[0].family.order))
    for res in results:
        print(f"{res.criterion.name}: {_fmt_subset(res.chosen, d.names)}")
        if args.scores:
            for s in res.per_stratum_scores:
                print(f"    p={s.cardinality:<3} {_fmt_subset(s.subset, None):<30} {s.log_score!r}")
    return 0


def _outdir(args) -> Path:
    return Path(args.out) if args.out else default_output_dir()


def cmd_simulate(args) -> int:
    if (args.preset is None) == (args.config is None):
        raise ConfigError("give exactly one of --preset or --config")
    crit = parse_criteria(args.criteria) if args.criteria else None
    family = _family(args) if args.family else None
    if args.preset:
        cfgs = preset_configs(args.preset, seed=args.seed or 0, reps=args.reps or 500,
                              n_list=args.n_list, criteria=crit, family=family)
        stem = args.preset.upper()
    else:
        cfgs = load_config(args.config)
        over = {}
        if args.seed is not None:
            over["seed"] = args.seed
        if args.reps:
            over["reps"] = args.reps
        if args.n_list:
            over["n_list"] = tuple(args.n_list)
        if crit:
            over["criteria"] = tuple(crit)
        if family:
            over["family"] = family
        cfgs = [replace(c, **over) for c in cfgs]
        stem = Path(args.config).stem
    result = run_experiments(cfgs, jobs=args.jobs)
    paths = emit_results(result, _outdir(args), stem)
    print(format_summary(result.summary))
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def cmd_bootstrap(args) -> int:
    cfg = BootstrapConfig(
        data=args.data,
        response=args.response,
        reps=args.reps,
        added_vars=tuple(args.added),
        seed=args.seed,
        criteria=tuple(parse_criteria(args.criteria)),
        family=_family(args),
        label=args.label,
    )
    result = run_bootstrap(cfg, jobs=args.jobs)
    paths = emit_results(result, _outdir(args), args.label)
    print(format_summary(result.summary))
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def cmd_check_specfun(args) -> int:
    results = selfcheck.run_specfun_checks(samples=args.samples, seed=args.seed,
                                           p_min=args.p_min, p_max=args.p_max, n_max=args.n_max)
    status = 0
    for r in results:
        flag = "PASS" if r.ok else "FAIL"
        print(f"[{flag}] {r.name}: {r.checked} cases ({r.detail}), {len(r.failures)} violations")
        for f in r.failures[: args.show]:
            print(f"    {f}")
        if len(r.failures) > args.show:
            print(f"    ... {len(r.failures) - args.show} more")
        status = status or (0 if r.ok else 1)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvsel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def family_flags(p, default):
        p.add_argument("--family", default=default, choices=["all", "nested", "greedy"])
        p.add_argument("--order", type=_int_list, help="column order for --family=nested")

    p = sub.add_parser("select", help="select a subset on a data file")
    p.add_argument("data")
    p.add_argument("--response", required=True, help="response column name or 1-based number")
    p.add_argument("--criteria", default="mpvc,mpvccal,mpvc-max-cal,aic,bic")
    family_flags(p, "all")
    p.add_argument("--a-n", type=float, help="constant a_n for every p-value criterion")
    p.add_argument("--c-n", type=float, help="constant C_n for every penalized-likelihood criterion")
    p.add_argument("--scores", action="store_true", help="print the scored candidates")
    p.add_argument("--delimiter")
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="run a simulation preset or config file")
    p.add_argument("--preset", help="M1, M2, M3, M4 or L1")
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reps", type=int)
    p.add_argument("--n-list", type=_int_list)
    p.add_argument("--criteria")
    p.add_argument("--family", choices=["all", "nested", "greedy"])
    p.add_argument("--order", type=_int_list)
    p.add_argument("--out", help="output directory (default $PVSEL_OUTPUT_DIR or ./pvsel-results)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bootstrap", help="parametric bootstrap on a data file")
    p.add_argument("data")
    p.add_argument("--response", required=True)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--added", type=_int_list, default=[8, 18, 28, 38, 48, 58])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--criteria", default="mpvc,mpvccal,mpvc-max-cal,aic,bic")
    family_flags(p, "greedy")
    p.add_argument("--label", default="bootstrap")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("check-specfun", help="run the special-function oracle sweeps")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-min", type=int, default=2,
                   help="smallest p in the gamma grid; the lower bound is false at p=1")
    p.add_argument("--p-max", type=int, default=40)
    p.add_argument("--n-max", type=int, default=200)
    p.add_argument("--show", type=int, default=5, help="violations to print per check")
    p.set_defaults(func=cmd_check_specfun)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"pvsel: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"pvsel: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
