"""Command-line front end.

Exit codes: 0 success, 2 malformed input file, 3 invalid configuration,
4 numerical failure.  Reports go to files; stdout carries a short summary.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import io as mio
from .bootstrap import BootstrapMethod, build_ensemble
from .exceptions import (ConfigError, ConstantColumnError, DataFormatError, McbError, NumericalError,
                         RepFailedError, ReplicateFailedError)
from .mcb import EXHAUSTIVE_LIMIT, Algorithm, Pin, amuc, compute_muc, select_final_mcb
from .regression import standardize
from .selectors import SelectorKind, SelectorSpec
from .simulation import (COVERAGE_COLUMNS, DEFAULT_ALPHAS, MUC_COLUMNS, SimConfig, compare_selectors,
                         coverage_rows, load_campaign, muc_rows, run_coverage_experiment, write_csv)
from .vscs import f_test_table, vscs_from_table

EXIT_FORMAT = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4

_KIND_CHOICES = sorted({k.value for k in SelectorKind} | {"alasso", "adalasso", "stepwise-bic", "stepwise-aic"})


# ------------------------------------------------------------------ #
# argument helpers
# ------------------------------------------------------------------ #

def _alpha(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _add_selector_args(p: argparse.ArgumentParser, multiple: bool = False):
    g = p.add_argument_group("selector")
    if multiple:
        g.add_argument("--selector", action="append", choices=_KIND_CHOICES,
                       help="selection method; repeat to compare several (default: adaptive_lasso)")
    else:
        g.add_argument("--selector", choices=_KIND_CHOICES, default="adaptive_lasso")
    g.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="fixed penalty level; default chooses it by cross-validation")
    g.add_argument("--cv-folds", type=int, default=10)
    g.add_argument("--ic", default="BIC", help="stepwise criterion: AIC, BIC or a numeric C_n")
    g.add_argument("--adaptive-gamma", type=float, default=1.0)


def _add_run_args(p: argparse.ArgumentParser, B_default: int, algorithm_default: str):
    p.add_argument("--B", type=_positive_int, default=B_default, help="bootstrap replicates")
    p.add_argument("--algorithm", choices=["auto", "exhaustive", "ranked"], default=algorithm_default)
    p.add_argument("--method", choices=[m.value for m in BootstrapMethod], default=None,
                   help="bootstrap scheme (default: modified residual for lasso, residual otherwise)")
    p.add_argument("--seed", type=int, default=None, help="master seed (fallback: MCB_SEED, then 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="CSV file, or 'diabetes' for the bundled dataset")
    p.add_argument("--response", default=None, help="response column (default: last column)")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: exit 3 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcb", description="Model confidence bounds for variable selection.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-mcb", help="bootstrap model confidence bounds on a dataset")
    _add_data_args(p)
    _add_selector_args(p)
    _add_run_args(p, 1000, "auto")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--pin", choices=[x.value for x in Pin], default="none",
                   help="one-sided bounds: fix the lower bound empty or the upper bound full")
    p.add_argument("--output", "-o", default="mcb_report.json")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("muc", help="model uncertainty curves of one or more selectors")
    _add_data_args(p)
    _add_selector_args(p, multiple=True)
    _add_run_args(p, 1000, "auto")
    p.add_argument("--output", "-o", default=".", help="directory for one file per selector")
    p.add_argument("--format", choices=["json", "csv"], default="csv")

    p = sub.add_parser("vscs", help="F-test variable selection confidence set")
    _add_data_args(p)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--survivors", action="store_true", help="include every surviving model in the report")
    p.add_argument("--output", "-o", default="vscs_report.json")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    for name, helptext, default_out in (
            ("simulate", "Monte Carlo coverage and cardinality study", "coverage.csv"),
            ("compare", "compare selectors by average MUC and AMUC", "amuc.csv")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--campaign", default=None, help="JSON campaign file; flags below fill a single design")
        p.add_argument("--n", type=_positive_int, default=100)
        p.add_argument("--p", type=_positive_int, default=10)
        p.add_argument("--p-star", type=int, default=5)
        p.add_argument("--rho", type=float, default=0.0)
        p.add_argument("--gamma", type=float, default=1.0, help="coefficient decay theta_j = gamma^j")
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--errors", choices=["normal", "laplace"], default="normal")
        p.add_argument("--reps", type=_positive_int, default=200)
        p.add_argument("--alpha", type=_alpha, action="append", default=None,
                       help="confidence parameter; repeat for several (default: 0.05 .. 0.40)")
        p.add_argument("--output", "-o", default=default_out)
        p.add_argument("--muc-output", default=None, help="also write mean MUC points to this CSV")
        _add_selector_args(p, multiple=(name == "compare"))
        _add_run_args(p, 200, "ranked")
        if name == "simulate":
            p.add_argument("--vscs", action="store_true", help="also evaluate the F-test confidence set")
    return parser


def _selector_spec(kind: str, args, seed: int) -> SelectorSpec:
    ic: str | float = args.ic
    if kind in ("stepwise-bic", "stepwise-aic"):
        kind, ic = "stepwise", kind.split("-")[1].upper()
    if isinstance(ic, str) and ic.upper() not in ("AIC", "BIC"):
        try:
            ic = float(ic)
        except ValueError:
            raise ConfigError(f"--ic must be AIC, BIC or a number, got {args.ic!r}") from None
    try:
        return SelectorSpec(kind=kind, penalty_weight=args.lam, ic_penalty=ic, cv_folds=args.cv_folds,
                            adaptive_gamma=args.adaptive_gamma, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _seed_override(flag: int | None) -> int | None:
    """The --seed flag, else MCB_SEED, else None."""
    if flag is not None:
        return flag
    env = os.environ.get("MCB_SEED", "").strip()
    if not env:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"MCB_SEED must be an integer, got {env!r}") from None


def _resolve_seed(flag: int | None) -> int:
    seed = _seed_override(flag)
    return 0 if seed is None else seed


def _threads(n: int) -> int:
    return (os.cpu_count() or 1) if n <= 0 else n


def _resolve_algorithm(name: str, p: int) -> Algorithm:
    if name == "auto":
        return Algorithm.EXHAUSTIVE if p <= EXHAUSTIVE_LIMIT else Algorithm.RANKED
    return Algorithm(name)


def _load(args):
    path = mio.resolve_data_path(args.data)
    data, response = mio.load_dataset(path, args.response)
    return data, response, str(path)


def _fmt_model(names) -> str:
    return "{" + ", ".join(names) + "}" if names else "{}"


# ------------------------------------------------------------------ #
# commands
# ------------------------------------------------------------------ #

def cmd_fit_mcb(args) -> int:
    raw, response, path = _load(args)
    data, _ = standardize(raw)
    seed = _resolve_seed(args.seed)
    spec = _selector_spec(args.selector, args, seed)
    algorithm = _resolve_algorithm(args.algorithm, data.p)
    ens = build_ensemble(data, spec, args.B, args.method, seed=seed, threads=_threads(args.threads))
    muc = compute_muc(ens, algorithm, args.pin)
    pair = select_final_mcb(muc, args.alpha)
    config = {"command": "fit-mcb", "data": path, "response": response, "predictors": list(data.names),
              "n": data.n, "selector": spec.to_dict(), "alpha": args.alpha, "B": args.B,
              "method": ens.method.value, "algorithm": algorithm.value, "pin": args.pin, "seed": seed,
              "threads": args.threads}
    report = mio.mcb_report(pair, muc, args.alpha, data.names, config)
    report["selected"] = mio.names_of(ens.original, data.names) if ens.original is not None else None
    report["frequencies"] = dict(zip(data.names, map(float, ens.frequencies)))
    if args.format == "json":
        mio.write_json(report, args.output)
    else:
        _write_muc_csv(mio.muc_table(muc, data.names), args.output)
    level = round(100 * (1 - args.alpha), 6)
    print(f"{spec.label}  B={args.B}  seed={seed}  algorithm={algorithm.value}  n={data.n}  p={data.p}")
    print(f"{level:g}% MCB: width {pair.width}, BCR {pair.bcr:.4f}, cardinality {pair.cardinality}")
    print(f"  LBM {_fmt_model(report['lbm'])}")
    print(f"  UBM {_fmt_model(report['ubm'])}")
    print(f"  AMUC {report['amuc']:.4f}")
    print(f"report written to {args.output}")
    return 0


def _write_muc_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["w", "w_over_p", "cr", "lbm", "ubm"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "lbm": " ".join(r["lbm"]), "ubm": " ".join(r["ubm"])})


def cmd_muc(args) -> int:
    raw, response, path = _load(args)
    data, _ = standardize(raw)
    seed = _resolve_seed(args.seed)
    algorithm = _resolve_algorithm(args.algorithm, data.p)
    kinds = args.selector or ["adaptive_lasso"]
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    used: dict[str, int] = {}
    for kind in kinds:
        spec = _selector_spec(kind, args, seed)
        ens = build_ensemble(data, spec, args.B, args.method, seed=seed, threads=_threads(args.threads))
        muc = compute_muc(ens, algorithm)
        label = spec.label
        used[label] = used.get(label, 0) + 1
        stem = label if used[label] == 1 else f"{label}-{used[label]}"
        target = out_dir / f"muc_{stem}.{args.format}"
        rows = mio.muc_table(muc, data.names)
        if args.format == "csv":
            _write_muc_csv(rows, target)
        else:
            config = {"command": "muc", "data": path, "response": response, "selector": spec.to_dict(),
                      "B": args.B, "method": ens.method.value, "algorithm": algorithm.value, "seed": seed}
            mio.write_json({"selector": label, "amuc": amuc(muc), "muc": rows, "config": config}, target)
        print(f"{label:<16} AMUC {amuc(muc):.4f}  CR(0) {muc.cr[0]:.3f}  -> {target}")
    return 0


def cmd_vscs(args) -> int:
    raw, response, path = _load(args)
    data, _ = standardize(raw)
    table = f_test_table(data)
    result = vscs_from_table(table, args.alpha)
    config = {"command": "vscs", "data": path, "response": response, "predictors": list(data.names),
              "n": data.n, "alpha": args.alpha}
    if args.format == "json":
        mio.write_json(mio.vscs_report(result, data.names, config, survivors=args.survivors), args.output)
    else:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["size", "model", "rss", "pvalue"])
            for m, rss, pv in zip(table.models, table.rss, table.pvalues):
                if pv >= args.alpha:
                    w.writerow([len(m), " ".join(mio.names_of(m, data.names)), repr(float(rss)), repr(float(pv))])
    level = round(100 * (1 - args.alpha), 6)
    print(f"{level:g}% VSCS: {result.cardinality} surviving models, {len(result.lbms)} lower bound models")
    for m in result.lbms:
        print(f"  LBM {_fmt_model(mio.names_of(m, data.names))}")
    print(f"report written to {args.output}")
    return 0


def _designs(args, multiple_selectors: bool):
    """Simulation designs and selectors from a campaign file or the flags."""
    seed_flag = _seed_override(args.seed)
    if args.campaign:
        try:
            with open(args.campaign, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read campaign file {args.campaign}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{args.campaign}: line {exc.lineno}: {exc.msg}") from exc
        try:
            configs, selectors = load_campaign(doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{args.campaign}: {exc}") from exc
        if seed_flag is not None:
            configs = [replace(c, seed=seed_flag) for c in configs]
    else:
        seed = seed_flag if seed_flag is not None else 0
        kinds = args.selector if multiple_selectors else [args.selector]
        selectors = [_selector_spec(k, args, seed) for k in (kinds or ["adaptive_lasso"])]
        try:
            configs = [SimConfig(n=args.n, p=args.p, p_star=args.p_star, rho=args.rho, gamma=args.gamma,
                                 sigma=args.sigma, error_dist=args.errors, B=args.B, reps=args.reps,
                                 alpha_grid=tuple(args.alpha) if args.alpha else DEFAULT_ALPHAS,
                                 selector=selectors[0], seed=seed, algorithm=args.algorithm,
                                 method=args.method, vscs=getattr(args, "vscs", False),
                                 name=f"rho={args.rho:g},gamma={args.gamma:g}")]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return configs, selectors


def _progress(label: str):
    done = [0]

    def report(rep: int, total: int):
        done[0] += 1
        if done[0] == total or done[0] % max(1, total // 10) == 0:
            print(f"[{label}] {done[0]}/{total} reps", file=sys.stderr, flush=True)
    return report


def cmd_simulate(args) -> int:
    configs, _ = _designs(args, multiple_selectors=False)
    rows, mucs = [], []
    for i, c in enumerate(configs):
        label = c.name or f"design{i + 1}"
        report = run_coverage_experiment(c, threads=_threads(args.threads), progress=_progress(label))
        rows.extend(coverage_rows(report))
        mucs.extend(muc_rows(label, c.selector.label,
                             [(w / c.p, float(v)) for w, v in enumerate(report.mean_cr)]))
        for r in report.rows:
            print(f"{label}  {100 * r['confidence']:g}% {r['method']}: coverage {r['coverage_rate']:.3f}, "
                  f"cardinality {r['mean_cardinality']:.2f}")
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        write_csv(rows, COVERAGE_COLUMNS, fh)
    if args.muc_output:
        with open(args.muc_output, "w", newline="", encoding="utf-8") as fh:
            write_csv(mucs, MUC_COLUMNS, fh)
    _write_config_sidecar(args.output, "simulate", configs, [])
    print(f"results written to {args.output}")
    return 0


def cmd_compare(args) -> int:
    configs, selectors = _designs(args, multiple_selectors=True)
    if not selectors:
        raise ConfigError("compare needs at least one selector (campaign 'selectors' list or --selector)")
    table = compare_selectors(configs, selectors, threads=_threads(args.threads))
    rows = [{"design": r.design, "selector": r.selector, "amuc": r.amuc} for r in table]
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        write_csv(rows, ["design", "selector", "amuc"], fh)
    if args.muc_output:
        mucs = [row for r in table for row in muc_rows(r.design, r.selector, r.points())]
        with open(args.muc_output, "w", newline="", encoding="utf-8") as fh:
            write_csv(mucs, MUC_COLUMNS, fh)
    _write_config_sidecar(args.output, "compare", configs, selectors)
    for r in table:
        print(f"{r.design or 'design'}  {r.selector:<16} AMUC {r.amuc:.4f}")
    print(f"results written to {args.output}")
    return 0


def _write_config_sidecar(output: str, command: str, configs, selectors) -> None:
    """CSV outputs carry their resolved configuration in ``<output>.config.json``."""
    mio.write_json({"command": command, "designs": [c.to_dict() for c in configs],
                    "selectors": [s.to_dict() for s in selectors]}, f"{output}.config.json")


COMMANDS = {"fit-mcb": cmd_fit_mcb, "muc": cmd_muc, "vscs": cmd_vscs,
            "simulate": cmd_simulate, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (NumericalError, ConstantColumnError, ReplicateFailedError, RepFailedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, McbError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
