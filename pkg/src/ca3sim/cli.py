"""Command-line entry point: ``ca3sim run|validate|stats|patterns``.

Exit codes: 0 success, 1 configuration error (or a report that fails the
consistency check), 2 runtime error.
"""

import argparse
import json
import logging
import os
import sys

from . import patterns as pt
from .config import load_config
from .errors import ConfigError
from .harness import dumps_report, run_experiment, trials_csv, verify_report

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("ca3sim")


def _parser():
    ap = argparse.ArgumentParser(prog="ca3sim", description="CA3 spiking attractor-memory experiments.")
    ap.add_argument("--quiet", action="store_true", help="only print errors")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its report")
    run.add_argument("config")
    run.add_argument("--seed-offset", type=int, default=0, help="add to every configured seed")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("config")
    val.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    st = sub.add_parser("stats", help="recompute aggregates of a report and diff them")
    st.add_argument("report")
    st.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    pat = sub.add_parser("patterns", help="write a generated pattern set in the text format")
    pat.add_argument("--kind", choices=("auto", "paired", "sequence"), default="auto")
    pat.add_argument("-N", type=int, default=16, help="pattern length")
    pat.add_argument("-K", type=int, default=3, help="items (pairs for paired, frames for sequence)")
    pat.add_argument("-a", type=float, default=0.25, help="sparsity")
    pat.add_argument("--shift", type=int, default=2, help="per-frame shift for sequences")
    pat.add_argument("--seed", type=int, default=42)
    pat.add_argument("--out", help="file to write (default stdout)")
    pat.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return ap


def _cmd_run(args):
    cfg = load_config(args.config).with_seed_offset(args.seed_offset)
    if args.jobs < 1:
        raise ConfigError("must be at least 1", "--jobs")
    out_dir = args.out or cfg.output.dir
    log.info("running %s (%s) over seeds %s", cfg.regime, ", ".join(cfg.variants()), cfg.seeds)
    report, trials = run_experiment(cfg, n_jobs=args.jobs)
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, cfg.output.report)
    table_path = os.path.join(out_dir, cfg.output.table)
    with open(report_path, "w") as fh:
        fh.write(dumps_report(report))
    with open(table_path, "w", newline="") as fh:
        fh.write(trials_csv(trials))
    for row in report["comparisons"]:
        if "scenario" in row:
            log.info("K=%d  jaccard diff %+.3f  sigma %.3f  scenario %s",
                     row["K"], row["diff"]["jaccard"], row["sigma"], row["scenario"])
        else:
            log.info("K=%d  %.2f vs %.2f  jaccard diff %+.3f  PyrS rate %.3f vs %.3f",
                     row["K"], row["treatment_proportion"], row["control_proportion"],
                     row["mean_diff"], row["treatment_pyrs_rate"], row["control_pyrs_rate"])
    log.info("wrote %s and %s", report_path, table_path)
    return EXIT_OK


def _cmd_validate(args):
    cfg = load_config(args.config)
    log.info("%s: ok (%s, %d cell(s) x %d seed(s))", args.config, cfg.regime,
             len(cfg.variants()) * len(cfg.K_list) * (len(cfg.inhib_proportions) if cfg.regime == "inhib_sweep" else 1),
             len(cfg.seeds))
    return EXIT_OK


def _cmd_stats(args):
    try:
        with open(args.report) as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report: {exc}", args.report) from None
    problems = verify_report(report)
    for line in problems:
        print(line, file=sys.stderr)
    if problems:
        print(f"{args.report}: {len(problems)} discrepancies", file=sys.stderr)
        return EXIT_CONFIG
    log.info("%s: aggregates consistent with per-seed rows (0 discrepancies)", args.report)
    return EXIT_OK


def _cmd_patterns(args):
    if args.kind == "auto":
        pset = pt.gen_orthogonal_sparse(args.N, args.K, args.a, args.seed)
    elif args.kind == "paired":
        pset = pt.gen_paired(args.N, args.K, args.a, args.seed)
    else:
        pset = pt.gen_sequence(args.N, args.K, args.a, args.shift, args.seed)
    text = pt.format_pattern_set(pset)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "stats": _cmd_stats, "patterns": _cmd_patterns}


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    source = getattr(args, "config", None) or getattr(args, "report", None) or "<args>"
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"{source}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        print(f"{source}: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
