"""Command-line interface.

Subcommands: `cell` (cell analysis report), `sweep <experiment>` (run one
registered experiment), `list` (registry table), `report <dir>` (summarize a
written report). Exit codes: 0 all checks pass, 1 a threshold failed,
2 usage/configuration error.
"""

import argparse
import csv
import json
import os
import sys

from .config import ExperimentConfig, load_config
from .errors import ParahomError
from .registry import cell_report, get_experiment, list_experiments, run_experiment

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2


def _metric_filename(metric):
    return metric.replace(":", "_").replace("=", "").replace(",", "_")


def write_artifacts(result, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    records_path = os.path.join(out_dir, "records.csv")
    with open(records_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "t", "metric", "value", "problem_tag"])
        for r in result.records:
            writer.writerow([f"{r.eps:.17g}", r.t, r.metric,
                             f"{r.value:.17g}", r.problem_tag])

    plot_dir = os.path.join(out_dir, "plotdata")
    os.makedirs(plot_dir, exist_ok=True)
    import numpy as np
    groups = {}
    for r in result.records:
        groups.setdefault(r.metric, []).append(r)
    for metric, recs in groups.items():
        path = os.path.join(plot_dir, _metric_filename(metric) + ".dat")
        with open(path, "w", encoding="utf-8") as fh:
            for r in recs:
                if r.value > 0:
                    fh.write(f"{np.log(r.eps):.17g} {np.log(r.value):.17g}\n")

    report = {
        "experiment": result.name,
        "passed": result.passed,
        "config": result.config.to_dict() if result.config is not None else None,
        "records_file": "records.csv",
        "fits": [
            {"metric": m, "slope": f.slope, "intercept": f.intercept,
             "residual": f.residual, "eps_used": list(f.eps_used)}
            for m, f in sorted(result.fits.items())
        ],
        "checks": [
            {"metric": o.metric, "kind": o.check.kind,
             "threshold": o.check.threshold, "observed": None
             if o.observed != o.observed else o.observed,
             "passed": o.passed, "detail": o.detail}
            for o in result.outcomes
        ],
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    return report


def _print_outcomes(result):
    for o in result.outcomes:
        status = "PASS" if o.passed else "FAIL"
        print(f"{status} {result.name}/{o.metric}: {o.detail}")


def cmd_list(_args):
    rows = list_experiments()
    width = max(len(name) for name, _ in rows)
    for name, estimate in rows:
        print(f"{name:<{width}}  {estimate}")
    return EXIT_OK


def cmd_cell(args):
    config = _load_or_default(args)
    report = cell_report(config)
    text = json.dumps(report, indent=2)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "cell_report.json"), "w",
                  encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_sweep(args):
    exp = get_experiment(args.experiment)
    config = _load_or_default(args, default_factory=exp.config_factory)
    if args.budget_nodes is not None:
        data = config.to_dict()
        data["max_nodes"] = args.budget_nodes
        config = ExperimentConfig.from_dict(data)
    result = run_experiment(args.experiment, config=config, jobs=args.jobs)
    out_dir = args.out or config.out_dir or f"parahom_out_{args.experiment}"
    write_artifacts(result, out_dir)
    _print_outcomes(result)
    print(f"report written to {out_dir}")
    return EXIT_OK if result.passed else EXIT_THRESHOLD


def cmd_report(args):
    path = os.path.join(args.directory, "report.json")
    if not os.path.exists(path):
        print(f"no report.json under {args.directory}", file=sys.stderr)
        return EXIT_USAGE
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    print(f"experiment: {report['experiment']}")
    for fit in report.get("fits", []):
        print(f"  fit {fit['metric']}: slope {fit['slope']:.3f} "
              f"residual {fit['residual']:.3f}")
    for check in report.get("checks", []):
        status = "PASS" if check["passed"] else "FAIL"
        print(f"  {status} {check['metric']}: {check['detail']}")
    return EXIT_OK if report.get("passed") else EXIT_THRESHOLD


def _load_or_default(args, default_factory=None):
    if args.config:
        return load_config(args.config)
    if default_factory is not None:
        return default_factory()
    from .config import canonical_1d
    return canonical_1d()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="parahom",
        description="periodic homogenization experiments for parabolic problems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cell = sub.add_parser("cell", help="run the cell analysis and print a report")
    p_cell.add_argument("--config", help="TOML or JSON configuration file")
    p_cell.add_argument("--out", help="directory for cell_report.json")
    p_cell.set_defaults(fn=cmd_cell)

    p_sweep = sub.add_parser("sweep", help="run a registered experiment")
    p_sweep.add_argument("experiment", help="experiment name (see `parahom list`)")
    p_sweep.add_argument("--config", help="TOML or JSON configuration file")
    p_sweep.add_argument("--out", help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="concurrent per-eps jobs")
    p_sweep.add_argument("--budget-nodes", type=int, default=None,
                         help="override the mesh node budget")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_list = sub.add_parser("list", help="list registered experiments")
    p_list.set_defaults(fn=cmd_list)

    p_report = sub.add_parser("report", help="summarize a written report directory")
    p_report.add_argument("directory")
    p_report.set_defaults(fn=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ParahomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
