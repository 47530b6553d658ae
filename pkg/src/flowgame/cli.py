"""Command-line entry point: ``flowgame <subcommand> ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, reporting
from .config import RunConfig, parse_config
from .errors import InvalidInputError, NumericalError
from .traffic import write_delay_trace, write_ipd_trace


def _load(args) -> RunConfig:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    base = Path(args.config).parent if args.config else None
    if args.set:
        text += "\n" + "\n".join(args.set) + "\n"
    cfg = parse_config(text, base)
    changes = {}
    if args.trials is not None:
        changes.update(trials_h1=args.trials, trials_null=args.trials)
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    return cfg.with_params(**changes) if changes else cfg


def _prepare(args):
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = cfg.load_corpus()
    densities = cfg.fit(corpus)
    return cfg, out, corpus, densities


def cmd_simulate(args):
    cfg, out, corpus, densities = _prepare(args)
    res = harness.run_experiment(cfg.params, densities, corpus)
    files = [reporting.write_roc(out / "roc.csv", res.roc),
             reporting.write_scores(out / "scores.csv", res.h1, res.h0),
             reporting.write_csv(out / "summary.csv", reporting.SUMMARY_COLUMNS,
                                 [reporting.summary_row(args.preset, res)])]
    if not args.no_figures:
        files.append(reporting.plot_rocs(out / "roc.png", {args.preset: res.roc}))
    reporting.write_manifest(out, cfg, "simulate", files)
    print(f"{args.preset}: AUC {res.auc:.4f} over {res.h1.size} trials")


def cmd_calibrate(args):
    cfg, out, corpus, densities = _prepare(args)
    p = cfg.params.replace(eta=args.eta) if args.eta is not None else cfg.params
    cfg = cfg.with_params(eta=p.eta)
    trials = args.calibration_trials or p.trials_null
    thr, cal, val = harness.calibrate(p, densities, corpus, trials, args.validate)
    check = val if val.size else cal
    pf = float(np.mean(check > thr))
    files = [reporting.write_csv(out / "calibration.csv", reporting.CALIBRATION_COLUMNS,
                                 [(p.eta, trials, thr, pf)])]
    reporting.write_manifest(out, cfg, "calibrate", files)
    label = "validation" if val.size else "calibration"
    print(f"threshold {thr:.6g}, {label} P_F {pf:.4f}")


def cmd_sweep_sigma(args):
    cfg, out, corpus, densities = _prepare(args)
    grid = harness.default_sigma_grid(cfg.params.A_C, args.lo, args.hi)
    rows, files = [], []
    for sigma, res in harness.sweep_sigma(cfg.params, densities, corpus, grid):
        lo, hi = res.auc_interval()
        ratio = sigma / cfg.params.A_C if cfg.params.A_C > 0 else float("nan")
        rows.append((sigma, ratio, res.auc, lo, hi, res.h1.size))
        print(f"sigma/A_C {ratio:.0e}: AUC {res.auc:.4f}")
    files.append(reporting.write_csv(out / "sweep.csv", reporting.SWEEP_COLUMNS, rows))
    if not args.no_figures:
        r = np.array(rows, dtype=float)
        files.append(reporting.plot_sigma_sweep(out / "sweep.png", r[:, 1], r[:, 2],
                                                r[:, 3], r[:, 4]))
    reporting.write_manifest(out, cfg, "sweep-sigma", files)


def cmd_compare(args):
    cfg, out, corpus, densities = _prepare(args)
    results = harness.compare_strategies(cfg.params, densities, corpus, args.axis)
    files, rows = [], []
    for preset, res in results.items():
        files.append(reporting.write_roc(out / f"roc_{preset}.csv", res.roc))
        rows.append(reporting.summary_row(preset, res))
        print(f"{preset}: AUC {res.auc:.4f}")
    files.append(reporting.write_csv(out / "summary.csv", reporting.SUMMARY_COLUMNS, rows))
    if not args.no_figures:
        files.append(reporting.plot_rocs(out / "roc.png",
                                         {k: v.roc for k, v in results.items()},
                                         title=f"{args.axis} comparison"))
    reporting.write_manifest(out, cfg, f"compare --axis {args.axis}", files)


def cmd_gen_traces(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ipds, p1, p2 = harness.synthetic_traces(args.scenario, args.seed)
    write_ipd_trace(out / "ipd.txt", ipds)
    write_delay_trace(out / "path1.txt", p1)
    write_delay_trace(out / "path2.txt", p2)
    print(f"wrote {len(ipds)} IPDs and two delay traces of {len(p1)} samples to {out}")


def build_parser():
    parser = argparse.ArgumentParser(prog="flowgame", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, figures=True):
        p.add_argument("--config", help="key = value run configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--trials", type=int, help="trials per hypothesis")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--workers", type=int, help="worker processes")
        if figures:
            p.add_argument("--no-figures", action="store_true",
                           help="write CSV only, skip the PNG figures")

    p = sub.add_parser("simulate", help="one experiment: ROC and summary CSV")
    common(p)
    p.add_argument("--preset", default="run", help="label in the summary table")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="detection threshold for a target P_F")
    common(p, figures=False)
    p.add_argument("--eta", type=float)
    p.add_argument("--calibration-trials", type=int)
    p.add_argument("--validate", type=int, default=0,
                   help="fresh null trials used to measure the achieved P_F")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep-sigma", help="AUC against the adversary's sigma")
    common(p)
    p.add_argument("--lo", type=int, default=-6, help="lowest exponent of sigma/A_C")
    p.add_argument("--hi", type=int, default=3, help="highest exponent of sigma/A_C")
    p.set_defaults(func=cmd_sweep_sigma)

    p = sub.add_parser("compare", help="ROC per preset along one strategy axis")
    common(p)
    p.add_argument("--axis", required=True, choices=sorted(harness.AXES))
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-traces", help="write a synthetic corpus as trace files")
    p.add_argument("--scenario", default="a", choices=sorted(harness.SCENARIOS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_traces)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InvalidInputError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
