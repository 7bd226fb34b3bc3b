"""Command-line interface.

Subcommands mirror the workflow: derive-mask, retrain, compile-rtl, report,
heatmap. Exit codes: 0 success, 2 validation error, 3 file-format error.
The only environment variable consulted is SPARSELUT_THREADS (worker count
for independent runs inside `report`).
"""

from __future__ import annotations

import argparse
import os
import sys

from sparselut.errors import CapacityError, FormatError, StateError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FORMAT = 3


def _add_config_arg(p):
    p.add_argument("--config", required=True, help="JSON config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparselut",
        description="fixed fan-in connectivity optimization and LUT compilation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive-mask", help="training step 1: derive a mask")
    _add_config_arg(p)
    p.add_argument("--out", required=True, help="mask file to write")

    p = sub.add_parser("retrain", help="training step 2: retrain under a mask")
    _add_config_arg(p)
    p.add_argument("--mask", required=True, help="mask file from derive-mask")
    p.add_argument("--out", required=True, help="model file to write (.npz)")

    p = sub.add_parser("compile-rtl", help="compile a model to tables + RTL")
    p.add_argument("--model", required=True, help="model file from retrain")
    p.add_argument("--outdir", required=True, help="directory for .tbl/.v files")

    p = sub.add_parser("report", help="run a mode/seed matrix and report")
    _add_config_arg(p)
    p.add_argument("--modes", default=None,
                   help="comma list, e.g. random*3,deepr_star,sparselut")
    p.add_argument("--seeds", type=int, default=1,
                   help="replicates per mode without an explicit multiplicity")
    p.add_argument("--outdir", default="runs", help="artifact directory")

    p = sub.add_parser("heatmap", help="first-layer heatmap CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mask", help="mask file (connectivity-count heatmap)")
    src.add_argument("--model", help="model file (mean |weight| heatmap)")
    p.add_argument("--side", type=int, default=None, help="grid side length")
    p.add_argument("--out", required=True, help="CSV file to write")
    return parser


def cmd_derive_mask(args) -> int:
    from sparselut.experiment import build_dataset, build_model_config, load_config
    from sparselut.maskfile import write_mask
    from sparselut.network import derive_mask

    cfg = load_config(args.config)
    config = build_model_config(cfg)
    dataset = build_dataset(cfg)
    mask = derive_mask(config, dataset)
    write_mask(mask, args.out)
    print(f"wrote {args.out} ({len(mask)} layers)")
    return EXIT_OK


def cmd_retrain(args) -> int:
    from sparselut.experiment import build_dataset, build_model_config, load_config, save_model
    from sparselut.maskfile import read_mask
    from sparselut.network import evaluate, retrain

    cfg = load_config(args.config)
    config = build_model_config(cfg)
    dataset = build_dataset(cfg)
    mask = read_mask(args.mask)
    model = retrain(config, mask, dataset)
    save_model(model, args.out)
    accuracy = evaluate(model, dataset)
    print(f"wrote {args.out} (test accuracy {accuracy:.4f}, "
          f"best epoch {model.best_epoch})")
    return EXIT_OK


def cmd_compile_rtl(args) -> int:
    from sparselut.experiment import load_model
    from sparselut.rtl import write_rtl
    from sparselut.tables import compile_model, write_tables

    model = load_model(args.model)
    netlist, tables = compile_model(model)
    table_files = write_tables(tables, args.outdir)
    rtl_files = write_rtl(netlist, tables, args.outdir)
    print(f"wrote {len(table_files)} tables and {len(rtl_files)} RTL files "
          f"to {args.outdir}")
    return EXIT_OK


def cmd_report(args) -> int:
    from sparselut.experiment import load_config, parse_mode_list, run_experiment

    cfg = load_config(args.config)
    modes = parse_mode_list(args.modes, args.seeds) if args.modes else None
    workers = int(os.environ.get("SPARSELUT_THREADS", "1"))
    report = run_experiment(cfg, modes, outdir=args.outdir, max_workers=workers)
    for run in report.runs:
        print(f"{run.mode} seed={run.seed} accuracy={run.accuracy:.4f} "
              f"mask={run.mask_sha256[:12]}")
    print(f"report written to {os.path.join(args.outdir, 'report.csv')}")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    from sparselut.experiment import heatmap_export, load_model
    from sparselut.maskfile import read_mask

    source = read_mask(args.mask) if args.mask else load_model(args.model)
    grid = heatmap_export(source, args.out, side=args.side)
    print(f"wrote {args.out} ({grid.shape[0]}x{grid.shape[1]})")
    return EXIT_OK


COMMANDS = {
    "derive-mask": cmd_derive_mask,
    "retrain": cmd_retrain,
    "compile-rtl": cmd_compile_rtl,
    "report": cmd_report,
    "heatmap": cmd_heatmap,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (ValueError, CapacityError, StateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
