"""Command-line interface.

Verbs:
  run <config>                  one closed-loop run, CSV + metrics output
  compare <manifest>            controller comparison table (PD / LQR / NFTSM)
  bounds <config>               analytic error bounds and feasibility report
  batch <manifest> --runs N --seed S   seeded Monte-Carlo batch statistics

Outputs land under --out, the manifest's output_dir, or the directory named
by the FFGNC_OUTPUT_ROOT environment variable.  Exit codes: 0 success,
2 configuration error, 3 runtime error.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

from .config import ConfigError, load_config
from .engine import monte_carlo_batch, run_closed_loop
from .reporting import (comparison_to_dict, emit_timeseries,
                        format_bounds_report, format_comparison,
                        load_manifest, run_comparison)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _output_dir(explicit, fallback="."):
    root = explicit or os.environ.get("FFGNC_OUTPUT_ROOT") or fallback
    os.makedirs(root, exist_ok=True)
    return root


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    log, metrics = run_closed_loop(cfg)
    out = _output_dir(args.out)
    name = os.path.splitext(os.path.basename(args.config))[0]
    csv_path = os.path.join(out, f"{name}_timeseries.csv")
    emit_timeseries(log, csv_path, decimation=args.decimation)
    metrics_path = os.path.join(out, f"{name}_metrics.json")
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(asdict(metrics), fh, indent=2)
        fh.write("\n")
    print(f"run complete: duration {metrics.duration:.1f} s, "
          f"aligned {metrics.aligned_time / 60.0:.2f} min, "
          f"fuel {metrics.fuel:.3e} Ns")
    print(f"wrote {csv_path}")
    print(f"wrote {metrics_path}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.out:
        manifest.output_dir = args.out
    elif os.environ.get("FFGNC_OUTPUT_ROOT"):
        manifest.output_dir = os.path.join(
            os.environ["FFGNC_OUTPUT_ROOT"], manifest.scenario)
    os.makedirs(manifest.output_dir, exist_ok=True)
    report = run_comparison(manifest)
    text = format_comparison(report)
    summary_path = os.path.join(manifest.output_dir,
                                f"{manifest.scenario}_comparison.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    json_path = os.path.join(manifest.output_dir,
                             f"{manifest.scenario}_comparison.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(comparison_to_dict(report), fh, indent=2)
        fh.write("\n")
    print(text, end="")
    print(f"wrote {summary_path}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    print(format_bounds_report(cfg), end="")
    return EXIT_OK


def _cmd_batch(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = load_config(manifest.config_path)
    result = monte_carlo_batch(cfg, args.runs, seed=args.seed)
    out = _output_dir(args.out, manifest.output_dir)
    path = os.path.join(out, f"{manifest.scenario}_batch.json")
    payload = {
        "scenario": manifest.scenario,
        "seeds": result.seeds,
        "stats": result.stats,
        "runs": [asdict(m) for m in result.runs],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"{len(result.seeds)} runs, aligned time "
          f"mean {result.stats['aligned_time']['mean'] / 60.0:.2f} min, "
          f"fuel mean {result.stats['fuel']['mean']:.3e} Ns")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ffgnc",
        description="Formation-flying GN&C simulator (NFTSM / PD / LQR)")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run one closed-loop scenario")
    run.add_argument("config")
    run.add_argument("--out", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--decimation", type=int, default=10,
                     help="log rows per CSV row (default every 0.1 s)")
    run.set_defaults(func=_cmd_run)

    comp = sub.add_parser("compare",
                          help="controller comparison under one scenario")
    comp.add_argument("manifest")
    comp.add_argument("--out", default=None)
    comp.set_defaults(func=_cmd_compare)

    bounds = sub.add_parser("bounds",
                            help="analytic error bounds and feasibility")
    bounds.add_argument("config")
    bounds.set_defaults(func=_cmd_bounds)

    batch = sub.add_parser("batch", help="seeded Monte-Carlo batch")
    batch.add_argument("manifest")
    batch.add_argument("--runs", type=int, default=10)
    batch.add_argument("--seed", type=int, default=None)
    batch.add_argument("--out", default=None)
    batch.set_defaults(func=_cmd_batch)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime category
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
