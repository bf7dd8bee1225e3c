"""Command line interface: run / sweep / crosscheck / fit."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import runner
from .fits import FitResult


def _load_config(path: str) -> "runner.ExperimentConfig":
    return runner.parse_config(Path(path).read_text(encoding="utf-8"))


def _add_common(p):
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="toricsim")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hint in (
        ("run", "run the configured experiment"),
        ("sweep", "run the configured sweep grid"),
        ("crosscheck", "run cross-engine identity checks"),
    ):
        sp = sub.add_parser(name, help=hint)
        _add_common(sp)
    fp = sub.add_parser("fit", help="finite-size scaling fit over a results CSV")
    fp.add_argument("--csv", required=True)
    fp.add_argument("--model", required=True,
                    choices=["log_growth", "exp_decay", "crossing_point", "quadratic_log"])
    fp.add_argument("--estimator", required=True)
    fp.add_argument("--out", default=None, help="write the fit JSON here")
    args = parser.parse_args(argv)

    if args.command == "fit":
        rows = runner.read_csv_rows(args.csv)
        result = runner.fit_rows(rows, args.model, args.estimator)
        payload = {"model": result.model, "params": result.params, "errors": result.errors}
        text = json.dumps(payload, indent=2)
        if args.out:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(text)
        return 0

    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.command == "sweep" and not (config.sweep_p or config.sweep_q or config.sweep_l):
        print("sweep requested but the config has no [sweep] section", file=sys.stderr)
        return 2
    if args.command == "crosscheck":
        config = replace(config, engine="crosscheck")
    rows, meta = runner.run(config, threads=args.threads)
    csv_path = runner.write_outputs(rows, meta, args.out)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if config.engine == "crosscheck":
        bad = [r for r in rows if r["mean"] < 1.0]
        if bad:
            for r in bad:
                print(f"FAIL {r['estimator']}: {r['mean']:.4f}", file=sys.stderr)
            return 1
        print("all cross-engine identities passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
