"""Command-line entry: ``python -m rwdre <kind> [--config PATH] ...``.

Thread count must be fixed before numba starts its pool, so ``main``
reads ``--threads`` from argv before importing anything compiled.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

KINDS = ("geometry", "rate", "shape", "mc-check", "ldp", "quench", "even-time", "dump-env")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="python -m rwdre",
                                 description="Quenched rate-function experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="YAML config (defaults to a built-in example)")
        p.add_argument("--seed", type=int, help="override the seed (seed lists are shifted)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="worker threads for compiled kernels")
        p.add_argument("--budget-mb", type=float, help="memory budget for DP slabs")
        p.add_argument("--json", action="store_true", help="print the manifest as JSON")
    rp = sub.add_parser("report", help="summarise a manifest.json")
    rp.add_argument("manifest")
    rp.add_argument("--json", action="store_true")
    return ap


def _preset_threads(argv: list[str]) -> None:
    n = None
    for i, a in enumerate(argv):
        if a == "--threads" and i + 1 < len(argv):
            n = argv[i + 1]
        elif a.startswith("--threads="):
            n = a.split("=", 1)[1]
    if n is not None and n.isdigit() and int(n) > 0:
        cur = os.environ.get("NUMBA_NUM_THREADS")
        if cur is None or not cur.isdigit() or int(cur) < int(n):
            os.environ["NUMBA_NUM_THREADS"] = n


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _preset_threads(argv)
    args = build_parser().parse_args(argv)

    from .config import ConfigError, default_config, parse_config, with_overrides
    from .runner import RunManifest, report, run

    if args.command == "report":
        with open(args.manifest) as fh:
            man = RunManifest.from_dict(json.load(fh))
        text, machine = report(man)
        print(json.dumps(machine, indent=2, default=str) if args.json else text)
        return man.exit_code

    try:
        if args.config:
            with open(args.config) as fh:
                cfg = parse_config(fh.read(), kind=args.command)
        else:
            cfg = default_config(args.command)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 64
    if cfg.kind != args.command:
        print(f"config error: config is for {cfg.kind!r}, not {args.command!r}", file=sys.stderr)
        return 64
    cfg = with_overrides(cfg, seed=args.seed, out=args.out, budget_mb=args.budget_mb)
    if args.threads:
        import numba
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    man = run(cfg)
    text, machine = report(man)
    print(json.dumps(machine, indent=2, default=str) if args.json else text)
    return man.exit_code
