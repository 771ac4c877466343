"""Command-line entry point: ``slabfpp <experiment> --config spec.yaml``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import KINDS, OUT_ENV, ExperimentSpec, SpecError, default_out, run

DEFAULTS = {
    "pc-estimate": {"geometry": {"k": 1, "n_list": [32, 64, 128]}, "N": 400,
                    "options": {"tolerance": 0.01, "bracket": [0.2, 0.8]}},
    "variance-scan": {"geometry": {"k": 1, "n_list": [16, 32, 64, 128]}, "p": "critical:bundled", "N": 200},
    "clt-check": {"geometry": {"k": 1, "n": 64, "u": [0.7071067811865476, 0.7071067811865476]},
                  "p": "critical:bundled", "N": 500},
    "circuit-stats": {"geometry": {"k": 1, "L": 160}, "p": "critical:bundled", "N": 200},
    "martingale-scan": {"geometry": {"k": 1, "n_list": [16]}, "p": "critical:bundled", "N": 20, "R": 16},
    "kappa-rho-audit": {"geometry": {"k": 1}, "N": 1000},
    "rsw-check": {"geometry": {"k": 1, "n_list": [16, 32, 64]}, "p": "critical:bundled", "N": 400},
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slabfpp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS + ("acceptance",):
        sp = sub.add_parser(kind)
        sp.add_argument("--config", type=Path, help="YAML experiment spec (defaults built in)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./results)")
        sp.add_argument("--strict", action="store_true", help="exit nonzero when a check fails")
        if kind == "acceptance":
            sp.add_argument("--only", type=str, help="comma-separated criterion numbers")
        else:
            sp.add_argument("--p", type=float, help="override p_zero")
            sp.add_argument("--N", type=int, help="override the sample count")
    return ap


def _spec(kind: str, args) -> ExperimentSpec:
    if args.config is not None:
        spec = ExperimentSpec.load(args.config)
        if spec.experiment != kind:
            raise SpecError("$.experiment", f"config is for {spec.experiment!r}, command is {kind!r}")
    else:
        spec = ExperimentSpec.from_dict({"experiment": kind, **DEFAULTS[kind]})
    d = spec.to_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    if args.p is not None:
        d["p"] = args.p
    if args.N is not None:
        d["N"] = args.N
    d["workers"] = spec.workers
    if spec.output:
        d["output"] = spec.output
    return ExperimentSpec.from_dict(d, spec.base_dir)


def _failed(rec) -> bool:
    agg = rec.aggregate
    for key in ("passes", "all_equal"):
        if key in agg and not agg[key]:
            return True
    return bool(agg.get("violations", 0))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "acceptance":
            from .acceptance import run_suite

            only = [int(x) for x in args.only.split(",")] if args.only else None
            results = run_suite(workers=args.workers or 1, out_dir=args.out or default_out(), only=only,
                                seed=args.seed if args.seed is not None else None)
            failed = [r for r in results if not r.passed]
            return 1 if (args.strict and failed) else 0
        spec = _spec(args.command, args)
        rec = run(spec, workers=args.workers, out_dir=args.out)
    except SpecError as exc:
        print(f"spec error at {exc}", file=sys.stderr)
        return 2
    print(json.dumps(rec.summary(), indent=2, sort_keys=True, default=str))
    if rec.error:
        print(f"error: {rec.error}", file=sys.stderr)
        return 1
    return 1 if (args.strict and _failed(rec)) else 0


if __name__ == "__main__":
    sys.exit(main())
