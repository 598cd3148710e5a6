"""Benchmark command line: `mvmlp-bench`.

Flags mirror the JSON config file; flags given on the command line
override config-file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Tuple

from .bench import ExperimentConfig, estimate_experiment_cost, run_experiment
from .models import CostUnits


def _parse_levels(text: str) -> List[Tuple[int, int]]:
    """'1,2,3' -> [(1,1), (2,2), (3,3)]; '2x3' entries give explicit (n,m)."""
    pairs = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "x" in token:
            n, m = token.split("x")
            pairs.append((int(n), int(m)))
        else:
            v = int(token)
            pairs.append((v, v))
    return pairs


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mvmlp-bench",
        description="Benchmark the multilevel Picard estimator for mean-field SDEs.",
    )
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--model", choices=["ou", "kuramoto"])
    p.add_argument("--d", type=int)
    p.add_argument("--levels", help="comma list of n=m values, e.g. '1,2,3,4'")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--mu0", type=float)
    p.add_argument("--drift-time-mode", choices=["spec", "alg1"])
    p.add_argument("--drift-scale-mode", choices=["spec", "alg1"])
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", help="comma list among csv,json,md")
    p.add_argument("--allow-large", action="store_true", default=None,
                   help="permit cells beyond the desk-scale caps")
    return p


def config_from_args(argv: Optional[List[str]] = None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    values: dict = {}
    if args.config:
        with open(args.config) as fh:
            values.update(json.load(fh))
    if "levels" in values:
        values["levels"] = [tuple(pair) if isinstance(pair, list) else (pair, pair)
                            for pair in values["levels"]]
    if "unit_costs" in values and values["unit_costs"] is not None:
        values["unit_costs"] = CostUnits(**values["unit_costs"])

    overrides = {
        "model": args.model,
        "d": args.d,
        "levels": _parse_levels(args.levels) if args.levels is not None else None,
        "runs": args.runs,
        "seed": args.seed,
        "T": args.T,
        "rho": args.rho,
        "mu0": args.mu0,
        "drift_time_mode": args.drift_time_mode,
        "drift_scale_mode": args.drift_scale_mode,
        "threads": args.threads,
        "out_dir": args.out,
        "formats": args.format.split(",") if args.format is not None else None,
        "allow_large": args.allow_large,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def main(argv: Optional[List[str]] = None) -> int:
    cfg = config_from_args(argv)
    if cfg.allow_large:
        print(f"estimated total cost: {estimate_experiment_cost(cfg)} units",
              file=sys.stderr)
    try:
        rows = run_experiment(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for row in rows:
        print(
            f"{row.model} d={row.d} n={row.n} m={row.m} K={row.K} "
            f"l2_error={row.l2_error:.6e} time_s={row.time_s:.3f} cost={row.cost}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
