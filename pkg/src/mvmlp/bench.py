"""Experiment runner: paired runs, adjusted L2 error, wall time, cost.

Model parameters are drawn once per experiment from a dedicated parameter
stream (multi-index (0,)) and shared across all cells and runs, so a level
sweep varies only the estimator. Run r uses top-level multi-index (1, r).
Runs can execute on a thread pool; results are assembled by run index, so
the output is byte-identical for any thread count.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .mlp import SPEC, CostLedger, MlpConfig, analytic_cost, mlp_estimate, verify_ledger
from .models import CostUnits, ModelSpec, kuramoto_model, ou_model, random_params
from .numerics import DiscretePath, TimeGrid
from .randomness import derive_stream, sample_brownian_increments
from .reference import kuramoto_moments, kuramoto_reference_path, ou_exact_path

_PARAM_INDEX = (0,)
_RUN_PREFIX = 1

CSV_HEADER = "model,d,n,m,K,l2_error,time_s,cost"

# guard rails before launching very large cells without --allow-large
DESK_MAX_D = 100
DESK_MAX_N = 4


@dataclass
class ExperimentConfig:
    model: str = "ou"
    d: int = 10
    levels: Sequence[Tuple[int, int]] = ((1, 1), (2, 2), (3, 3))
    runs: int = 10
    seed: int = 0
    T: float = 1.0
    rho: float = 0.25
    mu0: float = 0.5
    drift_time_mode: str = SPEC
    drift_scale_mode: str = SPEC
    threads: int = 1
    out_dir: Optional[str] = None
    formats: Sequence[str] = ("csv", "json", "md")
    substeps: int = 4
    allow_large: bool = False
    unit_costs: Optional[CostUnits] = None

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        for n, m in self.levels:
            if n < 0 or m < 1:
                raise ValueError(f"invalid level pair (n={n}, m={m})")
        if self.model not in ("ou", "kuramoto"):
            raise ValueError(f"unknown model {self.model!r}")


@dataclass
class ResultRow:
    model: str
    d: int
    n: int
    m: int
    K: int
    l2_error: float
    time_s: float
    cost: int
    per_run_errors: List[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "d": self.d,
            "n": self.n,
            "m": self.m,
            "K": self.K,
            "l2_error": self.l2_error,
            "time_s": self.time_s,
            "cost": self.cost,
            "per_run_errors": self.per_run_errors,
        }


def l2_error(paired: Sequence[Tuple[DiscretePath, DiscretePath]]) -> float:
    """Dimension- and grid-adjusted root-mean-square pathwise gap.

    Averages the squared gap over runs, the d coordinates and the K grid
    times t_1..t_K (time 0 excluded), then takes the root.
    """
    if not paired:
        raise ValueError("need at least one path pair")
    R = len(paired)
    ref0, est0 = paired[0]
    K, d = ref0.grid.K, ref0.d
    total = 0.0
    for ref, est in paired:
        if ref.grid != est.grid or ref.grid != ref0.grid or ref.d != d or est.d != d:
            raise ValueError("all paths must share one grid and dimension")
        diff = ref.values[1:] - est.values[1:]
        total += float(np.sum(diff * diff))
    return float(np.sqrt(total / (R * d * K)))


def build_model(cfg: ExperimentConfig) -> ModelSpec:
    """The experiment's model, from the dedicated parameter stream."""
    stream = derive_stream(cfg.seed, _PARAM_INDEX)
    if cfg.model == "ou":
        params = random_params("ou", cfg.d, stream, scale=cfg.rho)
        return ou_model(params, unit_costs=cfg.unit_costs)
    params = random_params("kuramoto", cfg.d, stream, scale=cfg.rho, mu0=cfg.mu0)
    return kuramoto_model(params, unit_costs=cfg.unit_costs)


def _single_run(
    cfg: ExperimentConfig,
    model: ModelSpec,
    mlp_cfg: MlpConfig,
    moments,
    run: int,
) -> Tuple[float, float, CostLedger]:
    grid = mlp_cfg.grid
    theta = (_RUN_PREFIX, run)
    stream = derive_stream(cfg.seed, theta)
    increments = sample_brownian_increments(stream, mlp_cfg.K, model.d, grid.dt)

    if cfg.model == "ou":
        reference = ou_exact_path(model.params, model.initial_value, grid, increments)
    else:
        reference = kuramoto_reference_path(
            model.params, model.initial_value, grid, increments, moments
        )

    ledger = CostLedger()
    start = time.perf_counter()
    estimate = mlp_estimate(model, mlp_cfg, theta, cfg.seed, increments, ledger)
    elapsed = time.perf_counter() - start

    diff = reference.values[1:] - estimate.values[1:]
    sq_sum = float(np.sum(diff * diff))
    if not verify_ledger(ledger, mlp_cfg.n, mlp_cfg.m, mlp_cfg.K, model.d,
                         model.unit_costs):
        raise RuntimeError(
            f"cost ledger mismatch in run {run} of cell (n={mlp_cfg.n}, m={mlp_cfg.m})"
        )
    return sq_sum, elapsed, ledger


def run_cell(
    cfg: ExperimentConfig, n: int, m: int, model: Optional[ModelSpec] = None
) -> ResultRow:
    """All runs of one (n, m) cell; K = m**n."""
    if model is None:
        model = build_model(cfg)
    K = m**n if n >= 1 else 1
    grid = TimeGrid(T=cfg.T, K=K)
    mlp_cfg = MlpConfig(
        n=n, m=m, K=K, grid=grid,
        drift_time_mode=cfg.drift_time_mode,
        drift_scale_mode=cfg.drift_scale_mode,
    )
    moments = None
    if cfg.model == "kuramoto":
        moments = kuramoto_moments(model.params, model.initial_value, grid, cfg.substeps)

    runs = list(range(cfg.runs))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(
                pool.map(lambda r: _single_run(cfg, model, mlp_cfg, moments, r), runs)
            )
    else:
        results = [_single_run(cfg, model, mlp_cfg, moments, r) for r in runs]

    sq_sums = [r[0] for r in results]
    times = [r[1] for r in results]
    per_run = [float(np.sqrt(s / (model.d * K))) for s in sq_sums]
    err = float(np.sqrt(sum(sq_sums) / (cfg.runs * model.d * K)))
    cost = analytic_cost(n, m, K, model.d, model.unit_costs)
    return ResultRow(
        model=cfg.model, d=model.d, n=n, m=m, K=K,
        l2_error=err, time_s=float(np.mean(times)), cost=cost,
        per_run_errors=per_run,
    )


def estimate_experiment_cost(cfg: ExperimentConfig) -> int:
    """Total closed-form cost of all runs of all cells."""
    units = cfg.unit_costs or build_model(cfg).unit_costs
    total = 0
    for n, m in cfg.levels:
        K = m**n if n >= 1 else 1
        total += cfg.runs * analytic_cost(n, m, K, cfg.d, units)
    return total


def run_experiment(cfg: ExperimentConfig) -> List[ResultRow]:
    """Run all cells and write any configured outputs."""
    too_large = cfg.d > DESK_MAX_D or any(n > DESK_MAX_N for n, _ in cfg.levels)
    if too_large and not cfg.allow_large:
        raise ValueError(
            f"cells exceed desk-scale caps (d <= {DESK_MAX_D}, n <= {DESK_MAX_N}); "
            f"estimated total cost {estimate_experiment_cost(cfg)} units. "
            "Pass allow_large=True / --allow-large to run anyway."
        )
    model = build_model(cfg) if cfg.levels else None
    rows = [run_cell(cfg, n, m, model) for n, m in cfg.levels]
    if cfg.out_dir is not None:
        write_outputs(rows, Path(cfg.out_dir), cfg.formats)
    return rows


def render_csv(rows: Sequence[ResultRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.model},{r.d},{r.n},{r.m},{r.K},"
            f"{r.l2_error:.12e},{r.time_s:.6f},{r.cost}"
        )
    return "\n".join(lines) + "\n"


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=2)


def rows_from_json(text: str) -> List[ResultRow]:
    return [ResultRow(**obj) for obj in json.loads(text)]


def render_markdown(rows: Sequence[ResultRow]) -> str:
    """One table per (model, d), columns the (n, m) cells."""
    lines: List[str] = []
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.model, r.d), []).append(r)
    for (model, d), cells in groups.items():
        lines.append(f"## {model}, d = {d}")
        lines.append("")
        header = "| | " + " | ".join(f"n = m = {r.n}" for r in cells) + " |"
        sep = "|---" * (len(cells) + 1) + "|"
        err = "| L2-Error | " + " | ".join(f"{r.l2_error:.4e}" for r in cells) + " |"
        tm = "| Time | " + " | ".join(f"{r.time_s:.3f}" for r in cells) + " |"
        cost = "| Cost | " + " | ".join(f"{r.cost:.2e}" for r in cells) + " |"
        lines.extend([header, sep, err, tm, cost, ""])
    return "\n".join(lines)


def write_outputs(rows: Sequence[ResultRow], out_dir: Path, formats: Sequence[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if "csv" in formats:
            (out_dir / "results.csv").write_text(render_csv(rows), newline="\n")
        if "json" in formats:
            (out_dir / "results.json").write_text(rows_to_json(rows), newline="\n")
        if "md" in formats:
            (out_dir / "table.md").write_text(render_markdown(rows), newline="\n")
    except OSError as exc:
        raise OSError(f"failed writing results under {out_dir}: {exc}") from exc
