"""Multilevel Picard estimator with instrumented and closed-form cost.

The recursion follows the four-call structure of the pseudocode form of
the scheme: at level n, for each inner level l and sample k, the caller
path is re-estimated per k (the cost recursion charges the preparation of
those processes inside the per-k sum, so cost fidelity requires
recomputation, not memoization).

Index convention: every recursive call owns a multi-index that addresses
all of its internal randomness. For the (n, k, l) iteration of a call with
index theta, the fresh Brownian increments and the uniform time draw come
from the stream at theta + (n, k, l, 0); the two caller-side recursive
calls use theta + (n, k, l, 1) and theta + (n, k, l, 2) as their identity,
while the two fresh-noise calls use theta + (n, k, l, 0) itself. All
appended blocks have length 4, so distinct call histories always produce
distinct indices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .models import CostUnits, ModelSpec
from .numerics import DiscretePath, TimeGrid, grid_floor_index
from .randomness import MultiIndex, derive_stream

logger = logging.getLogger(__name__)

SPEC = "spec"
ALG1 = "alg1"

# tags for the index blocks appended per (n, k, l) iteration
_FRESH = 0
_CALLER_HI = 1
_CALLER_LO = 2


class NumericOverflowError(RuntimeError):
    """A path row became non-finite during the recursion."""

    def __init__(self, n: int, level: int, sample: int, row: int):
        self.location = (n, level, sample, row)
        super().__init__(
            f"non-finite value at level n={n}, l={level}, k={sample}, row j={row}"
        )


@dataclass(frozen=True)
class MlpConfig:
    """Estimator configuration: depth n, fan-out base m, grid steps K."""

    n: int
    m: int
    K: int
    grid: TimeGrid
    drift_time_mode: str = SPEC
    drift_scale_mode: str = SPEC

    def __post_init__(self) -> None:
        if self.n < 0 or self.m < 1 or self.K < 1:
            raise ValueError(f"need n >= 0, m >= 1, K >= 1, got {(self.n, self.m, self.K)}")
        if self.grid.K != self.K:
            raise ValueError(f"grid has K={self.grid.K}, config has K={self.K}")
        for mode in (self.drift_time_mode, self.drift_scale_mode):
            if mode not in (SPEC, ALG1):
                raise ValueError(f"unknown mode {mode!r}")


@dataclass
class CostLedger:
    """Integer tallies of coefficient evaluations and scalar draws.

    A drift evaluation is one application of mu to a gathered pair of
    paths (the granularity the cost model charges); a diffusion evaluation
    is one application of sigma to a single pair of states.
    """

    mu_evals: int = 0
    sigma_evals: int = 0
    rv_draws: int = 0

    def weighted(self, units: CostUnits) -> int:
        return (
            self.mu_evals * units.cost_mu
            + self.sigma_evals * units.cost_sigma
            + self.rv_draws * units.cost_rv
        )


def mlp_estimate(
    model: ModelSpec,
    cfg: MlpConfig,
    theta: MultiIndex,
    root_seed: int,
    caller_increments: np.ndarray,
    ledger: CostLedger,
) -> DiscretePath:
    """One realization of the level-n estimator on the caller's increments.

    `caller_increments` is the K x d Brownian-increment array of the
    calling scope; its cost is not charged here (the cost model assumes a
    prepared top-level Brownian path). Pure function of its arguments: the
    same (model, cfg, theta, root_seed, increments) give a bitwise
    identical path.
    """
    K, d, grid = cfg.K, model.d, cfg.grid
    increments = np.asarray(caller_increments, dtype=float)
    if increments.shape != (K, d):
        raise ValueError(f"increments must have shape ({K}, {d}), got {increments.shape}")

    times = grid.times()
    dt = grid.dt
    zero = np.zeros(d)

    def estimate(n: int, theta: MultiIndex, incr: np.ndarray) -> np.ndarray:
        if n == 0:
            return np.zeros((K + 1, d))

        W = np.vstack([zero, np.cumsum(incr, axis=0)])
        mu0 = model.drift(zero, zero)
        ledger.mu_evals += 1
        sigma0 = model.diffusion(zero, zero)
        ledger.sigma_evals += 1
        X = model.initial_value + times[:, None] * mu0 + W @ sigma0.T
        _check_finite(X, n, 0, 0)

        for level in range(1, n):
            fanout = cfg.m ** (n - level)
            for k in range(1, fanout + 1):
                block = (n, k, level)
                child_stream = derive_stream(root_seed, theta + block + (_FRESH,))
                fresh = np.sqrt(dt) * child_stream.normals((K, d)) if dt > 0 else np.zeros((K, d))
                ledger.rv_draws += K * d

                x1 = estimate(level, theta + block + (_CALLER_HI,), incr)
                x2 = estimate(level, theta + block + (_FRESH,), fresh)
                x3 = estimate(level - 1, theta + block + (_CALLER_LO,), incr)
                x4 = estimate(level - 1, theta + block + (_FRESH,), fresh)

                # stochastic-integral correction: left-point Ito sum against
                # the caller's increments
                s_hi = model.diffusion(x1[:-1], x2[:-1])
                s_lo = model.diffusion(x3[:-1], x4[:-1])
                ledger.sigma_evals += 2 * K
                steps = np.einsum("jik,jk->ji", s_hi - s_lo, incr) / fanout
                X[1:] += np.cumsum(steps, axis=0)

                # drift correction: one uniform time draw per (n, k, l)
                u = child_stream.uniform()
                ledger.rv_draws += 1
                if cfg.drift_time_mode == SPEC:
                    rows = np.array(
                        [grid_floor_index(times[j] * u, grid) for j in range(K + 1)]
                    )
                else:
                    rows = np.clip(
                        np.floor(np.arange(-1, K) * u).astype(int) + 1, 0, K
                    )
                mu_hi = model.drift(x1[rows], x2[rows])
                mu_lo = model.drift(x3[rows], x4[rows])
                ledger.mu_evals += 2
                if cfg.drift_scale_mode == SPEC:
                    scale = times[:, None] / fanout
                else:
                    scale = 1.0 / fanout
                X += scale * (mu_hi - mu_lo)
                _check_finite(X, n, level, k)
        return X

    values = estimate(cfg.n, tuple(theta), increments)
    return DiscretePath(grid=grid, values=values)


def _check_finite(X: np.ndarray, n: int, level: int, sample: int) -> None:
    if not np.isfinite(X).all():
        bad = int(np.where(~np.isfinite(X).all(axis=1))[0][0])
        raise NumericOverflowError(n, level, sample, bad)


def analytic_cost(n: int, m: int, K: int, d: int, units: CostUnits) -> int:
    """Closed-form cost of one level-n call, exact by definition.

    Evaluates the cost recursion with equality: the base pays one drift
    and one diffusion evaluation; each (l, k) iteration pays the two
    caller-side and two fresh-noise sub-estimates, K*d scalar draws for
    the fresh Brownian path, one uniform draw, two drift evaluations and
    2K diffusion evaluations.
    """
    if n < 0 or m < 1 or K < 1 or d < 1:
        raise ValueError(f"invalid arguments {(n, m, K, d)}")
    costs = [0] * (n + 1)
    for nn in range(1, n + 1):
        total = units.cost_mu + units.cost_sigma
        for level in range(1, nn):
            per_k = (
                2 * costs[level]
                + 2 * costs[level - 1]
                + K * d * units.cost_rv
                + units.cost_rv
                + 2 * units.cost_mu
                + 2 * K * units.cost_sigma
            )
            total += m ** (nn - level) * per_k
        costs[nn] = total
    return costs[n]


def verify_ledger(
    ledger: CostLedger, n: int, m: int, K: int, d: int, units: CostUnits
) -> bool:
    """True iff the units-weighted ledger equals the closed-form cost."""
    expected = analytic_cost(n, m, K, d, units)
    actual = ledger.weighted(units)
    if actual == expected:
        return True
    logger.warning(
        "ledger mismatch for (n=%d, m=%d, K=%d, d=%d): weighted ledger %d != "
        "closed form %d (mu=%d, sigma=%d, rv=%d)",
        n, m, K, d, actual, expected,
        ledger.mu_evals, ledger.sigma_evals, ledger.rv_draws,
    )
    return False
