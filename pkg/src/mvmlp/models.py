"""Mean-field model abstraction and the two benchmark models.

A model is a pair of two-argument coefficients: a drift mu(x1, x2) mapping
two d-vectors to a d-vector and a diffusion sigma(x1, x2) mapping them to
a d x d matrix whose column k multiplies the k-th Brownian component. Both
benchmark coefficients broadcast over leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .randomness import RandomStream


@dataclass(frozen=True)
class CostUnits:
    """Unit costs of one drift eval, one diffusion eval, one scalar draw."""

    cost_mu: int
    cost_sigma: int
    cost_rv: int

    def __post_init__(self) -> None:
        if min(self.cost_mu, self.cost_sigma, self.cost_rv) < 0:
            raise ValueError("cost units must be nonnegative")


def default_cost_units(d: int) -> CostUnits:
    # a matrix-vector product dominates each coefficient evaluation
    return CostUnits(cost_mu=d * d, cost_sigma=d * d, cost_rv=1)


@dataclass(frozen=True)
class OuParams:
    """Parameters of the mean-field Ornstein-Uhlenbeck model.

    `b` stores the diffusion offset vectors as columns (b[:, k] is the k-th
    offset); `B[k]` is the matrix applied to the mean-field argument in
    column k.
    """

    a0: np.ndarray      # (d,)
    A1: np.ndarray      # (d, d)
    A2: np.ndarray      # (d, d)
    b: np.ndarray       # (d, d), column k = b_k
    B: np.ndarray       # (d, d, d), B[k] = B_k

    def __post_init__(self) -> None:
        d = self.a0.shape[0]
        shapes = {
            "a0": (self.a0, (d,)),
            "A1": (self.A1, (d, d)),
            "A2": (self.A2, (d, d)),
            "b": (self.b, (d, d)),
            "B": (self.B, (d, d, d)),
        }
        for name, (arr, want) in shapes.items():
            if arr.shape != want:
                raise ValueError(f"{name} has shape {arr.shape}, expected {want}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def d(self) -> int:
        return self.a0.shape[0]


@dataclass(frozen=True)
class KuramotoParams:
    """Parameters of the multidimensional geometric Kuramoto model."""

    mu0: float
    Sigma: np.ndarray   # (d, d, d), Sigma[k] applied to x1 in column k

    def __post_init__(self) -> None:
        if self.Sigma.ndim != 3 or len(set(self.Sigma.shape)) != 1:
            raise ValueError(f"Sigma must have shape (d, d, d), got {self.Sigma.shape}")
        if not (np.isfinite(self.mu0) and np.isfinite(self.Sigma).all()):
            raise ValueError("parameters contain non-finite entries")

    @property
    def d(self) -> int:
        return self.Sigma.shape[0]


def _check_dim(x: np.ndarray, d: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise ValueError(f"{name} has trailing dimension {x.shape[-1]}, expected {d}")
    return x


def ou_drift(p: OuParams, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """a0 + A1 x1 + A2 x2, broadcasting over leading dimensions."""
    x1 = _check_dim(x1, p.d, "x1")
    x2 = _check_dim(x2, p.d, "x2")
    return p.a0 + x1 @ p.A1.T + x2 @ p.A2.T


def ou_diffusion(p: OuParams, x2: np.ndarray) -> np.ndarray:
    """Matrix with column k = b_k + B_k x2; independent of x1."""
    x2 = _check_dim(x2, p.d, "x2")
    return p.b + np.einsum("kij,...j->...ik", p.B, x2)


def kuramoto_drift(p: KuramotoParams, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Componentwise mu0 * sin(x1 - x2)."""
    x1 = _check_dim(x1, p.d, "x1")
    x2 = _check_dim(x2, p.d, "x2")
    return p.mu0 * np.sin(x1 - x2)


def kuramoto_diffusion(p: KuramotoParams, x1: np.ndarray) -> np.ndarray:
    """Matrix with column k = Sigma_k x1; independent of x2."""
    x1 = _check_dim(x1, p.d, "x1")
    return np.einsum("kij,...j->...ik", p.Sigma, x1)


def random_params(
    model_kind: str,
    d: int,
    stream: RandomStream,
    scale: float = 0.25,
    mu0: float = 0.5,
):
    """Randomly initialized, norm-controlled parameters.

    Entries are i.i.d. uniform on [-1, 1]; every matrix is rescaled to
    Hilbert-Schmidt norm `scale` and every vector to Euclidean norm
    `scale`. Diffusion families are rescaled jointly so the root of the
    summed squared HS norms equals `scale`, which pins down a Lipschitz
    constant independent of d.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")

    def u(shape):
        return 2.0 * stream.uniforms(shape) - 1.0

    def to_norm(arr, target):
        nrm = float(np.linalg.norm(arr))
        if nrm == 0.0:
            raise ValueError("degenerate zero draw")
        return arr * (target / nrm)

    if model_kind == "ou":
        a0 = to_norm(u(d), scale)
        A1 = to_norm(u((d, d)), scale)
        A2 = to_norm(u((d, d)), scale)
        b = np.stack([to_norm(u(d), scale) for _ in range(d)], axis=1)
        B = u((d, d, d))
        B = B * (scale / np.linalg.norm(B))
        return OuParams(a0=a0, A1=A1, A2=A2, b=b, B=B)
    if model_kind == "kuramoto":
        Sigma = u((d, d, d))
        Sigma = Sigma * (scale / np.linalg.norm(Sigma))
        return KuramotoParams(mu0=mu0, Sigma=Sigma)
    raise ValueError(f"unknown model kind {model_kind!r}")


@dataclass(frozen=True)
class ModelSpec:
    """A concrete McKean-Vlasov model: coefficients, Lipschitz data, costs.

    `drift_partner_mean` / `diffusion_partner_mean`, when set, compute the
    empirical-average coefficient (1/N) sum_m f(x_i, X_m) for a batch of
    states in O(N) instead of O(N^2); the particle oracle uses them.
    """

    name: str
    d: int
    initial_value: np.ndarray
    drift: Callable[[np.ndarray, np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz_c: float
    unit_costs: CostUnits
    drift_partner_mean: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    diffusion_partner_mean: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    params: object = field(default=None, repr=False)

    def growth_bound(self) -> float:
        """||xi|| + ||mu(0,0)|| + ||sigma(0,0)|| (finiteness is asserted)."""
        zero = np.zeros(self.d)
        value = (
            float(np.linalg.norm(self.initial_value))
            + float(np.linalg.norm(self.drift(zero, zero)))
            + float(np.linalg.norm(self.diffusion(zero, zero)))
        )
        if not np.isfinite(value):
            raise ValueError("growth bound is not finite")
        return value


def ou_model(
    p: OuParams,
    initial_value: Optional[np.ndarray] = None,
    unit_costs: Optional[CostUnits] = None,
) -> ModelSpec:
    d = p.d
    xi = np.full(d, 20.0) if initial_value is None else np.asarray(initial_value, float)
    b_family = float(np.linalg.norm(p.B))
    lip = max(
        1.0,
        2.0 * max(np.linalg.norm(p.A1), np.linalg.norm(p.A2), b_family),
    )

    def drift_partner_mean(x: np.ndarray, partners: np.ndarray) -> np.ndarray:
        return ou_drift(p, x, np.broadcast_to(partners.mean(axis=0), x.shape))

    def diffusion_partner_mean(x: np.ndarray, partners: np.ndarray) -> np.ndarray:
        sig = ou_diffusion(p, partners.mean(axis=0))
        return np.broadcast_to(sig, x.shape[:-1] + (d, d))

    return ModelSpec(
        name="ou",
        d=d,
        initial_value=xi,
        drift=lambda x1, x2: ou_drift(p, x1, x2),
        diffusion=lambda x1, x2: ou_diffusion(p, x2),
        lipschitz_c=lip,
        unit_costs=unit_costs or default_cost_units(d),
        drift_partner_mean=drift_partner_mean,
        diffusion_partner_mean=diffusion_partner_mean,
        params=p,
    )


def kuramoto_model(
    p: KuramotoParams,
    initial_value: Optional[np.ndarray] = None,
    unit_costs: Optional[CostUnits] = None,
) -> ModelSpec:
    d = p.d
    xi = np.full(d, 10.0) if initial_value is None else np.asarray(initial_value, float)
    lip = max(1.0, 2.0 * abs(p.mu0), 2.0 * float(np.linalg.norm(p.Sigma)))

    def drift_partner_mean(x: np.ndarray, partners: np.ndarray) -> np.ndarray:
        # mean of sin(x - y) over partners y, via the angle-difference identity
        mean_cos = np.cos(partners).mean(axis=0)
        mean_sin = np.sin(partners).mean(axis=0)
        return p.mu0 * (np.sin(x) * mean_cos - np.cos(x) * mean_sin)

    def diffusion_partner_mean(x: np.ndarray, partners: np.ndarray) -> np.ndarray:
        return kuramoto_diffusion(p, x)

    return ModelSpec(
        name="kuramoto",
        d=d,
        initial_value=xi,
        drift=lambda x1, x2: kuramoto_drift(p, x1, x2),
        diffusion=lambda x1, x2: kuramoto_diffusion(p, x1),
        lipschitz_c=lip,
        unit_costs=unit_costs or default_cost_units(d),
        drift_partner_mean=drift_partner_mean,
        diffusion_partner_mean=diffusion_partner_mean,
        params=p,
    )
