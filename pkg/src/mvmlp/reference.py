"""Ground-truth solvers coupled to the estimator's Brownian increments.

The mean-field OU reference is pathwise: exact propagator per step,
Gauss-Legendre quadrature for the drift integral, left-point diffusion in
time. It therefore consumes exactly the increments array later fed to the
paired estimator call, which is what the paired-error metric requires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (
    KuramotoParams,
    ModelSpec,
    OuParams,
    ou_diffusion,
)
from .numerics import DiscretePath, TimeGrid, mat_exp, solve_linear_ode, solve_lyapunov_ode
from .randomness import RandomStream

# Gauss-Legendre 4-point nodes/weights on [-1, 1]
_GL_X = np.array([
    -0.8611363115940526, -0.3399810435848563,
    0.3399810435848563, 0.8611363115940526,
])
_GL_W = np.array([
    0.3478548451374538, 0.6521451548625461,
    0.6521451548625461, 0.3478548451374538,
])


@dataclass(frozen=True)
class OuMoments:
    """Closed-form mean path and marginal covariance path of the OU model."""

    mean: np.ndarray                 # (K+1, d)
    covariance: list                 # K+1 matrices (d, d)


@dataclass(frozen=True)
class KuramotoMoments:
    """Componentwise variance path of the Kuramoto model and its ODE data."""

    variance: np.ndarray             # (K+1, d)
    A: np.ndarray                    # (d, d)
    b: np.ndarray                    # (d,)


def _transition(A: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """e^{A tau} and int_0^tau e^{A u} du via the augmented-matrix trick."""
    d = A.shape[0]
    aug = np.zeros((2 * d, 2 * d))
    aug[:d, :d] = A
    aug[:d, d:] = np.eye(d)
    E = mat_exp(aug, tau)
    return E[:d, :d], E[:d, d:]


def ou_mean(p: OuParams, xi: np.ndarray, grid: TimeGrid, substeps: int = 4) -> np.ndarray:
    """Mean path: homogeneous flow of A1+A2 plus the a0 forcing integral."""
    A12 = p.A1 + p.A2
    P = mat_exp(A12, grid.dt)
    hom = np.empty((grid.K + 1, p.d))
    hom[0] = np.asarray(xi, dtype=float)
    for j in range(grid.K):
        hom[j + 1] = P @ hom[j]
    part = solve_linear_ode(A12, p.a0, grid, substeps)
    return hom + part


def _ou_mean_fn(p: OuParams, xi: np.ndarray):
    """Continuous-time mean evaluator with per-time caching."""
    A12 = p.A1 + p.A2
    xi = np.asarray(xi, dtype=float)
    cache: dict[float, np.ndarray] = {}

    def m(s: float) -> np.ndarray:
        got = cache.get(s)
        if got is None:
            E, V = _transition(A12, s)
            got = E @ xi + V @ p.a0
            cache[s] = got
        return got

    return m


def ou_q_process(p: OuParams, mean: np.ndarray) -> list:
    """Q(t_j) = sum_k (b_k + B_k m(t_j)) (b_k + B_k m(t_j))^T, i.e. S S^T."""
    S = ou_diffusion(p, np.asarray(mean, dtype=float))
    Q = np.einsum("...ik,...jk->...ij", S, S)
    return [0.5 * (q + q.T) for q in Q]


def ou_marginal_cov(
    p: OuParams, xi: np.ndarray, grid: TimeGrid, substeps: int = 4
) -> list:
    """Marginal covariance path via the Lyapunov ODE driven by Q(t)."""
    m = _ou_mean_fn(p, xi)

    def Q(s: float) -> np.ndarray:
        S = ou_diffusion(p, m(s))
        return S @ S.T

    return solve_lyapunov_ode(p.A1, Q, grid, substeps)


def _ou_exact_values(
    p: OuParams, xi: np.ndarray, grid: TimeGrid, increments: np.ndarray
) -> np.ndarray:
    """Variation-of-constants stepping; increments may carry a batch dim."""
    d, K, dt = p.d, grid.K, grid.dt
    incr = np.asarray(increments, dtype=float)
    batched = incr.ndim == 3
    if incr.shape[-2:] != (K, d):
        raise ValueError(f"increments must end in shape ({K}, {d}), got {incr.shape}")

    E = mat_exp(p.A1, dt)
    # quadrature nodes tau_i in (0, dt), propagators from node to step end
    taus = 0.5 * dt * (_GL_X + 1.0)
    weights = 0.5 * dt * _GL_W
    props = [mat_exp(p.A1, dt - tau) for tau in taus]
    A12 = p.A1 + p.A2
    node_flows = [_transition(A12, tau) for tau in taus]
    E12, V12 = _transition(A12, dt)

    mean = np.asarray(xi, dtype=float)
    shape = (incr.shape[0], K + 1, d) if batched else (K + 1, d)
    out = np.zeros(shape)
    out[..., 0, :] = mean
    X = np.broadcast_to(mean, shape[:-2] + (d,)).copy()

    for j in range(K):
        # deterministic forcing over (t_j, t_{j+1}] by 4-point quadrature
        forcing = np.zeros(d)
        for w, P, (En, Vn) in zip(weights, props, node_flows):
            m_node = En @ mean + Vn @ p.a0
            forcing += w * (P @ (p.a0 + p.A2 @ m_node))
        sigma = ou_diffusion(p, mean)     # left-point diffusion time rule
        X = X @ E.T + forcing + incr[..., j, :] @ sigma.T
        out[..., j + 1, :] = X
        mean = E12 @ mean + V12 @ p.a0
    return out


def ou_exact_path(
    p: OuParams, xi: np.ndarray, grid: TimeGrid, increments: np.ndarray
) -> DiscretePath:
    """Pathwise OU reference on the given increments."""
    return DiscretePath(grid=grid, values=_ou_exact_values(p, xi, grid, increments))


def ou_exact_path_batch(
    p: OuParams, xi: np.ndarray, grid: TimeGrid, increments: np.ndarray
) -> np.ndarray:
    """Batched variant: increments (N, K, d) -> values (N, K+1, d)."""
    return _ou_exact_values(p, xi, grid, increments)


def ou_moments(p: OuParams, xi: np.ndarray, grid: TimeGrid, substeps: int = 4) -> OuMoments:
    return OuMoments(
        mean=ou_mean(p, xi, grid, substeps),
        covariance=ou_marginal_cov(p, xi, grid, substeps),
    )


def kuramoto_moments(
    p: KuramotoParams, xi: np.ndarray, grid: TimeGrid, substeps: int = 4
) -> KuramotoMoments:
    """Componentwise variance path from the linear moment ODE."""
    xi = np.asarray(xi, dtype=float)
    sq = p.Sigma**2                       # sq[k, i, j] = (sigma_k^{i,j})^2
    A = sq.sum(axis=0)                    # (d, d)
    b = A @ (xi**2)                       # (d,)
    variance = solve_linear_ode(A, b, grid, substeps)
    return KuramotoMoments(variance=variance, A=A, b=b)


def _kuramoto_reference_values(
    p: KuramotoParams,
    xi: np.ndarray,
    grid: TimeGrid,
    increments: np.ndarray,
    moments: KuramotoMoments,
) -> np.ndarray:
    d, K, dt = p.d, grid.K, grid.dt
    xi = np.asarray(xi, dtype=float)
    incr = np.asarray(increments, dtype=float)
    batched = incr.ndim == 3
    if incr.shape[-2:] != (K, d):
        raise ValueError(f"increments must end in shape ({K}, {d}), got {incr.shape}")

    shape = (incr.shape[0], K + 1, d) if batched else (K + 1, d)
    out = np.zeros(shape)
    out[..., 0, :] = xi
    X = np.broadcast_to(xi, shape[:-2] + (d,)).copy()
    for j in range(K):
        damp = 1.0 - 0.5 * moments.variance[j]
        drift = p.mu0 * damp * np.sin(X - xi)
        sigma = np.einsum("kil,...l->...ik", p.Sigma, X)
        X = X + drift * dt + np.einsum("...ik,...k->...i", sigma, incr[..., j, :])
        out[..., j + 1, :] = X
    return out


def kuramoto_reference_path(
    p: KuramotoParams,
    xi: np.ndarray,
    grid: TimeGrid,
    increments: np.ndarray,
    moments: KuramotoMoments,
) -> DiscretePath:
    """Euler-Maruyama reference with moment-damped mean-field drift."""
    values = _kuramoto_reference_values(p, xi, grid, increments, moments)
    return DiscretePath(grid=grid, values=values)


def kuramoto_reference_path_batch(
    p: KuramotoParams,
    xi: np.ndarray,
    grid: TimeGrid,
    increments: np.ndarray,
    moments: KuramotoMoments,
) -> np.ndarray:
    return _kuramoto_reference_values(p, xi, grid, increments, moments)


def _pairwise_partner_mean(fn, X: np.ndarray, partners: np.ndarray, chunk: int = 256):
    """(1/N) sum_m fn(x_i, X_m) for every row i, chunked over i."""
    N, d = partners.shape
    outs = []
    for start in range(0, X.shape[0], chunk):
        xs = X[start:start + chunk]                        # (c, d)
        # materialize both (c, N, d) arguments so the chunk axis survives
        # even when fn depends on only one of them
        xs_b = np.broadcast_to(xs[:, None, :], (xs.shape[0], N, d))
        ps_b = np.broadcast_to(partners[None, :, :], (xs.shape[0], N, d))
        vals = fn(xs_b, ps_b)                              # (c, N, ...)
        outs.append(vals.sum(axis=1) / N)
    return np.concatenate(outs, axis=0)


def particle_system_path(
    model: ModelSpec,
    N: int,
    grid: TimeGrid,
    stream: RandomStream,
) -> np.ndarray:
    """Euler-Maruyama for the N-particle system; (N, K+1, d) values.

    Each particle carries its own Brownian motion, drawn from a child
    stream indexed by the particle number, so the result is independent of
    scheduling.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    d, K, dt = model.d, grid.K, grid.dt

    incr = np.empty((N, K, d))
    for i in range(N):
        incr[i] = np.sqrt(dt) * stream.child(i).normals((K, d))

    drift_mean = model.drift_partner_mean or (
        lambda x, partners: _pairwise_partner_mean(model.drift, x, partners)
    )
    diffusion_mean = model.diffusion_partner_mean or (
        lambda x, partners: _pairwise_partner_mean(model.diffusion, x, partners)
    )

    out = np.zeros((N, K + 1, d))
    X = np.broadcast_to(model.initial_value, (N, d)).copy()
    out[:, 0, :] = X
    for j in range(K):
        mu = drift_mean(X, X)
        sigma = diffusion_mean(X, X)
        X = X + mu * dt + np.einsum("nik,nk->ni", sigma, incr[:, j, :])
        out[:, j + 1, :] = X
    return out
