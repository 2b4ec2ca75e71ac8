"""
╔══════════════════════════════════════════════════════════════════════════╗
║                 Ornstein-Uhlenbeck Factor — Analytics                   ║
╠══════════════════════════════════════════════════════════════════════════╣
║                                                                        ║
║  dX = κ(θ − X)dt + σ dW has a Gaussian transition law. Everything the  ║
║  engines need is closed form:                                          ║
║                                                                        ║
║    mean      x·e^{−κΔt} + θ(1 − e^{−κΔt})                               ║
║    variance  σ²/(2κ)·(1 − e^{−2κΔt})                                    ║
║    char. fn  e^{iuβx}·φ(u|Δt),  β = e^{−κΔt},  φ = e^{A(u,Δt)}          ║
║                                                                        ║
║  Paths are sampled from the exact transition (no Euler bias), in       ║
║  fixed-size blocks with one counter-based stream per block, so the     ║
║  ensemble does not depend on how many workers drew it.                 ║
║                                                                        ║
╚══════════════════════════════════════════════════════════════════════════╝
"""

import logging
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed

from src.app.exceptions.custom_exceptions import ParameterDomainException
from src.app.models.price_model import OUParams, PathEnsemble, TruncationRange

logger = logging.getLogger(__name__)

# Paths per RNG stream; part of the determinism contract, do not tie to n_jobs
PATH_BLOCK_SIZE = 4096


# ─── Closed-Form Analytics ──────────────────────────────────────────────


def ou_char_fn(params: OUParams, u, dt: float) -> Tuple[np.ndarray, float]:
    """
    x-independent part φ(u|Δt) = e^{A(u,Δt)} and the state factor β = e^{−κΔt}.

    `u` may be a scalar or an array of frequencies.
    """
    if dt <= 0.0:
        raise ParameterDomainException(f"dt={dt} must be > 0")
    k, theta, sigma = params.kappa, params.theta, params.sigma
    u = np.asarray(u, dtype=float)
    e1 = np.exp(-k * dt)
    e2 = np.exp(-2.0 * k * dt)
    a = (e2 - e1) / (4.0 * k) * (u * u * sigma ** 2 + u * np.exp(k * dt) * (u * sigma ** 2 - 4j * k * theta))
    return np.exp(a), float(e1)


def ou_char_fn_dsigma(params: OUParams, u, dt: float) -> np.ndarray:
    """∂φ/∂σ of the x-independent part: φ(u|Δt)·σu²/(2κ)·(e^{−2κΔt} − 1)."""
    phi, _ = ou_char_fn(params, u, dt)
    u = np.asarray(u, dtype=float)
    k = params.kappa
    return phi * (params.sigma * u * u / (2.0 * k)) * np.expm1(-2.0 * k * dt)


def ou_moments(params: OUParams, dt, x_start) -> Tuple[np.ndarray, np.ndarray]:
    """Conditional (mean, variance) of X_{t+dt} given X_t = x_start."""
    dt = np.asarray(dt, dtype=float)
    if np.any(dt < 0.0):
        raise ParameterDomainException("dt must be ≥ 0")
    k = params.kappa
    decay = np.exp(-k * dt)
    mean = x_start * decay + params.theta * (1.0 - decay)
    variance = params.sigma ** 2 / (2.0 * k) * (-np.expm1(-2.0 * k * dt))
    return mean, variance


def truncation_range(params: OUParams, dt_total: float, l_bar: float = 10.0) -> TruncationRange:
    """[κ₁ − L̄√κ₂, κ₁ + L̄√κ₂] of the law of X_{dt_total} started at x0 (κ₄ = 0)."""
    if dt_total <= 0.0:
        raise ParameterDomainException(f"dt_total={dt_total} must be > 0")
    kappa1, kappa2 = ou_moments(params, dt_total, params.x0)
    kappa1, kappa2 = float(kappa1), float(kappa2)
    half_width = l_bar * np.sqrt(kappa2)
    if half_width <= 0.0:
        raise ParameterDomainException("degenerate truncation range: zero variance")
    return TruncationRange(
        a=kappa1 - half_width, b=kappa1 + half_width,
        l_bar=l_bar, kappa1=kappa1, kappa2=kappa2, kappa4=0.0
    )


# ─── Transition Laws ────────────────────────────────────────────────────


class OUTransitionLaw:
    """
    Transition law consumed by the COS engine.

    Any law with `char_fn(u, dt) -> (φ, β)`, `char_fn_dsigma(u, dt)` and
    `moments(dt, x)` can be priced; `ArithmeticBrownianLaw` is the β = 1 one.
    """

    def __init__(self, params: OUParams):
        self.params = params

    @property
    def sigma(self) -> float:
        return self.params.sigma

    def char_fn(self, u, dt: float) -> Tuple[np.ndarray, float]:
        return ou_char_fn(self.params, u, dt)

    def char_fn_dsigma(self, u, dt: float) -> np.ndarray:
        return ou_char_fn_dsigma(self.params, u, dt)

    def moments(self, dt, x_start):
        return ou_moments(self.params, dt, x_start)

    def truncation_range(self, dt_total: float, l_bar: float) -> TruncationRange:
        return truncation_range(self.params, dt_total, l_bar)


# ─── Exact Path Simulation ──────────────────────────────────────────────


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(params: OUParams, n: int, times: np.ndarray, seed: int, block: int) -> np.ndarray:
    rng = _block_generator(seed, block)
    steps = np.diff(times)
    decay = np.exp(-params.kappa * steps)
    sd = np.sqrt(params.sigma ** 2 / (2.0 * params.kappa) * (-np.expm1(-2.0 * params.kappa * steps)))
    shocks = rng.standard_normal((n, steps.size))

    states = np.empty((n, times.size))
    states[:, 0] = params.x0
    for j in range(steps.size):
        states[:, j + 1] = states[:, j] * decay[j] + params.theta * (1.0 - decay[j]) + sd[j] * shocks[:, j]
    return states


def simulate_paths(
    params: OUParams,
    n_paths: int,
    times,
    seed: int,
    n_jobs: int = 1,
) -> PathEnsemble:
    """
    Draw `n_paths` exact OU trajectories on `times` (times[0] is the start date).

    Blocks of PATH_BLOCK_SIZE paths are drawn in parallel threads; block b
    always uses the stream SeedSequence(seed, spawn_key=(b,)).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0.0):
        raise ParameterDomainException("times must be a strictly increasing vector of length ≥ 2")
    if n_paths < 1:
        raise ParameterDomainException(f"n_paths={n_paths} must be ≥ 1")

    sizes = [min(PATH_BLOCK_SIZE, n_paths - start) for start in range(0, n_paths, PATH_BLOCK_SIZE)]
    logger.debug(f"🎲 Simulating {n_paths} OU paths in {len(sizes)} blocks (seed={seed}, n_jobs={n_jobs})")

    blocks = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_simulate_block)(params, size, times, seed, block)
        for block, size in enumerate(sizes)
    )
    return PathEnsemble(n_paths=n_paths, times=times, states=np.vstack(blocks), seed=seed)
