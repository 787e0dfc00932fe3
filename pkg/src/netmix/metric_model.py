"""Exponential-Hamming metric model as the ``alpha = 1 - beta`` special case.

A sample at Hamming distance ``d`` from its mode has likelihood
``exp(-d / sigma) / (1 + exp(-1 / sigma)) ** C(n, 2)``, which is the
measurement model with ``alpha = 1 - beta`` and
``sigma = 1 / log((1 - beta) / beta)``, valid for ``beta < 1/2``.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import n_pairs
from .model import Hyperparams, Params, SuffStats, clamp


def sigma_from_beta(beta: float) -> float:
    if not 0.0 < beta < 0.5:
        raise ValueError(f"beta must lie in (0, 1/2), got {beta}")
    return 1.0 / math.log((1.0 - beta) / beta)


def beta_from_sigma(sigma: float) -> float:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    # 1 / (1 + e^{1/sigma}) without overflow for small sigma
    return math.exp(-math.log1p(math.exp(-1.0 / sigma)) - 1.0 / sigma)


def sigmas(params: Params) -> np.ndarray:
    """Per-mode dispersion; ``inf`` where ``beta >= 1/2``."""
    out = np.full(params.K, np.inf)
    ok = params.beta < 0.5
    b = params.beta[ok]
    out[ok] = 1.0 / np.log((1.0 - b) / b)
    return out


def metric_log_likelihood(d_hamming: int, sigma: float, n: int) -> float:
    """``log[exp(-d/sigma) / (1 + exp(-1/sigma))^C(n,2)]`` for one sample."""
    return -d_hamming / sigma - n_pairs(n) * math.log1p(math.exp(-1.0 / sigma))


def sample_params_metric(stats: SuffStats, hyper: Hyperparams, rng) -> Params:
    """Parameter draw under ``alpha_u = 1 - beta_u``.

    The constrained likelihood is ``(1-beta)^(W11+W00) beta^(W10+W01)``, so a
    single beta draw per mode suffices.  ``pi`` and ``rho`` are drawn exactly
    as in the unconstrained sampler.
    """
    K = stats.K
    M = stats.M_star
    shapes = np.concatenate([
        stats.W10 + stats.W01 + hyper.h10, stats.W00 + stats.W11 + hyper.h00,
        stats.N_u + hyper.gamma,
        [M + hyper.a_star, K * stats.n_pairs - M + hyper.b_star],
    ])
    x = rng.standard_gamma(shapes)
    beta = clamp(x[:K] / (x[:K] + x[K:2 * K]))
    pi = clamp(x[2 * K:3 * K] / x[2 * K:3 * K].sum())
    return Params(1.0 - beta, beta, pi / pi.sum(), clamp(x[-2] / (x[-2] + x[-1])))
