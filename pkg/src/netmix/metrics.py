"""Recovery metrics against ground truth, and pairwise network distances."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .estimators import ModeEstimate, best_permutation
from .graph import Graph, Population, in_sorted
from .model import Assignment, Params


def _labels(g) -> np.ndarray:
    return g.labels if isinstance(g, Assignment) else np.asarray(g, dtype=np.int64)


def variation_of_information(g1, g2) -> float:
    """VI between two labelings of the same items, in nats."""
    a, b = _labels(g1), _labels(g2)
    if len(a) != len(b):
        raise ValueError("labelings have different lengths")
    if len(a) == 0:
        raise ValueError("VI is undefined for empty labelings")
    N = len(a)
    _, joint = np.unique(np.stack([a, b]), axis=1, return_counts=True)
    _, ca = np.unique(a, return_counts=True)
    _, cb = np.unique(b, return_counts=True)

    def h(c):
        p = c / N
        return -float(np.sum(p * np.log(p)))

    # H(a) + H(b) - 2 I(a; b) = 2 H(a, b) - H(a) - H(b)
    return max(2.0 * h(joint) - h(ca) - h(cb), 0.0)


def _as_estimate(est) -> ModeEstimate:
    if isinstance(est, ModeEstimate):
        return est
    est = list(est)
    return ModeEstimate(est[0].n, 1, [a.keys for a in est], [np.ones(a.m, dtype=np.int64) for a in est])


def mode_distance_matrix(est, truth: Sequence[Graph]) -> np.ndarray:
    """``D[u, v]`` = l1 distance between estimated mode ``u`` and true mode ``v``."""
    est = _as_estimate(est)
    if est.K != len(truth):
        raise ValueError(f"estimate has K={est.K}, truth has K={len(truth)}")
    D = np.empty((est.K, len(truth)))
    for u in range(est.K):
        p = est.probs(u)
        for v, a in enumerate(truth):
            if a.n != est.n:
                raise ValueError("estimate and truth live on different node sets")
            shared = p[in_sorted(est.keys[u], a.keys)].sum()
            D[u, v] = a.m + p.sum() - 2.0 * shared
    return D


def match_modes(est, truth: Sequence[Graph]) -> tuple[float, np.ndarray]:
    """Smallest total l1 error over relabelings, and ``perm`` with estimate ``perm[v]`` matched to truth ``v``."""
    D = mode_distance_matrix(est, truth)
    sigma = best_permutation(-D.T)  # sigma[v] = estimated mode for truth v
    return float(D[sigma, np.arange(len(truth))].sum()), sigma


def mode_set_error(est, truth: Sequence[Graph]) -> float:
    return match_modes(est, truth)[0]


def param_l1(est: Params, truth: Params, perm: Sequence[int] | None = None) -> float:
    """Sum of absolute differences over ``alpha``, ``beta`` and ``pi``.

    ``perm[v]`` is the estimated mode matched to true mode ``v`` (as returned
    by :func:`match_modes`); identity when omitted.
    """
    if est.K != truth.K:
        raise ValueError("K mismatch")
    if perm is not None:
        est = est.permuted(perm)
    return float(
        np.abs(est.alpha - truth.alpha).sum()
        + np.abs(est.beta - truth.beta).sum()
        + np.abs(est.pi - truth.pi).sum()
    )


def pairwise_hamming(pop: Population) -> np.ndarray:
    """``N x N`` matrix of edge-set symmetric differences."""
    if pop.N < 1:
        raise ValueError("empty population")
    D = pop.incidence
    shared = (D @ D.T).toarray()
    m = pop.edge_counts
    return (m[:, None] + m[None, :] - 2 * shared).astype(np.int64)
