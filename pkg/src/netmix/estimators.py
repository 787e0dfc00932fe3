"""Point estimates from Gibbs traces, label alignment, and choice of K."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Population, decode_keys, n_pairs
from .gibbs import ChainConfig, Trace, TraceSample, complement_log_ratio, iter_chain
from .model import Assignment, Params, log_likelihood_complete, log_posterior_from_stats
from .rng import derive_seed

EXHAUSTIVE_MAX_K = 8


def best_permutation(score: np.ndarray) -> np.ndarray:
    """Permutation ``sigma`` maximising ``sum_a score[a, sigma[a]]``.

    Exhaustive for ``K <= 8`` (first maximiser in lexicographic order, so the
    identity wins ties), Hungarian matching above that.
    """
    K = score.shape[0]
    if K <= EXHAUSTIVE_MAX_K:
        perms = _perms(K)
        totals = score[np.arange(K), perms].sum(axis=1)
        return perms[int(np.argmax(totals))]
    rows, cols = linear_sum_assignment(-score)
    return cols[np.argsort(rows)]


_PERM_CACHE: dict[int, np.ndarray] = {}


def _perms(K: int) -> np.ndarray:
    if K not in _PERM_CACHE:
        _PERM_CACHE[K] = np.array(list(itertools.permutations(range(K))), dtype=np.int64).reshape(-1, K)
    return _PERM_CACHE[K]


def relabel(sample: TraceSample, sigma: np.ndarray) -> TraceSample:
    """Rename label ``a`` to ``sigma[a]`` throughout one trace sample."""
    inv = np.argsort(sigma)
    return replace(
        sample,
        modes=[sample.modes[a] for a in inv.tolist()],
        g=sigma[sample.g],
        params=sample.params.permuted(inv),
    )


def align_labels(trace: Trace, reference: str = "last", orient: bool = True) -> Trace:
    """Undo label switching across a trace.

    Samples are visited in order and each one is relabelled to agree as much
    as possible with the running per-sample label counts, which start from
    the reference sample (``"last"`` kept sample, or ``"max"`` for the
    highest log-posterior one).  With ``orient``, a mode that sits closer to
    the complement of the matching reference mode than to the mode itself is
    replaced by its mirror image (see :func:`mirror`); each reference mode
    is first put in its more probable orientation.
    """
    if len(trace) == 0:
        raise ValueError("cannot align an empty trace")
    if reference == "last":
        ref = trace[-1]
    elif reference == "max":
        ref = trace[int(np.argmax(trace.log_posteriors()))]
    else:
        raise ValueError(f"unknown reference {reference!r}")
    cfg = trace.config
    ref = mirror(ref, complement_log_ratio([a.m for a in ref.modes], n_pairs(trace.n), ref.params,
                                           cfg.hyper, cfg.metric_constrained) > 0)
    half = n_pairs(trace.n) / 2
    K = trace.K
    N = len(ref.g)
    counts = np.zeros((N, K))
    counts[np.arange(N), ref.g] = 1.0
    out = []
    for s in trace:
        score = np.zeros((K, K))
        np.add.at(score, s.g, counts)
        sigma = best_permutation(score)
        if not np.array_equal(sigma, np.arange(K)):
            s = relabel(s, sigma)
        if orient:
            s = mirror(s, [a.hamming(b) > half for a, b in zip(s.modes, ref.modes)])
        counts[np.arange(N), s.g] += 1.0
        out.append(s)
    return Trace(out, trace.config, trace.n)


def mirror(sample: TraceSample, flip) -> TraceSample:
    """Complement the flagged modes and swap their ``alpha`` and ``beta``.

    The result has the same likelihood: the posterior carries a mirror copy
    of every solution, much as it carries a copy per labelling.
    """
    flip = np.asarray(flip, dtype=bool)
    if not flip.any():
        return sample
    p = sample.params
    return replace(
        sample,
        modes=[a.complement() if f else a for a, f in zip(sample.modes, flip.tolist())],
        params=Params(np.where(flip, p.beta, p.alpha), np.where(flip, p.alpha, p.beta), p.pi, p.rho),
    )


def point_estimates(trace: Trace, reference: str = "last"):
    """Align labels and orientation, then return ``(ModeEstimate, Params, Assignment)``."""
    trace = align_labels(trace, reference=reference)
    return posterior_mean_modes(trace), posterior_mean_params(trace), map_assignment(trace)


@dataclass
class ModeEstimate:
    """Posterior edge frequencies of each mode.

    ``keys[u]`` are the pair keys seen at least once in mode ``u`` across the
    ``S`` samples, ``counts[u]`` how many samples contained each.
    """

    n: int
    S: int
    keys: list[np.ndarray]
    counts: list[np.ndarray]

    @property
    def K(self) -> int:
        return len(self.keys)

    def probs(self, u: int) -> np.ndarray:
        return self.counts[u] / self.S

    @property
    def edge_prob(self) -> list[dict]:
        out = []
        for u in range(self.K):
            i, j = decode_keys(self.n, self.keys[u])
            out.append(dict(zip(zip(i.tolist(), j.tolist()), self.probs(u).tolist())))
        return out

    def prob(self, u: int, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        pos = np.searchsorted(self.keys[u], i * self.n + j)
        if pos < len(self.keys[u]) and self.keys[u][pos] == i * self.n + j:
            return float(self.counts[u][pos]) / self.S
        return 0.0

    def dense(self, u: int) -> np.ndarray:
        """``n x n`` symmetric matrix of edge frequencies (small ``n`` only)."""
        A = np.zeros((self.n, self.n))
        i, j = decode_keys(self.n, self.keys[u])
        A[i, j] = A[j, i] = self.probs(u)
        return A


def posterior_mean_modes(trace: Trace) -> ModeEstimate:
    if len(trace) == 0:
        raise ValueError("empty trace")
    keys, counts = [], []
    for u in range(trace.K):
        k, c = np.unique(np.concatenate([s.modes[u].keys for s in trace]), return_counts=True)
        keys.append(k.astype(np.int64))
        counts.append(c.astype(np.int64))
    return ModeEstimate(trace.n, len(trace), keys, counts)


def posterior_mean_params(trace: Trace) -> Params:
    if len(trace) == 0:
        raise ValueError("empty trace")
    alpha = np.mean([s.params.alpha for s in trace], axis=0)
    beta = np.mean([s.params.beta for s in trace], axis=0)
    pi = np.mean([s.params.pi for s in trace], axis=0)
    rho = float(np.mean([s.params.rho for s in trace]))
    return Params(alpha, beta, pi / pi.sum(), rho)


def label_counts(trace: Trace) -> np.ndarray:
    """``N x K`` number of samples putting network ``t`` in cluster ``u``."""
    G = np.array([s.g for s in trace])
    N = G.shape[1]
    out = np.zeros((N, trace.K), dtype=np.int64)
    np.add.at(out, (np.tile(np.arange(N), len(trace)), G.reshape(-1)), 1)
    return out


def map_assignment(trace: Trace) -> Assignment:
    """Most frequent label of each network; ties go to the smallest label."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    return Assignment(np.argmax(label_counts(trace), axis=1), trace.K)


@dataclass
class KSelectionReport:
    ks: list[int]
    mean: np.ndarray
    stderr: np.ndarray
    k_star: int
    score: str = "joint"


def _chain_scores(pop: Population, cfg: ChainConfig, score: str) -> np.ndarray:
    out = []
    for _, state in iter_chain(pop, cfg):
        if score == "joint":
            out.append(log_posterior_from_stats(state.stats, state.params, cfg.hyper))
        else:
            out.append(log_likelihood_complete(state.stats, state.params))
    return np.array(out)


def select_k(pop: Population, k_min: int, k_max: int, cfg_template: ChainConfig,
             score: str = "joint", chains: int = 1, workers: int | None = None) -> KSelectionReport:
    """Run chains for every ``K`` in ``[k_min, k_max]`` and pick the best mean score.

    ``score`` is ``"joint"`` (log posterior up to ``-log P(D)``) or
    ``"likelihood"``.  Each (K, chain) pair gets its own seed derived from
    ``cfg_template.seed``; results do not depend on ``workers``.  The
    reported standard error treats kept samples as independent.
    """
    if not 1 <= k_min <= k_max:
        raise ValueError("need 1 <= k_min <= k_max")
    if score not in ("joint", "likelihood"):
        raise ValueError(f"unknown score {score!r}")
    ks = list(range(k_min, k_max + 1))
    jobs = []
    for k in ks:
        for c in range(chains):
            cfg = ChainConfig(
                K=k, sweeps=cfg_template.sweeps, burn_in=cfg_template.burn_in, thin=cfg_template.thin,
                seed=derive_seed(cfg_template.seed, k, c), hyper=cfg_template.hyper.resized(k),
                metric_constrained=cfg_template.metric_constrained,
            )
            jobs.append(cfg)
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_chain_scores, [pop] * len(jobs), jobs, [score] * len(jobs)))
    else:
        results = [_chain_scores(pop, cfg, score) for cfg in jobs]
    means, errs = [], []
    for i in range(len(ks)):
        vals = np.concatenate(results[i * chains:(i + 1) * chains])
        means.append(vals.mean())
        errs.append(vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0)
    means = np.array(means)
    return KSelectionReport(ks, means, np.array(errs), ks[int(np.argmax(means))], score)
