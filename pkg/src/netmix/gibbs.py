"""Gibbs sampler over modes, assignments and parameters.

One sweep draws, in this order,

1. every mode from its conditional given the assignments and parameters,
   with pairs grouped by how often they were observed in the cluster;
2. every assignment from its categorical conditional;
3. the parameters from their beta/Dirichlet conditionals.

The sufficient statistics are kept in step with the state after each block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import expit

from .graph import Graph, Population, all_pair_keys, n_pairs, random_pairs
from .metric_model import sample_params_metric
from .model import (
    Assignment,
    Hyperparams,
    clamp,
    Params,
    SuffStats,
    _aggregate_w,
    agreement_y11,
    build_suff_stats,
    component_log_likelihoods,
    log_likelihood_complete,
    log_posterior_from_stats,
    log_scores,
    reassign_many,
    set_modes,
)
from .rng import make_rng


SMALL_PAIR_COUNT = 512


@dataclass
class ChainConfig:
    K: int
    sweeps: int = 1000
    burn_in: int | None = None
    thin: int = 1
    seed: int = 0
    hyper: Hyperparams | None = None
    metric_constrained: bool = False
    complement_moves: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.burn_in is None:
            self.burn_in = self.sweeps // 5
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < sweeps")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.hyper is None:
            self.hyper = Hyperparams.flat(self.K)
        if self.hyper.K != self.K:
            raise ValueError(f"hyperparameters are for K={self.hyper.K}, chain has K={self.K}")

    @property
    def n_kept(self) -> int:
        return -(-(self.sweeps - self.burn_in) // self.thin)

    def to_dict(self) -> dict:
        return {
            "K": self.K, "sweeps": self.sweeps, "burn_in": self.burn_in, "thin": self.thin,
            "seed": self.seed, "hyper": self.hyper.to_dict(),
            "metric_constrained": self.metric_constrained,
            "complement_moves": self.complement_moves,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainConfig":
        return cls(
            K=d["K"], sweeps=d["sweeps"], burn_in=d["burn_in"], thin=d["thin"], seed=d["seed"],
            hyper=Hyperparams.from_dict(d["hyper"], d["K"]),
            metric_constrained=d.get("metric_constrained", False),
            complement_moves=d.get("complement_moves", True),
        )


@dataclass
class GroupedCounts:
    """Pairs of one cluster grouped by occurrence count.

    ``groups[k]`` holds the sorted keys of the pairs seen exactly
    ``levels[k]`` times (``levels`` ascending, all >= 1).  Pairs never seen
    in the cluster form the implicit group of size ``size0``; ``observed``
    is the sorted union of the explicit groups.
    """

    levels: np.ndarray
    groups: list[np.ndarray]
    observed: np.ndarray
    size0: int

    @property
    def L(self) -> int:
        return len(self.levels) + (self.size0 > 0)


def group_counts(stats: SuffStats, u: int) -> GroupedCounts:
    row = stats.X[u]
    nz = np.flatnonzero(row)
    counts = row[nz]
    keys = stats.observed_keys[nz]
    order = np.argsort(counts, kind="stable")
    counts, skeys = counts[order], keys[order]
    starts = np.flatnonzero(np.diff(counts, prepend=0))
    bounds = np.append(starts, len(counts)).tolist()
    groups = [skeys[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    return GroupedCounts(counts[starts], groups, keys, stats.n_pairs - len(keys))


def _inclusion_terms(params: Params):
    la, l1a, lb, l1b, _, lr, l1r = params.log_rates()
    return lr - l1r, la - lb, l1a - l1b


def edge_inclusion_prob(x, n_u, params: Params, u: int, _terms=None):
    """Conditional probability that a pair seen ``x`` times among ``n_u`` samples is a mode edge."""
    prior, hit, miss = _terms if _terms is not None else _inclusion_terms(params)
    x = np.asarray(x, dtype=float)
    out = expit(prior + x * hit[u] + (n_u - x) * miss[u])
    return float(out) if out.ndim == 0 else out


def sample_modes(stats: SuffStats, params: Params, n: int, rng, counter: dict | None = None) -> list[Graph]:
    """Draw all modes from their conditional distribution.

    Pairs of cluster ``u`` are grouped by their occurrence count ``l``; the
    number of edges taken from each group is one binomial draw, and that
    many pairs are then chosen uniformly without replacement from the
    group.  The group of pairs never observed in the cluster is handled by
    count only and its chosen pairs are found by rejection sampling, so it
    is never materialised.

    ``counter``, when given, accumulates ``groups`` (binomial draws made),
    ``expected_work`` (sum over groups of ``1 + |T_l| Q_l``) and ``edges``.
    """
    rng = make_rng(rng)
    prior, hit, miss = _inclusion_terms(params)
    K, P = stats.X.shape
    N_u = stats.N_u
    # every explicit group of every cluster at once; group id = u * (N + 1) + l
    stride = stats.N + 1
    flat = np.flatnonzero(stats.X.reshape(-1))
    mode_of = flat // P
    gkey = mode_of * stride + stats.X.reshape(-1)[flat]
    sizes_all = np.bincount(gkey, minlength=K * stride)
    gid = np.flatnonzero(sizes_all)
    sizes = sizes_all[gid]
    g_mode, g_level = gid // stride, gid % stride
    q = expit(prior + g_level * hit[g_mode] + (N_u[g_mode] - g_level) * miss[g_mode])
    take_all = np.zeros(K * stride, dtype=np.int64)
    take_all[gid] = rng.binomial(sizes, q)
    # uniform choice inside each group: order members by group, then a random key
    order = np.argsort(gkey + rng.random(len(flat)))
    gsorted = gkey[order]
    rank = np.arange(len(flat)) - (np.cumsum(sizes_all) - sizes_all)[gsorted]
    chosen = np.sort(flat[order[rank < take_all[gsorted]]])
    chosen_mode = chosen // P
    chosen_keys = stats.observed_keys[chosen % P]

    size0 = stats.n_pairs - np.bincount(mode_of, minlength=K)
    q0 = expit(prior + N_u * miss)
    take0 = rng.binomial(size0, q0)
    if counter is not None:
        counter["groups"] = counter.get("groups", 0) + len(gid) + K
        counter["expected_work"] = (
            counter.get("expected_work", 0.0) + float(np.sum(1 + sizes * q)) + float(np.sum(1 + size0 * q0))
        )
        counter["edges"] = counter.get("edges", 0) + len(chosen) + int(take0.sum())
    if stats.n_pairs <= SMALL_PAIR_COUNT:
        # few pairs: pick the never-observed ones of all modes in one shot
        # by ranking random keys, with observed pairs pushed to the back
        allk = all_pair_keys(n)
        R = rng.random((K, stats.n_pairs))
        R[mode_of, np.searchsorted(allk, stats.observed_keys[flat % P])] = 2.0
        pick = np.argsort(R, axis=1)[np.arange(stats.n_pairs) < take0[:, None]]
        comp = np.concatenate([chosen_mode, np.repeat(np.arange(K), take0)]) * (n * n)
        comp = np.sort(comp + np.concatenate([chosen_keys, allk[pick]]))
        bounds = np.searchsorted(comp, np.arange(K + 1) * (n * n)).tolist()
        keys = comp % (n * n)
        return [Graph.from_keys(n, keys[bounds[u]:bounds[u + 1]], presorted=True) for u in range(K)]
    bounds = np.searchsorted(chosen_mode, np.arange(K + 1))
    row_bounds = np.searchsorted(mode_of, np.arange(K + 1))
    modes = []
    for u in range(K):
        keys = chosen_keys[bounds[u]:bounds[u + 1]]
        if take0[u]:
            observed = stats.observed_keys[flat[row_bounds[u]:row_bounds[u + 1]] % P]
            keys = np.concatenate([keys, random_pairs(n, int(take0[u]), rng, exclude=observed)])
        modes.append(Graph.from_keys(n, keys, unique=True))
    return modes


def assignment_probabilities(pop: Population, modes: Sequence[Graph], params: Params,
                             stats: SuffStats | None = None) -> np.ndarray:
    """``N x K`` matrix of conditional assignment probabilities.

    Reuses ``stats.Y11`` when the stats are current for ``modes``.
    """
    w = _assignment_weights(pop, modes, params, stats)
    return w / w.sum(axis=1, keepdims=True)


def _assignment_weights(pop, modes, params, stats):
    # unnormalised, with the largest entry of each row equal to one
    if stats is not None:
        Y11, M_star_u = stats.Y11, stats.M_star_u
    else:
        Y11 = agreement_y11(pop, modes)
        M_star_u = np.array([a.m for a in modes], dtype=np.int64)
    logits = component_log_likelihoods(Y11, pop.edge_counts, M_star_u, n_pairs(pop.n), params)
    logits += params.log_rates()[4]
    logits -= logits.max(axis=1, keepdims=True)
    return np.exp(logits)


def sample_assignment_conditional(pop: Population, modes: Sequence[Graph], params: Params, rng,
                                  stats: SuffStats | None = None) -> Assignment:
    rng = make_rng(rng)
    cdf = np.cumsum(_assignment_weights(pop, modes, params, stats), axis=1)
    u = rng.random(pop.N) * cdf[:, -1]
    labels = (cdf < u[:, None]).sum(axis=1)
    return Assignment.trusted(np.minimum(labels, params.K - 1), params.K)


def sample_params_conditional(stats: SuffStats, hyper: Hyperparams, rng) -> Params:
    """Conjugate draw of ``alpha``, ``beta``, ``pi`` and ``rho`` given the counts.

    ``alpha_u ~ Beta(W11 + h11, W01 + h01)``, ``beta_u ~ Beta(W10 + h10, W00 + h00)``,
    ``rho ~ Beta(M* + a*, K C(n,2) - M* + b*)``, ``pi ~ Dirichlet(N_u + gamma)``.
    All beta and Dirichlet variates come from one vector of gamma draws.
    """
    rng = make_rng(rng)
    K = stats.K
    M = stats.M_star
    shapes = np.concatenate([
        stats.W11 + hyper.h11, stats.W01 + hyper.h01,
        stats.W10 + hyper.h10, stats.W00 + hyper.h00,
        stats.N_u + hyper.gamma,
        [M + hyper.a_star, K * stats.n_pairs - M + hyper.b_star],
    ])
    x = rng.standard_gamma(shapes)
    pi = x[4 * K:5 * K]
    # alpha, beta and rho are ratios x / (x + y) over paired slices
    num = np.concatenate([x[:K], x[2 * K:3 * K], x[-2:-1]])
    den = num + np.concatenate([x[K:2 * K], x[3 * K:4 * K], x[-1:]])
    r = clamp(np.concatenate([num / den, pi / pi.sum()]))
    pi = r[2 * K + 1:]
    return Params(r[:K], r[K:2 * K], pi / pi.sum(), r[2 * K])


def sample_params_prior(hyper: Hyperparams, rng) -> Params:
    rng = make_rng(rng)
    return Params(
        rng.beta(hyper.h11, hyper.h01), rng.beta(hyper.h10, hyper.h00),
        rng.dirichlet(hyper.gamma), rng.beta(hyper.a_star, hyper.b_star),
    ).clamped()


@dataclass
class ChainState:
    modes: list[Graph]
    g: Assignment
    params: Params
    stats: SuffStats
    rng: np.random.Generator = field(repr=False)


def initial_state(pop: Population, cfg: ChainConfig, rng=None) -> ChainState:
    """Uniform random labels, parameters from the prior (rates ordered so
    ``alpha >= beta``), modes from their conditional."""
    rng = make_rng(cfg.seed if rng is None else rng)
    K = cfg.K
    g = Assignment(rng.integers(0, K, size=pop.N), K)
    params = sample_params_prior(cfg.hyper, rng)
    # Complementing a mode while swapping its two rates leaves the likelihood
    # unchanged, and a chain started on the "alpha < beta" side rarely leaves
    # it.  Start every mode on the informative side.
    lo = np.minimum(params.alpha, params.beta)
    hi = np.maximum(params.alpha, params.beta)
    if cfg.metric_constrained:
        lo = np.minimum(params.beta, 1.0 - params.beta)
        hi = 1.0 - lo
    params = Params(hi, lo, params.pi, params.rho)
    empty = [Graph.from_keys(pop.n, []) for _ in range(K)]
    stats = build_suff_stats(pop, g, empty)
    modes = sample_modes(stats, params, pop.n, rng)
    set_modes(stats, pop, modes)
    return ChainState(modes, g, params, stats, rng)


def sweep(state: ChainState, pop: Population, cfg: ChainConfig, rng=None) -> ChainState:
    """One full Gibbs sweep.  Updates ``state`` in place and returns it."""
    rng = state.rng if rng is None else make_rng(rng)
    stats = state.stats
    state.modes = sample_modes(stats, state.params, pop.n, rng)
    set_modes(stats, pop, state.modes)
    state.g = sample_assignment_conditional(pop, state.modes, state.params, rng, stats=stats)
    reassign_many(stats, pop, state.g.labels)
    if cfg.metric_constrained:
        state.params = sample_params_metric(stats, cfg.hyper, rng)
    else:
        state.params = sample_params_conditional(stats, cfg.hyper, rng)
    if cfg.complement_moves:
        complement_move(state, cfg, rng)
    return state


def complement_log_ratio(M_star_u, C: int, params: Params, hyper: Hyperparams,
                         metric_constrained: bool = False) -> np.ndarray:
    """Log posterior ratio of complementing each mode and swapping its two rates.

    ``M_star_u`` are the mode edge counts and ``C`` the number of node pairs.
    The likelihood is unchanged by that move, so only the prior terms for the
    mode and for the rates contribute.
    """
    la, l1a, lb, l1b, _, lr, l1r = params.log_rates()
    out = (lr - l1r) * (C - 2 * np.asarray(M_star_u))
    if metric_constrained:
        out = out + (hyper.h10 - 1) * (la - lb) + (hyper.h00 - 1) * (l1a - l1b)
    else:
        out = out + (hyper.h11 - hyper.h10) * (lb - la) + (hyper.h01 - hyper.h00) * (l1b - l1a)
    return out


def complement_move(state: ChainState, cfg: ChainConfig, rng) -> np.ndarray:
    """Metropolis step proposing, per mode, its complement with ``alpha`` and ``beta`` swapped.

    The proposal is its own inverse, so accepting with the posterior ratio
    leaves the posterior invariant.  It lets the chain leave the mirror-image
    solution, which has the same likelihood but which Gibbs updates alone
    almost never cross into or out of.  Returns the accepted mask.
    """
    stats, params = state.stats, state.params
    log_ratio = complement_log_ratio(stats.M_star_u, stats.n_pairs, params, cfg.hyper, cfg.metric_constrained)
    accept = np.log(rng.random(stats.K)) < log_ratio
    if not accept.any():
        return accept
    for u in np.flatnonzero(accept).tolist():
        state.modes[u] = state.modes[u].complement()
        stats.Y11[:, u] = stats.M_t - stats.Y11[:, u]
        stats.M_star_u[u] = stats.n_pairs - stats.M_star_u[u]
    alpha = np.where(accept, params.beta, params.alpha)
    beta = np.where(accept, params.alpha, params.beta)
    state.params = Params(alpha, beta, params.pi, params.rho)
    _aggregate_w(stats)
    return accept


def iter_chain(pop: Population, cfg: ChainConfig) -> Iterator[tuple[int, ChainState]]:
    """Yield ``(sweep_index, state)`` for every kept sweep.

    The state object is reused between yields; copy what you keep.
    """
    if pop.N < 1:
        raise ValueError("population must contain at least one network")
    state = initial_state(pop, cfg)
    for s in range(cfg.sweeps):
        sweep(state, pop, cfg)
        if s >= cfg.burn_in and (s - cfg.burn_in) % cfg.thin == 0:
            yield s, state


@dataclass
class TraceSample:
    sweep: int
    modes: list[Graph]
    g: np.ndarray
    params: Params
    log_posterior: float
    log_likelihood: float

    @property
    def K(self) -> int:
        return len(self.modes)


@dataclass
class Trace:
    samples: list[TraceSample]
    config: ChainConfig
    n: int

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def K(self) -> int:
        return self.config.K

    def log_posteriors(self) -> np.ndarray:
        return np.array([s.log_posterior for s in self.samples])

    def log_likelihoods(self) -> np.ndarray:
        return np.array([s.log_likelihood for s in self.samples])


def snapshot(sweep_index: int, state: ChainState, hyper: Hyperparams) -> TraceSample:
    lp, ll = log_scores(state.stats, state.params, hyper)
    return TraceSample(
        sweep=sweep_index,
        modes=list(state.modes),
        g=state.stats.labels.copy(),
        params=state.params,
        log_posterior=lp,
        log_likelihood=ll,
    )


def run_chain(pop: Population, cfg: ChainConfig) -> Trace:
    """Run one chain and keep every ``thin``-th sweep after burn-in."""
    samples = [snapshot(s, state, cfg.hyper) for s, state in iter_chain(pop, cfg)]
    return Trace(samples, cfg, pop.n)

