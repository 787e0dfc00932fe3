"""Parameters, sufficient statistics and exact log-densities of the mixture model.

Every sample ``t`` is a noisy copy of one mode ``g[t]``: a mode edge is seen
with probability ``alpha[u]``, a mode non-edge with probability ``beta[u]``.
All sums over node pairs run over unordered pairs ``i < j``, so the four
agreement counts of a (sample, mode) couple add up to ``C(n, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from .graph import Graph, Population, in_sorted, n_pairs

EPS = 1e-12


def clamp(x):
    if np.ndim(x) == 0:
        return min(max(float(x), EPS), 1.0 - EPS)
    return np.minimum(np.maximum(x, EPS), 1.0 - EPS)


@dataclass
class Assignment:
    labels: np.ndarray
    K: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.K = int(self.K)
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.labels.ndim != 1:
            raise ValueError("labels must be a vector")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.K):
            raise ValueError(f"labels must lie in [0, {self.K})")

    @classmethod
    def trusted(cls, labels: np.ndarray, K: int) -> "Assignment":
        """Wrap an ``int64`` label vector already known to be valid, skipping checks."""
        g = cls.__new__(cls)
        g.labels, g.K = labels, K
        return g

    @property
    def N(self) -> int:
        return len(self.labels)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True, eq=False)
class Params:
    """Per-mode rates ``alpha``/``beta``, mixture weights ``pi`` and density ``rho``.

    Treated as an immutable value; build a new one rather than editing arrays.
    """

    alpha: np.ndarray
    beta: np.ndarray
    pi: np.ndarray
    rho: float

    def __post_init__(self):
        for name in ("alpha", "beta", "pi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        object.__setattr__(self, "rho", float(self.rho))
        if not (len(self.alpha) == len(self.beta) == len(self.pi)):
            raise ValueError("alpha, beta and pi must have the same length")

    @property
    def K(self) -> int:
        return len(self.alpha)

    def clamped(self) -> "Params":
        pi = clamp(self.pi)
        return Params(clamp(self.alpha), clamp(self.beta), pi / pi.sum(), clamp(self.rho))

    @cached_property
    def _log_rates(self):
        K = len(self.alpha)
        x = clamp(np.concatenate([self.alpha, self.beta, [self.rho], self.pi]))
        x[2 * K + 1:] /= x[2 * K + 1:].sum()
        lx = np.log(x)
        l1x = np.log1p(-x[:2 * K + 1])
        return (lx[:K], l1x[:K], lx[K:2 * K], l1x[K:2 * K],
                lx[2 * K + 1:], float(lx[2 * K]), float(l1x[2 * K]))

    def log_rates(self):
        """Logs of the clamped ``alpha, 1-alpha, beta, 1-beta, pi, rho, 1-rho``."""
        return self._log_rates

    def permuted(self, order: Sequence[int]) -> "Params":
        """Parameters with mode ``order[v]`` moved to position ``v``."""
        order = np.asarray(order)
        return Params(self.alpha[order], self.beta[order], self.pi[order], self.rho)

    def copy(self) -> "Params":
        return Params(self.alpha.copy(), self.beta.copy(), self.pi.copy(), self.rho)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Params):
            return NotImplemented
        return (
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.pi, other.pi)
            and self.rho == other.rho
        )


def _vec(x, K: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.full(K, arr[0])
    if arr.size != K:
        raise ValueError(f"{name} must have length {K}, got {arr.size}")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be positive and finite")
    return arr


@dataclass(eq=False)
class Hyperparams:
    """Beta/Dirichlet pseudo-counts.  All ones gives flat priors.

    ``alpha_u ~ Beta(h11, h01)``, ``beta_u ~ Beta(h10, h00)``,
    ``rho ~ Beta(a_star, b_star)``, ``pi ~ Dirichlet(gamma)``.
    """

    h11: np.ndarray
    h01: np.ndarray
    h10: np.ndarray
    h00: np.ndarray
    a_star: float = 1.0
    b_star: float = 1.0
    gamma: np.ndarray = field(default=None)

    def __post_init__(self):
        K = np.asarray(self.h11).size
        if self.gamma is None:
            self.gamma = np.ones(K)
        self.h11 = _vec(self.h11, K, "h11")
        self.h01 = _vec(self.h01, K, "h01")
        self.h10 = _vec(self.h10, K, "h10")
        self.h00 = _vec(self.h00, K, "h00")
        self.gamma = _vec(self.gamma, K, "gamma")
        self.a_star = float(self.a_star)
        self.b_star = float(self.b_star)
        if not (self.a_star > 0 and self.b_star > 0):
            raise ValueError("a_star and b_star must be positive")

    @property
    def K(self) -> int:
        return len(self.h11)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hyperparams):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    @cached_property
    def log_norm(self) -> float:
        """Sum of the log normalising constants of all prior densities."""
        return float(
            -np.sum(betaln(self.h11, self.h01)) - np.sum(betaln(self.h10, self.h00))
            - betaln(self.a_star, self.b_star)
            + gammaln(self.gamma.sum()) - np.sum(gammaln(self.gamma))
        )

    @classmethod
    def flat(cls, K: int, a_star: float = 1.0, b_star: float = 1.0) -> "Hyperparams":
        one = np.ones(K)
        return cls(one, one, one, one, a_star, b_star, one)

    def resized(self, K: int) -> "Hyperparams":
        """The same prior for a different number of modes.

        Only defined when each per-mode vector is constant.
        """
        vals = {}
        for name in ("h11", "h01", "h10", "h00", "gamma"):
            v = getattr(self, name)
            if not np.all(v == v[0]):
                raise ValueError(f"cannot resize non-constant {name}")
            vals[name] = np.full(K, v[0])
        return Hyperparams(a_star=self.a_star, b_star=self.b_star, **vals)

    def to_dict(self) -> dict:
        return {
            "h11": self.h11.tolist(), "h01": self.h01.tolist(),
            "h10": self.h10.tolist(), "h00": self.h00.tolist(),
            "a_star": self.a_star, "b_star": self.b_star, "gamma": self.gamma.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, K: int | None = None) -> "Hyperparams":
        if K is None:
            K = max(np.asarray(d.get(k, 1.0)).size for k in ("h11", "h01", "h10", "h00", "gamma"))
        return cls(
            _vec(d.get("h11", 1.0), K, "h11"), _vec(d.get("h01", 1.0), K, "h01"),
            _vec(d.get("h10", 1.0), K, "h10"), _vec(d.get("h00", 1.0), K, "h00"),
            d.get("a_star", 1.0), d.get("b_star", 1.0), _vec(d.get("gamma", 1.0), K, "gamma"),
        )


class SuffStats:
    """Counts from which every conditional of the sampler is computed.

    ``X[u, c]`` is the number of samples in cluster ``u`` containing the
    ``c``-th observed pair (``Population.observed_keys``); pairs never
    observed are not stored.  ``Y11[t, u]`` counts edges shared by sample
    ``t`` and mode ``u``; the other three agreement matrices follow from
    ``M_t``, ``M_star_u`` and ``C(n, 2)``.  ``W*`` aggregate the agreement
    counts of each mode with the samples assigned to it.
    """

    def __init__(self, n, labels, K, N_u, M_t, M_star_u, X, Y11, W11, W10, W01, W00, observed_keys):
        self.n = n
        self.K = K
        self.labels = labels
        self.N_u = N_u
        self.M_t = M_t
        self.M_star_u = M_star_u
        self.X = X
        self.Y11 = Y11
        self.W11 = W11
        self.W10 = W10
        self.W01 = W01
        self.W00 = W00
        self.observed_keys = observed_keys

    @property
    def N(self) -> int:
        return len(self.labels)

    @property
    def n_pairs(self) -> int:
        return n_pairs(self.n)

    @property
    def M_star(self) -> int:
        return int(self.M_star_u.sum())

    @property
    def Y10(self) -> np.ndarray:
        return self.M_t[:, None] - self.Y11

    @property
    def Y01(self) -> np.ndarray:
        return self.M_star_u[None, :] - self.Y11

    @property
    def Y00(self) -> np.ndarray:
        return self.n_pairs - self.M_t[:, None] - self.M_star_u[None, :] + self.Y11

    @property
    def X_u(self) -> list[dict]:
        """Per-cluster ``{(i, j): count}`` maps of nonzero occurrence counts."""
        out = []
        for u in range(self.K):
            nz = np.nonzero(self.X[u])[0]
            keys = self.observed_keys[nz]
            out.append({
                (int(k // self.n), int(k % self.n)): int(c)
                for k, c in zip(keys.tolist(), self.X[u, nz].tolist())
            })
        return out

    def copy(self) -> "SuffStats":
        return SuffStats(
            self.n, self.labels.copy(), self.K, self.N_u.copy(), self.M_t, self.M_star_u.copy(),
            self.X.copy(), self.Y11.copy(), self.W11.copy(), self.W10.copy(), self.W01.copy(),
            self.W00.copy(), self.observed_keys,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, SuffStats):
            return NotImplemented
        arrays = ("labels", "N_u", "M_t", "M_star_u", "X", "Y11", "W11", "W10", "W01", "W00")
        return (
            self.n == other.n and self.K == other.K
            and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
        )


def _check_dims(pop: Population, g: Assignment, modes: Sequence[Graph]):
    if not modes:
        raise ValueError("at least one mode is required")
    if g.K != len(modes):
        raise ValueError(f"assignment has K={g.K} but {len(modes)} modes were given")
    if g.N != pop.N:
        raise ValueError(f"assignment has N={g.N} but population has N={pop.N}")
    for u, a in enumerate(modes):
        if a.n != pop.n:
            raise ValueError(f"mode {u} has n={a.n}, population has n={pop.n}")


def mode_masks(pop: Population, modes: Sequence[Graph]) -> np.ndarray:
    """``K x P_obs`` indicator of which observed pairs each mode contains."""
    keys = pop.observed_keys
    return np.array([in_sorted(keys, a.keys) for a in modes], dtype=np.int64).reshape(len(modes), len(keys))


def agreement_y11(pop: Population, modes: Sequence[Graph]) -> np.ndarray:
    """``N x K`` counts of edges present in both sample ``t`` and mode ``u``."""
    obs = pop.observed_keys
    D = pop.dense_incidence
    if D is not None and len(modes):
        masks = np.array([in_sorted(obs, a.keys) for a in modes], dtype=float)
        return (D @ masks.T).astype(np.int64)
    out = np.empty((pop.N, len(modes)), dtype=np.int64)
    for u, a in enumerate(modes):
        hit = in_sorted(obs, a.keys)[pop.columns]
        out[:, u] = np.bincount(pop.rows[hit], minlength=pop.N)
    return out


def _aggregate_w(stats: SuffStats):
    labels = stats.labels
    K = stats.K
    y = stats.Y11[np.arange(stats.N), labels]
    W11 = np.bincount(labels, weights=y, minlength=K).astype(np.int64)
    W10 = np.bincount(labels, weights=stats.M_t, minlength=K).astype(np.int64) - W11
    W01 = stats.N_u * stats.M_star_u - W11
    W00 = stats.N_u * stats.n_pairs - W11 - W10 - W01
    stats.W11, stats.W10, stats.W01, stats.W00 = W11, W10, W01, W00


def build_suff_stats(pop: Population, g: Assignment, modes: Sequence[Graph]) -> SuffStats:
    _check_dims(pop, g, modes)
    K = g.K
    P = len(pop.observed_keys)
    labels = g.labels.copy()
    M_t = pop.edge_counts
    row_label = np.repeat(labels, M_t)
    X = np.bincount(row_label * P + pop.columns, minlength=K * P).astype(np.int64).reshape(K, P)
    stats = SuffStats(
        n=pop.n, labels=labels, K=K,
        N_u=np.bincount(labels, minlength=K).astype(np.int64),
        M_t=M_t,
        M_star_u=np.array([a.m for a in modes], dtype=np.int64),
        X=X,
        Y11=agreement_y11(pop, modes),
        W11=None, W10=None, W01=None, W00=None,
        observed_keys=pop.observed_keys,
    )
    _aggregate_w(stats)
    return stats


def set_modes(stats: SuffStats, pop: Population, modes: Sequence[Graph]) -> SuffStats:
    """Refresh the mode-dependent counts in place after new modes were drawn.

    Cost is linear in the number of observed sample edges.
    """
    if len(modes) != stats.K:
        raise ValueError("number of modes does not match stats")
    stats.M_star_u = np.array([a.m for a in modes], dtype=np.int64)
    stats.Y11 = agreement_y11(pop, modes)
    _aggregate_w(stats)
    return stats


def _y_row(stats: SuffStats, t: int, u: int):
    y11 = int(stats.Y11[t, u])
    y10 = int(stats.M_t[t]) - y11
    y01 = int(stats.M_star_u[u]) - y11
    return y11, y10, y01, stats.n_pairs - y11 - y10 - y01


def update_stats_on_reassign(stats: SuffStats, pop: Population, t: int, u_new: int) -> SuffStats:
    """Move sample ``t`` to cluster ``u_new``, updating ``stats`` in place.

    Touches only the ``M_t`` columns of sample ``t``.  Returns ``stats``.
    """
    if not 0 <= u_new < stats.K:
        raise IndexError(f"mode index {u_new} out of range")
    u_old = int(stats.labels[t])
    if u_old == u_new:
        return stats
    cols = pop.sample_columns(t)
    stats.X[u_old, cols] -= 1
    stats.X[u_new, cols] += 1
    stats.N_u[u_old] -= 1
    stats.N_u[u_new] += 1
    for u, sign in ((u_old, -1), (u_new, 1)):
        y11, y10, y01, y00 = _y_row(stats, t, u)
        stats.W11[u] += sign * y11
        stats.W10[u] += sign * y10
        stats.W01[u] += sign * y01
        stats.W00[u] += sign * y00
    stats.labels[t] = u_new
    return stats


def reassign_many(stats: SuffStats, pop: Population, new_labels: np.ndarray) -> SuffStats:
    """Bulk version of :func:`update_stats_on_reassign` for a whole label vector."""
    new_labels = np.asarray(new_labels, dtype=np.int64)
    changed = np.nonzero(new_labels != stats.labels)[0]
    if len(changed) == 0:
        return stats
    counts = stats.M_t[changed]
    starts = pop.indptr[changed]
    # gather columns of every changed sample without a Python loop
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    cols = pop.columns[np.repeat(starts, counts) + offs]
    np.subtract.at(stats.X, (np.repeat(stats.labels[changed], counts), cols), 1)
    np.add.at(stats.X, (np.repeat(new_labels[changed], counts), cols), 1)
    stats.labels[changed] = new_labels[changed]
    stats.N_u = np.bincount(stats.labels, minlength=stats.K).astype(np.int64)
    _aggregate_w(stats)
    return stats


# --- log-densities -------------------------------------------------------

def log_likelihood_complete(stats: SuffStats, params: Params) -> float:
    """``log P(D | Z, modes, theta)`` from the aggregated agreement counts."""
    if params.K != stats.K:
        raise ValueError("params and stats disagree on K")
    la, l1a, lb, l1b = params.log_rates()[:4]
    return float(np.sum(stats.W11 * la + stats.W01 * l1a + stats.W10 * lb + stats.W00 * l1b))


def component_log_likelihoods(Y11, M_t, M_star_u, C, params: Params) -> np.ndarray:
    """``N x K`` matrix of ``log P(D_t | mode u, alpha_u, beta_u)``."""
    la, l1a, lb, l1b = params.log_rates()[:4]
    # expand Y10, Y01, Y00 through the identities and collect terms
    per_mode = M_star_u * (l1a - l1b) + C * l1b
    return Y11 * (la - l1a - lb + l1b) + np.multiply.outer(M_t, lb - l1b) + per_mode


def log_likelihood_marginal(pop: Population, modes: Sequence[Graph], params: Params) -> float:
    """``log P(D | modes, theta)`` with the assignments summed out."""
    if len(modes) != params.K:
        raise ValueError("params and modes disagree on K")
    M_star_u = np.array([a.m for a in modes], dtype=np.int64)
    ll = component_log_likelihoods(agreement_y11(pop, modes), pop.edge_counts, M_star_u, n_pairs(pop.n), params)
    logpi = params.log_rates()[4]
    return float(np.sum(logsumexp(ll + logpi[None, :], axis=1)))


def log_prior_assignment(N_u: np.ndarray, params: Params) -> float:
    return float(np.sum(N_u * params.log_rates()[4]))


def log_prior_modes(M_star: int, K: int, n: int, params: Params) -> float:
    lr, l1r = params.log_rates()[5:]
    return M_star * lr + (K * n_pairs(n) - M_star) * l1r


def log_prior_params(params: Params, hyper: Hyperparams) -> float:
    """Log density of the beta/Dirichlet priors on the parameters."""
    la, l1a, lb, l1b, lpi, lr, l1r = params.log_rates()
    h = hyper
    out = np.sum((h.h11 - 1) * la + (h.h01 - 1) * l1a + (h.h10 - 1) * lb + (h.h00 - 1) * l1b)
    out += (h.a_star - 1) * lr + (h.b_star - 1) * l1r + np.sum((h.gamma - 1) * lpi)
    return float(out) + h.log_norm


def log_scores(stats: SuffStats, params: Params, hyper: Hyperparams) -> tuple[float, float]:
    """``(log posterior, log likelihood)`` sharing one pass over the counts."""
    la, l1a, lb, l1b, lpi, lr, l1r = params.log_rates()
    h = hyper
    ll = stats.W11 * la + stats.W01 * l1a + stats.W10 * lb + stats.W00 * l1b
    prior = (h.h11 - 1) * la + (h.h01 - 1) * l1a + (h.h10 - 1) * lb + (h.h00 - 1) * l1b \
        + (stats.N_u + h.gamma - 1) * lpi
    M = stats.M_star
    ll = float(ll.sum())
    lp = ll + float(prior.sum()) + (M + h.a_star - 1) * lr + (stats.K * stats.n_pairs - M + h.b_star - 1) * l1r
    return lp + h.log_norm, ll


def log_posterior_from_stats(stats: SuffStats, params: Params, hyper: Hyperparams) -> float:
    if hyper.K != stats.K or params.K != stats.K:
        raise ValueError("hyperparameters, params and stats disagree on K")
    la, l1a, lb, l1b, lpi, lr, l1r = params.log_rates()
    M = stats.M_star
    h = hyper
    out = np.sum(
        (stats.W11 + h.h11 - 1) * la + (stats.W01 + h.h01 - 1) * l1a
        + (stats.W10 + h.h10 - 1) * lb + (stats.W00 + h.h00 - 1) * l1b
        + (stats.N_u + h.gamma - 1) * lpi
    )
    out += (M + h.a_star - 1) * lr + (stats.K * stats.n_pairs - M + h.b_star - 1) * l1r
    return float(out) + h.log_norm


def log_posterior(pop: Population, g: Assignment, modes: Sequence[Graph], params: Params,
                  hyper: Hyperparams) -> float:
    """Unnormalised log joint ``log P(D, Z, modes, theta)``.

    Equals the log posterior up to the constant ``-log P(D)``.
    """
    return log_posterior_from_stats(build_suff_stats(pop, g, modes), params, hyper)
