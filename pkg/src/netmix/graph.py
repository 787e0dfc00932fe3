"""Binary undirected graphs on labelled nodes, and populations of them.

Node pairs are encoded as integer keys ``i * n + j`` with ``i < j``.  A graph
keeps its keys in a sorted ``int64`` array (deterministic iteration, fast
vectorised membership through ``searchsorted``) and builds a hashed set of
keys on demand for O(1) scalar lookups.  Adjacency matrices are never built.
"""

from __future__ import annotations

from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_keys(n: int, i, j) -> np.ndarray:
    """Keys for pairs given as arrays of endpoints (any order, no loops)."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    return lo * n + hi


def decode_keys(n: int, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keys = np.asarray(keys, dtype=np.int64)
    return keys // n, keys % n


def all_pair_keys(n: int) -> np.ndarray:
    """Sorted keys of every pair.  Read-only; cached for small ``n``."""
    if n_pairs(n) <= _CACHE_PAIRS:
        return _all_pair_keys_cached(n)
    return _all_pair_keys(n)


def _all_pair_keys(n: int) -> np.ndarray:
    i, j = np.triu_indices(n, 1)
    out = i.astype(np.int64) * n + j
    out.flags.writeable = False
    return out


_CACHE_PAIRS = 1 << 20
_all_pair_keys_cached = lru_cache(maxsize=16)(_all_pair_keys)


def in_sorted(keys: np.ndarray, sorted_ref: np.ndarray) -> np.ndarray:
    """Boolean mask: which of ``keys`` occur in the sorted array ``sorted_ref``."""
    if len(sorted_ref) == 0:
        return np.zeros(len(keys), dtype=bool)
    pos = np.searchsorted(sorted_ref, keys)
    pos[pos == len(sorted_ref)] = 0
    return sorted_ref[pos] == keys


class Graph:
    """An undirected simple graph on ``n`` nodes, stored as an edge set.

    Instances are immutable.  ``edges`` is the set of canonical pairs
    ``(i, j)`` with ``i < j``; ``keys`` the sorted integer encoding.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        n = int(n)
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        edges = list(edges)
        if edges:
            arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
            i, j = arr[:, 0], arr[:, 1]
            if np.any(i >= j):
                raise ValueError("edges must satisfy i < j (no self-loops, canonical order)")
            if np.any(i < 0) or np.any(j >= n):
                raise ValueError(f"edge endpoint out of range for n={n}")
            keys = i * n + j
            uniq = np.unique(keys)
            if len(uniq) != len(keys):
                raise ValueError("duplicate edges")
        else:
            uniq = np.empty(0, dtype=np.int64)
        self.n = n
        self.keys = uniq
        self.keys.flags.writeable = False

    @classmethod
    def from_keys(cls, n: int, keys, *, check: bool = False, unique: bool = False,
                  presorted: bool = False) -> "Graph":
        """Build from pair keys.  ``keys`` is sorted and deduplicated here.

        Pass ``unique=True`` when the keys are known to be distinct, and
        ``presorted=True`` when they are also sorted already.
        """
        g = cls.__new__(cls)
        keys = np.asarray(keys, dtype=np.int64)
        if presorted:
            keys = keys.copy()
        else:
            keys = np.sort(keys) if unique else np.unique(keys)
        if check and len(keys):
            i, j = decode_keys(n, keys)
            if np.any(i >= j) or keys[0] < 0 or keys[-1] >= n * n:
                raise ValueError("invalid pair keys")
        g.n = int(n)
        g.keys = keys
        g.keys.flags.writeable = False
        return g

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls.from_keys(n, all_pair_keys(n))

    @cached_property
    def key_set(self) -> frozenset:
        return frozenset(self.keys.tolist())

    @property
    def edges(self) -> frozenset:
        return frozenset(self.edge_list())

    def edge_list(self) -> list[tuple[int, int]]:
        i, j = decode_keys(self.n, self.keys)
        return list(zip(i.tolist(), j.tolist()))

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        if i > j:
            i, j = j, i
        return i * self.n + j in self.key_set

    def __contains__(self, pair) -> bool:
        return self.has_edge(*pair)

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def m(self) -> int:
        return len(self.keys)

    def complement(self) -> "Graph":
        allk = all_pair_keys(self.n)
        return Graph.from_keys(self.n, allk[~in_sorted(allk, self.keys)])

    def hamming(self, other: "Graph") -> int:
        if other.n != self.n:
            raise ValueError("graphs on different node sets")
        common = len(np.intersect1d(self.keys, other.keys, assume_unique=True))
        return len(self.keys) + len(other.keys) - 2 * common

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.keys, other.keys)

    def __hash__(self) -> int:
        return hash((self.n, self.keys.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


DENSE_INCIDENCE_LIMIT = 1 << 20


class Population:
    """An ordered collection of ``N`` graphs measured on the same ``n`` nodes.

    Besides the graphs it lazily builds the sample-by-pair incidence matrix
    restricted to pairs observed at least once; everything in the sampler
    that touches the data goes through it.
    """

    def __init__(self, graphs: Sequence[Graph], n: int | None = None):
        graphs = list(graphs)
        if n is None:
            if not graphs:
                raise ValueError("cannot infer n from an empty population")
            n = graphs[0].n
        for t, g in enumerate(graphs):
            if g.n != n:
                raise ValueError(f"graph {t} has n={g.n}, expected {n}")
        self.n = int(n)
        self.graphs = graphs

    @property
    def N(self) -> int:
        return len(self.graphs)

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, t: int) -> Graph:
        return self.graphs[t]

    def __iter__(self):
        return iter(self.graphs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Population):
            return NotImplemented
        return self.n == other.n and self.graphs == other.graphs

    def __repr__(self) -> str:
        return f"Population(n={self.n}, N={self.N})"

    @cached_property
    def edge_counts(self) -> np.ndarray:
        """``M_t`` for every sample."""
        return np.array([g.m for g in self.graphs], dtype=np.int64)

    @cached_property
    def observed_keys(self) -> np.ndarray:
        """Sorted keys of every pair present in at least one sample."""
        if not self.graphs:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate([g.keys for g in self.graphs]))

    @cached_property
    def indptr(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.edge_counts)]).astype(np.int64)

    @cached_property
    def columns(self) -> np.ndarray:
        """Column index (into ``observed_keys``) of each sample's edges, row-major."""
        if not self.graphs:
            return np.empty(0, dtype=np.int64)
        allk = np.concatenate([g.keys for g in self.graphs])
        return np.searchsorted(self.observed_keys, allk).astype(np.int64)

    @cached_property
    def rows(self) -> np.ndarray:
        """Sample index of each entry of ``columns``."""
        return np.repeat(np.arange(self.N, dtype=np.int64), self.edge_counts)

    @cached_property
    def incidence(self) -> sparse.csr_matrix:
        """``N x P_obs`` 0/1 matrix of samples against observed pairs."""
        data = np.ones(len(self.columns), dtype=np.int64)
        return sparse.csr_matrix(
            (data, self.columns, self.indptr), shape=(self.N, len(self.observed_keys))
        )

    @cached_property
    def dense_incidence(self) -> np.ndarray | None:
        """Float ``N x P_obs`` incidence when it is small enough to hold densely, else ``None``."""
        P = len(self.observed_keys)
        if self.N * P > DENSE_INCIDENCE_LIMIT:
            return None
        D = np.zeros((self.N, P))
        D[self.rows, self.columns] = 1.0
        return D

    def sample_columns(self, t: int) -> np.ndarray:
        return self.columns[self.indptr[t]:self.indptr[t + 1]]


_DENSE_LIMIT = 4096


def random_pairs(n: int, k: int, rng: np.random.Generator, exclude: np.ndarray | None = None) -> np.ndarray:
    """Sorted keys of ``k`` distinct pairs drawn uniformly, avoiding ``exclude``.

    ``exclude`` must be sorted.  Sparse requests use rejection sampling of
    uniform pairs, so the cost is O(k) rather than O(n^2); dense requests
    (``k`` above half of what is available) draw the complement instead.
    """
    if exclude is None:
        exclude = np.empty(0, dtype=np.int64)
    total = n_pairs(n)
    avail = total - len(exclude)
    if k < 0 or k > avail:
        raise ValueError(f"cannot draw {k} pairs from {avail} available")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if total <= _DENSE_LIMIT:
        pool = all_pair_keys(n)
        pool = pool[~in_sorted(pool, exclude)]
        return np.sort(pool[np.argsort(rng.random(len(pool)))[:k]])
    if 2 * k > avail:
        dropped = random_pairs(n, avail - k, rng, exclude)
        pool = all_pair_keys(n)
        keep = ~in_sorted(pool, exclude)
        keep &= ~in_sorted(pool, dropped)
        return pool[keep]
    chosen = np.empty(0, dtype=np.int64)
    while len(chosen) < k:
        need = k - len(chosen)
        m = int(need * total / max(avail - len(chosen), 1) * 1.25) + 8
        i = rng.integers(0, n, size=m)
        j = rng.integers(0, n - 1, size=m)
        j = j + (j >= i)
        cand = pair_keys(n, i, j)
        cand = cand[~in_sorted(cand, exclude) & ~in_sorted(cand, chosen)]
        _, first = np.unique(cand, return_index=True)
        cand = cand[np.sort(first)][:need]
        chosen = np.union1d(chosen, cand)
    return chosen
