import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netmix.estimators import ModeEstimate
from netmix.graph import Graph, Population, n_pairs
from netmix.metrics import match_modes, mode_set_error, pairwise_hamming, param_l1, variation_of_information
from netmix.model import Params
from netmix.rng import make_rng

from oracles import all_pairs, random_graph

labelings = st.lists(st.integers(0, 3), min_size=1, max_size=30)


def _vi_oracle(a, b):
    # entropies from the contingency table, term by term
    N = len(a)
    joint = {}
    for x, y in zip(a, b):
        joint[(x, y)] = joint.get((x, y), 0) + 1
    pa = {x: a.count(x) / N for x in set(a)}
    pb = {y: b.count(y) / N for y in set(b)}
    H = lambda p: -sum(v * math.log(v) for v in p.values())
    I = sum(c / N * math.log((c / N) / (pa[x] * pb[y])) for (x, y), c in joint.items())
    return H(pa) + H(pb) - 2 * I


def test_vi_examples():
    assert variation_of_information([0, 1, 1, 2], [0, 1, 1, 2]) == 0.0
    assert variation_of_information([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(2 * math.log(2), abs=1e-12)
    with pytest.raises(ValueError):
        variation_of_information([], [])
    with pytest.raises(ValueError):
        variation_of_information([0], [0, 1])


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_vi_properties(data):
    a = data.draw(labelings)
    b = data.draw(st.lists(st.integers(0, 3), min_size=len(a), max_size=len(a)))
    vi = variation_of_information(a, b)
    assert vi >= 0
    assert vi == pytest.approx(_vi_oracle(a, b), abs=1e-9)
    assert vi == pytest.approx(variation_of_information(b, a), abs=1e-12)
    perm = data.draw(st.permutations(range(4)))
    assert variation_of_information([perm[x] for x in a], b) == pytest.approx(vi, abs=1e-12)
    same_partition = len({(x, y) for x, y in zip(a, b)}) == len(set(a)) == len(set(b))
    assert (vi < 1e-12) == same_partition


def _indicator_estimate(modes):
    return ModeEstimate(modes[0].n, 1, [a.keys for a in modes], [np.ones(a.m, dtype=np.int64) for a in modes])


def test_mode_error_examples():
    rng = make_rng(0)
    truth = [random_graph(rng, 6) for _ in range(3)]
    assert mode_set_error(_indicator_estimate(truth), truth) == 0.0
    assert mode_set_error(_indicator_estimate([truth[2], truth[0], truth[1]]), truth) == 0.0
    k = (0 * 6 + 1)
    flipped = Graph.from_keys(6, np.setxor1d(truth[0].keys, [k]))
    assert mode_set_error(_indicator_estimate([flipped, truth[1], truth[2]]), truth) == 1.0
    with pytest.raises(ValueError):
        mode_set_error(_indicator_estimate(truth[:2]), truth)


def test_mode_error_soft_values():
    truth = [Graph(4, [(0, 1), (2, 3)])]
    est = ModeEstimate(4, 4, [np.array([0 * 4 + 1, 0 * 4 + 2])], [np.array([3, 2])])
    # |0.75 - 1| + |0.5 - 0| + |0 - 1|
    assert mode_set_error(est, truth) == pytest.approx(1.75)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.permutations(range(3)))
def test_mode_error_permutation_invariance(seed, perm):
    rng = make_rng(seed)
    truth = [random_graph(rng, 5) for _ in range(3)]
    est = [random_graph(rng, 5) for _ in range(3)]
    e = mode_set_error(est, truth)
    assert e >= 0
    assert mode_set_error([est[p] for p in perm], truth) == pytest.approx(e)
    # brute force over matchings with explicit pairwise Hamming distances
    import itertools
    best = min(sum(est[p[v]].hamming(truth[v]) for v in range(3)) for p in itertools.permutations(range(3)))
    assert e == pytest.approx(best)


def test_param_l1_examples():
    t = Params([0.9, 0.8], [0.1, 0.2], [0.5, 0.5], 0.3)
    assert param_l1(t, t) == 0.0
    e = Params([0.9, 0.7], [0.1, 0.2], [0.5, 0.5], 0.3)
    assert param_l1(e, t) == pytest.approx(0.1)
    swapped = t.permuted([1, 0])
    assert param_l1(swapped, t) > 0
    truth_modes = [Graph(5, [(0, 1)]), Graph(5, [(2, 3), (3, 4)])]
    _, perm = match_modes([truth_modes[1], truth_modes[0]], truth_modes)
    assert param_l1(swapped, t, perm) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        param_l1(Params([0.5], [0.5], [1.0], 0.1), t)


def test_hamming_examples():
    g = Graph(7, [(0, 1), (2, 6), (3, 4)])
    D = pairwise_hamming(Population([g, g, g.complement(), Graph(7)]))
    assert D[0, 1] == 0
    assert D[0, 2] == n_pairs(7)
    assert D[0, 3] == 3
    with pytest.raises(ValueError):
        pairwise_hamming(Population([], n=3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_hamming_is_a_metric(seed):
    rng = make_rng(seed)
    n = 6
    pop = Population([random_graph(rng, n, rng.uniform(0.1, 0.9)) for _ in range(8)])
    D = pairwise_hamming(pop)
    for s in range(8):
        for t in range(8):
            assert D[s, t] == sum(pop[s].has_edge(*p) != pop[t].has_edge(*p) for p in all_pairs(n))
    assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0)
    for a in range(8):
        for b in range(8):
            assert np.all(D[a, b] <= D[a, :] + D[:, b])
    off = ~np.eye(8, dtype=bool)
    same = np.array([[pop[s] == pop[t] for t in range(8)] for s in range(8)])
    assert np.array_equal(D[off] == 0, same[off])
