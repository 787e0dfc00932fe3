import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from netmix.generate import BenchmarkConfig, make_benchmark, planted_modes
from netmix.gibbs import (
    ChainConfig, ChainState, assignment_probabilities, complement_log_ratio, complement_move,
    edge_inclusion_prob, group_counts, initial_state, iter_chain, run_chain, sample_assignment_conditional,
    sample_modes, sample_params_conditional, sweep,
)
from netmix.graph import Graph, Population, n_pairs
from netmix.io import write_trace
from netmix.model import (
    Assignment, Hyperparams, Params, build_suff_stats, log_posterior, log_likelihood_complete,
)
from netmix.rng import make_rng

from oracles import (
    all_pairs, exact_assignment_posterior, inclusion_prob, naive_mode_draw, naive_suff_stats,
    random_population, sample_loglik,
)


def _stats(pop, labels, K, modes=None):
    modes = modes or [Graph(pop.n) for _ in range(K)]
    return build_suff_stats(pop, Assignment(labels, K), modes)


# --- edge inclusion ---------------------------------------------------------

def test_inclusion_empty_cluster_is_rho():
    p = Params([0.8], [0.3], [1.0], 0.37)
    assert edge_inclusion_prob(0, 0, p, 0) == pytest.approx(0.37, abs=1e-12)


def test_inclusion_equal_rates_is_rho():
    p = Params([0.4], [0.4], [1.0], 0.2)
    assert np.allclose(edge_inclusion_prob(np.arange(8), 7, p, 0), 0.2, atol=1e-12)


def test_inclusion_hand_value():
    p = Params([0.9], [0.1], [1.0], 0.5)
    assert edge_inclusion_prob(2, 2, p, 0) == pytest.approx(81 / 82, abs=1e-12)


def test_inclusion_near_certain_with_clamped_rates():
    p = Params([0.9], [0.0], [1.0], 0.0)
    for N_u in (2, 3, 10):
        assert edge_inclusion_prob(N_u, N_u, p, 0) > 0.99


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 30), st.integers(0, 30), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_inclusion_matches_product_form(x, extra, a, b, rho):
    n_u = x + extra
    p = Params([a], [b], [1.0], rho)
    assert edge_inclusion_prob(x, n_u, p, 0) == pytest.approx(inclusion_prob(x, n_u, a, b, rho), rel=1e-9, abs=1e-12)


# --- grouped counts ---------------------------------------------------------

def test_group_counts_partition_all_pairs():
    rng = make_rng(0)
    pop = random_population(rng, 7, 9)
    labels = rng.integers(0, 3, size=9)
    stats = _stats(pop, labels, 3)
    naive = naive_suff_stats(pop, labels, [Graph(7)] * 3, 3)
    for u in range(3):
        gc = group_counts(stats, u)
        covered = np.concatenate(gc.groups) if gc.groups else np.empty(0, np.int64)
        assert len(np.unique(covered)) == len(covered)
        assert gc.size0 == n_pairs(7) - len(covered)
        assert np.array_equal(np.sort(covered), gc.observed)
        for level, keys in zip(gc.levels.tolist(), gc.groups):
            for k in keys.tolist():
                assert naive["X"][u][(k // 7, k % 7)] == level
        assert gc.L == len(set(naive["X"][u].values())) + (gc.size0 > 0)


# --- mode sampler -----------------------------------------------------------

def test_mode_sampler_ignores_data_when_rates_equal():
    rng = make_rng(1)
    pop = Population([Graph.complete(12)] * 5)
    stats = _stats(pop, [0] * 5, 1)
    p = Params([0.3], [0.3], [1.0], 0.2)
    m = np.mean([sample_modes(stats, p, 12, rng)[0].m for _ in range(2000)])
    C = n_pairs(12)
    assert abs(m - 0.2 * C) < 3 * math.sqrt(C * 0.16 / 2000)


def _random_config(seed):
    rng = make_rng(seed)
    n = int(rng.integers(4, 9))
    N = int(rng.integers(1, 9))
    K = int(rng.integers(1, 4))
    pop = random_population(rng, n, N, density=float(rng.uniform(0.1, 0.7)))
    labels = rng.integers(0, K, size=N)
    params = Params(rng.uniform(0.5, 0.95, K), rng.uniform(0.05, 0.5, K), np.full(K, 1 / K), float(rng.uniform(0.1, 0.6)))
    return pop, labels, K, params


def _pair_frequencies(modes_list, n, K):
    out = np.zeros((K, n * n))
    for modes in modes_list:
        for u, a in enumerate(modes):
            out[u, a.keys] += 1
    return out


@pytest.mark.parametrize("seed", range(4))
def test_mode_sampler_matches_naive_bernoulli(seed):
    pop, labels, K, params = _random_config(seed)
    stats = _stats(pop, labels, K)
    draws = 2000
    fast = _pair_frequencies([sample_modes(stats, params, pop.n, make_rng(seed, 1, s)) for s in range(draws)], pop.n, K)
    rng = make_rng(seed, 2)
    slow = _pair_frequencies([naive_mode_draw(pop, labels, params, K, rng) for _ in range(draws)], pop.n, K)
    keys = [i * pop.n + j for i, j in all_pairs(pop.n)]
    f, s = fast[:, keys].ravel(), slow[:, keys].ravel()
    # two-sample test per (mode, pair) cell pooled into one chi-square
    pooled = (f + s) / (2 * draws)
    ok = (pooled > 0) & (pooled < 1)
    chi2 = np.sum((f[ok] - s[ok]) ** 2 / (2 * draws * pooled[ok] * (1 - pooled[ok])))
    assert sps.chi2.sf(chi2, ok.sum()) > 0.01


def test_mode_sampler_frequencies_match_inclusion_prob():
    pop, labels, K, params = _random_config(11)
    stats = _stats(pop, labels, K)
    draws = 4000
    freq = _pair_frequencies([sample_modes(stats, params, pop.n, make_rng(7, s)) for s in range(draws)], pop.n, K) / draws
    for u in range(K):
        members = [t for t in range(pop.N) if labels[t] == u]
        for i, j in all_pairs(pop.n):
            x = sum(pop[t].has_edge(i, j) for t in members)
            q = edge_inclusion_prob(x, len(members), params, u)
            se = math.sqrt(q * (1 - q) / draws)
            assert abs(freq[u, i * pop.n + j] - q) <= max(4 * se, 1e-9)


def test_mode_sampler_large_n_path_matches_inclusion_prob():
    # above the small-pair cutoff the unobserved pairs go through rejection sampling
    n = 40
    rng = make_rng(3)
    pop = Population([Graph(n, [(0, 1), (2, 3), (4, 5)]), Graph(n, [(0, 1), (2, 3)])])
    stats = _stats(pop, [0, 0], 1)
    params = Params([0.8], [0.2], [1.0], 0.1)
    draws = 3000
    modes = [sample_modes(stats, params, n, rng)[0] for _ in range(draws)]
    freq = _pair_frequencies([[a] for a in modes], n, 1)[0] / draws
    for (i, j), x in (((0, 1), 2), ((2, 3), 2), ((4, 5), 1), ((7, 30), 0)):
        q = edge_inclusion_prob(x, 2, params, 0)
        assert abs(freq[i * n + j] - q) < 4 * math.sqrt(q * (1 - q) / draws)
    C = n_pairs(n)
    q0 = edge_inclusion_prob(0, 2, params, 0)
    mean_unobs = np.mean([a.m - sum(a.has_edge(*e) for e in ((0, 1), (2, 3), (4, 5))) for a in modes])
    assert abs(mean_unobs - (C - 3) * q0) < 4 * math.sqrt((C - 3) * q0 * (1 - q0) / draws)


def test_cost_counter_tracks_grouped_work_not_all_pairs():
    n, N = 2000, 20
    rng = make_rng(5)
    base = rng.choice(n_pairs(n), 300, replace=False)
    from netmix.graph import all_pair_keys
    keys = all_pair_keys(n)[np.sort(base)]
    graphs = [Graph.from_keys(n, keys[rng.random(len(keys)) < 0.9]) for _ in range(N)]
    pop = Population(graphs)
    stats = _stats(pop, [0] * N, 1)
    params = Params([0.9], [0.001], [1.0], 0.0002)
    counter = {}
    modes = sample_modes(stats, params, n, rng, counter=counter)
    assert counter["groups"] <= N + 1
    assert counter["expected_work"] < 0.01 * n_pairs(n)
    assert counter["edges"] == modes[0].m


# --- assignment conditional -------------------------------------------------

def test_assignment_single_cluster():
    pop = random_population(make_rng(0), 5, 6)
    p = Params([0.8], [0.2], [1.0], 0.3)
    R = assignment_probabilities(pop, [Graph(5, [(0, 1)])], p)
    assert np.array_equal(R, np.ones((6, 1)))


def test_assignment_identical_modes_give_pi():
    pop = random_population(make_rng(1), 5, 6)
    a = Graph(5, [(0, 1), (1, 3)])
    p = Params([0.8, 0.8, 0.8], [0.2, 0.2, 0.2], [0.2, 0.5, 0.3], 0.3)
    R = assignment_probabilities(pop, [a, a, a], p)
    assert np.allclose(R, [0.2, 0.5, 0.3], atol=1e-12)


def test_assignment_direct_formula_n3():
    pop = Population([Graph(3, [(0, 1)]), Graph(3, [(0, 1), (1, 2)]), Graph(3, [])])
    modes = [Graph(3, [(0, 1), (0, 2)]), Graph(3, [(1, 2)])]
    p = Params([0.9, 0.7], [0.1, 0.25], [0.35, 0.65], 0.4)
    R = assignment_probabilities(pop, modes, p)
    for t in range(3):
        w = np.array([p.pi[u] * math.exp(sample_loglik(pop[t], modes[u], p.alpha[u], p.beta[u])) for u in range(2)])
        assert np.allclose(R[t], w / w.sum(), atol=1e-12)


def test_assignment_frequencies_match_probabilities():
    pop = random_population(make_rng(2), 5, 4)
    modes = [Graph(5, [(0, 1), (2, 3)]), Graph(5, [(1, 4)]), Graph(5, [(0, 4), (1, 2), (3, 4)])]
    p = Params([0.7, 0.8, 0.6], [0.3, 0.2, 0.35], [0.3, 0.3, 0.4], 0.3)
    R = assignment_probabilities(pop, modes, p)
    rng = make_rng(3)
    reps = 20_000
    counts = np.zeros_like(R)
    for _ in range(reps):
        g = sample_assignment_conditional(pop, modes, p, rng)
        counts[np.arange(pop.N), g.labels] += 1
    se = np.sqrt(R * (1 - R) / reps)
    assert np.all(np.abs(counts / reps - R) <= 3.5 * se + 1e-12)


# --- parameter conditional -------------------------------------------------

def test_params_empty_cluster_is_uniform():
    pop = Population([Graph(4, [(0, 1)])] * 3)
    stats = _stats(pop, [0, 0, 0], 2)
    rng = make_rng(4)
    a = np.array([sample_params_conditional(stats, Hyperparams.flat(2), rng).alpha[1] for _ in range(4000)])
    assert sps.kstest(a, "uniform").pvalue > 0.01


def test_params_beta_moments():
    rng = make_rng(5)
    pop = random_population(rng, 6, 7)
    modes = [Graph(6, [(0, 1), (1, 2), (3, 5)]), Graph(6, [(2, 4)])]
    labels = [0, 1, 0, 0, 1, 1, 0]
    stats = _stats(pop, labels, 2, modes)
    hyper = Hyperparams(h11=[2.0, 1.5], h01=[1.0, 3.0], h10=[1.0, 1.0], h00=[4.0, 2.0], gamma=[1.0, 2.0], a_star=1.0, b_star=5.0)
    draws = [sample_params_conditional(stats, hyper, rng) for _ in range(100_000)]
    A = np.array([d.alpha for d in draws])
    B = np.array([d.beta for d in draws])
    Pi = np.array([d.pi for d in draws])
    R = np.array([d.rho for d in draws])

    def check(x, a, b):
        mean = a / (a + b)
        sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
        assert abs(x.mean() - mean) < 3 * sd / math.sqrt(len(x))

    for u in range(2):
        check(A[:, u], stats.W11[u] + hyper.h11[u], stats.W01[u] + hyper.h01[u])
        check(B[:, u], stats.W10[u] + hyper.h10[u], stats.W00[u] + hyper.h00[u])
    g = stats.N_u + hyper.gamma
    check(Pi[:, 0], g[0], g[1])
    check(R, stats.M_star + hyper.a_star, 2 * n_pairs(6) - stats.M_star + hyper.b_star)


def test_flat_hyper_is_pseudo_count_one():
    h = Hyperparams.flat(3)
    for name in ("h11", "h01", "h10", "h00", "gamma"):
        assert np.array_equal(getattr(h, name), np.ones(3))
    assert h.a_star == 1.0 and h.b_star == 1.0


# --- sweeps and chains ------------------------------------------------------

def _state_at(pop, g, modes, params, seed=0):
    stats = build_suff_stats(pop, g, modes)
    return ChainState(list(modes), g, params, stats, make_rng(seed))


def test_noiseless_data_is_a_fixed_point():
    pop, g, truth = make_benchmark(BenchmarkConfig(p=0.0, N=50, seed=2))
    modes = planted_modes()
    cfg = ChainConfig(K=2, sweeps=100, seed=1)
    state = _state_at(pop, g, modes, truth.clamped(), seed=1)
    for _ in range(100):
        sweep(state, pop, cfg)
        assert state.g == g
        for a, b in zip(state.modes, modes):
            assert a == b or a == b.complement()


def test_point_mass_conditionals_reproduce_state():
    pop, g, truth = make_benchmark(BenchmarkConfig(p=0.0, N=20, seed=3))
    modes = planted_modes()
    p = truth.clamped()
    rng = make_rng(0)
    stats = build_suff_stats(pop, g, modes)
    assert sample_modes(stats, p, pop.n, rng) == modes
    assert sample_assignment_conditional(pop, modes, p, rng) == g


def test_stats_after_sweeps_equal_rebuild():
    rng = make_rng(6)
    pop = random_population(rng, 6, 10)
    cfg = ChainConfig(K=3, sweeps=30, seed=4)
    state = initial_state(pop, cfg)
    for _ in range(30):
        sweep(state, pop, cfg)
        assert state.stats == build_suff_stats(pop, state.g, state.modes)
        assert np.array_equal(state.stats.labels, state.g.labels)


def test_complement_move_keeps_stats_and_likelihood():
    rng = make_rng(7)
    pop = random_population(rng, 6, 8)
    cfg = ChainConfig(K=2, sweeps=10, seed=2, hyper=Hyperparams.flat(2, 1.0, 1.0))
    state = initial_state(pop, cfg)
    # push the acceptance ratio far above zero so both modes flip
    state.params = Params(state.params.alpha, state.params.beta, state.params.pi, 0.999)
    empty = [Graph(6) for _ in range(2)]
    state.modes = empty
    state.stats = build_suff_stats(pop, state.g, empty)
    ll = log_likelihood_complete(state.stats, state.params)
    acc = complement_move(state, cfg, rng)
    assert acc.all()
    assert state.modes == [Graph.complete(6)] * 2
    assert state.stats == build_suff_stats(pop, state.g, state.modes)
    assert log_likelihood_complete(state.stats, state.params) == pytest.approx(ll, abs=1e-9)


def test_complement_ratio_matches_posterior_difference():
    rng = make_rng(8)
    pop = random_population(rng, 5, 6)
    hyper = Hyperparams(h11=[2.0, 1.0], h01=[1.0, 1.5], h10=[1.0, 3.0], h00=[2.5, 1.0], gamma=[1.0, 1.0], a_star=1.0, b_star=4.0)
    g = Assignment(rng.integers(0, 2, 6), 2)
    modes = [Graph(5, [(0, 1), (2, 4)]), Graph(5, [(1, 3)])]
    p = Params([0.8, 0.6], [0.15, 0.3], [0.4, 0.6], 0.3)
    base = log_posterior(pop, g, modes, p, hyper)
    ratio = complement_log_ratio([a.m for a in modes], n_pairs(5), p, hyper)
    for u in range(2):
        m2 = list(modes)
        m2[u] = modes[u].complement()
        a, b = p.alpha.copy(), p.beta.copy()
        a[u], b[u] = p.beta[u], p.alpha[u]
        other = log_posterior(pop, g, m2, Params(a, b, p.pi, p.rho), hyper)
        assert ratio[u] == pytest.approx(other - base, abs=1e-9)


def test_recorded_log_posterior_matches_recomputation():
    pop = random_population(make_rng(9), 6, 8)
    cfg = ChainConfig(K=2, sweeps=40, burn_in=10, thin=3, seed=3)
    trace = run_chain(pop, cfg)
    assert len(trace) == cfg.n_kept == 10
    assert [s.sweep for s in trace] == list(range(10, 40, 3))
    for s in trace:
        lp = log_posterior(pop, Assignment(s.g, 2), s.modes, s.params, cfg.hyper)
        assert s.log_posterior == pytest.approx(lp, abs=1e-9)


def test_same_seed_gives_identical_trace_bytes(tmp_path):
    pop = random_population(make_rng(10), 7, 9)
    cfg = ChainConfig(K=3, sweeps=50, seed=12)
    write_trace(run_chain(pop, cfg), tmp_path / "a")
    write_trace(run_chain(pop, cfg), tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_config_validation_and_ten_thousand_sample_schedule():
    with pytest.raises(ValueError):
        ChainConfig(K=0)
    with pytest.raises(ValueError):
        ChainConfig(K=2, sweeps=10, burn_in=10)
    with pytest.raises(ValueError):
        ChainConfig(K=2, thin=0)
    cfg = ChainConfig(K=2, sweeps=12_500)
    assert cfg.burn_in == 2500 and cfg.n_kept == 10_000
    with pytest.raises(ValueError):
        run_chain(Population([], n=3), ChainConfig(K=1, sweeps=2))


def test_chain_matches_exact_posterior_on_tiny_instance():
    pop = Population([Graph(3, [(0, 1)]), Graph(3, [(0, 1), (1, 2)]), Graph(3, [(0, 2)])])
    post, _ = exact_assignment_posterior(pop, 2)
    cfg = ChainConfig(K=2, sweeps=31_000, burn_in=1000, seed=17)
    counts = {}
    for _, state in iter_chain(pop, cfg):
        k = tuple(state.g.labels.tolist())
        counts[k] = counts.get(k, 0) + 1
    S = cfg.n_kept
    tv = 0.5 * sum(abs(post[k] - counts.get(k, 0) / S) for k in post)
    assert tv < 0.03
