import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netmix.generate import planted_modes
from netmix.gibbs import ChainConfig, run_chain
from netmix.graph import n_pairs
from netmix.metric_model import (
    beta_from_sigma, metric_log_likelihood, sample_params_metric, sigma_from_beta, sigmas,
)
from netmix.model import Assignment, Hyperparams, Params, build_suff_stats
from netmix.rng import make_rng

from oracles import random_graph, random_population, sample_loglik


def test_sigma_examples():
    assert sigma_from_beta(1 / (1 + math.e)) == pytest.approx(1.0, abs=1e-12)
    assert sigma_from_beta(0.1) == pytest.approx(1 / math.log(9), abs=1e-12)
    assert sigma_from_beta(0.1) == pytest.approx(0.455120, abs=5e-7)
    assert sigma_from_beta(0.5 - 1e-9) > 1e7
    for bad in (0.5, 0.7, 0.0, -0.1):
        with pytest.raises(ValueError):
            sigma_from_beta(bad)


def test_beta_examples():
    assert beta_from_sigma(1.0) == pytest.approx(1 / (1 + math.e), abs=1e-12)
    assert beta_from_sigma(1.0) == pytest.approx(0.268941, abs=5e-7)
    assert beta_from_sigma(1e-3) < 1e-300
    assert beta_from_sigma(1e9) == pytest.approx(0.5)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            beta_from_sigma(bad)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 50.0))
def test_round_trip(sigma):
    assert sigma_from_beta(beta_from_sigma(sigma)) == pytest.approx(sigma, rel=1e-12, abs=1e-12)


def test_sigmas_vector():
    s = sigmas(Params([0.9, 0.4], [0.1, 0.6], [0.5, 0.5], 0.2))
    assert s[0] == pytest.approx(1 / math.log(9)) and s[1] == np.inf


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 0.49))
def test_likelihood_identity(seed, beta):
    rng = make_rng(seed)
    n = int(rng.integers(2, 9))
    sample, mode = random_graph(rng, n), random_graph(rng, n)
    lhs = sample_loglik(sample, mode, 1 - beta, beta)
    rhs = metric_log_likelihood(sample.hamming(mode), sigma_from_beta(beta), n)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_constrained_draws_satisfy_alpha_plus_beta_one():
    rng = make_rng(1)
    pop = random_population(rng, 6, 8)
    stats = build_suff_stats(pop, Assignment(rng.integers(0, 3, 8), 3), [random_graph(rng, 6) for _ in range(3)])
    for _ in range(200):
        p = sample_params_metric(stats, Hyperparams.flat(3), rng)
        assert np.all(p.alpha + p.beta == 1.0)


def test_constrained_empty_cluster_is_uniform():
    from scipy import stats as sps
    rng = make_rng(2)
    pop = random_population(rng, 5, 4)
    stats = build_suff_stats(pop, Assignment([0] * 4, 2), [random_graph(rng, 5)] * 2)
    b = np.array([sample_params_metric(stats, Hyperparams.flat(2), rng).beta[1] for _ in range(4000)])
    assert sps.kstest(b, "uniform").pvalue > 0.01


def test_constrained_beta_moment():
    rng = make_rng(3)
    pop = random_population(rng, 6, 9)
    stats = build_suff_stats(pop, Assignment(rng.integers(0, 2, 9), 2), [random_graph(rng, 6) for _ in range(2)])
    hyper = Hyperparams(h11=[1.0, 1.0], h01=[1.0, 1.0], h10=[2.0, 1.0], h00=[1.0, 3.0], gamma=[1.0, 1.0], a_star=1.0, b_star=1.0)
    B = np.array([sample_params_metric(stats, hyper, rng).beta for _ in range(100_000)])
    for u in range(2):
        a = stats.W10[u] + stats.W01[u] + hyper.h10[u]
        b = stats.W00[u] + stats.W11[u] + hyper.h00[u]
        sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
        assert abs(B[:, u].mean() - a / (a + b)) < 3 * sd / math.sqrt(len(B))


def test_constrained_chain_keeps_constraint():
    pop = random_population(make_rng(4), 6, 10)
    trace = run_chain(pop, ChainConfig(K=2, sweeps=80, seed=1, metric_constrained=True))
    for s in trace:
        assert np.all(s.params.alpha + s.params.beta == 1.0)
