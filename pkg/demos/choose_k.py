"""Mean log posterior against K for data planted with three modes."""

import numpy as np

from netmix.estimators import select_k
from netmix.generate import planted_modes, sample_population
from netmix.gibbs import ChainConfig
from netmix.model import Params
from netmix.rng import make_rng

modes = planted_modes(K=3)
params = Params(np.full(3, 0.95), np.full(3, 0.05), np.full(3, 1 / 3), 0.25)
pop, _ = sample_population(modes, params, 100, make_rng(0))

rep = select_k(pop, 1, 6, ChainConfig(K=1, sweeps=1000, seed=0))
for k, m, e in zip(rep.ks, rep.mean, rep.stderr):
    print(f"K={k}  mean log posterior {m:10.2f} +- {e:.2f}")
print("chosen K:", rep.k_star)
