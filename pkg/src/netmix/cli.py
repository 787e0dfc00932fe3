"""Command-line interface: ``netmix <command> ...``.

Exit status is 0 on success, 2 on invalid input and 3 on a numerical
failure.  All randomness is controlled by ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .estimators import point_estimates, select_k
from .generate import sample_modes_from_prior, sample_population
from .gibbs import ChainConfig, run_chain
from .metric_model import sigmas
from .metrics import match_modes, pairwise_hamming, param_l1, variation_of_information
from .model import Hyperparams, Params
from .rng import make_rng


class NumericError(RuntimeError):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _per_mode(text, K, name):
    vals = _floats(text)
    if len(vals) == 1:
        vals = vals * K
    if len(vals) != K:
        raise ValueError(f"--{name} needs 1 or {K} values")
    return np.array(vals)


def cmd_generate(args):
    rng = make_rng(args.seed)
    if args.modes:
        modes = list(io.read_population(args.modes))
        K = len(modes)
        if K < 1:
            raise ValueError("modes file contains no graphs")
    else:
        K = args.k
        modes = sample_modes_from_prior(K, args.n, args.rho, rng)
    if args.p is not None:
        if args.alpha is not None or args.beta is not None:
            raise ValueError("use either --p or --alpha/--beta")
        if not 0 <= args.p <= 0.5:
            raise ValueError("--p must lie in [0, 0.5]")
        alpha, beta = np.full(K, 1 - args.p), np.full(K, args.p)
    else:
        if args.alpha is None or args.beta is None:
            raise ValueError("give --p or both --alpha and --beta")
        alpha, beta = _per_mode(args.alpha, K, "alpha"), _per_mode(args.beta, K, "beta")
    pi = np.full(K, 1.0 / K) if args.pi is None else _per_mode(args.pi, K, "pi")
    if abs(pi.sum() - 1) > 1e-9:
        raise ValueError("--pi must sum to 1")
    C = modes[0].n * (modes[0].n - 1) // 2
    rho = sum(a.m for a in modes) / (K * C) if C else 0.0
    params = Params(alpha, beta, pi, rho)
    pop, g = sample_population(modes, params, args.N, rng)
    io.write_population(pop, args.out)
    io.write_truth(args.truth or f"{args.out}.truth.json", modes, g, params)


def _load_hyper(path, K):
    if not path:
        return Hyperparams.flat(K)
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise io.FormatError(f"bad hyperparameter file: {e}", path) from None
    return Hyperparams.from_dict(d, K)


def cmd_fit(args):
    pop = io.read_population(args.input)
    cfg = ChainConfig(K=args.k, sweeps=args.sweeps, burn_in=args.burnin, thin=args.thin,
                      seed=args.seed, hyper=_load_hyper(args.hyper, args.k),
                      metric_constrained=args.metric)
    trace = run_chain(pop, cfg)
    if not np.all(np.isfinite(trace.log_posteriors())):
        raise NumericError("non-finite log posterior in trace")
    io.write_trace(trace, args.out)


def cmd_estimate(args):
    modes, params, g = point_estimates(io.read_trace(args.trace), reference=args.reference)
    io.write_estimate(args.out, modes, params, g, sigma=sigmas(params))


def cmd_select(args):
    pop = io.read_population(args.input)
    template = ChainConfig(K=1, sweeps=args.sweeps, burn_in=args.burnin, thin=args.thin,
                           seed=args.seed, hyper=_load_hyper(args.hyper, 1), metric_constrained=args.metric)
    rep = select_k(pop, args.kmin, args.kmax, template, score=args.score,
                   chains=args.seeds, workers=args.workers)
    if not np.all(np.isfinite(rep.mean)):
        raise NumericError("non-finite score")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", f"mean_{rep.score}", "stderr", "chosen"])
        for k, m, e in zip(rep.ks, rep.mean.tolist(), rep.stderr.tolist()):
            w.writerow([k, repr(m), repr(e), int(k == rep.k_star)])
    print(rep.k_star)


def cmd_eval(args):
    modes_est, params_est, g_est = io.read_estimate(args.est)
    modes_true, g_true, params_true = io.read_truth(args.truth)
    err, perm = match_modes(modes_est, modes_true)
    rows = [
        ("vi_nats", variation_of_information(g_est, g_true)),
        ("mode_l1", err),
        ("param_l1", param_l1(params_est, params_true, perm)),
    ]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        for name, v in rows:
            w.writerow([name, repr(float(v))])


def cmd_dist(args):
    D = pairwise_hamming(io.read_population(args.input))
    np.savetxt(args.out, D, fmt="%d", delimiter=",")


def cmd_ingest(args):
    io.write_population(io.ingest_daily_snapshots(args.dir, args.registry), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netmix", description="Cluster and denoise populations of networks.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a population and its ground truth")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--p", type=float, help="flip probability (alpha = 1 - p, beta = p)")
    g.add_argument("--alpha", help="true-positive rate(s), comma separated")
    g.add_argument("--beta", help="false-positive rate(s), comma separated")
    g.add_argument("--pi", help="mixture weights, comma separated")
    g.add_argument("--rho", type=float, default=0.25, help="edge density of random modes")
    g.add_argument("--modes", help="population file holding the modes to use")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--truth", help="ground-truth sidecar path (default OUT.truth.json)")
    g.set_defaults(func=cmd_generate)

    def chain_args(q):
        q.add_argument("--sweeps", type=int, default=1000)
        q.add_argument("--burnin", type=int, default=None)
        q.add_argument("--thin", type=int, default=1)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--hyper", help="JSON file of prior pseudo-counts")
        q.add_argument("--metric", action="store_true", help="constrain alpha = 1 - beta")

    f = sub.add_parser("fit", help="run the Gibbs sampler")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--k", type=int, required=True)
    chain_args(f)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("estimate", help="point estimates from a trace")
    e.add_argument("--trace", required=True)
    e.add_argument("--reference", choices=["last", "max"], default="last")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("select", help="mean score per K")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--kmin", type=int, default=1)
    s.add_argument("--kmax", type=int, required=True)
    chain_args(s)
    s.add_argument("--seeds", type=int, default=1, help="chains per K")
    s.add_argument("--score", choices=["joint", "likelihood"], default="joint")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)

    v = sub.add_parser("eval", help="compare an estimate with ground truth")
    v.add_argument("--est", required=True)
    v.add_argument("--truth", required=True)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_eval)

    d = sub.add_parser("dist", help="pairwise Hamming distances")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dist)

    i = sub.add_parser("ingest", help="build a population from per-day contact files")
    i.add_argument("--dir", required=True)
    i.add_argument("--registry", required=True)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (NumericError, FloatingPointError) as e:
        print(f"netmix: numerical failure: {e}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError) as e:
        print(f"netmix: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
