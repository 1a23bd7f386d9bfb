"""Momentum sweep per method under a config's CPU budget.

Usage::

    python benchmarks/tune.py --config configs/default.yaml [--budget-s 10] [--momenta 0.9 0.99 0.995]

Prints the final recovery error and certificate for every (method, momentum)
pair and the best momentum per method. Ties in error go to the smaller
momentum.
"""
import argparse
import dataclasses

from lowsysid.harness import experiments as ex
from lowsysid.harness.config import load_config


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--budget-s", type=float, default=None)
    ap.add_argument("--momenta", type=float, nargs="+", default=[0.9, 0.99, 0.995])
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.budget_s is not None:
        cfg = cfg.with_budget(args.budget_s)
    ds, _ = ex.make_dataset(cfg.gen)
    truth = ds.truth_impulse()

    print(f"{'method':<8}{'momentum':>10}{'error':>14}  certificate")
    for m in cfg.methods:
        results = []
        for mu in args.momenta:
            solvers = dict(cfg.solvers, **{m: cfg.solver(m).with_(momentum=mu)})
            one = dataclasses.replace(cfg, methods=(m,), solvers=solvers)
            rep = ex.fit_batch(ds.batch, truth, one)[m]
            err = rep.final_recovery_error()
            results.append((err, mu))
            print(f"{m:<8}{mu:>10}{err:>14.4e}  {rep.certificate}")
        err, mu = min(results)
        print(f"{m:<8}best momentum {mu} (error {err:.4e})\n")


if __name__ == "__main__":
    main()
