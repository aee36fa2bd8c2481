"""Run trajectories at several smallness products and report the monitor flags.

    python3 scripts/trajectory_sweep.py --n 128 --t-end 5 --products 0.01 0.02 0.05 0.2
"""

import argparse
import time

import numpy as np

from qgmoc.initial import InitialDataSpec, generate_initial_data, targets_for_product
from qgmoc.modulus import KnvModulus
from qgmoc.monitor import TrajectoryMonitor, smallness_check
from qgmoc.solver import BlowUpError, SolverConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--s", type=float, default=0.25)
    ap.add_argument("--ratio", type=float, default=1.5, help="gradient / sup of the initial data")
    ap.add_argument("--products", type=float, nargs="+", default=[0.01, 0.02, 0.05, 0.2])
    ap.add_argument("--seeds", type=int, nargs="+", default=[7])
    args = ap.parse_args()

    m = KnvModulus(0.01, 0.05, 1.2, 0.6, args.s)
    cfg = SolverConfig(s=args.s, n=args.n, t_end=args.t_end)
    print("product  seed  small  max_grad/grad0  max_principle  breakthroughs  seconds")
    for product in args.products:
        sup, grad = targets_for_product(product, args.ratio, args.s)
        for seed in args.seeds:
            th0 = generate_initial_data(InitialDataSpec("random", 3, sup, grad, seed=seed), args.n)
            small = smallness_check(th0, m)
            t0 = time.perf_counter()
            try:
                rep = run(th0, cfg, TrajectoryMonitor(m), sample_interval=0.1)
            except BlowUpError as exc:
                print(f"{product:<8g} {seed:<5d} blow-up at t={exc.t:.3g}")
                continue
            print(f"{product:<8g} {seed:<5d} {str(small.passed):<6} "
                  f"{np.max(rep.grad_sup) / rep.grad0:<15.4f} {str(rep.max_principle_ok):<14} "
                  f"{len(rep.breakthroughs):<14d} {time.perf_counter() - t0:.1f}")


if __name__ == "__main__":
    main()
