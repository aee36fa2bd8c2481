"""Search an admissible modulus for each s and report delta, gamma, c_s and the margin.

    python3 scripts/certify_scan.py --s 0.1 0.2 0.25 0.3 0.4
"""

import argparse
import time

from qgmoc.functionals import find_admissible
from qgmoc.modulus import CertificateConstants, smallness_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, nargs="+", default=[0.1, 0.2, 0.25, 0.3, 0.4])
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--budget", type=int, default=24)
    args = ap.parse_args()
    k = CertificateConstants(kappa=args.kappa)
    print("s      success  delta        gamma        c_s          worst_margin  seconds")
    for s in args.s:
        t0 = time.perf_counter()
        res = find_admissible(s, k, budget=args.budget)
        dt = time.perf_counter() - t0
        if res.modulus is None:
            print(f"{s:<6g} False    best margin {res.best_margin:.3g}  {dt:.1f}")
            continue
        m = res.modulus
        print(f"{s:<6g} {str(res.success):<8} {m.delta:<12.5g} {m.gamma:<12.5g} "
              f"{smallness_constant(m):<12.5g} {res.report.worst_margin:<13.4g} {dt:.1f}")


if __name__ == "__main__":
    main()
