"""Tabulate kernel normalisation, marginal deviation and representation constant over s.

    python3 scripts/kernel_validation.py --s 0.1 0.25 0.4 0.5 --n 32
"""

import argparse

from qgmoc.kernels import (
    CSKernelParams,
    estimate_representation_constant,
    kernel_marginal_check,
    kernel_mass,
    representation_constant_closed_form,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, nargs="+", default=[0.1, 0.25, 0.4, 0.5])
    ap.add_argument("--h", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--variant", default="printed", choices=["printed", "standard"])
    args = ap.parse_args()
    print("s      mass_error  marginal   C_fit       C_closed    residual  note")
    for s in args.s:
        p = CSKernelParams.build(2, s, args.variant)
        mass = abs(kernel_mass(p, args.h) - 1)
        marg, _ = kernel_marginal_check(s, args.h, variant=args.variant)
        fit = estimate_representation_constant(s, args.variant, n=args.n)
        closed = representation_constant_closed_form(s) if args.variant == "printed" else float("nan")
        print(f"{s:<6g} {mass:<11.2e} {marg:<10.2e} {fit.C:<11.6g} {closed:<11.6g} "
              f"{fit.residual:<9.2e} {'' if fit.converged else fit.note}")


if __name__ == "__main__":
    main()
