"""Command line entry point: ``qgmoc <command> [options]``.

Exit codes: 0 every requested check passed, 1 a check failed, 2 usage or
configuration error (including unreadable files), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config, serialize_config
from .functionals import QuadratureError, dominance_report, find_admissible
from .initial import generate_initial_data
from .io import load_snapshot, read_csv, save_snapshot, write_csv
from .kernels import (
    VARIANTS,
    CSKernelParams,
    ExtrapolationError,
    estimate_representation_constant,
    kernel_marginal_check,
    kernel_mass,
)
from .modulus import (
    KnvModulus,
    gamma_max,
    smallness_constant,
    validate_params,
    xi_grid,
)
from .monitor import TrajectoryMonitor, smallness_check
from .solver import BlowUpError, State, run

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
SUMMARY = "summary.csv"


class UsageError(Exception):
    pass


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_summary(out: Path, command: str, passed: bool, items: dict, seed=None) -> None:
    rows = [("command", command), ("passed", bool(passed))] + list(items.items())
    write_csv(out / SUMMARY, "summary", ["key", "value"], rows,
              meta={} if seed is None else {"seed": seed})


def _dominance_rows(rep):
    return zip(rep.xi_grid, rep.convection, rep.dissipation, rep.margin)


# -- commands ---------------------------------------------------------------


def cmd_certify(args, cfg: ExperimentConfig) -> int:
    out = _outdir(args)
    s = cfg.solver.s
    k = cfg.constants
    tol = args.tol if args.tol is not None else 0.0
    if cfg.modulus is not None:
        m = cfg.modulus
        bad = validate_params(m)
        if bad:
            for v in bad:
                print(f"constraint {v.name} violated by {-v.margin:.3g}: {v.detail}")
            _write_summary(out, "certify", False, {"violations": ";".join(v.name for v in bad)})
            return EXIT_FAIL
        rep = dominance_report(m, k)
    else:
        if not 0 < s < 0.5:
            raise UsageError(f"certification needs s in (0, 1/2), got {s}")
        res = find_admissible(s, k, budget=cfg.search_budget)
        m, rep = res.modulus, res.report
    if rep is None:
        print("pass=False no admissible candidate")
        _write_summary(out, "certify", False, {})
        return EXIT_FAIL
    passed = rep.passed and rep.worst_margin < -tol
    write_csv(out / "dominance.csv", "dominance", ["xi", "convection", "dissipation", "margin"],
              _dominance_rows(rep))
    c_s = smallness_constant(m)
    print(f"pass={passed} delta={m.delta!r} gamma={m.gamma!r} c_s={c_s!r} "
          f"worst_margin={rep.worst_margin:.6g} at xi={rep.worst_xi:.6g}")
    _write_summary(out, "certify", passed, {
        "delta": m.delta, "gamma": m.gamma, "r": m.r, "alpha": m.alpha, "s": m.s,
        "c_s": c_s, "worst_margin": rep.worst_margin, "worst_xi": rep.worst_xi,
    })
    return EXIT_PASS if passed else EXIT_FAIL


def _resolve_modulus(cfg: ExperimentConfig) -> KnvModulus | None:
    if cfg.modulus is not None:
        return cfg.modulus
    if not 0 < cfg.solver.s < 0.5:
        return None
    res = find_admissible(cfg.solver.s, cfg.constants, budget=cfg.search_budget)
    return res.modulus if res.success else None


def cmd_simulate(args, cfg: ExperimentConfig) -> int:
    out = _outdir(args)
    sc = cfg.solver
    try:
        theta0 = generate_initial_data(cfg.initial, sc.n)
    except ValueError as exc:
        raise UsageError(f"initial data: {exc}") from exc
    reference = None
    if args.resume:
        # the initial field is regenerated from config and seed so that the
        # rescaled modulus and gradient bound match the original run
        try:
            snap = load_snapshot(args.resume)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        if (snap.n, snap.s, snap.kappa) != (sc.n, sc.s, sc.kappa):
            raise UsageError(f"snapshot (n={snap.n}, s={snap.s}, kappa={snap.kappa}) "
                             "does not match the configuration")
        state = State.from_real(snap.field(), snap.t)
        reference = theta0
    else:
        state = State.from_real(theta0)
    m = _resolve_modulus(cfg)
    monitor = TrajectoryMonitor(m, tol=args.tol, reference=reference)
    samples = []

    def snapshot_hook(st):
        idx = len(samples)
        samples.append(st.t)
        every = cfg.output.snapshot_every
        if every and idx % every == 0:
            save_snapshot(out / f"snap_{idx:05d}.bin", st.real(), sc.s, sc.kappa, st.t)

    status = EXIT_PASS
    try:
        rep = run(state, sc, monitor, hooks=[snapshot_hook], sample_interval=cfg.output.cadence)
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        rep, status = exc.report, EXIT_NUMERICAL
    small = smallness_check(theta0, m) if m is not None else None
    g0 = rep.grad0
    rows = []
    for i in range(rep.times.size):
        prev = rep.sup_norm[i - 1] if i else rep.sup_norm[0]
        rows.append((rep.times[i], rep.sup_norm[i], rep.grad_sup[i], rep.bkm[i], rep.moc_slack[i],
                     rep.l2_norm[i], rep.mean[i], rep.grad_sup[i] < 2 * g0 * (1 + 1e-10) or g0 == 0,
                     rep.sup_norm[i] <= prev * (1 + 1e-8)))
    write_csv(out / "trajectory.csv", "trajectory",
              ["t", "sup_norm", "grad_sup", "bkm", "moc_slack", "l2_norm", "mean",
               "gradient_bound_ok", "max_principle_ok"], rows, meta={"seed": cfg.initial.seed})
    write_csv(out / "events.csv", "breakthrough", ["t", "x1", "x2", "y1", "y2", "separation", "slack"],
              [(t, *r.x, *r.y, r.separation, r.slack) for t, r in rep.breakthroughs])
    (out / "config.txt").write_text(serialize_config(cfg))
    passed = status == EXIT_PASS and rep.passed
    items = {f"{k}_ok": v for k, v in rep.flags().items()}
    items.update({"t_final": float(rep.times[-1]) if rep.times.size else 0.0,
                  "samples": int(rep.times.size), "bkm": float(rep.bkm[-1]) if rep.bkm.size else 0.0})
    if m is not None:
        items.update({"delta": m.delta, "gamma": m.gamma, "c_s": smallness_constant(m)})
    if small is not None:
        items.update({"smallness_product": small.product, "smallness_ok": small.passed})
    _write_summary(out, "simulate", passed, items, seed=cfg.initial.seed)
    print(f"simulate: pass={passed} samples={rep.times.size} "
          + " ".join(f"{k}={v}" for k, v in rep.flags().items()))
    if status != EXIT_PASS:
        return status
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_kernel_check(args, cfg: ExperimentConfig) -> int:
    out = _outdir(args)
    kc = cfg.kernel
    tol = args.tol if args.tol is not None else 1e-8
    variants = VARIANTS if kc.variant == "both" else (kc.variant,)
    if any(v not in VARIANTS for v in variants):
        raise UsageError(f"unknown kernel variant {kc.variant!r}")
    rows, ok = [], True
    for variant in variants:
        for s in kc.s_values:
            fit = estimate_representation_constant(s, variant, n=kc.n)
            p2 = CSKernelParams.build(2, s, variant)
            for h in kc.h_values:
                norm_err = abs(kernel_mass(p2, h) - 1.0)
                dev, _ = kernel_marginal_check(s, h, variant=variant)
                good = norm_err <= tol and dev <= 1e-6 and not fit.mismatch
                ok &= good
                rows.append((s, h, variant, norm_err, dev, fit.residual, fit.C, good))
                print(f"s={s:g} h={h:g} {variant}: norm_err={norm_err:.2e} marginal={dev:.2e} "
                      f"residual={fit.residual:.2e} C={fit.C:.6g}"
                      + ("" if fit.converged else f" ({fit.note})"))
    write_csv(out / "kernel_check.csv", "kernel-check",
              ["s", "h", "variant", "normalization_error", "marginal_deviation",
               "representation_residual", "C", "passed"], rows)
    _write_summary(out, "kernel-check", ok, {"rows": len(rows)})
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_moc_scan(args, cfg: ExperimentConfig) -> int:
    out = _outdir(args)
    s = cfg.solver.s
    if not 0 < s < 0.5:
        raise UsageError(f"scan needs s in (0, 1/2), got {s}")
    r = cfg.modulus.r if cfg.modulus else 1 + s
    alpha = cfg.modulus.alpha if cfg.modulus else (2 * s + 1) / 2
    rows, npass = [], 0
    for delta in cfg.scan.deltas:
        gmax = gamma_max(KnvModulus(delta, 1.0, r, alpha, s))
        for frac in cfg.scan.gamma_fractions:
            m = KnvModulus(delta, frac * gmax, r, alpha, s)
            valid = not validate_params(m)
            passed, worst, wxi = False, float("nan"), float("nan")
            if valid:
                rep = dominance_report(m, cfg.constants, xi_grid(delta, per_decade=cfg.scan.per_decade))
                passed, worst, wxi = rep.passed, rep.worst_margin, rep.worst_xi
            npass += passed
            rows.append((delta, m.gamma, frac, valid, passed, worst, wxi))
            print(f"delta={delta:g} gamma={m.gamma:.4g} valid={valid} pass={passed}")
    write_csv(out / "scan.csv", "moc-scan",
              ["delta", "gamma", "gamma_fraction", "valid", "passed", "worst_margin", "worst_xi"], rows)
    _write_summary(out, "moc-scan", npass > 0, {"points": len(rows), "passing": npass})
    return EXIT_PASS if npass else EXIT_FAIL


def cmd_report(args) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        raise UsageError(f"{root} is not a directory")
    found = sorted(root.rglob(SUMMARY))
    if not found:
        print(f"no runs found in {root}")
        return EXIT_FAIL
    all_ok = True
    for path in found:
        try:
            _, meta, _, rows = read_csv(path)
        except (OSError, ValueError, IndexError) as exc:
            print(f"{path.parent}: unreadable summary ({exc})")
            all_ok = False
            continue
        d = dict(rows)
        ok = d.get("passed") == "1"
        all_ok &= ok
        extras = ", ".join(f"{k}={v}" for k, v in d.items() if k not in ("command", "passed"))
        seed = f" seed={meta['seed']}" if "seed" in meta else ""
        print(f"{path.parent}: {d.get('command', '?')} {'PASS' if ok else 'FAIL'}{seed}"
              + (f" ({extras})" if extras else ""))
    return EXIT_PASS if all_ok else EXIT_FAIL


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qgmoc",
        description="Simulate dissipative SQG and check modulus-of-continuity certificates.",
        epilog="exit codes: 0 pass, 1 check failed, 2 usage or configuration error, "
               "3 numerical failure")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol_help):
        sp.add_argument("--config", help="flat key = value configuration file")
        sp.add_argument("--seed", type=int, help="override the initial-data seed")
        sp.add_argument("--out", default="qgmoc-out", help="output directory")
        sp.add_argument("--tol", type=float, help=tol_help)

    sp = sub.add_parser("simulate", help="integrate the equation and monitor the certificate")
    common(sp, "near-breakthrough tolerance (default |grad theta| * dx)")
    sp.add_argument("--resume", help="snapshot file to continue from")
    sp = sub.add_parser("certify", help="verify dominance for a modulus, or search one")
    common(sp, "required margin below zero (default 0)")
    sp = sub.add_parser("kernel-check", help="validate the extension-kernel representation")
    common(sp, "normalisation tolerance (default 1e-8)")
    sp = sub.add_parser("moc-scan", help="scan (delta, gamma) for passing moduli")
    common(sp, argparse.SUPPRESS)
    sp = sub.add_parser("report", help="summarise previous runs in a directory")
    sp.add_argument("dir")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = _config(args)
        handler = {
            "simulate": cmd_simulate,
            "certify": cmd_certify,
            "kernel-check": cmd_kernel_check,
            "moc-scan": cmd_moc_scan,
        }[args.command]
        return handler(args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"qgmoc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ExtrapolationError, FloatingPointError) as exc:
        print(f"qgmoc {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
