"""Command line front end.

    icbeam run        Monte Carlo WSR sweep driven by an experiment file
                      and/or flags; writes a CSV and prints a summary.
    icbeam complexity closed-form multiplication counts and feedback sizes
                      swept over the number of users K.
    icbeam validate   built-in self checks; nonzero exit on any failure.
"""

import argparse
import sys
from typing import Dict, Optional

from .harness import (
    emit_complexity_csv,
    emit_csv,
    load_spec_file,
    run_experiment,
    spec_from_mapping,
    table_to_csv_text,
)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="icbeam",
        description="Weighted sum-rate transceiver design on the K-user MIMO interference channel",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("--spec", help="experiment file (flat key = value lines)")
    run.add_argument("--out", help="output CSV path")
    run.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--snr", help="comma separated SNR grid in dB, e.g. 0,10,20")
    run.add_argument("--constraint", choices=("sum", "pernode"))
    run.add_argument(
        "--robust",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="design under imperfect CSI (--no-robust to force off)",
    )
    run.add_argument(
        "--sigma-delta-frac",
        type=float,
        help="true estimation-error variance as a fraction of the channel variance",
    )
    run.add_argument(
        "--sigma-eps-frac",
        type=float,
        help="designer's relative misestimate of the error variance",
    )
    run.add_argument("--methods", help="comma separated subset of wmmse,simple_mmse,gradient")
    run.add_argument("--dims", help="problem sizes K,M,N,d, e.g. 4,5,5,2")
    run.add_argument("--mu", help="comma separated rate weights, one per user")
    run.add_argument("--workers", type=int, help="worker processes for the trial loop")

    comp = sub.add_parser("complexity", help="emit the closed-form cost/feedback sweep")
    comp.add_argument("--out", help="output CSV path (default: print to stdout)")
    comp.add_argument("--k-min", type=int, default=2)
    comp.add_argument("--k-max", type=int, default=8)
    comp.add_argument("--m", type=int, default=5)
    comp.add_argument("--n", type=int, default=5)
    comp.add_argument("--d", type=int, default=2)
    comp.add_argument("--i1", type=int, default=10, help="outer iterations")
    comp.add_argument("--i2", type=int, default=10, help="step-size trials")
    comp.add_argument("--i3", type=int, default=10, help="bisection steps")

    sub.add_parser("validate", help="run the built-in self checks")
    return p


def _run_overrides(args: argparse.Namespace) -> Dict[str, Optional[str]]:
    ov: Dict[str, Optional[str]] = {
        "out": args.out,
        "trials": None if args.trials is None else str(args.trials),
        "seed": None if args.seed is None else str(args.seed),
        "snr_db": args.snr,
        "constraint": args.constraint,
        "methods": args.methods,
        "mu": args.mu,
        "workers": None if args.workers is None else str(args.workers),
        "sigma_delta_frac": (
            None if args.sigma_delta_frac is None else str(args.sigma_delta_frac)
        ),
        "sigma_eps_frac": (
            None if args.sigma_eps_frac is None else str(args.sigma_eps_frac)
        ),
    }
    if args.robust is not None:
        ov["robust"] = "on" if args.robust else "off"
    if args.dims is not None:
        parts = [tok for tok in args.dims.replace(",", " ").split()]
        if len(parts) != 4:
            raise SystemExit("--dims expects four integers K,M,N,d")
        ov.update({"k": parts[0], "m": parts[1], "n": parts[2], "d": parts[3]})
    return ov


def _cmd_run(args: argparse.Namespace) -> int:
    mapping = load_spec_file(args.spec) if args.spec else {}
    spec = spec_from_mapping(mapping, _run_overrides(args))
    table = run_experiment(spec)
    text = table_to_csv_text(table)
    if spec.out:
        emit_csv(table, spec.out)
        print(f"wrote {len(table.rows)} rows to {spec.out}")
    print(
        f"{'snr':>6} {'method':>12} {'variant':>8} {'mean WSR':>12} "
        f"{'std err':>10} {'iters':>8} {'clamps':>7}"
    )
    for r in table.rows:
        print(
            f"{r.snr_db:6.1f} {r.method:>12} {r.robust:>8} {r.mean_wsr:12.4f} "
            f"{r.std_err:10.4f} {r.mean_iterations:8.1f} {r.clamp_count:7d}"
        )
    if not spec.out:
        sys.stdout.write("\n" + text)
    return 0


def _cmd_complexity(args: argparse.Namespace) -> int:
    if args.k_min < 1 or args.k_max < args.k_min:
        raise SystemExit("need 1 <= k-min <= k-max")
    ks = range(args.k_min, args.k_max + 1)
    kw = dict(M=args.m, N=args.n, d=args.d, I1=args.i1, I2=args.i2, I3=args.i3)
    if args.out:
        emit_complexity_csv(args.out, ks, **kw)
        print(f"wrote complexity sweep for K={args.k_min}..{args.k_max} to {args.out}")
    else:
        from .harness import complexity_csv_text

        sys.stdout.write(complexity_csv_text(ks, **kw))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "complexity":
        return _cmd_complexity(args)
    if args.command == "validate":
        from .validate import run_validation

        failures = run_validation()
        if failures:
            print(f"{failures} check(s) failed")
            return 1
        print("all checks passed")
        return 0
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
