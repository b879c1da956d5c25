"""Command line entry point: ``pnpfd run``, ``pnpfd converge`` and ``pnpfd check``."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import RunFailure, convergence_study, load_config, run_experiment


def _resolutions(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if len(values) < 3:
        raise argparse.ArgumentTypeError("need at least three resolutions")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnpfd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a single experiment")
    run.add_argument("--config", required=True, help="flat 'key = value' config file")
    run.add_argument("--output-dir", help="override output_dir from the config")

    conv = sub.add_parser("converge", help="convergence study over resolutions (h = 1/r)")
    conv.add_argument("--config", required=True)
    conv.add_argument("--resolutions", type=_resolutions, default=[20, 40, 60, 80, 100])
    conv.add_argument("--output-dir")
    conv.add_argument("--intergrid", choices=("fourier", "bilinear"), default="fourier")

    sub.add_parser("check", help="run the fast invariant suite on small grids")
    return parser


def _progress(rec):
    logging.getLogger("pnpfd").info(
        "step %d t=%.4f E=%.10e c_min=%.3e iters=%d", rec.step, rec.t, rec.energy, rec.c_min, rec.picard_iters
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "check":
        from .checks import run_checks

        failed = 0
        for name, ok, detail in run_checks():
            print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
            failed += not ok
        return 1 if failed else 0

    cfg = load_config(args.config, output_dir=args.output_dir)
    if args.command == "run":
        try:
            result = run_experiment(cfg, progress=_progress if args.verbose else None)
        except RunFailure as exc:
            print(f"run failed at {exc}", file=sys.stderr)
            return 2
        last = result.records[-1]
        print(f"steps={last.step} t={last.t:.6g} energy={last.energy:.12e} c_min={last.c_min:.6e}")
        print(f"mass drift n={result.mass_drift[0]:.3e} p={result.mass_drift[1]:.3e}")
        return 0

    table = convergence_study(cfg, args.resolutions, method=args.intergrid)
    for row in table.pairs:
        print(" ".join(f"{k}={v:.4e}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    for row in table.triples:
        print(" ".join(f"{k}={v:.3f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    if not table.complete:
        print("convergence study incomplete: a run failed", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
