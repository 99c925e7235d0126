"""Command-line entry point: ``prcs-tomo <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import calibration as cal
from . import pipeline
from .errors import PrcsError
from .quantum_math import TruncationPolicy

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _mu_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _common(p):
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--theoretical", action="store_true", default=None,
                   help="use exact marginals instead of simulated records")
    p.add_argument("--mu", type=_mu_list, help="comma-separated non-zero mean photon numbers")
    p.add_argument("--mu-sigma", type=_mu_list, help="comma-separated 1-sigma errors for --mu")
    p.add_argument("--records", type=int, help="records per channel")
    p.add_argument("--samples", type=int, help="samples per record")
    p.add_argument("--bins", type=int)
    p.add_argument("--noise", type=float, help="electronic noise sigma (quadrature units)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="prcs-tomo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ["run", *pipeline.STAGES]:
        p = sub.add_parser(name)
        _common(p)
        if name == "fit-mu":
            p.add_argument("inputs", nargs="*", type=Path,
                           help="calibrated histogram files to fit (default: the pipeline's)")
    return parser


def resolve_config(args) -> pipeline.PipelineConfig:
    if args.config is not None:
        cfg = pipeline.load_config(args.config)
    else:
        if not args.mu:
            raise pipeline.ConfigError("mu", "give --config or --mu")
        cfg = pipeline.PipelineConfig(channels=[])
    if args.mu:
        if args.mu_sigma and len(args.mu_sigma) != len(args.mu):
            raise pipeline.ConfigError("mu-sigma", "needs one value per --mu entry")
        cfg.channels = pipeline.channels_from_mus(args.mu, args.mu_sigma)
    return pipeline.with_overrides(
        cfg, out_dir=args.out, seed=args.seed, theoretical=args.theoretical,
        n_records=args.records, n_samples=args.samples, bins=args.bins, noise_sigma=args.noise)


def _fit_files(paths):
    policy = TruncationPolicy()
    for p in paths:
        h = cal.read_calibrated(p)
        est, _, sigma = pipeline.fit_channel(h, policy)
        print(f"{p}: mu_hat={est.mu:.6g} sigma_mu={sigma:.3g} fit_residual={est.fit_residual:.3g}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fit-mu" and args.inputs:
            _fit_files(args.inputs)
            return EXIT_OK
        cfg = resolve_config(args).validate()
        if args.command == "run":
            print(pipeline.run(cfg), end="")
        else:
            result = pipeline.STAGES[args.command](cfg)
            if isinstance(result, str):
                print(result, end="")
    except PrcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
