"""Command-line front end.

Subcommands: corrupt, denoise, ber, oracle, bench. Images are ASCII
netpbm (P1/P2); channels are "bsc:<delta>" or matrix files; losses are
"hamming" or matrix files. Exit status is 0 on success, 2 on usage
errors, and 1 on any named runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .denoise import DenoiseConfig, denoise
from .harness import ber, corrupt, interior_region, parse_experiment_config, run_experiment
from .model import channel_from_spec, crop_valid, loss_from_spec, make_grid
from .netpbm import read_netpbm, write_netpbm
from .oracle import bruteforce_ph_class, bruteforce_qt_class, format_report, genie_fixed


def _load_grid(path: str, alphabet_size: int | None = None):
    array, maxval = read_netpbm(path)
    size = maxval + 1 if alphabet_size is None else alphabet_size
    if array.max(initial=0) >= size:
        raise ValueError(f"{path}: symbols exceed alphabet size {size}")
    return make_grid(array, size)


def _write_grid(path: str, grid):
    data = crop_valid(grid)
    write_netpbm(path, data, max(1, grid.alphabet_size - 1))


def _cmd_corrupt(args) -> int:
    channel = channel_from_spec(args.channel)
    clean = _load_grid(args.infile, channel.clean.size)
    noisy = corrupt(clean, channel, args.seed)
    _write_grid(args.out, noisy)
    return 0


def _cmd_denoise(args) -> int:
    channel = channel_from_spec(args.channel)
    loss = loss_from_spec(args.loss, channel.clean.size, channel.noisy.size)
    noisy = _load_grid(args.infile, channel.noisy.size)
    config = DenoiseConfig(k=args.k, m=args.m, mode=args.mode)
    schedule, recon = denoise(noisy, config, channel, loss)
    _write_grid(args.out, recon)
    if args.schedule:
        with open(args.schedule, "w", encoding="ascii") as fh:
            fh.write(schedule.to_csv())
    return 0


def _cmd_ber(args) -> int:
    clean = _load_grid(args.clean)
    test = _load_grid(args.test, clean.alphabet_size)
    region = interior_region(clean, args.interior)
    print(f"{ber(clean, test, region):.9g}")
    return 0


def _cmd_oracle(args) -> int:
    clean = _load_grid(args.clean)
    noisy = _load_grid(args.noisy, clean.alphabet_size)
    loss = loss_from_spec(args.loss, clean.alphabet_size, noisy.alphabet_size)
    if args.target == "dk":
        report = genie_fixed(clean, noisy, args.k, loss)
    elif args.target == "dphkm":
        report = bruteforce_ph_class(clean, noisy, args.k, args.m, loss)
    else:
        report = bruteforce_qt_class(clean, noisy, args.m, loss,
                                     max_depth=args.max_depth)
    print(f"{report.target} {report.value:.9g}")
    if args.witness:
        with open(args.witness, "w", encoding="ascii") as fh:
            fh.write(format_report(report))
    return 0


def _cmd_bench(args) -> int:
    with open(args.config, "r", encoding="ascii") as fh:
        config = parse_experiment_config(fh.read())
    report = run_experiment(config)
    sys.stdout.write(report.to_csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdude2d",
        description="Switching discrete denoising of 2-D finite-alphabet data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corrupt", help="pass an image through a channel")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("denoise", help="denoise a noisy image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--loss", default="hamming")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--mode", required=True,
                   choices=("dude-2d", "sdude-2d", "dude-1d-raster",
                            "sdude-1d-raster"))
    p.add_argument("--out", required=True)
    p.add_argument("--schedule", help="also write the rule schedule CSV")
    p.set_defaults(func=_cmd_denoise)

    p = sub.add_parser("ber", help="fraction of differing symbols")
    p.add_argument("--clean", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--interior", type=int, default=0,
                   help="restrict to the interior for this context order")
    p.set_defaults(func=_cmd_ber)

    p = sub.add_parser("oracle", help="genie-aided performance targets")
    p.add_argument("--clean", required=True)
    p.add_argument("--noisy", required=True)
    p.add_argument("--target", required=True, choices=("d2d0m", "dphkm", "dk"))
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--loss", default="hamming")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--witness", help="write the full report with witness CSV")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("bench", help="run a sweep from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
