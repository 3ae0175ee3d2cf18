"""Command line front end: one subcommand per experiment pipeline."""

import argparse
import json
import sys
from typing import Optional

from .errors import BalancerError
from .harness import CONFIG_FORMAT_VERSION, ExperimentConfig, run_experiment


def _int_list(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: "
                                         f"{raw!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="JSON config; its keys override the flags")
    p.add_argument("--T", type=int, default=None, help="stream length")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, dest="seed_base")
    p.add_argument("--algorithm", choices=("cosh", "random"), default=None)
    p.add_argument("--out-dir", default=None, dest="out_dir")
    p.add_argument("--no-figures", action="store_true",
                   help="skip the PNG renders")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="balancer",
        description="Online vector balancing experiments: potential signers, "
                    "dyadic reductions, adversaries, verifiers.")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("balance", help="sign a sampled vector stream")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="dimension")
    p.add_argument("--spec-config", metavar="FILE", dest="spec_config",
                   help="JSON distribution spec")
    p.add_argument("--general", action="store_true",
                   help="whiten through the covariance eigenbasis")
    p.add_argument("--dump-basis", action="store_true", dest="dump_basis",
                   help="write basis/eigenvalue/covariance CSVs")

    p = subs.add_parser("interval", help="interval discrepancy on [0,1]")
    _add_common(p)
    p.add_argument("--d", type=int, default=None, help="ambient dimension")
    p.add_argument("--probes", type=int, default=None, dest="probe_count",
                   help="random dual-route oracle checks per trial")

    p = subs.add_parser("tusnady", help="axis-parallel box discrepancy")
    _add_common(p)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--probes", type=int, default=None, dest="probe_count")

    p = subs.add_parser("envy", help="online fair division")
    _add_common(p)
    p.add_argument("--mode", choices=("cardinal", "ordinal"), default=None)

    p = subs.add_parser("adversary", help="orthogonal drift lower bound")
    _add_common(p)
    p.add_argument("--n", type=int, default=None)

    p = subs.add_parser("lowerbound", help="threshold-crossing frequency")
    _add_common(p)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--count", type=int, default=200,
                   help="runs inside each trial")
    p.add_argument("--spec-config", metavar="FILE", dest="spec_config")

    p = subs.add_parser("sphere", help="unit-sphere l2 growth")
    _add_common(p)
    p.add_argument("--n", type=int, default=None)

    p = subs.add_parser("fractal", help="recursive gap instance table")
    _add_common(p)
    p.add_argument("--h-grid", type=_int_list, default=None, dest="h_grid",
                   help="comma-separated depths (default 8,12,16,20)")
    p.add_argument("--magnitude", type=float, default=None)

    p = subs.add_parser("anticonc", help="anti-concentration certificates")
    _add_common(p)
    p.add_argument("--family", choices=("hadamard", "counterexample",
                                        "random"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--count", type=int, default=None)

    p = subs.add_parser("fit", help="growth exponent over a T grid")
    _add_common(p)
    p.add_argument("--T-grid", type=_int_list, default=None, dest="T_grid",
                   help="comma-separated powers of two, ascending")
    p.add_argument("--target", choices=("interval", "balance", "sphere"),
                   default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)

    p = subs.add_parser("compare", help="paired algorithms, shared streams")
    _add_common(p)
    p.add_argument("--target", default=None,
                   help="interval, balance, sphere (adversary is refused)")
    p.add_argument("--algorithms", default=None,
                   help="comma-separated, default cosh,random")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(subcommand=args.subcommand)
    fields = vars(cfg)
    for key, value in vars(args).items():
        if key in ("config", "no_figures") or value is None:
            continue
        if key == "spec_config":
            with open(value, "r", encoding="utf-8") as fh:
                value = json.load(fh)
        if key == "algorithms":
            value = tuple(value.split(","))
        if key in fields:
            setattr(cfg, key, value)
    if args.no_figures:
        cfg.figures = False
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            overlay = json.load(fh)
        version = overlay.pop("format_version", CONFIG_FORMAT_VERSION)
        if version != CONFIG_FORMAT_VERSION:
            raise BalancerError(f"config format_version {version!r} not "
                                f"supported")
        sub = overlay.pop("subcommand", args.subcommand)
        if sub != args.subcommand:
            raise BalancerError(f"config is for {sub!r}, invoked "
                                f"{args.subcommand!r}")
        for key, value in overlay.items():
            if key not in fields:
                raise BalancerError(f"unknown config key {key!r}")
            if isinstance(fields[key], tuple) and isinstance(value, list):
                value = tuple(value)
            setattr(cfg, key, value)
    try:
        cfg.validate()
    except ValueError as exc:
        raise BalancerError(str(exc)) from exc
    return cfg


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        outcome = run_experiment(cfg)
    except (BalancerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in outcome.log_lines:
        print(line)
    for path in outcome.files:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
