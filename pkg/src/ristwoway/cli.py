"""Command line entry point: ``simulate`` and ``verify``.

Exit codes: 0 success, 2 configuration error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .config import ConfigError, load_config_file, parse_bits, profile
from .harness import SCHEMES, monte_carlo, parse_schemes, summarize, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3

DEFAULT_SCHEMES = "optPSG,uniPowPSG,initialPSs,randInitialPSG,randPSs,noRIS"


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _bits_list(text: str) -> list[Optional[int]]:
    try:
        return [parse_bits(x.strip()) for x in text.split(",") if x.strip()]
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ristwoway", description="RIS-assisted two-way OFDM max-min rate toolkit")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded Monte-Carlo sweep and write CSV")
    sim.add_argument("--profile", default="paper-fig2a", help="built-in parameter profile (default: paper-fig2a)")
    sim.add_argument("--config", help="JSON/YAML key/value file overriding profile fields")
    sim.add_argument("--schemes", default=DEFAULT_SCHEMES, help=f"comma-separated subset of {','.join(SCHEMES)}")
    sim.add_argument("--R", type=_int_list, help="RIS sizes to sweep, e.g. 15,30,45")
    sim.add_argument("--B", type=_bits_list, help="phase bits to sweep; 'inf' is continuous")
    sim.add_argument("--trials", type=int, default=200)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    sim.add_argument("--timing", action="store_true", help="fill the wall_ms column (makes output run-dependent)")
    sim.add_argument("--summary", action="store_true", help="print mean/stderr per (scheme, R, B) to stderr")

    ver = sub.add_parser("verify", help="run the invariant and oracle checks")
    ver.add_argument("--quick", action="store_true", help="reduced instance counts")
    ver.add_argument("--only", help="comma-separated subset of checks")
    return ap


def _simulate(args) -> int:
    cfg, R_default, B_default = profile(args.profile)
    if args.config:
        cfg = load_config_file(args.config, cfg)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    Rs = args.R if args.R else R_default
    Bs = args.B if args.B else B_default
    schemes = parse_schemes(args.schemes)
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    sweep = [(R, B) for R in Rs for B in Bs]
    for R, B in sweep:
        cfg.replace(R=R, bits=B)  # validates each point up front

    log = logging.getLogger("ristwoway")
    rows = monte_carlo(cfg, schemes, sweep, args.trials, progress=lambda t: log.info("trial %d/%d done", t + 1, args.trials))
    if args.out == "-":
        write_csv(rows, sys.stdout, timing=args.timing)
    else:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh, timing=args.timing)
    if args.summary:
        for s in summarize(rows):
            print(f"{s['scheme']:>15} R={s['R']:<3} B={s['B']:<3} mean={s['mean']:.4f} se={s['stderr']:.4f}", file=sys.stderr)
    return EXIT_OK


def _verify(args) -> int:
    from .verify import CHECKS, run_all

    only = None
    if args.only:
        only = [x.strip() for x in args.only.split(",") if x.strip()]
        bad = [x for x in only if x not in CHECKS]
        if bad:
            raise ConfigError(f"unknown check(s) {bad}; choose from {list(CHECKS)}")
    results = run_all(quick=args.quick, only=only)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _simulate(args)
        return _verify(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
