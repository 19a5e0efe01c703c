"""Command-line front end: one subcommand per experiment kind.

Usage pattern:

    diracsea scan --config scan.json --set scan.grid_ns='[16,24,32]' --out runs/scan

Without --config the shipped default scenario for the subcommand runs. Every
run writes results.csv and metadata.json into the output directory. Exit
codes: 0 success, 2 configuration problem (with the dotted path of the bad
entry), 3 dense-memory budget refusal, 4 conditioning failure (gray-zone
charge, rank-deficient sea, charge obstruction), 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    ChargeObstructionError,
    ConfigError,
    DenseBudgetError,
    DiracseaError,
    GrayZoneError,
    RankDeficiencyError,
)
from .scenarios import (
    SCENARIO_KINDS,
    apply_overrides,
    parse_scenario,
    run_scenario,
    shipped_default,
)

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_CONDITIONING = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracsea",
        description="External-field evolution experiments on truncated momentum grids",
    )
    sub = parser.add_subparsers(dest="kind", required=True, metavar="|".join(SCENARIO_KINDS))
    for kind in SCENARIO_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario")
        p.add_argument("--config", type=Path, default=None, help="scenario JSON file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="K=V",
            help="override one config entry by dotted path (repeatable)",
        )
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent items")
        p.add_argument("--dense-budget", type=int, default=None, metavar="BYTES",
                       help="memory cap for dense operator matrices")
    return parser


def _load_document(args) -> dict:
    if args.config is None:
        data = shipped_default(args.kind)
    else:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {args.config}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                "--config",
                f"malformed JSON in {args.config} at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            ) from exc
    if not isinstance(data, dict):
        raise ConfigError("--config", "top level of the scenario document must be an object")
    data = apply_overrides(data, args.overrides)
    data.setdefault("kind", args.kind)
    if data["kind"] != args.kind:
        raise ConfigError(
            "kind",
            f"config says {data['kind']!r} but the {args.kind!r} subcommand was invoked",
        )
    if args.seed is not None:
        data["seed"] = args.seed
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = args.out if args.out is not None else Path("runs") / args.kind
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        data = _load_document(args)
        cfg = parse_scenario(data)
        metadata = run_scenario(cfg, out_dir, threads=args.threads, budget=args.dense_budget)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DenseBudgetError as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (GrayZoneError, RankDeficiencyError, ChargeObstructionError) as exc:
        print(f"conditioning error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except DiracseaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{args.kind}: {metadata['row_count']} rows -> {out_dir / 'results.csv'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
