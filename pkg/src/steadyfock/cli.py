"""Command-line front end: ``steadyfock {run,preset,sweep,validate}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .scenarios import (
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    list_presets,
    load_config,
    preset_config,
    resolve_config,
    run_many,
    run_scenario,
)

OUTPUT_HELP = """\
output files (written to --out DIR):
  populations.csv     n,population[,analytic]   photon-number distribution
  wigner.csv          x,p,W                     Wigner function, alpha = x + i p
  wigner_matrix.txt   rows x, columns p          same grid; header holds ranges
  trajectory.csv      time,p0,...,pN            evolve / collision modes
  selectivity.csv     time,transfer,fidelity     validate-selectivity mode
  report.json         fidelity, regime, residuals, condition ratios, Wigner summary
  manifest.json       resolved config, versions, seed (rerun with --config)

exit codes: 0 ok, 2 invalid config, 3 solver failure, 4 truncation too tight
"""


def _config_from_args(args) -> dict:
    if getattr(args, "preset", None) and getattr(args, "config", None):
        raise ConfigError("pass either --config or --preset, not both")
    if getattr(args, "preset", None):
        return preset_config(args.preset)
    if getattr(args, "config", None):
        raw = load_config(args.config)
        # Accept run manifests directly.
        return raw["config"] if set(raw) >= {"config", "versions"} else raw
    raise ConfigError("one of --config or --preset is required")


def _finish(res) -> int:
    summary = {"status": res.report.get("status"), "out": str(res.out_dir)}
    metrics = res.report.get("metrics")
    if metrics:
        summary["fidelity_sqrt"] = metrics["fidelity_sqrt"]
    if "regime" in res.report:
        summary["regime"] = res.report["regime"]
    print(json.dumps(summary, sort_keys=True))
    if res.message:
        print(f"steadyfock: {res.message}", file=sys.stderr)
    return res.status


def cmd_run(args) -> int:
    try:
        raw = _config_from_args(args)
    except ConfigError as exc:
        print(f"steadyfock: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _finish(run_scenario(raw, args.out, args.seed, args.nmax))


def cmd_preset(args) -> int:
    if args.list or not args.name:
        for name, cfg in list_presets().items():
            r, t = cfg["rates"], cfg["targets"]
            flag = " [interpretation]" if cfg.get("interpretation", {}).get("ambiguous") else ""
            print(f"{name}: m={t['m']} l={t['l']} gamma_m={r['gamma_m']:g} gamma_l={r['gamma_l']:g} "
                  f"epsilon={r['epsilon']:g} nbar={r['nbar']:g}  {cfg['description']}{flag}")
        return EXIT_OK
    args.preset, args.config = args.name, None
    return cmd_run(args)


def cmd_sweep(args) -> int:
    configs = []
    try:
        for path in args.config or []:
            configs.append(load_config(path))
        for name in args.preset or []:
            configs.append(preset_config(name))
    except ConfigError as exc:
        print(f"steadyfock: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not configs:
        print("steadyfock: sweep needs at least one --config or --preset", file=sys.stderr)
        return EXIT_CONFIG
    results = run_many(configs, args.out, workers=args.workers, seed=args.seed, n_max=args.nmax)
    for status, out, msg in results:
        print(json.dumps({"status": status, "out": out, "message": msg}, sort_keys=True))
    return max(status for status, _, _ in results)


def cmd_validate(args) -> int:
    try:
        resolve_config(_config_from_args(args), seed=args.seed, n_max=args.nmax)
    except (ConfigError, ValueError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("valid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steadyfock",
        description="Steady states of a cavity mode under an engineered atomic reservoir.",
        epilog=OUTPUT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, source=True):
        if source:
            p.add_argument("--config", type=Path, help="JSON scenario config (or a run manifest)")
            p.add_argument("--preset", help="named preset, see 'steadyfock preset --list'")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--nmax", type=int, help="override the Fock cutoff")

    p = sub.add_parser("run", help="run one scenario", epilog=OUTPUT_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)
    p.add_argument("--out", type=Path, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="list presets or run one by name")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--out", type=Path)
    common(p, source=False)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("sweep", help="run several scenarios in parallel")
    p.add_argument("--config", type=Path, action="append", help="repeatable")
    p.add_argument("--preset", action="append", help="repeatable")
    p.add_argument("--out", type=Path, required=True, help="root directory; one subdirectory per scenario")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--nmax", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a config without running it")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
