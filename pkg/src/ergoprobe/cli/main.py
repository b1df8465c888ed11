"""Command-line entry point: ``ergoprobe <subcommand> [--config PATH] ...``."""

from __future__ import annotations

import argparse
import sys
from importlib import resources

from .config import ConfigError, load_config, parse_config
from .runner import run

SUBCOMMANDS = {
    "rmt-fdt": "rmt_fdt",
    "chain-fdt": "chain_fdt",
    "scaling": "scaling",
    "decay": "decay",
    "correlators": "correlators",
}


def default_config_text(experiment: str) -> str:
    return resources.files("ergoprobe.cli").joinpath("configs", f"{experiment}.cfg").read_text()


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergoprobe", description="Probe-qubit fluctuation-dissipation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, exp in SUBCOMMANDS.items():
        s = sub.add_parser(name, help=f"run the {exp} experiment")
        s.add_argument("--config", help="config file (default: bundled configs/%s.cfg)" % exp)
        s.add_argument("--out-dir", help="output directory (overrides output.dir)")
        s.add_argument("--seed", help="master seed, unsigned 64-bit (overrides master_seed)")
        s.add_argument("--dry-run", action="store_true", help="print the sweep grid and exit")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    experiment = SUBCOMMANDS[args.command]
    try:
        cfg = load_config(args.config) if args.config else parse_config(default_config_text(experiment))
        if cfg.experiment != experiment:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {experiment!r}")
        if args.seed is not None:
            try:
                cfg = cfg.with_seed(args.seed)
            except ValueError as exc:
                raise ConfigError(f"--seed: {exc}") from None
        if args.out_dir:
            cfg = cfg.with_out_dir(args.out_dir)
        if args.dry_run:
            print("index,n_total,g,beta")
            for i, (n, g, b) in enumerate(cfg.grid()):
                print(f"{i},{n},{g!r},{b!r}")
            return 0
        result = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    for i, r in enumerate(result.records):
        if r.failed:
            print(f"point {i} failed: {r.diagnostics.get('error', '')}", file=sys.stderr)
    for f in result.fits:
        print(", ".join(f"{k}={v}" for k, v in f.items() if k != "ratios"))
    print(f"wrote {cfg.out_dir}/{cfg.experiment}.csv")
    return 2 if result.any_failed else 0


if __name__ == "__main__":
    sys.exit(main())
