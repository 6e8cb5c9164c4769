"""Command-line driver: ``simulate``, ``identify`` and ``sweep``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 other
I/O errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, artifacts, diagnostics, pipeline
from .config import ConfigError, bundled_config, load_pipeline_config, load_sweep_config

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

logger = logging.getLogger("hybrid_sindy")

_DEFAULT_CONFIG = {"simulate": "hopper", "identify": "hopper", "sweep": "sweep"}


def _resolve_config(value: str | None, command: str) -> Path:
    """A file path, or the name of a bundled config (``hopper``, ``sir``, ``sweep``)."""
    if value is None:
        return bundled_config(_DEFAULT_CONFIG[command])
    path = Path(value)
    if path.exists():
        return path
    if value in ("hopper", "sir", "sweep"):
        return bundled_config(value)
    raise ConfigError("--config", f"file not found: {value}")


def _with_seed(cfg, seed: int | None):
    return cfg if seed is None else dataclasses.replace(cfg, seed=seed)


def cmd_simulate(args):
    cfg = _with_seed(load_pipeline_config(_resolve_config(args.config, "simulate")), args.seed)
    train, val = pipeline.split(cfg, select=False)
    out = []
    for name, data in (("train", train), ("validation", val)):
        for k in range(data.n_trajectories):
            rows = data.trajectory(k)
            part = dataclasses.replace(
                data, times=data.times[rows].copy(), X=data.X[rows].copy(), dX=data.dX[rows].copy(),
                labels=data.labels[rows].copy(), boundaries=(0,))
            out.append(artifacts.write_trajectories(args.out / f"{name}_{k}.csv", part, first_id=k))
    print(f"wrote {len(out)} trajectory files ({train.m} training rows, {val.m} validation rows)")
    return cfg, out


def cmd_identify(args):
    cfg = _with_seed(load_pipeline_config(_resolve_config(args.config, "identify")), args.seed)
    result = pipeline.run(cfg, jobs=args.jobs)
    out = [
        artifacts.write_json(args.out / "catalog.json", result.catalog.to_dict()),
        artifacts.write_csv(args.out / "regime_map.csv", result.regime_rows()),
        artifacts.write_csv(args.out / "scoreboard.csv", result.scoreboard_rows()),
    ]
    resolved = sum(r.resolved for r in result.regimes)
    print(f"anchors: {len(result.regimes)}  resolved: {resolved}  catalog entries: {len(result.catalog)}")
    print(f"{'rank':>4}  {'freq':>5}  {'k':>3}  {'mean AICc':>12}  model")
    for rank, e in enumerate(result.catalog.rank_by_frequency(args.top), start=1):
        print(f"{rank:>4}  {e.frequency:>5}  {len(e.signature):>3}  {e.mean_aicc:>12.5g}  {result.describe(e.signature)}")
    return cfg, out


def cmd_sweep(args):
    cfg = _with_seed(load_sweep_config(_resolve_config(args.config, "sweep")), args.seed)
    cells = diagnostics.noise_sweep(cfg, jobs=args.jobs)
    cols = ["regime", "K", "epsilon", "kappa", "kappa_eps", "success_fraction"]
    out = [artifacts.write_csv(args.out / "sweep.csv", [c.to_row() for c in cells], cols)]
    for regime in cfg.regimes:
        rows = [c.to_row() for c in cells if c.regime == regime]
        out.append(artifacts.write_csv(args.out / f"sweep_{regime}.csv", rows, cols))
    rho_ke, rho_k = diagnostics.contour_alignment(cells)
    print(f"{len(cells)} cells; Spearman(success, -log kappa*eps) = {rho_ke:.3f}, "
          f"Spearman(success, -log kappa) = {rho_k:.3f}")
    return cfg, out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-sindy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_text in (
        ("simulate", cmd_simulate, "simulate training and validation trajectories"),
        ("identify", cmd_identify, "run hybrid identification and write the model catalog"),
        ("sweep", cmd_sweep, "cluster-size / noise recovery sweep"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config path or bundled name (hopper, sir, sweep)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config's root seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (-1 for all cores)")
        p.add_argument("--top", type=int, default=10, help="catalog entries in the summary table")
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("config error: --seed: must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    started = artifacts.utc_now()
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        cfg, outputs = args.func(args)
        artifacts.write_manifest(args.out, args.command, cfg.digest(), cfg.seed, __version__, started, outputs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
