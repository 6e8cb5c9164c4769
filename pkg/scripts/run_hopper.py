"""Identify the hopper's flight and compression models and print the top of the catalog."""

import argparse
import time

from hybrid_sindy import pipeline
from hybrid_sindy.config import bundled_config, load_pipeline_config


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(bundled_config("hopper")))
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--top", type=int, default=6)
    args = parser.parse_args()

    cfg = load_pipeline_config(args.config)
    start = time.perf_counter()
    result = pipeline.run(cfg, jobs=args.jobs)
    elapsed = time.perf_counter() - start

    resolved = sum(r.resolved for r in result.regimes)
    print(f"{len(result.regimes)} anchors, {resolved} resolved, {elapsed:.1f} s")
    for e in result.catalog.rank_by_frequency(args.top):
        print(f"{e.frequency:5d}  {e.mean_aicc:12.5g}  {result.describe(e.signature)}")


if __name__ == "__main__":
    main()
