"""Cluster-size / noise sweep: print the success grid for each regime next to kappa * eps."""

import argparse

import numpy as np

from hybrid_sindy import diagnostics
from hybrid_sindy.config import bundled_config, load_sweep_config


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(bundled_config("sweep")))
    parser.add_argument("--jobs", type=int, default=-1)
    args = parser.parse_args()

    cfg = load_sweep_config(args.config)
    cells = diagnostics.noise_sweep(cfg, jobs=args.jobs)
    for regime in cfg.regimes:
        print(f"\n{regime}: success fraction (rows K, columns eps)")
        print("      K  " + "".join(f"{e:>9.0e}" for e in cfg.eps_grid))
        for K in cfg.K_grid:
            row = [c for c in cells if c.regime == regime and c.K == K]
            kappa = row[0].kappa
            vals = "".join(f"{c.success_fraction:>9.2f}" if not c.skipped else f"{'-':>9}" for c in row)
            print(f"{K:>7d}  {vals}   kappa={kappa:.3g}" if np.isfinite(kappa) else f"{K:>7d}  {vals}")
    rho_ke, rho_k = diagnostics.contour_alignment(cells)
    print(f"\nSpearman with -log(kappa eps): {rho_ke:.3f}; with -log(kappa): {rho_k:.3f}")


if __name__ == "__main__":
    main()
