"""Noise-robustness diagnostics: least-squares perturbation bound and the
cluster-size / noise sweep on regime-pure hopper clusters."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from . import dynamics
from .clustering import nearest
from .config import SweepConfig
from .dynamics import COMPRESSION, FLIGHT, Hopper
from .features import FeatureLibrary, build_library, condition_number, evaluate
from .regression import stlsq

logger = logging.getLogger(__name__)


def ls_error_bound(kappa: float, eps: float, C: float) -> float:
    """Upper bound ``C kappa eps / (1 - C kappa eps)`` on the relative LS error; inf once vacuous."""
    if kappa < 1 or eps < 0 or C <= 0:
        raise ValueError("need kappa >= 1, eps >= 0, C > 0")
    x = C * kappa * eps
    if x >= 1:
        return math.inf
    return x / (1 - x)


def threshold_success_factor(Xi: np.ndarray) -> np.ndarray:
    """``sqrt(k) max|xi| / min nonzero |xi|`` for each column of ``Xi``.

    All-zero columns get NaN (the factor is undefined there).
    """
    Xi = np.atleast_2d(np.asarray(Xi, dtype=float))
    if Xi.shape[0] == 1 and Xi.shape[1] > 1 and np.ndim(Xi) == 2 and Xi.size == Xi.shape[1]:
        Xi = Xi.T
    if not np.any(Xi):
        raise ValueError("coefficient matrix has no nonzero entries")
    out = np.full(Xi.shape[1], np.nan)
    for j in range(Xi.shape[1]):
        nz = np.abs(Xi[np.flatnonzero(Xi[:, j]), j])
        if nz.size == 0:
            logger.info("column %d has no nonzero coefficients; factor undefined", j)
            continue
        out[j] = math.sqrt(nz.size) * nz.max() / nz.min()
    return out


def perturbation_ratio(Theta: np.ndarray, Theta_noisy: np.ndarray, X: np.ndarray, X_noisy: np.ndarray) -> float:
    """``(||dTheta|| / ||Theta||) / (||dX|| / ||X||)`` in the spectral norm."""
    dT = np.linalg.norm(Theta_noisy - Theta, 2) / np.linalg.norm(Theta, 2)
    dXr = np.linalg.norm(X_noisy - X, 2) / np.linalg.norm(X, 2)
    return dT / dXr


def relative_ls_error(Theta_noisy: np.ndarray, dX: np.ndarray, Xi_true: np.ndarray) -> float:
    """Relative 2-norm error of the plain least-squares solution on a perturbed library."""
    Xi_ls = np.linalg.lstsq(Theta_noisy, dX, rcond=None)[0]
    return np.linalg.norm(Xi_ls - Xi_true, 2) / np.linalg.norm(Xi_true, 2)


def relative_perturbation(X: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian perturbation of ``X`` rescaled so that ``||dX|| / ||X|| = eps`` in the spectral norm."""
    dX = rng.standard_normal(X.shape)
    return dX * (eps * np.linalg.norm(X, 2) / np.linalg.norm(dX, 2))


def fit_library_constant(library: FeatureLibrary, samples, eps_values, rng: np.random.Generator) -> float:
    """Monte-Carlo estimate of the library constant C.

    ``samples`` is an iterable of noiseless state matrices; each is perturbed
    at every relative noise level in ``eps_values`` and C is the largest
    observed ratio of relative library perturbation to relative state
    perturbation.
    """
    ratios = []
    for X in samples:
        Theta = evaluate(library, X)
        for eps in eps_values:
            Xn = X + relative_perturbation(X, eps, rng)
            ratios.append(perturbation_ratio(Theta, evaluate(library, Xn), X, Xn))
    return float(max(ratios))


def bound_trial(library: FeatureLibrary, X: np.ndarray, Xi: np.ndarray, eps: float, C: float,
                rng: np.random.Generator) -> tuple[float, float]:
    """Measured relative LS error and its predicted bound for one noisy draw.

    Derivatives are exact (``Theta(X) Xi``); only the states are perturbed,
    at relative level ``eps``.
    """
    Theta = evaluate(library, X)
    Xn = X + relative_perturbation(X, eps, rng)
    measured = relative_ls_error(evaluate(library, Xn), Theta @ Xi, Xi)
    return measured, ls_error_bound(condition_number(Theta), eps, C)


# -- cluster-size / noise sweep -------------------------------------------------

@dataclass(frozen=True)
class SweepCell:
    regime: str
    K: int
    epsilon: float
    realizations: int
    successes: int
    kappa: float
    skipped: bool = False

    @property
    def success_fraction(self) -> float:
        return self.successes / self.realizations if self.realizations else math.nan

    @property
    def kappa_eps(self) -> float:
        return self.kappa * self.epsilon

    def to_row(self) -> dict:
        return {
            "regime": self.regime, "K": self.K, "epsilon": self.epsilon,
            "kappa": self.kappa, "kappa_eps": self.kappa_eps,
            "success_fraction": self.success_fraction if not self.skipped else math.nan,
            "realizations": self.realizations, "skipped": int(self.skipped),
        }


def _seed(root: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(root, spawn_key=key)


def sweep_training_data(cfg: SweepConfig) -> dynamics.TrajectorySet:
    """Hopper trajectories from random initial conditions drawn uniformly in the configured box."""
    rng = np.random.default_rng(_seed(cfg.seed, 1000))
    y0 = rng.uniform(*cfg.y0_range, size=cfg.n_train_ics)
    v0 = rng.uniform(*cfg.v0_range, size=cfg.n_train_ics)
    s = cfg.system
    return dynamics.concatenate([
        dynamics.simulate_hopper((a, b), s.kappa, s.dt, s.t_end, s.substeps, s.form)
        for a, b in zip(y0, v0)
    ])


def regime_subset(data: dynamics.TrajectorySet, regime: str) -> np.ndarray:
    """Rows labelled ``regime`` whose neighbouring samples share the label (no switching points)."""
    labels = data.labels
    ids = data.trajectory_ids()
    keep = labels == regime
    same_prev = np.r_[True, (labels[1:] == labels[:-1]) | (ids[1:] != ids[:-1])]
    same_next = np.r_[(labels[1:] == labels[:-1]) | (ids[1:] != ids[:-1]), True]
    return np.flatnonzero(keep & same_prev & same_next)


def regime_cluster(data: dynamics.TrajectorySet, regime: str, K: int) -> np.ndarray | None:
    """K nearest samples (in (y, v)) to the highest flight point or the lowest compression point."""
    rows = regime_subset(data, regime)
    if K > rows.size:
        return None
    Y = data.X[rows]
    anchor = int(np.argmax(Y[:, 0])) if regime == FLIGHT else int(np.argmin(Y[:, 0]))
    return rows[nearest(Y, Y[anchor], K)]


def _run_cell(X, dX, library, truth_support, eps, realizations, lambdas, max_iters, seeds):
    successes = 0
    for r in range(realizations):
        rng = np.random.default_rng(seeds[r])
        Theta = evaluate(library, X + eps * rng.standard_normal(X.shape))
        for lam in lambdas:
            if np.array_equal(stlsq(Theta, dX, lam, max_iters).support, truth_support):
                successes += 1
                break
    return successes


def noise_sweep(cfg: SweepConfig, jobs: int = 1, data: dynamics.TrajectorySet | None = None) -> list[SweepCell]:
    """Recovery rate of the true regime model over a (K, noise) grid.

    For each cell and realization, Gaussian noise is added to the cluster's
    states (derivatives stay exact) and STLSQ is run over the threshold grid;
    a realization succeeds when any threshold yields exactly the true support.
    """
    if not cfg.K_grid or not cfg.eps_grid or cfg.realizations < 1:
        raise ValueError("grids must be non-empty and realizations >= 1")
    data = data if data is not None else sweep_training_data(cfg)
    library = build_library(2, cfg.max_order, ("y", "v"))
    truth = Hopper(cfg.system.kappa, cfg.system.form).true_coefficients(library)
    jobs_list, cells = [], []
    for ri, regime in enumerate(cfg.regimes):
        for ki, K in enumerate(cfg.K_grid):
            rows = regime_cluster(data, regime, K)
            kappa = math.nan if rows is None else condition_number(evaluate(library, data.X[rows]))
            for ei, eps in enumerate(cfg.eps_grid):
                cell = (regime, K, eps, kappa)
                if rows is None:
                    logger.warning("K=%d exceeds available %s samples; cell skipped", K, regime)
                    cells.append((cell, None))
                    continue
                seeds = [_seed(cfg.seed, ri, ki, ei, r) for r in range(cfg.realizations)]
                args = (data.X[rows], data.dX[rows], library, truth[regime] != 0, eps,
                        cfg.realizations, cfg.lambdas, cfg.max_iters, seeds)
                cells.append((cell, len(jobs_list)))
                jobs_list.append(args)
    if jobs == 1:
        results = [_run_cell(*a) for a in jobs_list]
    else:
        results = Parallel(n_jobs=jobs)(delayed(_run_cell)(*a) for a in jobs_list)
    out = []
    for (regime, K, eps, kappa), idx in cells:
        if idx is None:
            out.append(SweepCell(regime, K, eps, cfg.realizations, 0, kappa, skipped=True))
        else:
            out.append(SweepCell(regime, K, eps, cfg.realizations, results[idx], kappa))
    return out


def contour_alignment(cells: list[SweepCell]) -> tuple[float, float]:
    """Spearman correlation of success fraction with -log(kappa eps) and with -log(kappa).

    Cells with zero noise or skipped cells are left out.
    """
    used = [c for c in cells if not c.skipped and c.epsilon > 0 and math.isfinite(c.kappa)]
    success = [c.success_fraction for c in used]
    rho_ke = stats.spearmanr(success, [-math.log(c.kappa_eps) for c in used]).statistic
    rho_k = stats.spearmanr(success, [-math.log(c.kappa) for c in used]).statistic
    return float(rho_ke), float(rho_k)
