"""End-to-end hybrid identification: cluster, regress, validate, catalog."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import dynamics
from .catalog import ModelCatalog, RegimeRecord, regime_map
from .clustering import ClusterPair, build_cluster, select_coordinates, validation_segment
from .config import ConfigError, PipelineConfig, SystemConfig
from .features import FeatureLibrary, build_library, evaluate
from .regression import lambda_sweep
from .selection import ScoredModel, rank_models, score_model

logger = logging.getLogger(__name__)

# spawn keys for the independent random streams derived from the root seed
TRAIN_PERTURB, VAL_PERTURB, TRAIN_NOISE, VAL_NOISE = range(4)


def derive_seed(root: int, *key: int) -> int:
    return int(np.random.SeedSequence(root, spawn_key=key).generate_state(1)[0])


def simulate_system(system: SystemConfig, ics, seed: int = 0, stream: int = TRAIN_PERTURB):
    """Simulate one trajectory per initial condition and concatenate them."""
    sets = []
    for i, ic in enumerate(ics):
        if system.name == "hopper":
            sets.append(dynamics.simulate_hopper(ic, system.kappa, system.dt, system.t_end,
                                                 system.substeps, system.form))
        else:
            sets.append(dynamics.simulate_sir(ic, system.sir_params(), system.years,
                                              seed=derive_seed(seed, stream, i),
                                              perturb=system.perturb, substeps=system.substeps))
    return dynamics.concatenate(sets)


def split(cfg: PipelineConfig, select: bool = True):
    """Training and validation sets, with measurement noise applied per the config.

    With ``select=False`` all state columns are kept (used when exporting raw
    trajectories); otherwise only ``cfg.state_columns``.
    """
    if not cfg.train_ics or not cfg.validation_ics:
        raise ValueError("need at least one training and one validation initial condition")
    overlap = {tuple(ic) for ic in cfg.train_ics} & {tuple(ic) for ic in cfg.validation_ics}
    if overlap:
        logger.warning("initial conditions shared by training and validation: %s", sorted(overlap))
    train = simulate_system(cfg.system, cfg.train_ics, cfg.seed, TRAIN_PERTURB)
    val = simulate_system(cfg.system, cfg.validation_ics, cfg.seed, VAL_PERTURB)
    if select and cfg.state_columns is not None:
        train, val = train.select_states(cfg.state_columns), val.select_states(cfg.state_columns)
    train = dynamics.add_noise(train, cfg.noise, derive_seed(cfg.seed, TRAIN_NOISE))
    if cfg.noise_on_validation:
        val = dynamics.add_noise(val, cfg.noise, derive_seed(cfg.seed, VAL_NOISE))
    return train, val


@dataclass
class AnchorResult:
    anchor: int
    cluster: ClusterPair
    scored: list[ScoredModel]
    retained: list[ScoredModel]


@dataclass
class PipelineResult:
    config: PipelineConfig
    train: dynamics.TrajectorySet
    validation: dynamics.TrajectorySet
    library: FeatureLibrary
    catalog: ModelCatalog
    anchors: list[AnchorResult]
    regimes: list[RegimeRecord] = field(default_factory=list)

    def describe(self, signature) -> str:
        return self.catalog.describe(signature)

    def scoreboard_rows(self) -> list[dict]:
        rows = []
        for a in self.anchors:
            for s in a.scored:
                rows.append({
                    "anchor_index": a.anchor,
                    "model_signature": self.describe(s.signature),
                    "k": s.model.k,
                    "lambda": s.model.lam,
                    "aicc": s.aicc,
                    "rel_aicc": s.rel_aicc,
                    "mean_error": s.mean_error,
                    "retained": int(any(s is r for r in a.retained)),
                })
        return rows

    def regime_rows(self) -> list[dict]:
        ids = self.train.trajectory_ids()
        names = self.train.state_names or tuple(f"x{j + 1}" for j in range(self.train.n))
        terms = self.library.term_names
        rows = []
        for rec in self.regimes:
            i = rec.anchor_index
            row = {"anchor_index": i, "traj_id": int(ids[i]), "t": float(self.train.times[i])}
            for j, name in enumerate(names):
                row[name] = float(self.train.X[i, j])
            for j, name in enumerate(names):
                row[f"d{name}"] = float(self.train.dX[i, j])
            row["status"] = "resolved" if rec.resolved else "unresolved"
            row["signature"] = self.describe(rec.signature) if rec.resolved else ""
            row["k"] = len(rec.signature) if rec.resolved else ""
            row["aicc"] = rec.aicc
            row["mean_error"] = rec.mean_error
            for j, name in enumerate(names):
                for l, term in enumerate(terms):
                    row[f"xi[{term}][{name}']"] = float(rec.coefficients[l, j]) if rec.resolved else math.nan
            row["true_label"] = str(self.train.labels[i])
            rows.append(row)
        return rows


def analyze_anchor(anchor: int, cfg: PipelineConfig, library: FeatureLibrary, train, val,
                   Y_T: np.ndarray, Y_V: np.ndarray) -> AnchorResult:
    cluster = build_cluster(Y_T, Y_V, anchor, cfg.K)
    Theta = evaluate(library, train.X[cluster.train_indices])
    models = lambda_sweep(Theta, train.dX[cluster.train_indices], cfg.lambdas, cfg.max_iters,
                          cfg.normalize, library)
    ics = val.X[cluster.validation_indices]
    segments = [validation_segment(val, int(r), cfg.q) for r in cluster.validation_indices]
    scored = [score_model(m, ics, segments, val.dt, cfg.q, cfg.system.substeps, anchor,
                          cfg.min_improvement) for m in models]
    ranked = rank_models(scored)
    retained = [s for s in ranked if s.rel_aicc < cfg.threshold]
    return AnchorResult(anchor, cluster, ranked, retained)


def _analyze_chunk(anchors, *args):
    return [analyze_anchor(a, *args) for a in anchors]


def run(cfg: PipelineConfig, jobs: int = 1, data=None) -> PipelineResult:
    """Run the full identification procedure with one cluster per training sample."""
    train, val = data if data is not None else split(cfg)
    if cfg.K > train.m or cfg.K > val.m:
        raise ConfigError("identify.K", f"K={cfg.K} exceeds training ({train.m}) or validation ({val.m}) samples")
    library = build_library(train.n, cfg.max_order, train.state_names or None)
    Y_T = select_coordinates(train, cfg.coordinates, cfg.zscore)
    Y_V = select_coordinates(val, cfg.coordinates, cfg.zscore)
    args = (cfg, library, train, val, Y_T, Y_V)
    anchors = list(range(train.m))
    if jobs == 1:
        results = [analyze_anchor(a, *args) for a in anchors]
    else:
        chunks = np.array_split(anchors, max(1, 4 * (jobs if jobs > 0 else 8)))
        parts = Parallel(n_jobs=jobs)(delayed(_analyze_chunk)(list(c), *args) for c in chunks if len(c))
        results = [r for part in parts for r in part]
    catalog = ModelCatalog(library, train.state_names)
    for r in results:
        catalog.register(r.anchor, r.retained)
    regimes = regime_map({r.anchor: r.retained for r in results}, anchors)
    return PipelineResult(cfg, train, val, library, catalog, results, regimes)
