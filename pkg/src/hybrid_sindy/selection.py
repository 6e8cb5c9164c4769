"""Out-of-sample validation of candidate models and AICc ranking."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .features import FeatureLibrary
from .regression import SparseModel

logger = logging.getLogger(__name__)

BLOWUP = 1e6
RSS_FLOOR = 1e-300
SUPPORT_THRESHOLD = 3.0


class PolynomialField:
    """Vector field ``x' = Theta(x) Xi`` restricted to the active library terms."""

    def __init__(self, coefficients: np.ndarray, library: FeatureLibrary):
        active = np.flatnonzero(np.any(coefficients != 0, axis=1))
        self.exponents = np.array([library.terms[l] for l in active], dtype=int).reshape(len(active), library.n)
        self.coefficients = coefficients[active]
        self.max_power = int(self.exponents.max()) if active.size else 0
        self.n = coefficients.shape[1]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if not len(self.exponents):
            return np.zeros_like(X)
        powers = [np.ones_like(X)]
        for _ in range(self.max_power):
            powers.append(powers[-1] * X)
        theta = np.ones((X.shape[0], len(self.exponents)))
        for l, e in enumerate(self.exponents):
            for j, d in enumerate(e):
                if d:
                    theta[:, l] *= powers[d][:, j]
        return theta @ self.coefficients


def simulate_model(model: SparseModel, ic: np.ndarray, dt: float, q: int, substeps: int = 1,
                   library: FeatureLibrary | None = None, blowup: float = BLOWUP) -> np.ndarray:
    """Integrate the identified model for ``q`` samples (row 0 is the initial condition).

    ``ic`` may be a single state (returns q x n) or a batch of K states
    (returns K x q x n). Uses RK4 with ``substeps`` steps per sample. Once a
    trajectory leaves the ball of radius ``blowup`` its remaining rows are +inf.
    """
    library = library or model.library
    if library is None:
        raise ValueError("model has no library attached")
    if q < 1:
        raise ValueError("q must be >= 1")
    ic = np.asarray(ic, dtype=float)
    single = ic.ndim == 1
    x = np.atleast_2d(ic).copy()
    f = PolynomialField(model.coefficients, library)
    h = dt / substeps
    Z = np.empty((x.shape[0], q, x.shape[1]))
    Z[:, 0] = x
    alive = np.ones(x.shape[0], dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for a in range(1, q):
            for _ in range(substeps):
                k1 = f(x)
                k2 = f(x + h / 2 * k1)
                k3 = f(x + h / 2 * k2)
                k4 = f(x + h * k3)
                x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                bad = ~np.all(np.isfinite(x), axis=1) | (np.linalg.norm(np.nan_to_num(x, nan=np.inf), axis=1) > blowup)
                if bad.any():
                    alive &= ~bad
                    x[bad] = 0.0
            Z[:, a] = x
            Z[~alive, a] = np.inf
    return Z[0] if single else Z


def absolute_error_profile(Z: np.ndarray, Z_V: np.ndarray) -> np.ndarray:
    return np.mean(np.abs(np.asarray(Z) - np.asarray(Z_V)), axis=1)


def detect_switch(Z: np.ndarray, Z_V: np.ndarray, min_improvement: float = 0.1) -> int:
    """Single change point in the mean of the absolute-error profile.

    Returns the number of leading rows before the change. The split minimises
    the summed squared deviation of the two segments (earliest split on ties);
    if it removes less than ``min_improvement`` of the unsplit deviation,
    returns ``len(Z)``.
    """
    e = absolute_error_profile(Z, Z_V)
    q = len(e)
    if q < 2 or not np.all(np.isfinite(e)):
        return q
    c = e - e.mean()
    total = float(np.sum(c ** 2))
    if total <= 1e-24 * max(float(np.sum(e ** 2)), np.finfo(float).tiny):
        return q
    t = np.arange(1, q)
    s1 = np.cumsum(c)[:-1]
    s2 = np.cumsum(c ** 2)[:-1]
    left = s2 - s1 ** 2 / t
    # the centred sequence sums to zero, so the right segment's sum is -s1
    right = (total - s2) - s1 ** 2 / (q - t)
    split = left + right
    # exact ties (e.g. symmetric profiles) go to the earliest split; the
    # tolerance absorbs round-off between algebraically equal costs
    best = int(np.flatnonzero(split <= split.min() + 1e-12 * total)[0])
    if total - split[best] < min_improvement * total:
        return q
    return int(t[best])


def average_error(Z: np.ndarray, Z_V: np.ndarray, t_s: int) -> float:
    """Mean squared error over the first ``t_s`` rows and all state variables."""
    if not 1 <= t_s <= len(Z):
        raise ValueError(f"t_s={t_s} outside [1, {len(Z)}]")
    d = np.asarray(Z)[:t_s] - np.asarray(Z_V)[:t_s]
    return float(np.mean(d ** 2))


def score_aicc(E_avg: Sequence[float], k: int, K: int | None = None) -> float:
    """Finite-sample corrected AIC with RSS = sum of per-initial-condition errors.

    ``K ln(RSS / K) + 2k + 2(k+1)(k+2)/(K-k-2)``; +inf when the correction
    denominator is not positive or any error is non-finite.
    """
    E_avg = np.asarray(E_avg, dtype=float)
    K = len(E_avg) if K is None else K
    if K < 1 or k < 0:
        raise ValueError("need K >= 1 and k >= 0")
    if K - k - 2 <= 0 or not np.all(np.isfinite(E_avg)):
        return math.inf
    rss = float(E_avg.sum())
    if rss <= 0:
        logger.debug("zero validation error; RSS floored at %g", RSS_FLOOR)
        rss = RSS_FLOOR
    return K * math.log(rss / K) + 2 * k + 2 * (k + 1) * (k + 2) / (K - k - 2)


@dataclass(frozen=True)
class ScoredModel:
    model: SparseModel
    errors: np.ndarray
    switch_times: np.ndarray
    aicc: float
    rel_aicc: float = math.nan
    cluster_anchor: int = -1

    @property
    def K(self) -> int:
        return len(self.errors)

    @property
    def rss(self) -> float:
        return float(np.sum(self.errors))

    @property
    def mean_error(self) -> float:
        return self.rss / self.K

    @property
    def signature(self):
        return self.model.signature


def score_model(model: SparseModel, ics: np.ndarray, segments: Sequence[np.ndarray], dt: float,
                q: int, substeps: int = 1, cluster_anchor: int = -1,
                min_improvement: float = 0.1) -> ScoredModel:
    """Simulate ``model`` from every validation initial condition and score it."""
    Z = simulate_model(model, ics, dt, q, substeps)
    errors = np.empty(len(segments))
    switches = np.empty(len(segments), dtype=int)
    for s, Z_V in enumerate(segments):
        Zs = Z[s, :len(Z_V)]
        if not np.all(np.isfinite(Zs)):
            errors[s], switches[s] = math.inf, 0
            continue
        t_s = detect_switch(Zs, Z_V, min_improvement) if len(Z_V) >= 2 else 1
        switches[s] = t_s
        errors[s] = average_error(Zs, Z_V, t_s)
    return ScoredModel(model, errors, switches, score_aicc(errors, model.k, len(segments)),
                       cluster_anchor=cluster_anchor)


def rank_models(scored: Sequence[ScoredModel]) -> list[ScoredModel]:
    """Attach relative AICc (score minus the cluster minimum) and sort ascending."""
    if not scored:
        return []
    best = min(s.aicc for s in scored)
    out = []
    for s in scored:
        rel = s.aicc - best if math.isfinite(best) else math.inf
        out.append(replace(s, rel_aicc=rel))
    return sorted(out, key=lambda s: (s.rel_aicc, s.model.k))


def rank_and_filter(scored: Sequence[ScoredModel], threshold: float = SUPPORT_THRESHOLD) -> list[ScoredModel]:
    """Models whose relative AICc is below ``threshold``, best first."""
    if not scored:
        raise ValueError("nothing to rank")
    return [s for s in rank_models(scored) if s.rel_aicc < threshold]
