"""Sequentially thresholded least squares (hard-thresholded sparse regression)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .features import FeatureLibrary, column_norms

DEFAULT_LAMBDAS = tuple(np.logspace(-4, 1, 30))


def lambda_grid(lo: float = 1e-4, hi: float = 10.0, count: int = 30) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), count)


def least_squares(Theta: np.ndarray, dX: np.ndarray, normalize: bool = False,
                  full_output: bool = False):
    """Minimum-norm least-squares solution of ``dX = Theta Xi`` (SVD based).

    With ``normalize`` the columns of Theta are scaled to unit 2-norm before
    the solve and the coefficients unscaled afterwards; this changes only the
    conditioning of the solve, not the full-rank solution.

    Returns ``Xi`` or, with ``full_output``, ``(Xi, rank)``.
    """
    Theta = np.asarray(Theta, dtype=float)
    dX = np.asarray(dX, dtype=float)
    vector = dX.ndim == 1
    if vector:
        dX = dX[:, None]
    if Theta.shape[0] < 1:
        raise ValueError("need at least one sample")
    if Theta.shape[1] == 0:
        Xi, rank = np.zeros((0, dX.shape[1])), 0
    elif normalize:
        norms = column_norms(Theta)
        Xi, _, rank, _ = np.linalg.lstsq(Theta / norms, dX, rcond=None)
        Xi = Xi / norms[:, None]
    else:
        Xi, _, rank, _ = np.linalg.lstsq(Theta, dX, rcond=None)
    if vector:
        Xi = Xi[:, 0]
    return (Xi, int(rank)) if full_output else Xi


@dataclass(frozen=True)
class SparseModel:
    """Sparse coefficient matrix ``Xi`` (p x n) identified at threshold ``lam``."""

    coefficients: np.ndarray
    lam: float
    converged: bool = True
    iterations: int = 0
    library: FeatureLibrary | None = field(default=None, compare=False, repr=False)

    @property
    def support(self) -> np.ndarray:
        return self.coefficients != 0

    @property
    def k(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    @property
    def signature(self) -> tuple[tuple[int, int], ...]:
        """Nonzero (term, equation) positions, sorted."""
        return tuple((int(l), int(j)) for l, j in zip(*np.nonzero(self.coefficients)))

    def describe(self, state_names: Sequence[str] | None = None) -> str:
        return signature_string(self.signature, self.library, state_names,
                                n=self.coefficients.shape[1])

    def to_dict(self) -> dict:
        out = {
            "lambda": float(self.lam),
            "k": self.k,
            "converged": self.converged,
            "coefficients": self.coefficients.tolist(),
            "support": self.support.astype(int).tolist(),
        }
        if self.library is not None:
            out["terms"] = [list(e) for e in self.library.terms]
        return out


def signature_string(signature: Iterable[tuple[int, int]], library: FeatureLibrary | None,
                     state_names: Sequence[str] | None = None, n: int | None = None) -> str:
    """Readable form of a support signature, e.g. ``y'=v; v'=1+y``."""
    signature = list(signature)
    if n is None:
        n = library.n if library is not None else max((j for _, j in signature), default=0) + 1
    if state_names is None:
        state_names = library.variable_names if library is not None else [f"x{j + 1}" for j in range(n)]
    names = library.term_names if library is not None else None
    parts = []
    for j in range(n):
        terms = [names[l] if names else f"t{l}" for l, jj in signature if jj == j]
        parts.append(f"{state_names[j]}'=" + ("+".join(terms) if terms else "0"))
    return "; ".join(parts)


def _refit(Theta, dX, support, normalize):
    Xi = np.zeros(support.shape)
    for j in range(dX.shape[1]):
        active = np.flatnonzero(support[:, j])
        if active.size:
            Xi[active, j] = least_squares(Theta[:, active], dX[:, j], normalize=normalize)
    return Xi


def stlsq(Theta: np.ndarray, dX: np.ndarray, lam: float, max_iters: int = 20,
          normalize: bool = False, library: FeatureLibrary | None = None) -> SparseModel:
    """Alternate column-wise least-squares refits with hard thresholding at ``lam``.

    Coefficients with magnitude below ``lam`` are zeroed; iteration stops once
    the support stops changing. The active set never grows.
    """
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    dX = np.asarray(dX, dtype=float)
    if dX.ndim == 1:
        dX = dX[:, None]
    Xi = least_squares(Theta, dX, normalize=normalize)
    support = np.ones(Xi.shape, dtype=bool)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new_support = support & (np.abs(Xi) >= lam)
        if np.array_equal(new_support, support):
            converged = True
            break
        support = new_support
        Xi = _refit(Theta, dX, support, normalize)
    return SparseModel(Xi, float(lam), converged, it, library)


def lambda_sweep(Theta: np.ndarray, dX: np.ndarray, lambdas: Sequence[float] = DEFAULT_LAMBDAS,
                 max_iters: int = 20, normalize: bool = False,
                 library: FeatureLibrary | None = None) -> list[SparseModel]:
    """Run ``stlsq`` for every threshold and keep one model per support.

    The first threshold to produce a support wins; output is sorted by
    ascending number of nonzeros (stable in threshold order).
    """
    if len(lambdas) == 0:
        raise ValueError("need at least one threshold")
    seen: dict[tuple, SparseModel] = {}
    for lam in lambdas:
        model = stlsq(Theta, dX, lam, max_iters, normalize, library)
        seen.setdefault(model.signature, model)
    return sorted(seen.values(), key=lambda m: m.k)
