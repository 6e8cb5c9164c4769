"""Polynomial candidate-function libraries and conditioning diagnostics."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

VARIABLE_NAMES = ("x", "y", "z", "w")


def _graded_lex_exponents(n: int, max_order: int) -> list[tuple[int, ...]]:
    terms = []
    for order in range(max_order + 1):
        # combinations_with_replacement over variable indices enumerates each
        # monomial of this degree once, in lexicographic order of the variables
        for combo in itertools.combinations_with_replacement(range(n), order):
            e = [0] * n
            for j in combo:
                e[j] += 1
            terms.append(tuple(e))
    return terms


def _term_name(e: tuple[int, ...], names: tuple[str, ...]) -> str:
    if not any(e):
        return "1"
    parts = []
    for name, power in zip(names, e):
        if power == 1:
            parts.append(name)
        elif power > 1:
            parts.append(f"{name}^{power}")
    return "*".join(parts)


@dataclass(frozen=True)
class FeatureLibrary:
    """Ordered set of monomials defining the regression matrix Theta(X).

    Terms are exponent vectors in graded-lexicographic order with the constant
    term first, so coefficient row ``l`` always refers to ``terms[l]``.
    """

    terms: tuple[tuple[int, ...], ...]
    max_order: int
    n: int
    variable_names: tuple[str, ...]

    @property
    def p(self) -> int:
        return len(self.terms)

    @property
    def term_names(self) -> list[str]:
        return [_term_name(e, self.variable_names) for e in self.terms]

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        return evaluate(self, X)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "max_order": self.max_order,
            "variables": list(self.variable_names),
            "terms": [list(e) for e in self.terms],
            "term_names": self.term_names,
        }


def build_library(n: int, max_order: int, variable_names=None) -> FeatureLibrary:
    """All monomials in ``n`` variables of total degree at most ``max_order``."""
    if n < 1:
        raise ValueError(f"state dimension must be >= 1, got {n}")
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    if variable_names is None:
        if n <= len(VARIABLE_NAMES):
            variable_names = VARIABLE_NAMES[:n]
        else:
            variable_names = tuple(f"x{j + 1}" for j in range(n))
    variable_names = tuple(variable_names)
    if len(variable_names) != n:
        raise ValueError("need one variable name per state dimension")
    terms = tuple(_graded_lex_exponents(n, max_order))
    assert len(terms) == math.comb(n + max_order, max_order)
    return FeatureLibrary(terms, max_order, n, variable_names)


def evaluate(library: FeatureLibrary, X: np.ndarray, columns=None) -> np.ndarray:
    """Evaluate the library on the rows of ``X``.

    Args:
        library: The feature library.
        X: (m, n) array of states.
        columns: Optional subset of term indices to evaluate.

    Returns:
        (m, p) array with entry (i, l) = prod_j X[i, j] ** terms[l][j].
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != library.n:
        raise ValueError(f"X has {X.shape[1]} columns, library expects {library.n}")
    if not np.all(np.isfinite(X)):
        warnings.warn("non-finite entries in X propagate into the library", RuntimeWarning)
    terms = library.terms if columns is None else [library.terms[l] for l in columns]
    # powers[j][d] = X[:, j] ** d by repeated multiplication
    max_order = max((max(e) for e in terms), default=0)
    powers = []
    for j in range(library.n):
        col = [np.ones(X.shape[0])]
        for _ in range(max_order):
            col.append(col[-1] * X[:, j])
        powers.append(col)
    out = np.empty((X.shape[0], len(terms)))
    for l, e in enumerate(terms):
        v = np.ones(X.shape[0])
        for j, d in enumerate(e):
            if d:
                v = v * powers[j][d]
        out[:, l] = v
    return out


def column_norms(Theta: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(Theta, axis=0)
    norms[norms == 0] = 1.0
    return norms


def condition_number(Theta: np.ndarray, rtol: float | None = None) -> float:
    """2-norm condition number ``||Theta|| ||pinv(Theta)||`` via the SVD.

    Returns ``inf`` when the smallest singular value is below
    ``rtol * sigma_max`` (default ``max(m, p) * eps``).
    """
    Theta = np.asarray(Theta, dtype=float)
    s = np.linalg.svd(Theta, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("condition number of a zero matrix is undefined")
    if rtol is None:
        rtol = max(Theta.shape) * np.finfo(float).eps
    if s[-1] <= rtol * s[0]:
        return math.inf
    return float(s[0] / s[-1])
