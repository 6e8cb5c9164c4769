"""Cross-cluster registry of supported model structures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .features import FeatureLibrary
from .regression import signature_string
from .selection import ScoredModel

Signature = tuple[tuple[int, int], ...]


@dataclass
class CatalogEntry:
    signature: Signature
    contributions: dict[int, tuple[np.ndarray, float]] = field(default_factory=dict)

    @property
    def frequency(self) -> int:
        return len(self.contributions)

    @property
    def anchors(self) -> list[int]:
        return sorted(self.contributions)

    @property
    def mean_aicc(self) -> float:
        # fsum makes the mean independent of registration order
        return math.fsum(a for _, a in self.contributions.values()) / len(self.contributions)

    def representative(self) -> np.ndarray:
        """Per-position median of the coefficients over contributing clusters."""
        stack = np.stack([self.contributions[a][0] for a in self.anchors])
        return np.median(stack, axis=0)

    def add(self, anchor: int, coefficients: np.ndarray, aicc: float) -> None:
        current = self.contributions.get(anchor)
        if current is None or aicc < current[1]:
            self.contributions[anchor] = (np.array(coefficients, dtype=float), float(aicc))


class ModelCatalog:
    """Supported-model structures keyed by support signature.

    Frequency counts distinct contributing clusters. Merging two catalogs is
    associative and commutative, so per-worker partial catalogs can be reduced
    in any order.
    """

    def __init__(self, library: FeatureLibrary | None = None, state_names: Sequence[str] | None = None):
        self.library = library
        self.state_names = tuple(state_names) if state_names else None
        self.entries: dict[Signature, CatalogEntry] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, signature) -> bool:
        return tuple(signature) in self.entries

    def __getitem__(self, signature) -> CatalogEntry:
        return self.entries[tuple(signature)]

    def register(self, cluster_anchor: int, supported: Iterable[ScoredModel]) -> None:
        for s in supported:
            entry = self.entries.setdefault(s.signature, CatalogEntry(s.signature))
            entry.add(cluster_anchor, s.model.coefficients, s.aicc)

    def merge(self, other: "ModelCatalog") -> "ModelCatalog":
        out = ModelCatalog(self.library or other.library, self.state_names or other.state_names)
        for cat in (self, other):
            for sig, entry in cat.entries.items():
                target = out.entries.setdefault(sig, CatalogEntry(sig))
                for anchor, (coef, aicc) in entry.contributions.items():
                    target.add(anchor, coef, aicc)
        return out

    def total_contributions(self) -> int:
        return sum(e.frequency for e in self.entries.values())

    def rank_by_frequency(self, top: int | None = None) -> list[CatalogEntry]:
        """Entries by descending frequency; ties broken by lower mean AICc."""
        ranked = sorted(self.entries.values(), key=lambda e: (-e.frequency, e.mean_aicc, e.signature))
        return ranked if top is None else ranked[:top]

    def describe(self, signature) -> str:
        n = self.library.n if self.library else None
        return signature_string(signature, self.library, self.state_names, n)

    def to_dict(self) -> dict:
        entries = []
        for rank, e in enumerate(self.rank_by_frequency(), start=1):
            coefs = np.stack([e.contributions[a][0] for a in e.anchors])
            aiccs = [e.contributions[a][1] for a in e.anchors]
            entries.append({
                "rank": rank,
                "signature": [list(p) for p in e.signature],
                "description": self.describe(e.signature),
                "frequency": e.frequency,
                "k": len(e.signature),
                "mean_aicc": e.mean_aicc,
                "min_aicc": float(np.min(aiccs)),
                "coefficients_median": e.representative().tolist(),
                "coefficients_min": coefs.min(axis=0).tolist(),
                "coefficients_max": coefs.max(axis=0).tolist(),
                "anchors": e.anchors,
            })
        return {
            "library": self.library.to_dict() if self.library else None,
            "state_names": list(self.state_names) if self.state_names else None,
            "n_entries": len(entries),
            "total_contributions": self.total_contributions(),
            "entries": entries,
        }


@dataclass(frozen=True)
class RegimeRecord:
    anchor_index: int
    signature: Signature | None
    coefficients: np.ndarray | None
    aicc: float
    mean_error: float

    @property
    def resolved(self) -> bool:
        return self.signature is not None


def regime_map(retained_by_anchor: dict[int, Sequence[ScoredModel]], anchors: Iterable[int] | None = None) -> list[RegimeRecord]:
    """Lowest-AICc retained model per anchor; anchors with nothing retained are unresolved."""
    anchors = sorted(retained_by_anchor) if anchors is None else list(anchors)
    out = []
    for a in anchors:
        retained = [s for s in retained_by_anchor.get(a, ()) if math.isfinite(s.aicc)]
        if not retained:
            out.append(RegimeRecord(a, None, None, math.inf, math.inf))
            continue
        best = min(retained, key=lambda s: (s.aicc, s.model.k))
        out.append(RegimeRecord(a, best.signature, best.model.coefficients, best.aicc, best.mean_error))
    return out
