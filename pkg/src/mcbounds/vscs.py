"""Variable selection confidence set: every submodel not rejected by an F-test against the full model."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .exceptions import TooManyPredictorsError
from .regression import Dataset, ModelIndexSet, fit_ols

VSCS_LIMIT = 20
# RSS below this fraction of ||y||^2 is treated as an exact fit.
_ZERO_RSS = 1e-20


def f_sf(f: np.ndarray | float, d1: float, d2: float) -> np.ndarray:
    """Upper tail ``P(F(d1, d2) > f)`` through the regularized incomplete beta function."""
    f = np.asarray(f, dtype=np.float64)
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def candidate_models(p: int) -> list[ModelIndexSet]:
    """All ``2^p`` submodels ordered by size, then lexicographically."""
    out = []
    for k in range(p + 1):
        out.extend(ModelIndexSet(c, p) for c in itertools.combinations(range(p), k))
    return out


@dataclass(frozen=True)
class FTestTable:
    models: list[ModelIndexSet]
    rss: np.ndarray
    pvalues: np.ndarray


def f_test_table(data: Dataset) -> FTestTable:
    """F-test p-value of every submodel against the full model.

    ``F = ((RSS_m - RSS_full) / (p - |m|)) / (RSS_full / (n - p))``.  The full
    model gets p-value 1 by convention.  When the full model fits exactly,
    submodels with zero RSS get p-value 1 and the rest 0.
    """
    n, p = data.n, data.p
    if p > VSCS_LIMIT:
        raise TooManyPredictorsError(f"VSCS enumerates 2^{p} models; limit is p <= {VSCS_LIMIT}")
    if n <= p:
        raise ValueError(f"VSCS needs n > p, got n={n}, p={p}")
    models = candidate_models(p)
    rss = np.array([fit_ols(data, m).rss for m in models])
    rss_full = rss[-1]
    size = np.array([len(m) for m in models])
    tol = _ZERO_RSS * float(data.y @ data.y)
    pv = np.ones(len(models))
    sub = size < p
    if rss_full <= tol:
        pv[sub] = np.where(rss[sub] <= tol, 1.0, 0.0)
    else:
        d1 = (p - size[sub]).astype(np.float64)
        d2 = float(n - p)
        F = np.maximum(rss[sub] - rss_full, 0.0) / d1 / (rss_full / d2)
        pv[sub] = f_sf(F, d1, d2)
    return FTestTable(models, rss, pv)


def minimal_models(surviving: list[ModelIndexSet]) -> list[ModelIndexSet]:
    """Members of ``surviving`` that have no surviving proper subset."""
    if not surviving:
        raise ValueError("surviving set is empty")
    out: list[ModelIndexSet] = []
    for m in sorted(surviving, key=lambda m: (len(m), m.indices)):
        if not any(k.issubset(m) for k in out):
            out.append(m)
    return out


@dataclass(frozen=True)
class VscsResult:
    surviving: list[ModelIndexSet]
    alpha: float
    lbms: list[ModelIndexSet]

    @property
    def cardinality(self) -> int:
        return len(self.surviving)

    def contains(self, model: ModelIndexSet) -> bool:
        return model in set(self.surviving)


def vscs_from_table(table: FTestTable, alpha: float) -> VscsResult:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    surviving = [m for m, pv in zip(table.models, table.pvalues) if pv >= alpha]
    return VscsResult(surviving, alpha, minimal_models(surviving))


def vscs(data: Dataset, alpha: float) -> VscsResult:
    """Models whose F-test against the full model has p-value at least ``alpha``."""
    return vscs_from_table(f_test_table(data), alpha)
