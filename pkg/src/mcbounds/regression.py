"""Least-squares substrate: datasets, predictor subsets, standardization and OLS fits.

Predictor indices are 0-based column positions throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConstantColumnError, RankDeficientError

# Relative pivot tolerance on |diag(R)| for declaring a submatrix singular.
RANK_TOL = 1e-10
_STANDARDIZED_TOL = 1e-8


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``X`` (n x p), response ``y`` and predictor names."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...] = ()
    standardized: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if X.ndim != 2:
            raise ValueError(f"X must be two-dimensional, got shape {X.shape}")
        n, p = X.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape[0] != n:
            raise ValueError(f"y has length {y.shape[0]} but X has {n} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must contain only finite values")
        names = tuple(str(s) for s in self.names) if self.names else tuple(f"x{j + 1}" for j in range(p))
        if len(names) != p:
            raise ValueError(f"{len(names)} names given for {p} predictors")
        if len(set(names)) != p:
            raise ValueError("predictor names must be unique")
        if self.standardized:
            scale = max(1.0, float(np.max(np.abs(y))))
            if (np.max(np.abs(X.mean(axis=0))) > _STANDARDIZED_TOL
                    or np.max(np.abs(X.std(axis=0, ddof=1) - 1.0)) > _STANDARDIZED_TOL
                    or abs(y.mean()) > _STANDARDIZED_TOL * scale):
                raise ValueError("dataset flagged standardized but columns are not centered/scaled")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def with_response(self, y: np.ndarray) -> Dataset:
        return Dataset(self.X, y, self.names, self.standardized)


@dataclass(frozen=True)
class ModelIndexSet:
    """An immutable set of predictor indices drawn from ``range(p)``."""

    indices: tuple[int, ...]
    p: int

    def __post_init__(self):
        raw = tuple(int(i) for i in self.indices)
        idx = tuple(sorted(set(raw)))
        if len(idx) != len(raw):
            raise ValueError(f"duplicate indices in {self.indices}")
        if idx and (idx[0] < 0 or idx[-1] >= self.p):
            raise ValueError(f"indices {idx} outside range(0, {self.p})")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def empty(cls, p: int) -> ModelIndexSet:
        return cls((), p)

    @classmethod
    def full(cls, p: int) -> ModelIndexSet:
        return cls(tuple(range(p)), p)

    @classmethod
    def from_mask(cls, mask: Sequence[bool] | np.ndarray) -> ModelIndexSet:
        mask = np.asarray(mask, dtype=bool)
        return cls(tuple(np.flatnonzero(mask).tolist()), mask.shape[0])

    @classmethod
    def from_bits(cls, bits: int, p: int) -> ModelIndexSet:
        return cls(tuple(j for j in range(p) if (bits >> j) & 1), p)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.p, dtype=bool)
        m[list(self.indices)] = True
        return m

    @property
    def bits(self) -> int:
        return sum(1 << j for j in self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, j) -> bool:
        return j in self.indices

    def issubset(self, other: ModelIndexSet) -> bool:
        if other.p != self.p:
            raise ValueError(f"cannot compare models over p={self.p} and p={other.p}")
        return set(self.indices) <= set(other.indices)

    def __le__(self, other):
        return self.issubset(other)

    def __lt__(self, other):
        return self.issubset(other) and len(self) < len(other)

    def __ge__(self, other):
        return other.issubset(self)

    def __gt__(self, other):
        return other.issubset(self) and len(self) > len(other)

    def union(self, other: ModelIndexSet | Iterable[int]) -> ModelIndexSet:
        extra = other.indices if isinstance(other, ModelIndexSet) else tuple(other)
        return ModelIndexSet(tuple(set(self.indices) | set(extra)), self.p)

    def difference(self, other: ModelIndexSet | Iterable[int]) -> ModelIndexSet:
        drop = other.indices if isinstance(other, ModelIndexSet) else tuple(other)
        return ModelIndexSet(tuple(set(self.indices) - set(drop)), self.p)

    def labels(self, names: Sequence[str]) -> list[str]:
        return [names[j] for j in self.indices]

    def __repr__(self) -> str:
        return f"ModelIndexSet({list(self.indices)}, p={self.p})"


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    support: ModelIndexSet
    residuals: np.ndarray
    rss: float
    sigma_hat: float
    warnings: tuple[str, ...] = ()
    # Penalty level used by penalized selectors; None for least-squares fits.
    penalty_weight: float | None = None


@dataclass(frozen=True)
class Standardization:
    """Centering/scaling record; maps standardized coefficients back to data units."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    def coefficients_to_original(self, coef: np.ndarray) -> tuple[np.ndarray, float]:
        """Return ``(slopes, intercept)`` in the units of the raw data."""
        slopes = np.asarray(coef, dtype=np.float64) / self.x_scale
        return slopes, float(self.y_mean - self.x_mean @ slopes)


def standardize(data: Dataset) -> tuple[Dataset, Standardization]:
    """Center every column and ``y``; scale columns to unit sample standard deviation."""
    X = data.X
    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    x_scale = Xc.std(axis=0, ddof=1)
    for j, s in enumerate(x_scale):
        if not s > 1e-12 * max(1.0, abs(x_mean[j])):
            raise ConstantColumnError(j, data.names[j])
    y_mean = float(data.y.mean())
    out = Dataset(Xc / x_scale, data.y - y_mean, data.names, standardized=True)
    return out, Standardization(x_mean, x_scale, y_mean)


def fit_ols(data: Dataset, support: ModelIndexSet) -> FitResult:
    """Least-squares fit of ``y`` on the columns in ``support`` (no intercept).

    Uses a reduced QR factorisation of the column submatrix.  Raises
    :class:`RankDeficientError` when a diagonal entry of ``R`` falls below
    ``RANK_TOL`` times the largest one, or when ``|support| > n``.
    """
    n, p = data.X.shape
    if support.p != p:
        raise ValueError(f"support is over p={support.p}, data has p={p}")
    y = data.y
    coef = np.zeros(p)
    k = len(support)
    if k == 0:
        resid = y.copy()
        rss = float(resid @ resid)
        return FitResult(coef, support, resid, rss, float(np.sqrt(rss / n)))
    if k > n:
        raise RankDeficientError(f"{k} predictors but only {n} observations")
    cols = list(support.indices)
    Xs = data.X[:, cols]
    Q, R = np.linalg.qr(Xs, mode="reduced")
    d = np.abs(np.diag(R))
    if d.min() < RANK_TOL * d.max() or d.max() == 0.0:
        raise RankDeficientError(f"design restricted to {cols} is numerically singular")
    beta = solve_triangular(R, Q.T @ y)
    coef[cols] = beta
    resid = y - Xs @ beta
    rss = float(resid @ resid)
    warns: tuple[str, ...] = ()
    if n > k:
        sigma = float(np.sqrt(rss / (n - k)))
    else:
        sigma = 0.0
        warns = ("degenerate fit: as many predictors as observations",)
    return FitResult(coef, support, resid, rss, sigma, warns)
