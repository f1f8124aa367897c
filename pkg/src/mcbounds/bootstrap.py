"""Residual and hard-thresholded residual bootstrap ensembles of selected models."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .exceptions import McbError, ReplicateFailedError
from .regression import Dataset, FitResult, ModelIndexSet, fit_ols
from .selectors import SelectorKind, SelectorSpec, select, with_seed

MAX_RETRIES = 3


class BootstrapMethod(str, Enum):
    RESIDUAL = "residual"
    MODIFIED_RESIDUAL = "modified_residual"


def default_method(selector: SelectorSpec) -> BootstrapMethod:
    """Plain Lasso needs the thresholded variant; everything else uses the residual bootstrap."""
    if selector.kind is SelectorKind.LASSO:
        return BootstrapMethod.MODIFIED_RESIDUAL
    return BootstrapMethod.RESIDUAL


def threshold_level(n: int) -> float:
    """Hard-threshold ``a_n = n^(-1/3)``: vanishes, while ``sqrt(n) * a_n`` diverges."""
    return float(n) ** (-1.0 / 3.0)


def replicate_rng(seed: int, b: int, attempt: int = 0) -> np.random.Generator:
    """Independent stream for replicate ``b`` (and retry ``attempt``) of a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(b), int(attempt)]))


def residual_pool(residuals: np.ndarray) -> np.ndarray:
    r = np.asarray(residuals, dtype=np.float64)
    return r - r.mean()


def _resample_around(data: Dataset, center: np.ndarray, residuals: np.ndarray,
                     rng: np.random.Generator) -> Dataset:
    pool = residual_pool(residuals)
    idx = rng.integers(0, data.n, size=data.n)
    y_star = center + pool[idx]
    # The model is fit without intercept on centered data; re-centering plays
    # the role of re-estimating the intercept in each replicate.
    return data.with_response(y_star - y_star.mean())


def residual_resample(data: Dataset, fit: FitResult, rng: np.random.Generator) -> Dataset:
    """``y* = X b + e*`` with ``e*`` drawn with replacement from the centered residuals."""
    return _resample_around(data, data.X @ fit.coefficients, fit.residuals, rng)


def modified_residual_resample(data: Dataset, lasso_fit: FitResult, rng: np.random.Generator,
                               a_n: float | None = None) -> Dataset:
    """Residual bootstrap around the Lasso estimate hard-thresholded at ``a_n``."""
    if a_n is None:
        a_n = threshold_level(data.n)
    coef = np.where(np.abs(lasso_fit.coefficients) < a_n, 0.0, lasso_fit.coefficients)
    center = data.X @ coef
    return _resample_around(data, center, data.y - center, rng)


@dataclass(frozen=True)
class BootstrapEnsemble:
    """``B`` bootstrap-selected models stored as a boolean ``(B, p)`` matrix."""

    masks: np.ndarray
    method: BootstrapMethod | None = None
    selector: SelectorSpec | None = None
    seed: int | None = None
    original: ModelIndexSet | None = None
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        masks = np.asarray(self.masks, dtype=bool)
        if masks.ndim != 2 or masks.shape[0] < 1 or masks.shape[1] < 1:
            raise ValueError(f"ensemble needs a (B >= 1, p >= 1) mask matrix, got {masks.shape}")
        masks.setflags(write=False)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "counts", masks.sum(axis=0))
        if self.method is not None:
            object.__setattr__(self, "method", BootstrapMethod(self.method))

    @classmethod
    def from_models(cls, models: Sequence[ModelIndexSet | Sequence[int]], p: int | None = None,
                    **kwargs) -> BootstrapEnsemble:
        if p is None:
            ps = {m.p for m in models if isinstance(m, ModelIndexSet)}
            if len(ps) != 1:
                raise ValueError("p must be given or shared by all models")
            p = ps.pop()
        masks = np.zeros((len(models), p), dtype=bool)
        for b, m in enumerate(models):
            if isinstance(m, ModelIndexSet) and m.p != p:
                raise ValueError(f"model {b} has p={m.p}, expected {p}")
            masks[b, list(m)] = True
        return cls(masks, **kwargs)

    @property
    def B(self) -> int:
        return self.masks.shape[0]

    @property
    def p(self) -> int:
        return self.masks.shape[1]

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.B

    @property
    def models(self) -> list[ModelIndexSet]:
        return [ModelIndexSet.from_mask(row) for row in self.masks]

    def bits(self) -> np.ndarray:
        """Models as integer bitmasks (bit j set when predictor j is selected)."""
        if self.p > 62:
            raise ValueError("bitmask form supports p <= 62")
        weights = np.left_shift(np.int64(1), np.arange(self.p, dtype=np.int64))
        return self.masks.astype(np.int64) @ weights

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "p": self.p,
            "method": self.method.value if self.method is not None else None,
            "seed": self.seed,
            "selector": self.selector.to_dict() if self.selector is not None else None,
            "models": [list(map(int, np.flatnonzero(row))) for row in self.masks],
            "frequencies": [float(f) for f in self.frequencies],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> BootstrapEnsemble:
        selector = SelectorSpec.from_dict(d["selector"]) if d.get("selector") else None
        return cls.from_models(d["models"], p=d["p"], method=d.get("method"),
                               selector=selector, seed=d.get("seed"))


def _resampling_base(data: Dataset, selector: SelectorSpec, method: BootstrapMethod):
    model, fit = select(data, selector)
    if method is BootstrapMethod.MODIFIED_RESIDUAL:
        if selector.kind is not SelectorKind.LASSO:
            raise ValueError("the modified residual bootstrap is defined for the Lasso only")
        return model, fit
    # residuals from a low-bias least-squares refit on the selected support
    return model, fit_ols(data, model)


def build_ensemble(data: Dataset, selector: SelectorSpec, B: int,
                   method: BootstrapMethod | str | None = None, seed: int = 0,
                   threads: int = 1) -> BootstrapEnsemble:
    """Select a model on each of ``B`` bootstrap datasets.

    Replicate ``b`` draws from a stream keyed on ``(seed, b)``, so the result
    does not depend on ``threads``.  Cross-validation folds inside a replicate
    are seeded from that replicate's stream.  A failing replicate is retried
    on a fresh stream up to ``MAX_RETRIES`` times.
    """
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    method = default_method(selector) if method is None else BootstrapMethod(method)
    original, base = _resampling_base(data, selector, method)

    def replicate(b: int) -> np.ndarray:
        err: BaseException | None = None
        for attempt in range(MAX_RETRIES + 1):
            rng = replicate_rng(seed, b, attempt)
            if method is BootstrapMethod.MODIFIED_RESIDUAL:
                boot = modified_residual_resample(data, base, rng)
            else:
                boot = residual_resample(data, base, rng)
            spec_b = with_seed(selector, rng.integers(0, 2**63 - 1))
            try:
                model, _ = select(boot, spec_b)
            except McbError as exc:
                err = exc
                continue
            return model.mask
        raise ReplicateFailedError(b, err)

    if threads is None or threads <= 0:
        threads = os.cpu_count() or 1
    if threads == 1:
        rows = [replicate(b) for b in range(B)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(replicate, range(B)))
    return BootstrapEnsemble(np.vstack(rows), method=method, selector=selector, seed=seed,
                             original=original)
