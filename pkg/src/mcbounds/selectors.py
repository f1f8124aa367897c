"""Variable selectors: Lasso, Adaptive Lasso, SCAD, MCP and stepwise IC search.

Penalized selectors minimise ``(1/2n)||y - X b||^2 + penalty(b; lam)`` on a
standardized dataset by coordinate descent.  The penalty level is either
fixed or picked by K-fold cross-validation over a log-spaced grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from . import _cd
from .exceptions import FoldTooSmallError, NoConvergenceError
from .regression import Dataset, FitResult, ModelIndexSet, fit_ols

# Penalty weights for OLS coefficients smaller than this are treated as infinite.
ADAPTIVE_ZERO = 1e-8
# RSS values below this fraction of ||y||^2 count as a perfect fit.
_RSS_FLOOR = 1e-20


class SelectorKind(str, Enum):
    LASSO = "lasso"
    ADAPTIVE_LASSO = "adaptive_lasso"
    SCAD = "scad"
    MCP = "mcp"
    STEPWISE = "stepwise"


_ALIASES = {
    "alasso": SelectorKind.ADAPTIVE_LASSO,
    "adaptive-lasso": SelectorKind.ADAPTIVE_LASSO,
    "adaptivelasso": SelectorKind.ADAPTIVE_LASSO,
    "stepwise_ic": SelectorKind.STEPWISE,
    "stepwiseic": SelectorKind.STEPWISE,
}


@dataclass(frozen=True)
class SelectorSpec:
    """Configuration of one model-selection method.

    ``penalty_weight=None`` means the penalty level is chosen by
    ``cv_folds``-fold cross-validation with folds drawn from ``seed``.
    ``ic_penalty`` (``"AIC"``, ``"BIC"`` or a number) only matters for the
    stepwise kind.
    """

    kind: SelectorKind = SelectorKind.ADAPTIVE_LASSO
    penalty_weight: float | None = None
    ic_penalty: str | float = "BIC"
    adaptive_gamma: float = 1.0
    scad_a: float = 3.7
    mcp_gamma: float = 3.0
    cv_folds: int = 10
    seed: int = 0
    n_lambda: int = 100
    lambda_min_ratio: float = 1e-3
    tol: float = 1e-7
    max_sweeps: int = 10_000

    def __post_init__(self):
        kind = self.kind
        if isinstance(kind, str) and not isinstance(kind, SelectorKind):
            key = kind.strip().lower()
            kind = _ALIASES.get(key) or SelectorKind(key.replace("-", "_"))
        object.__setattr__(self, "kind", kind)
        if self.penalty_weight is not None and not self.penalty_weight >= 0:
            raise ValueError(f"penalty_weight must be >= 0, got {self.penalty_weight}")
        if not self.scad_a > 2:
            raise ValueError(f"scad_a must exceed 2, got {self.scad_a}")
        if not self.mcp_gamma > 1:
            raise ValueError(f"mcp_gamma must exceed 1, got {self.mcp_gamma}")
        if self.cv_folds < 2:
            raise ValueError(f"cv_folds must be >= 2, got {self.cv_folds}")
        if self.adaptive_gamma <= 0:
            raise ValueError("adaptive_gamma must be positive")
        if isinstance(self.ic_penalty, str):
            if self.ic_penalty.upper() not in ("AIC", "BIC"):
                raise ValueError(f"unknown information criterion {self.ic_penalty!r}")
        elif not self.ic_penalty >= 0:
            raise ValueError("custom IC penalty must be >= 0")

    @property
    def penalized(self) -> bool:
        return self.kind is not SelectorKind.STEPWISE

    @property
    def uses_cv(self) -> bool:
        return self.penalized and self.penalty_weight is None

    def ic_constant(self, n: int) -> float:
        """The per-parameter penalty ``C_n`` of the information criterion."""
        if isinstance(self.ic_penalty, str):
            return 2.0 if self.ic_penalty.upper() == "AIC" else math.log(n)
        return float(self.ic_penalty)

    @property
    def label(self) -> str:
        if self.kind is SelectorKind.STEPWISE:
            ic = self.ic_penalty.upper() if isinstance(self.ic_penalty, str) else f"C={self.ic_penalty:g}"
            return f"stepwise-{ic.lower()}"
        return self.kind.value.replace("_", "-")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SelectorSpec:
        return cls(**d)


def _penalty_code(spec: SelectorSpec) -> tuple[int, float]:
    if spec.kind is SelectorKind.SCAD:
        return _cd.SCAD, spec.scad_a
    if spec.kind is SelectorKind.MCP:
        return _cd.MCP, spec.mcp_gamma
    return _cd.LASSO, 0.0


def _require_standardized(data: Dataset):
    if not data.standardized:
        raise ValueError("selectors expect a standardized dataset; call standardize() first")


def adaptive_weights(data: Dataset, gamma: float = 1.0) -> np.ndarray:
    """Adaptive Lasso penalty factors ``1/|b_ols|^gamma`` (inf for ~zero OLS coefficients)."""
    ols = fit_ols(data, ModelIndexSet.full(data.p)).coefficients
    absb = np.abs(ols)
    with np.errstate(divide="ignore"):
        w = np.where(absb < ADAPTIVE_ZERO, np.inf, absb ** -gamma)
    return w


def penalty_factors(data: Dataset, spec: SelectorSpec) -> np.ndarray:
    if spec.kind is SelectorKind.ADAPTIVE_LASSO:
        return adaptive_weights(data, spec.adaptive_gamma)
    return np.ones(data.p)


def lambda_max(data: Dataset, pf: np.ndarray | None = None) -> float:
    """Smallest penalty level at which every coefficient is zero."""
    c = np.abs(data.X.T @ data.y) / data.n
    if pf is None:
        return float(c.max())
    finite = np.isfinite(pf)
    if not finite.any():
        return 0.0
    return float(np.max(c[finite] / pf[finite]))


def lambda_grid(data: Dataset, spec: SelectorSpec, pf: np.ndarray | None = None) -> np.ndarray:
    """Log-spaced grid from ``lambda_max`` down to ``lambda_min_ratio * lambda_max``."""
    lmax = lambda_max(data, pf)
    if lmax <= 0.0:
        return np.zeros(spec.n_lambda)
    return np.geomspace(lmax, lmax * spec.lambda_min_ratio, spec.n_lambda)


def penalized_path(data: Dataset, spec: SelectorSpec, lambdas: np.ndarray,
                   pf: np.ndarray | None = None) -> np.ndarray:
    """Coefficient path (one row per lambda, warm-started in the given order)."""
    if pf is None:
        pf = penalty_factors(data, spec)
    X, y, n = data.X, data.y, data.n
    G = X.T @ X / n
    c = X.T @ y / n
    code, param = _penalty_code(spec)
    betas, sweeps = _cd.cd_path(G, c, np.asarray(lambdas, dtype=np.float64), np.asarray(pf, dtype=np.float64),
                                code, param, spec.tol, spec.max_sweeps, np.zeros(data.p))
    if np.any(sweeps < 0):
        raise NoConvergenceError(
            f"{spec.label}: coordinate descent exceeded {spec.max_sweeps} sweeps")
    return betas


def _penalized_fit(data: Dataset, coef: np.ndarray, lam: float) -> FitResult:
    support = ModelIndexSet.from_mask(coef != 0.0)
    resid = data.y - data.X @ coef
    rss = float(resid @ resid)
    k = len(support)
    sigma = float(np.sqrt(rss / (data.n - k))) if data.n > k else 0.0
    return FitResult(coef, support, resid, rss, sigma, penalty_weight=float(lam))


def fit_penalized(data: Dataset, spec: SelectorSpec, lam: float,
                  pf: np.ndarray | None = None) -> FitResult:
    """Penalized estimate at a fixed ``lam``, reached by a warm-started path from ``lambda_max``."""
    _require_standardized(data)
    if pf is None:
        pf = penalty_factors(data, spec)
    grid = lambda_grid(data, spec, pf)
    lambdas = np.append(grid[grid > lam], lam)
    coef = penalized_path(data, spec, lambdas, pf)[-1]
    return _penalized_fit(data, coef, lam)


def kkt_violation(data: Dataset, coef: np.ndarray, lam: float, pf: np.ndarray | None = None) -> float:
    """Largest breach of the Lasso optimality conditions at ``coef``.

    With ``g_j = x_j'(y - X b)/n`` and ``l_j = lam * pf_j``: active
    coordinates need ``g_j = l_j sign(b_j)`` and inactive ones ``|g_j| <= l_j``.
    Coordinates with infinite ``pf`` are unconstrained only if zero.
    """
    coef = np.asarray(coef, dtype=np.float64)
    pf = np.ones(data.p) if pf is None else np.asarray(pf, dtype=np.float64)
    g = data.X.T @ (data.y - data.X @ coef) / data.n
    worst = 0.0
    for j in range(data.p):
        if not np.isfinite(pf[j]):
            if coef[j] != 0.0:
                return float("inf")
            continue
        lj = lam * pf[j]
        if coef[j] != 0.0:
            worst = max(worst, abs(g[j] - lj * np.sign(coef[j])))
        else:
            worst = max(worst, abs(g[j]) - lj)
    return float(worst)


def fold_assignment(n: int, n_folds: int, seed) -> np.ndarray:
    """Balanced random fold labels ``0..n_folds-1`` for ``n`` observations."""
    if n_folds > n or n // n_folds < 2:
        raise FoldTooSmallError(
            f"{n_folds}-fold CV on {n} observations leaves folds with fewer than 2 points")
    rng = np.random.default_rng(seed)
    return rng.permutation(np.arange(n) % n_folds)


def cv_curve(data: Dataset, spec: SelectorSpec, lambdas: np.ndarray | None = None,
             pf: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(lambdas, mean out-of-fold squared error)``."""
    _require_standardized(data)
    if pf is None:
        pf = penalty_factors(data, spec)
    if lambdas is None:
        lambdas = lambda_grid(data, spec, pf)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    folds = fold_assignment(data.n, spec.cv_folds, spec.seed)
    code, param = _penalty_code(spec)
    err, ok = _cd.cv_errors(np.ascontiguousarray(data.X), np.ascontiguousarray(data.y), folds,
                            spec.cv_folds, lambdas, np.asarray(pf, dtype=np.float64), code,
                            param, spec.tol, spec.max_sweeps)
    if not ok:
        raise NoConvergenceError(f"{spec.label}: coordinate descent did not converge during CV")
    return lambdas, err


def cross_validate_lambda(data: Dataset, spec: SelectorSpec,
                          lambdas: np.ndarray | None = None) -> float:
    """Penalty level minimising mean out-of-fold squared error (first minimum on ties)."""
    if not spec.penalized:
        raise ValueError("cross-validation applies to penalized selectors only")
    lambdas, err = cv_curve(data, spec, lambdas)
    return float(lambdas[int(np.argmin(err))])


def information_criterion(rss: float, n: int, k: int, C_n: float, tss: float | None = None) -> float:
    """``log(RSS/n) + k * C_n / n`` with RSS floored relative to ``tss``."""
    floor = _RSS_FLOOR * tss if tss else np.finfo(float).tiny
    return math.log(max(rss, floor) / n) + k * C_n / n


def stepwise_ic(data: Dataset, C_n: float) -> ModelIndexSet:
    """Bidirectional stepwise search from the empty model.

    Each step tries every single addition and deletion and takes the move
    with the largest IC decrease (smallest predictor index on ties); the
    search stops when no move lowers the criterion.
    """
    n, p = data.n, data.p
    tss = float(data.y @ data.y)
    cache: dict[int, float] = {}

    def ic(bits: int) -> float:
        if bits not in cache:
            m = ModelIndexSet.from_bits(bits, p)
            cache[bits] = information_criterion(fit_ols(data, m).rss, n, len(m), C_n, tss)
        return cache[bits]

    current = 0
    best = ic(current)
    while True:
        move, move_ic = None, best
        for j in range(p):
            cand = current ^ (1 << j)
            val = ic(cand)
            if val < move_ic:
                move, move_ic = cand, val
        if move is None:
            return ModelIndexSet.from_bits(current, p)
        current, best = move, move_ic


def select(data: Dataset, spec: SelectorSpec) -> tuple[ModelIndexSet, FitResult]:
    """Run the selector; returns the support ``{j : b_j != 0}`` and its fit.

    For penalized kinds the fit holds the penalized estimate; for the stepwise
    kind it is the OLS fit on the selected support.
    """
    _require_standardized(data)
    if spec.kind is SelectorKind.STEPWISE:
        model = stepwise_ic(data, spec.ic_constant(data.n))
        return model, fit_ols(data, model)
    pf = penalty_factors(data, spec)
    if spec.penalty_weight is not None:
        fit = fit_penalized(data, spec, spec.penalty_weight, pf)
        return fit.support, fit
    lambdas, err = cv_curve(data, spec, pf=pf)
    best = int(np.argmin(err))
    coef = penalized_path(data, spec, lambdas[: best + 1], pf)[-1]
    fit = _penalized_fit(data, coef, lambdas[best])
    return fit.support, fit


def with_seed(spec: SelectorSpec, seed: int) -> SelectorSpec:
    return replace(spec, seed=int(seed))
