"""Monte Carlo designs for coverage, cardinality and model-uncertainty-curve studies.

Data follow ``y = X theta + eps`` with rows of ``X`` drawn from
``N_p(0, Sigma)``, ``Sigma_ij = rho^|i-j|``, the first ``p_star``
coefficients equal to ``gamma^j`` (all ones when ``gamma == 1``) and the rest
zero.  Every repetition owns a seed stream derived from ``(seed, rep)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bootstrap import BootstrapEnsemble, build_ensemble
from .exceptions import McbError, RepFailedError
from .mcb import compute_muc, select_final_mcb
from .regression import Dataset, ModelIndexSet, standardize
from .selectors import SelectorSpec, with_seed
from .vscs import f_test_table, vscs_from_table

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40)


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    p: int = 10
    p_star: int = 5
    rho: float = 0.0
    gamma: float = 1.0
    sigma: float = 1.0
    error_dist: str = "normal"
    B: int = 200
    reps: int = 200
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    selector: SelectorSpec = field(default_factory=SelectorSpec)
    seed: int = 0
    algorithm: str = "ranked"
    method: str | None = None
    vscs: bool = False
    name: str = ""

    def __post_init__(self):
        if not 0 <= self.p_star <= self.p:
            raise ValueError(f"need 0 <= p_star <= p, got p_star={self.p_star}, p={self.p}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.error_dist not in ("normal", "laplace"):
            raise ValueError(f"error_dist must be 'normal' or 'laplace', got {self.error_dist!r}")
        if self.B < 1 or self.reps < 1:
            raise ValueError("B and reps must be >= 1")
        alphas = tuple(float(a) for a in self.alpha_grid)
        if not all(0.0 < a < 1.0 for a in alphas):
            raise ValueError("every alpha must lie in (0, 1)")
        object.__setattr__(self, "alpha_grid", alphas)
        if isinstance(self.selector, dict):
            object.__setattr__(self, "selector", SelectorSpec.from_dict(self.selector))
        if not self.name:
            object.__setattr__(self, "name", f"n{self.n}_p{self.p}_rho{self.rho:g}_gamma{self.gamma:g}")

    @property
    def truth(self) -> ModelIndexSet:
        return ModelIndexSet(tuple(range(self.p_star)), self.p)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["selector"] = self.selector.to_dict()
        d["alpha_grid"] = list(self.alpha_grid)
        return d


def correlation_matrix(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def true_coefficients(config: SimConfig) -> np.ndarray:
    theta = np.zeros(config.p)
    j = np.arange(1, config.p_star + 1)
    theta[: config.p_star] = config.gamma ** j
    return theta


def _rep_streams(seed: int, rep: int) -> tuple[np.random.Generator, int, int]:
    data_ss, boot_ss, cv_ss = np.random.SeedSequence([int(seed), int(rep)]).spawn(3)
    return (np.random.default_rng(data_ss), int(boot_ss.generate_state(1)[0]),
            int(cv_ss.generate_state(1)[0]))


def laplace_errors(rng: np.random.Generator, size: int, sigma: float) -> np.ndarray:
    """Laplace draws with variance ``sigma^2`` (scale ``sigma / sqrt 2``) via the inverse CDF."""
    u = rng.random(size) - 0.5
    return -(sigma / np.sqrt(2.0)) * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def generate(config: SimConfig, rep_index: int) -> Dataset:
    """Raw (unstandardized) dataset for one repetition."""
    rng, _, _ = _rep_streams(config.seed, rep_index)
    L = np.linalg.cholesky(correlation_matrix(config.p, config.rho))
    X = rng.standard_normal((config.n, config.p)) @ L.T
    if config.error_dist == "normal":
        eps = config.sigma * rng.standard_normal(config.n)
    else:
        eps = laplace_errors(rng, config.n, config.sigma)
    y = X @ true_coefficients(config) + eps
    return Dataset(X, y, tuple(f"x{j + 1}" for j in range(config.p)))


def selection_diagnostics(ens: BootstrapEnsemble, truth: ModelIndexSet) -> tuple[float, float, float]:
    """Rates of underfit (a true predictor missing), overfit (strict superset) and exact recovery."""
    if truth.p != ens.p:
        raise ValueError("truth and ensemble must share p")
    t = truth.mask
    M = ens.masks
    has_all = M[:, t].all(axis=1)
    extra = M[:, ~t].any(axis=1)
    under = ~has_all
    over = has_all & extra
    exact = has_all & ~extra
    return float(under.mean()), float(over.mean()), float(exact.mean())


@dataclass
class RepOutcome:
    rep: int
    mcb_covered: list[bool]
    mcb_width: list[int]
    cr: np.ndarray
    diagnostics: tuple[float, float, float]
    vscs_covered: list[bool] | None = None
    vscs_cardinality: list[int] | None = None


@dataclass
class McReport:
    config: SimConfig
    rows: list[dict]
    mean_cr: np.ndarray
    amuc: float
    underfit_rate: float
    overfit_rate: float
    exact_rate: float
    outcomes: list[RepOutcome] = field(repr=False, default_factory=list)

    def row(self, alpha: float, method: str = "MCB") -> dict:
        for r in self.rows:
            if r["method"] == method and abs(r["alpha"] - alpha) < 1e-12:
                return r
        raise KeyError((alpha, method))


def _ensemble_for_rep(config: SimConfig, rep: int, selector: SelectorSpec) -> tuple[Dataset, BootstrapEnsemble]:
    _, boot_seed, cv_seed = _rep_streams(config.seed, rep)
    data, _ = standardize(generate(config, rep))
    ens = build_ensemble(data, with_seed(selector, cv_seed), config.B,
                         method=config.method, seed=boot_seed)
    return data, ens


def _run_rep(config: SimConfig, rep: int) -> RepOutcome:
    truth = config.truth
    data, ens = _ensemble_for_rep(config, rep, config.selector)
    muc = compute_muc(ens, config.algorithm)
    pairs = [select_final_mcb(muc, a) for a in config.alpha_grid]
    out = RepOutcome(rep, [pr.covers(truth) for pr in pairs], [pr.width for pr in pairs],
                     muc.cr.copy(), selection_diagnostics(ens, truth))
    if config.vscs:
        table = f_test_table(data)
        results = [vscs_from_table(table, a) for a in config.alpha_grid]
        out.vscs_covered = [r.contains(truth) for r in results]
        out.vscs_cardinality = [r.cardinality for r in results]
    return out


def _map_reps(fn: Callable[[int], object], reps: int, threads: int,
              progress: Callable[[int, int], None] | None):
    def guarded(rep: int):
        try:
            res = fn(rep)
        except McbError as exc:
            raise RepFailedError(rep, exc) from exc
        if progress is not None:
            progress(rep, reps)
        return res

    if threads <= 1:
        return [guarded(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(guarded, range(reps)))


def run_coverage_experiment(config: SimConfig, threads: int = 1,
                            progress: Callable[[int, int], None] | None = None) -> McReport:
    """Monte Carlo coverage and cardinality of the MCB (and optionally the VSCS) at each alpha."""
    outcomes = _map_reps(lambda r: _run_rep(config, r), config.reps, threads, progress)
    rows = []
    for i, a in enumerate(config.alpha_grid):
        widths = np.array([o.mcb_width[i] for o in outcomes])
        rows.append({
            "alpha": a,
            "confidence": 1.0 - a,
            "method": "MCB",
            "coverage_rate": float(np.mean([o.mcb_covered[i] for o in outcomes])),
            "mean_cardinality": float(np.mean(2.0 ** widths)),
            "mean_width": float(widths.mean()),
        })
        if config.vscs:
            rows.append({
                "alpha": a,
                "confidence": 1.0 - a,
                "method": "VSCS",
                "coverage_rate": float(np.mean([o.vscs_covered[i] for o in outcomes])),
                "mean_cardinality": float(np.mean([o.vscs_cardinality[i] for o in outcomes])),
                "mean_width": float("nan"),
            })
    mean_cr = np.mean([o.cr for o in outcomes], axis=0)
    diag = np.mean([o.diagnostics for o in outcomes], axis=0)
    area = float(np.sum(mean_cr[1:] + mean_cr[:-1]) / (2.0 * config.p))
    return McReport(config, rows, mean_cr, area, float(diag[0]), float(diag[1]), float(diag[2]), outcomes)


@dataclass
class SelectorComparison:
    design: str
    selector: str
    mean_cr: np.ndarray
    amuc: float

    def points(self) -> list[tuple[float, float]]:
        p = len(self.mean_cr) - 1
        return [(w / p, float(c)) for w, c in enumerate(self.mean_cr)]


def compare_selectors(configs: Sequence[SimConfig], selectors: Sequence[SelectorSpec], threads: int = 1,
                      progress: Callable[[int, int], None] | None = None) -> list[SelectorComparison]:
    """Average MUC and AMUC of each selector on shared simulated datasets.

    Rows are grouped by design and sorted by decreasing AMUC within a design.
    """
    table = []
    for config in configs:
        group = []
        for spec in selectors:
            def one(rep: int, spec=spec, config=config):
                _, ens = _ensemble_for_rep(config, rep, spec)
                return compute_muc(ens, config.algorithm).cr

            curves = _map_reps(one, config.reps, threads, progress)
            mean_cr = np.mean(curves, axis=0)
            area = float(np.sum(mean_cr[1:] + mean_cr[:-1]) / (2.0 * config.p))
            group.append(SelectorComparison(config.name, spec.label, mean_cr, area))
        group.sort(key=lambda r: -r.amuc)
        table.extend(group)
    return table


# ------------------------------------------------------------------ #
# Campaign files and CSV output
# ------------------------------------------------------------------ #

_DESIGN_KEYS = {"n", "p", "p_star", "rho", "gamma", "sigma", "error_dist", "B", "reps",
                "alpha_grid", "selector", "seed", "algorithm", "method", "vscs", "name"}


def load_campaign(doc: dict | str) -> tuple[list[SimConfig], list[SelectorSpec]]:
    """Parse a campaign document into designs and (for comparisons) selectors.

    Top-level keys act as defaults for every entry of ``designs``.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    defaults = {k: v for k, v in doc.items() if k in _DESIGN_KEYS}
    unknown = set(doc) - _DESIGN_KEYS - {"designs", "selectors"}
    if unknown:
        raise ValueError(f"unknown campaign keys: {sorted(unknown)}")
    designs = doc.get("designs") or [{}]
    configs = []
    for d in designs:
        bad = set(d) - _DESIGN_KEYS
        if bad:
            raise ValueError(f"unknown design keys: {sorted(bad)}")
        merged = {**defaults, **d}
        if "selector" in merged:
            merged["selector"] = SelectorSpec.from_dict(merged["selector"])
        if "alpha_grid" in merged:
            merged["alpha_grid"] = tuple(merged["alpha_grid"])
        configs.append(SimConfig(**merged))
    selectors = [SelectorSpec.from_dict(s) for s in doc.get("selectors", [])]
    return configs, selectors


COVERAGE_COLUMNS = ["design", "n", "p", "p_star", "rho", "gamma", "sigma", "error_dist", "selector",
                    "B", "reps", "confidence", "method", "coverage_rate", "mean_cardinality", "mean_width"]


def coverage_rows(report: McReport) -> list[dict]:
    c = report.config
    base = {"design": c.name, "n": c.n, "p": c.p, "p_star": c.p_star, "rho": c.rho, "gamma": c.gamma,
            "sigma": c.sigma, "error_dist": c.error_dist, "selector": c.selector.label,
            "B": c.B, "reps": c.reps}
    return [{**base, **{k: r[k] for k in ("confidence", "method", "coverage_rate",
                                          "mean_cardinality", "mean_width")}} for r in report.rows]


def write_csv(rows: list[dict], columns: list[str], fh: io.TextIOBase | None = None) -> str:
    buf = fh if fh is not None else io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items() if k in columns})
    return buf.getvalue() if fh is None else ""


def muc_rows(design: str, selector: str, points: Sequence[tuple[float, float]]) -> list[dict]:
    return [{"design": design, "selector": selector, "w": w, "w_over_p": x, "cr": y}
            for w, (x, y) in enumerate(points)]


MUC_COLUMNS = ["design", "selector", "w", "w_over_p", "cr"]

