"""Model confidence bounds for variable selection in linear regression.

The main entry points are :func:`build_ensemble` (bootstrap models from a
selector), :func:`compute_muc` / :func:`select_final_mcb` (bounds and the
model uncertainty curve) and :func:`vscs` (F-test confidence set).
"""

from __future__ import annotations

from .bootstrap import BootstrapEnsemble, BootstrapMethod, build_ensemble
from .exceptions import McbError
from .mcb import Algorithm, McbPair, Muc, Pin, amuc, compute_muc, mcs_enumerate, select_final_mcb
from .regression import Dataset, FitResult, ModelIndexSet, fit_ols, standardize
from .selectors import SelectorKind, SelectorSpec, select
from .simulation import SimConfig, run_coverage_experiment
from .vscs import vscs

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "BootstrapEnsemble", "BootstrapMethod", "Dataset", "FitResult", "McbError", "McbPair",
    "ModelIndexSet", "Muc", "Pin", "SelectorKind", "SelectorSpec", "SimConfig", "amuc", "build_ensemble",
    "compute_muc", "fit_ols", "mcs_enumerate", "run_coverage_experiment", "select", "select_final_mcb",
    "standardize", "vscs",
]
