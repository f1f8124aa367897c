from __future__ import annotations

import numpy as np
import pytest

from mcbounds import Dataset, standardize


def make_data(n=80, p=5, support=(0, 1), coef=1.0, sigma=1.0, seed=0, standardized=True):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[list(support)] = coef
    y = X @ beta + sigma * rng.standard_normal(n)
    data = Dataset(X, y)
    return standardize(data)[0] if standardized else data


@pytest.fixture
def small_data():
    return make_data()


def brute_force_mcb(ens, pin="none"):
    """Best pair per width over every nested pair, by explicit set comparisons.

    Ties go to the lexicographically smallest sorted lower bound, then upper
    bound.  Returns ``[(rate, lbm_tuple, ubm_tuple), ...]`` for widths 0..p.
    """
    import itertools

    p = ens.p
    models = [frozenset(np.flatnonzero(row).tolist()) for row in ens.masks]
    best = {}
    for ubits in range(2 ** p):
        ubm = frozenset(j for j in range(p) if ubits >> j & 1)
        for r in range(len(ubm) + 1):
            for lbm in itertools.combinations(sorted(ubm), r):
                lbm = frozenset(lbm)
                if pin == "lower_empty" and lbm:
                    continue
                if pin == "upper_full" and len(ubm) != p:
                    continue
                count = sum(lbm <= m <= ubm for m in models)
                w = len(ubm) - len(lbm)
                key = (-count, tuple(sorted(lbm)), tuple(sorted(ubm)))
                if w not in best or key < best[w]:
                    best[w] = key
    return [(-best[w][0] / ens.B, best[w][1], best[w][2]) for w in range(p + 1)]


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
