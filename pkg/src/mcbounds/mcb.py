"""Model confidence bounds, model uncertainty curves and their areas.

Given bootstrap models ``m^(1..B)``, the coverage rate of a nested pair
``m1 <= m2`` is the fraction of bootstrap models ``m`` with
``m1 <= m <= m2``.  For each width ``w = |m2| - |m1|`` we keep the pair of
largest coverage; the resulting sequence is the model uncertainty curve and
the final bounds are its narrowest member reaching ``1 - alpha``.

Two searches are provided.  :func:`mcb_exhaustive` visits every nested pair;
it encodes a pair as a ternary string (predictor outside / in both / only in
the upper bound) and obtains all ``3^p`` coverage counts with one
subset-sum transform of the bootstrap-model histogram.  :func:`mcb_ranked`
restricts the search to bounds made of the most frequently selected
predictors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from math import comb

import numpy as np

from .bootstrap import BootstrapEnsemble
from .exceptions import NotNestedError, TooLargeError, WidthTooLargeError
from .regression import ModelIndexSet

EXHAUSTIVE_LIMIT = 15
MCS_WIDTH_LIMIT = 20
# Slack when comparing coverage rates (multiples of 1/B) against 1 - alpha.
_LEVEL_EPS = 1e-12


class Algorithm(str, Enum):
    EXHAUSTIVE = "exhaustive"
    RANKED = "ranked"


class Pin(str, Enum):
    """One-sided variants: fix the lower bound at the empty model or the upper at the full model."""

    NONE = "none"
    LOWER_EMPTY = "lower_empty"
    UPPER_FULL = "upper_full"


@dataclass(frozen=True)
class McbPair:
    lbm: ModelIndexSet
    ubm: ModelIndexSet
    bcr: float

    def __post_init__(self):
        if not self.lbm.issubset(self.ubm):
            raise NotNestedError(f"{self.lbm} is not contained in {self.ubm}")

    @property
    def width(self) -> int:
        return len(self.ubm) - len(self.lbm)

    @property
    def cardinality(self) -> int:
        """Number of models nested between the bounds."""
        return 2 ** self.width

    def covers(self, model: ModelIndexSet) -> bool:
        return self.lbm.issubset(model) and model.issubset(self.ubm)


@dataclass(frozen=True)
class Muc:
    """Best pair per width ``0..p`` and the profiled coverage rates ``cr``."""

    entries: tuple[McbPair, ...]
    cr: np.ndarray
    p: int
    algorithm: Algorithm
    pairs_evaluated: tuple[int, ...]
    pin: Pin = Pin.NONE

    def __post_init__(self):
        if len(self.entries) != self.p + 1:
            raise ValueError("need one entry per width 0..p")
        for w, e in enumerate(self.entries):
            if e.width != w:
                raise ValueError(f"entry {w} has width {e.width}")

    @property
    def total_pairs(self) -> int:
        return int(sum(self.pairs_evaluated))


def bcr(m1: ModelIndexSet, m2: ModelIndexSet, ens: BootstrapEnsemble) -> float:
    """Fraction of bootstrap models nested between ``m1`` and ``m2``."""
    if m1.p != ens.p or m2.p != ens.p:
        raise ValueError("models and ensemble must share p")
    if not m1.issubset(m2):
        raise NotNestedError(f"{m1} is not contained in {m2}")
    M = ens.masks
    inside = M[:, m1.mask].all(axis=1) & ~M[:, ~m2.mask].any(axis=1)
    return float(inside.mean())


def omega_exhaustive(p: int, w: int) -> int:
    """Number of nested pairs of width ``w``: ``sum_k C(p,k) C(p-k,w)``."""
    return sum(comb(p, k) * comb(p - k, w) for k in range(p - w + 1))


def omega_ranked(p: int) -> int:
    """Candidate pairs examined by the ranked search over all widths."""
    return (p + 1) * (p + 2) // 2


def _lattice_counts(ens: BootstrapEnsemble) -> np.ndarray:
    """Coverage counts for every ternary-coded pair, shape ``(3,) * p``.

    Digit ``d_j`` of a cell (axis ``p-1-j``) is 0 if predictor ``j`` is in
    neither bound, 1 if it is in the lower bound, 2 if only in the upper
    bound; the flat C-order index is ``sum_j d_j 3^j``.
    """
    p = ens.p
    hist = np.bincount(ens.bits(), minlength=2 ** p).astype(np.int32)
    A = hist.reshape((2,) * p)
    for axis in range(p):
        out = np.take(A, 0, axis=axis)
        inn = np.take(A, 1, axis=axis)
        A = np.stack([out, inn, out + inn], axis=axis)
    return A


def _digit_totals(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell counts of lower-bound digits and free digits."""
    n_in = np.zeros((3,) * p, dtype=np.int8)
    n_free = np.zeros((3,) * p, dtype=np.int8)
    for axis in range(p):
        shape = [1] * p
        shape[axis] = 3
        n_in += np.array([0, 1, 0], dtype=np.int8).reshape(shape)
        n_free += np.array([0, 0, 1], dtype=np.int8).reshape(shape)
    return n_in.reshape(-1), n_free.reshape(-1)


def _decode(cells: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    digits = (cells[:, None] // (3 ** np.arange(p, dtype=np.int64))[None, :]) % 3
    return digits == 1, digits >= 1


def _padded_sorted(masks: np.ndarray) -> np.ndarray:
    """Sorted member indices per row, padded with -1 so prefixes sort first."""
    p = masks.shape[1]
    idx = np.sort(np.where(masks, np.arange(p), p), axis=1)
    idx[idx == p] = -1
    return idx


def _lex_first(lower: np.ndarray, upper: np.ndarray) -> int:
    """Row whose (sorted lower, sorted upper) index lists are lexicographically smallest."""
    keys = np.hstack([_padded_sorted(lower), _padded_sorted(upper)])
    order = np.lexsort(keys.T[::-1])
    return int(order[0])


def mcb_exhaustive(ens: BootstrapEnsemble, pin: Pin | str = Pin.NONE,
                   limit: int = EXHAUSTIVE_LIMIT) -> Muc:
    """Best pair of every width over all nested pairs.

    Ties in coverage go to the lexicographically smallest sorted lower bound,
    then the smallest sorted upper bound.
    """
    p = ens.p
    if p > limit:
        raise TooLargeError(f"exhaustive search over p={p} predictors exceeds the limit of {limit}")
    pin = Pin(pin)
    counts = _lattice_counts(ens).reshape(-1)
    n_in, n_free = _digit_totals(p)
    if pin is Pin.LOWER_EMPTY:
        allowed = n_in == 0
    elif pin is Pin.UPPER_FULL:
        allowed = (n_in + n_free) == p
    else:
        allowed = None
    entries, cr, visited = [], np.zeros(p + 1), []
    for w in range(p + 1):
        sel = n_free == w
        if allowed is not None:
            sel &= allowed
        cells = np.flatnonzero(sel)
        visited.append(int(cells.size))
        vals = counts[cells]
        best = vals.max()
        ties = cells[vals == best]
        lower, upper = _decode(ties, p)
        k = _lex_first(lower, upper) if ties.size > 1 else 0
        rate = float(best) / ens.B
        entries.append(McbPair(ModelIndexSet.from_mask(lower[k]), ModelIndexSet.from_mask(upper[k]), rate))
        cr[w] = rate
    return Muc(tuple(entries), cr, p, Algorithm.EXHAUSTIVE, tuple(visited), pin)


def importance_ranking(ens: BootstrapEnsemble) -> np.ndarray:
    """Predictors by descending selection frequency, ascending index on ties."""
    return np.lexsort((np.arange(ens.p), -ens.counts))


def mcb_ranked(ens: BootstrapEnsemble, pin: Pin | str = Pin.NONE) -> Muc:
    """Best pair of every width among bounds built from the frequency ranking.

    Lower bound: the ``k`` top-ranked predictors; upper bound: the ``k + w``
    top-ranked ones.  Ties in coverage go to the smallest ``k``.
    """
    p, B = ens.p, ens.B
    pin = Pin(pin)
    order = importance_ranking(ens)
    ranked = ens.masks[:, order]
    # lead[b]: length of the leading run of top-ranked predictors in model b
    lead = np.where(ranked.all(axis=1), p, np.argmin(ranked, axis=1))
    # reach[b]: 1 + rank position of the lowest-ranked predictor in model b (0 if empty)
    any_sel = ranked.any(axis=1)
    reach = np.where(any_sel, p - np.argmax(ranked[:, ::-1], axis=1), 0)
    H = np.zeros((p + 1, p + 1), dtype=np.int64)
    np.add.at(H, (lead, reach), 1)
    # covered[k, j] = #{b : lead_b >= k and reach_b <= j}
    covered = np.cumsum(np.cumsum(H[::-1, :], axis=0)[::-1, :], axis=1)
    entries, cr, visited = [], np.zeros(p + 1), []
    for w in range(p + 1):
        if pin is Pin.LOWER_EMPTY:
            ks = [0]
        elif pin is Pin.UPPER_FULL:
            ks = [p - w]
        else:
            ks = range(p - w + 1)
        visited.append(len(ks))
        best_k = max(ks, key=lambda k: (covered[k, k + w], -k))
        rate = covered[best_k, best_k + w] / B
        lower = ModelIndexSet(tuple(order[:best_k].tolist()), p)
        upper = ModelIndexSet(tuple(order[: best_k + w].tolist()), p)
        entries.append(McbPair(lower, upper, float(rate)))
        cr[w] = rate
    return Muc(tuple(entries), cr, p, Algorithm.RANKED, tuple(visited), pin)


def compute_muc(ens: BootstrapEnsemble, algorithm: Algorithm | str = "auto",
                pin: Pin | str = Pin.NONE) -> Muc:
    """Dispatch on ``algorithm``; ``"auto"`` is exhaustive up to ``EXHAUSTIVE_LIMIT`` predictors."""
    if algorithm == "auto":
        algorithm = Algorithm.EXHAUSTIVE if ens.p <= EXHAUSTIVE_LIMIT else Algorithm.RANKED
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.EXHAUSTIVE:
        return mcb_exhaustive(ens, pin)
    return mcb_ranked(ens, pin)


def select_final_mcb(muc: Muc, alpha: float) -> McbPair:
    """Narrowest pair on the curve whose coverage reaches ``1 - alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    level = 1.0 - alpha
    for w in range(muc.p + 1):
        if muc.cr[w] >= level - _LEVEL_EPS:
            return muc.entries[w]
    return muc.entries[muc.p]


def mcs_enumerate(pair: McbPair, max_width: int = MCS_WIDTH_LIMIT) -> list[ModelIndexSet]:
    """All models nested between the bounds, smallest first."""
    if pair.width > max_width:
        raise WidthTooLargeError(f"width {pair.width} exceeds the enumeration guard of {max_width}")
    free = sorted(set(pair.ubm) - set(pair.lbm))
    out = []
    for r in range(len(free) + 1):
        for extra in itertools.combinations(free, r):
            out.append(pair.lbm.union(extra))
    return out


def muc_points(muc: Muc) -> list[tuple[float, float]]:
    return [(w / muc.p, float(muc.cr[w])) for w in range(muc.p + 1)]


def amuc(muc: Muc) -> float:
    """Trapezoidal area under the curve of ``CR(w)`` against ``w / p``."""
    cr = np.asarray(muc.cr, dtype=np.float64)
    return float(np.sum(cr[1:] + cr[:-1]) / (2.0 * muc.p))
