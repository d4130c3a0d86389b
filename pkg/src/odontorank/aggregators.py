"""Non-learned ranking mechanisms: lexicographic orders and fuzzy aggregation."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import CriteriaVector
from . import evaluation


class Criterion(enum.IntEnum):
    """Criteria in the column order of the raw criteria arrays (x1..x7)."""

    EXACT_GROUP = 0
    N_MATCH = 1
    N_MISMATCH = 2
    PCT_MATCH = 3
    PCT_POSSIBLE = 4
    N_POSSIBLE = 5
    PCT_MISMATCH = 6

    @property
    def lower_is_better(self) -> bool:
        return self in (Criterion.N_MISMATCH, Criterion.PCT_MISMATCH)

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Criterion.EXACT_GROUP: "ExactGroup",
    Criterion.N_MATCH: "NMatch",
    Criterion.N_MISMATCH: "NMismatch",
    Criterion.PCT_MATCH: "PctMatch",
    Criterion.PCT_POSSIBLE: "PctPossible",
    Criterion.N_POSSIBLE: "NPossible",
    Criterion.PCT_MISMATCH: "PctMismatch",
}

N_CRITERIA = 7
# +1 for higher-is-better columns, -1 for the mismatch columns.
ORIENTATION = np.array([-1.0 if c.lower_is_better else 1.0 for c in Criterion])
# Scale that maps each raw column into [0, 1].
SCALE = np.array([10.0, 32.0, 32.0, 100.0, 100.0, 32.0, 100.0])

# Listing order used to pad the AA order.
LISTING_ORDER = (Criterion.N_MATCH, Criterion.N_POSSIBLE, Criterion.N_MISMATCH,
                 Criterion.PCT_MATCH, Criterion.PCT_POSSIBLE, Criterion.PCT_MISMATCH,
                 Criterion.EXACT_GROUP)


def _raw(c) -> np.ndarray:
    if isinstance(c, CriteriaVector):
        return c.as_array()
    return np.asarray(c, dtype=np.float64)


# -- lexicographic orders ---------------------------------------------------

@dataclass(frozen=True)
class LexOrder:
    sequence: tuple[Criterion, ...]
    name: str = field(default="", compare=False)

    lexicographic = True

    def __post_init__(self):
        seq = tuple(Criterion(c) for c in self.sequence)
        if len(seq) != N_CRITERIA or len(set(seq)) != N_CRITERIA:
            raise ValueError("a lexicographic order is a permutation of all 7 criteria")
        object.__setattr__(self, "sequence", seq)

    def __str__(self) -> str:
        return ">".join(c.label for c in self.sequence)

    @classmethod
    def parse(cls, text: str) -> "LexOrder":
        by_label = {c.label.lower(): c for c in Criterion}
        try:
            return cls(tuple(by_label[t.strip().lower()] for t in text.split(">")))
        except KeyError as e:
            raise ValueError(f"unknown criterion {e.args[0]!r}") from None

    def keys(self, rows: np.ndarray) -> np.ndarray:
        """Oriented criteria columns in priority order; larger is better."""
        idx = list(self.sequence)
        return rows[..., idx] * ORIENTATION[idx]


def aa_order() -> LexOrder:
    head = (Criterion.EXACT_GROUP, Criterion.N_MATCH, Criterion.PCT_MISMATCH,
            Criterion.PCT_POSSIBLE)
    tail = tuple(c for c in LISTING_ORDER if c not in head)
    return LexOrder(head + tail, name="AA")


def lo_order() -> LexOrder:
    return LexOrder((Criterion.PCT_MISMATCH, Criterion.PCT_MATCH, Criterion.N_MISMATCH,
                     Criterion.N_MATCH, Criterion.EXACT_GROUP, Criterion.PCT_POSSIBLE,
                     Criterion.N_POSSIBLE), name="LO")


def lex_compare(a, b, order: LexOrder) -> int:
    """1 if `a` ranks above `b`, -1 if below, 0 on a full tie."""
    ka, kb = order.keys(_raw(a)), order.keys(_raw(b))
    for x, y in zip(ka, kb):
        if x > y:
            return 1
        if x < y:
            return -1
    return 0


def all_orders() -> list[LexOrder]:
    return [LexOrder(p) for p in itertools.permutations(Criterion)]


@dataclass(frozen=True)
class LexSearchEntry:
    order: LexOrder
    average: float
    maximum: int
    index: int  # position in itertools.permutations order


def search_lex_orders(cases, ties: str = "pessimistic") -> list[LexSearchEntry]:
    """Evaluate all 5040 orders; sorted by average correct position, then index."""
    if len(cases) < 2:
        raise ValueError("lexicographic search needs at least 2 paired cases")
    crit = cases.criteria()
    entries = []
    for i, order in enumerate(all_orders()):
        pos = evaluation.lex_positions(crit, order, ties=ties)
        entries.append(LexSearchEntry(order, float(pos.mean()), int(pos.max()), i))
    entries.sort(key=lambda e: (e.average, e.index))
    return entries


# -- normalization and OWA-style operators -----------------------------------

def normalize_criteria(c) -> np.ndarray:
    """Map raw criteria (x1..x7) into [0, 1] with mismatch columns inverted."""
    a = _raw(c) / SCALE
    return np.where(ORIENTATION < 0, 1.0 - a, a)


def _weights(w: Sequence[float], total: float = 1.0) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be non-negative with at least one positive entry")
    return w * (total / w.sum())


def owa_named_weights(name: str, n: int = N_CRITERIA, literal_linear: bool = False) -> np.ndarray:
    if name == "maximum":
        w = np.zeros(n)
        w[0] = 1.0
    elif name == "minimum":
        w = np.zeros(n)
        w[-1] = 1.0
    elif name == "average":
        w = np.ones(n)
    elif name == "linear":
        # Default gives the largest sorted value the largest weight; the
        # literal w_i = i reading does the opposite.
        w = np.arange(1, n + 1, dtype=np.float64)
        if not literal_linear:
            w = w[::-1]
    else:
        raise ValueError(f"unknown OWA weight preset {name!r}")
    return _weights(w)


def owa(a, w) -> float | np.ndarray:
    """Ordered weighted average; `a` may be one vector or rows of vectors."""
    w = _weights(w)
    b = -np.sort(-np.asarray(a, dtype=np.float64), axis=-1)
    return b @ w


OWHM_EPS = 1e-6


def owhm(a, w) -> float | np.ndarray:
    """Ordered weighted harmonic mean with weights rescaled to sum to n."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[-1]
    w = _weights(w, total=n)
    b = -np.sort(-a, axis=-1)
    b = np.where(b == 0, OWHM_EPS, b)
    return n / (w / b).sum(axis=-1)


# -- fuzzy measures and integrals --------------------------------------------

LAMBDA_TOL = 1e-10


def _lambda_residual(lam: float, d: np.ndarray) -> float:
    return float(np.prod(1.0 + lam * d) - (1.0 + lam))


def solve_lambda(densities: Sequence[float]) -> float:
    """Root lambda > -1 of prod(1 + lambda*d_i) = 1 + lambda, by bisection."""
    d = np.asarray(densities, dtype=np.float64)
    if d.ndim != 1 or np.any(d <= 0) or np.any(d >= 1):
        raise ValueError("densities must lie in the open interval (0, 1)")
    total = d.sum()
    if abs(total - 1.0) <= 1e-9:
        return 0.0
    f = lambda lam: _lambda_residual(lam, d)  # noqa: E731
    # Bracket [neg, pos]: f(neg) < 0 <= f(pos) or reversed; keep the sign roles.
    if total > 1:
        pos, neg = -1.0, 0.0
    else:
        neg, pos = 0.0, 1.0
        while f(pos) <= 0:
            pos *= 2.0
    for _ in range(2000):
        mid = 0.5 * (pos + neg)
        if mid == pos or mid == neg:
            break
        if f(mid) > 0:
            pos = mid
        else:
            neg = mid
    lam = pos if abs(f(pos)) < abs(f(neg)) else neg
    if lam == 0.0:
        lam = pos
    # Newton polishing; bisection alone stalls at float spacing for large roots.
    for _ in range(8):
        deriv = float(np.sum(d * np.prod(1.0 + lam * d) / (1.0 + lam * d))) - 1.0
        if deriv == 0:
            break
        step = lam - f(lam) / deriv
        if not (min(pos, neg) <= step <= max(pos, neg)) or abs(f(step)) >= abs(f(lam)):
            break
        lam = step
    return lam


@dataclass(frozen=True)
class FuzzyMeasure:
    kind: str  # "cardinality" or "lambda"
    n: int = N_CRITERIA
    densities: tuple[float, ...] | None = None
    lam: float | None = None

    @classmethod
    def cardinality(cls, n: int = N_CRITERIA) -> "FuzzyMeasure":
        return cls("cardinality", n)

    @classmethod
    def sugeno_lambda(cls, densities: Sequence[float]) -> "FuzzyMeasure":
        d = tuple(float(x) for x in densities)
        return cls("lambda", len(d), d, solve_lambda(d))

    def __post_init__(self):
        if self.kind not in ("cardinality", "lambda"):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == "lambda" and (self.densities is None or self.lam is None):
            raise ValueError("a lambda measure needs densities and lambda")

    def measure(self, subset) -> float:
        subset = sorted(set(int(i) for i in subset))
        if self.kind == "cardinality":
            return len(subset) / self.n
        m = 0.0
        for i in subset:
            di = self.densities[i]
            m = m + di + self.lam * m * di
        return m

    def table(self) -> np.ndarray:
        """Measure of every subset, indexed by bitmask."""
        return _measure_table(self)


_TABLE_CACHE: dict[FuzzyMeasure, np.ndarray] = {}


def _measure_table(mu: FuzzyMeasure) -> np.ndarray:
    t = _TABLE_CACHE.get(mu)
    if t is None:
        t = np.array([mu.measure([i for i in range(mu.n) if mask >> i & 1])
                      for mask in range(1 << mu.n)])
        _TABLE_CACHE[mu] = t
    return t


def measure_of(subset, mu: FuzzyMeasure) -> float:
    return mu.measure(subset)


def _ascending_with_measures(a, mu: FuzzyMeasure):
    a = np.asarray(a, dtype=np.float64)
    order = np.argsort(a, axis=-1, kind="stable")
    f = np.take_along_axis(a, order, axis=-1)
    bits = np.left_shift(1, order)
    # A_i = {x_i..x_n}: suffix sums of disjoint bits.
    masks = np.flip(np.cumsum(np.flip(bits, axis=-1), axis=-1), axis=-1)
    return f, mu.table()[masks]


def choquet(a, mu: FuzzyMeasure) -> float | np.ndarray:
    f, m = _ascending_with_measures(a, mu)
    prev = np.concatenate([np.zeros(f.shape[:-1] + (1,)), f[..., :-1]], axis=-1)
    return ((f - prev) * m).sum(axis=-1)


def sugeno(a, mu: FuzzyMeasure) -> float | np.ndarray:
    f, m = _ascending_with_measures(a, mu)
    return np.minimum(f, m).max(axis=-1)


def densities_from_single_criterion_ranks(cases, eps: float = 1e-3,
                                          ties: str = "pessimistic") -> np.ndarray:
    """Fuzzy densities from how well each criterion alone ranks the true pair."""
    n = len(cases)
    if n < 2:
        raise ValueError("density estimation needs at least 2 paired cases")
    crit = cases.criteria()
    out = np.empty(N_CRITERIA)
    for c in Criterion:
        scores = crit[..., c] * ORIENTATION[c]
        avg = evaluation.positions_from_scores(scores, ties=ties).mean()
        out[c] = (n - avg) / (n - 1)
    return np.clip(out, eps, 1 - eps)


# -- score-based models ------------------------------------------------------

@dataclass(frozen=True)
class OwaModel:
    weights: tuple[float, ...]
    harmonic: bool = False
    name: str = ""

    lexicographic = False

    def scores(self, rows: np.ndarray) -> np.ndarray:
        a = normalize_criteria(rows)
        return owhm(a, self.weights) if self.harmonic else owa(a, self.weights)


@dataclass(frozen=True)
class FuzzyIntegralModel:
    integral: str  # "choquet" or "sugeno"
    measure: FuzzyMeasure
    name: str = ""

    lexicographic = False

    def scores(self, rows: np.ndarray) -> np.ndarray:
        a = normalize_criteria(rows)
        fn = choquet if self.integral == "choquet" else sugeno
        return fn(a, self.measure)
