"""Rankings, correct-comparison positions, summary statistics and data splits."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Odontogram, Role, criteria_matrix, extract_criteria

TIE_RULES = ("pessimistic", "optimistic")


class PairedCaseSet:
    """AM/PM record pairs sharing a case_id, in a fixed order."""

    def __init__(self, pairs: Iterable[tuple[Odontogram, Odontogram]]):
        self.pairs = tuple(pairs)
        ids = [am.case_id for am, _ in self.pairs]
        if len(set(ids)) != len(ids):
            raise ValueError("case_ids must be unique")
        for am, pm in self.pairs:
            if am.case_id != pm.case_id or am.role is not Role.AM or pm.role is not Role.PM:
                raise ValueError(f"bad pair for case {am.case_id!r}")
        self._criteria: np.ndarray | None = None

    @classmethod
    def from_records(cls, records: Iterable[Odontogram]) -> "PairedCaseSet":
        """Pair records by case_id, in order of first appearance of the PM record."""
        records = list(records)
        ams = {r.case_id: r for r in records if r.role is Role.AM}
        pms = [r for r in records if r.role is Role.PM]
        missing = [p.case_id for p in pms if p.case_id not in ams]
        if missing:
            raise ValueError(f"no AM record for case(s) {', '.join(missing[:5])}")
        return cls((ams[p.case_id], p) for p in pms)

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, PairedCaseSet) and self.pairs == other.pairs

    @property
    def case_ids(self) -> list[str]:
        return [am.case_id for am, _ in self.pairs]

    @property
    def populations(self) -> list[str]:
        return [am.population for am, _ in self.pairs]

    @property
    def ams(self) -> list[Odontogram]:
        return [am for am, _ in self.pairs]

    @property
    def pms(self) -> list[Odontogram]:
        return [pm for _, pm in self.pairs]

    def records(self) -> list[Odontogram]:
        return self.ams + self.pms

    def subset(self, indices: Sequence[int]) -> "PairedCaseSet":
        out = PairedCaseSet(self.pairs[i] for i in indices)
        if self._criteria is not None:
            idx = np.asarray(indices, dtype=np.intp)
            out._criteria = self._criteria[np.ix_(idx, idx)]
        return out

    def criteria(self) -> np.ndarray:
        """Raw criteria (x1..x7) for PM i against AM j, shape (n, n, 7)."""
        if self._criteria is None:
            self._criteria = criteria_matrix(self.pms, self.ams)
        return self._criteria


# -- correct positions ------------------------------------------------------

def _check_ties(ties: str) -> None:
    if ties not in TIE_RULES:
        raise ValueError(f"unknown tie rule {ties!r}")


def positions_from_scores(scores: np.ndarray, ties: str = "pessimistic") -> np.ndarray:
    """Correct positions from score matrices whose diagonal holds the true pairs.

    `scores` has shape (..., n, n) with PM cases on the second-to-last axis.
    NaN scores rank below everything.
    """
    _check_ties(ties)
    s = np.where(np.isnan(scores), -np.inf, scores)
    n = s.shape[-1]
    true = np.diagonal(s, axis1=-2, axis2=-1)[..., None]
    pos = 1 + (s > true).sum(axis=-1)
    if ties == "pessimistic":
        pos = pos + (s == true).sum(axis=-1) - 1
    assert pos.max(initial=1) <= n
    return pos


def lex_positions(crit: np.ndarray, order, ties: str = "pessimistic") -> np.ndarray:
    """Correct positions under a lexicographic order over an (n, n, 7) matrix."""
    _check_ties(ties)
    keys = order.keys(crit)
    n = crit.shape[0]
    diag = np.arange(n)
    better = np.zeros((n, n), dtype=bool)
    undecided = np.ones((n, n), dtype=bool)
    for k in range(keys.shape[-1]):
        col = keys[..., k]
        true = col[diag, diag][:, None]
        gt = col > true
        better |= undecided & gt
        undecided &= col == true
    pos = 1 + better.sum(axis=1)
    if ties == "pessimistic":
        pos = pos + undecided.sum(axis=1) - 1
    return pos


def correct_position(scores: Sequence[float], true_index: int, ties: str = "pessimistic") -> int:
    _check_ties(ties)
    s = np.where(np.isnan(np.asarray(scores, float)), -np.inf, np.asarray(scores, float))
    t = s[true_index]
    pos = 1 + int((s > t).sum())
    if ties == "pessimistic":
        pos += int((s == t).sum()) - 1
    return pos


def unique_rows(crit: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct criteria rows and the inverse index reshaped to crit's leading axes."""
    flat = crit.reshape(-1, crit.shape[-1])
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    return uniq, inv.reshape(crit.shape[:-1])


def score_matrix(model, crit: np.ndarray) -> np.ndarray:
    uniq, inv = unique_rows(crit)
    return np.asarray(model.scores(uniq), dtype=np.float64)[inv]


def model_positions(model, crit: np.ndarray, ties: str = "pessimistic") -> np.ndarray:
    if getattr(model, "lexicographic", False):
        return lex_positions(crit, model, ties=ties)
    return positions_from_scores(score_matrix(model, crit), ties=ties)


@dataclass(frozen=True)
class Ranking:
    pm_case_id: str
    entries: tuple[tuple[str, float], ...]  # (am_case_id, score or lex position)
    correct_position: int


def order_candidates(rows: np.ndarray, model) -> tuple[list[int], np.ndarray]:
    """Best-first candidate order and a per-candidate value.

    Score models report their score (NaN ranks last); lexicographic orders
    report the candidate's 1-based place in the order.
    """
    n = len(rows)
    if getattr(model, "lexicographic", False):
        from .aggregators import lex_compare

        order = sorted(range(n), key=functools.cmp_to_key(
            lambda i, j: -lex_compare(rows[i], rows[j], model) or i - j))
        values = np.empty(n)
        values[order] = np.arange(1, n + 1)
        return order, values
    scores = np.asarray(model.scores(rows), dtype=np.float64)
    scores = np.where(np.isnan(scores), -np.inf, scores)
    return sorted(range(n), key=lambda i: (-scores[i], i)), scores


def build_ranking(pm: Odontogram, candidates: Sequence[Odontogram], model,
                  ties: str = "pessimistic") -> Ranking:
    """Rank AM candidates for one PM record, best first."""
    _check_ties(ties)
    if not candidates:
        raise ValueError("no AM candidates")
    ids = [c.case_id for c in candidates]
    if pm.case_id not in ids:
        raise ValueError(f"true AM record {pm.case_id!r} is not among the candidates")
    t = ids.index(pm.case_id)
    rows = np.stack([extract_criteria(am, pm).as_array() for am in candidates])
    order, values = order_candidates(rows, model)
    entries = tuple((ids[i], float(values[i])) for i in order)
    if getattr(model, "lexicographic", False):
        from .aggregators import lex_compare

        cmp = [lex_compare(rows[i], rows[t], model) for i in range(len(ids))]
        better = sum(c > 0 for c in cmp)
        tied = sum(c == 0 for c in cmp) - 1
    else:
        better = int((values > values[t]).sum())
        tied = int((values == values[t]).sum()) - 1
    pos = 1 + better + (tied if ties == "pessimistic" else 0)
    return Ranking(pm.case_id, entries, pos)


@dataclass(frozen=True)
class RankingStats:
    average: float
    q1: int
    q2: int
    q3: int
    p95: int
    p99: int
    max: int

    HEADER = ("Average", "Q1", "Q2", "Q3", "P95", "P99", "Max")

    def row(self) -> tuple:
        return (self.average, self.q1, self.q2, self.q3, self.p95, self.p99, self.max)


def nearest_rank(sorted_values: Sequence[int], pct: float) -> int:
    n = len(sorted_values)
    k = max(1, math.ceil(pct / 100.0 * n - 1e-12))
    return int(sorted_values[min(k, n) - 1])


def compute_stats(positions: Sequence[int]) -> RankingStats:
    p = sorted(int(x) for x in positions)
    if not p:
        raise ValueError("no positions")
    return RankingStats(
        average=sum(p) / len(p),
        q1=nearest_rank(p, 25), q2=nearest_rank(p, 50), q3=nearest_rank(p, 75),
        p95=nearest_rank(p, 95), p99=nearest_rank(p, 99), max=p[-1],
    )


@dataclass(frozen=True)
class NormalizedStats:
    average: float
    max: float


def normalize_rank_stats(stats: RankingStats, n_cases: int) -> NormalizedStats:
    if n_cases < 1:
        raise ValueError("n_cases must be positive")
    return NormalizedStats(stats.average / n_cases, stats.max / n_cases)


@dataclass(frozen=True)
class Evaluation:
    case_ids: tuple[str, ...]
    positions: np.ndarray
    stats: RankingStats


def evaluate_all(cases: PairedCaseSet, model, ties: str = "pessimistic") -> Evaluation:
    """One ranking per PM case against every AM case in the set."""
    if len(cases) == 0:
        raise ValueError("empty case set")
    pos = model_positions(model, cases.criteria(), ties=ties)
    return Evaluation(tuple(cases.case_ids), pos, compute_stats(pos))


def cmc(positions: Sequence[int], n_candidates: int) -> list[tuple[int, float]]:
    """Cumulative match curve: (k, % of cases with correct position <= k)."""
    p = np.asarray(positions, dtype=np.int64)
    if p.size == 0:
        raise ValueError("no positions")
    if p.max() > n_candidates or p.min() < 1:
        raise ValueError("position outside 1..n_candidates")
    counts = np.bincount(p, minlength=n_candidates + 1)[1:]
    cum = np.cumsum(counts)
    return [(k + 1, 100.0 * int(c) / p.size) for k, c in enumerate(cum)]


# -- data splitting -----------------------------------------------------------

@dataclass(frozen=True)
class DataSplit:
    test: tuple[int, ...]
    folds: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]  # (train, validation)

    def assignment(self, n: int) -> list[str]:
        out = [""] * n
        for i in self.test:
            out[i] = "test"
        for k, (_, val) in enumerate(self.folds, start=1):
            for i in val:
                out[i] = f"fold_{k}"
        return out


def split_data(cases: PairedCaseSet, seed: int, test_fraction: float = 0.2,
               n_folds: int = 5, min_per_population: int = 10) -> DataSplit:
    """Per-population holdout test set plus k folds over the remaining pairs."""
    rng = np.random.default_rng(seed)
    pops = cases.populations
    test: list[int] = []
    fold_parts: list[list[int]] = [[] for _ in range(n_folds)]
    for label in sorted(set(pops)):
        idx = np.array([i for i, p in enumerate(pops) if p == label])
        if len(idx) < min_per_population:
            raise ValueError(f"population {label!r} has {len(idx)} pairs; "
                             f"need at least {min_per_population}")
        perm = rng.permutation(idx)
        n_test = int(math.floor(test_fraction * len(idx) + 1e-9))
        test.extend(perm[:n_test].tolist())
        for k, part in enumerate(np.array_split(perm[n_test:], n_folds)):
            fold_parts[k].extend(part.tolist())
    folds = []
    for k in range(n_folds):
        val = sorted(fold_parts[k])
        train = sorted(i for j in range(n_folds) if j != k for i in fold_parts[j])
        folds.append((tuple(train), tuple(val)))
    return DataSplit(tuple(sorted(test)), tuple(folds))
