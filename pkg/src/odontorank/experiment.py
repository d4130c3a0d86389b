"""Cross-validated training and the end-to-end synthetic benchmark."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import aggregators, datagen
from .evaluation import (DataSplit, NormalizedStats, PairedCaseSet, RankingStats,
                         compute_stats, evaluate_all, normalize_rank_stats, split_data)
from .learned import GaConfig, RankObjective, TrainResult, ga_train


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


@dataclass
class FoldResult:
    result: TrainResult
    train: NormalizedStats
    validation: NormalizedStats
    validation_raw: RankingStats


@dataclass
class CrossValidation:
    kind: str
    split: DataSplit
    folds: list[FoldResult]
    best: int  # index into folds

    @property
    def model(self):
        return self.folds[self.best].result.model

    def fold_table(self) -> list[tuple]:
        """(fold, train avg, train max, validation avg, validation max), normalized."""
        rows = [(k + 1, f.train.average, f.train.max, f.validation.average, f.validation.max)
                for k, f in enumerate(self.folds)]
        means = np.array([r[1:] for r in rows]).mean(axis=0)
        return rows + [("average",) + tuple(float(x) for x in means)]


def select_fold(folds: list[FoldResult]) -> int:
    """Best validation average position, ties broken by validation maximum."""
    keys = [(f.validation.average, f.validation.max, k) for k, f in enumerate(folds)]
    return min(keys)[2]


def cross_validate(cases: PairedCaseSet, kind: str, cfg: GaConfig, seed: int,
                   split: DataSplit | None = None) -> CrossValidation:
    split = split or split_data(cases, seed)
    folds = []
    for k, (train_idx, val_idx) in enumerate(split.folds):
        train, val = cases.subset(train_idx), cases.subset(val_idx)
        fold_cfg = dataclasses.replace(cfg, seed=fold_seed(cfg.seed, k))
        result = ga_train(kind, RankObjective(train, cfg.fitness, cfg.ties), fold_cfg)
        tr = evaluate_all(train, result.model, ties=cfg.ties).stats
        va = evaluate_all(val, result.model, ties=cfg.ties).stats
        folds.append(FoldResult(result, normalize_rank_stats(tr, len(train)),
                                normalize_rank_stats(va, len(val)), va))
    return CrossValidation(kind, split, folds, select_fold(folds))


def lambda_measure(train: PairedCaseSet) -> aggregators.FuzzyMeasure:
    return aggregators.FuzzyMeasure.sugeno_lambda(
        aggregators.densities_from_single_criterion_ranks(train))


@dataclass
class BenchmarkResult:
    cases: PairedCaseSet
    split: DataSplit
    test_stats: dict[str, RankingStats]
    test_positions: dict[str, np.ndarray]
    trained: dict[str, CrossValidation]


def run_benchmark(seed: int, cfg: GaConfig | None = None,
                  kinds=("linear", "symbolic", "mlp")) -> BenchmarkResult:
    """Generate the `large` scenario, split, train every model kind, score the test set."""
    cfg = cfg or GaConfig(seed=seed)
    cases = datagen.generate(datagen.benchmark_configs(seed)["large"])
    split = split_data(cases, seed)
    test = cases.subset(split.test)
    non_test = cases.subset([i for i in range(len(cases)) if i not in set(split.test)])
    mu = lambda_measure(non_test)
    models = {
        "AA": aggregators.aa_order(),
        "LO": aggregators.lo_order(),
        "OWA-linear": aggregators.OwaModel(tuple(aggregators.owa_named_weights("linear"))),
        "Choquet-lambda": aggregators.FuzzyIntegralModel("choquet", mu),
        "Sugeno-lambda": aggregators.FuzzyIntegralModel("sugeno", mu),
    }
    trained = {}
    for kind in kinds:
        trained[kind] = cross_validate(cases, kind, cfg, seed, split)
        models[{"linear": "LR", "symbolic": "SR", "mlp": "MLP"}[kind]] = trained[kind].model
    stats, positions = {}, {}
    for name, model in models.items():
        ev = evaluate_all(test, model, ties=cfg.ties)
        stats[name], positions[name] = ev.stats, ev.positions
    return BenchmarkResult(cases, split, stats, positions, trained)


__all__ = ["CrossValidation", "FoldResult", "BenchmarkResult", "cross_validate",
           "run_benchmark", "select_fold", "lambda_measure", "compute_stats"]
