"""Genetic training of scoring models against rank-position fitness."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..aggregators import normalize_criteria
from ..evaluation import PairedCaseSet, positions_from_scores, unique_rows
from . import gp
from .models import (MLP_N_PARAMS, ExpressionTree, LinearModel, MlpModel,
                     mlp_batch_forward)

MODEL_KINDS = ("linear", "symbolic", "mlp")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 100
    gene_min: float = -50.0
    gene_max: float = 50.0
    selection: str = "pool"  # roulette within a sampled pool, or "roulette" over everyone
    selection_pool: int = 50
    crossover_prob: float = 0.70
    mutation_prob: float = 0.05
    generations: int = 1000
    blx_alpha: float = 0.5
    elitism: int = 1
    seed: int = 0
    fitness: str = "average"  # or "max"
    ties: str = "pessimistic"
    max_depth: int = gp.MAX_DEPTH

    def __post_init__(self):
        if not (0 <= self.crossover_prob <= 1 and 0 <= self.mutation_prob <= 1):
            raise ConfigError("probabilities must lie in [0, 1]")
        if self.population_size < 1 or self.generations < 1:
            raise ConfigError("population_size and generations must be positive")
        if not self.gene_min < self.gene_max:
            raise ConfigError("gene_min must be below gene_max")
        if not 0 <= self.elitism <= self.population_size:
            raise ConfigError("elitism must be within the population size")
        if self.selection not in ("pool", "roulette") or self.selection_pool < 1:
            raise ConfigError(f"bad selection settings {self.selection!r}")
        if self.fitness not in ("average", "max"):
            raise ConfigError(f"unknown fitness {self.fitness!r}")
        if self.blx_alpha < 0 or self.max_depth < 2:
            raise ConfigError("blx_alpha must be >= 0 and max_depth >= 2")

    @property
    def gene_range(self) -> tuple[float, float]:
        return (self.gene_min, self.gene_max)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GaConfig":
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(d) - set(fields)
        if unknown:
            raise ConfigError(f"unknown GA config keys: {', '.join(sorted(unknown))}")
        kw = {}
        for k, v in d.items():
            default = getattr(cls, k)
            try:
                kw[k] = type(default)(v) if not isinstance(default, str) else str(v)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {k}: {v!r}") from None
        return cls(**kw)

    @classmethod
    def from_text(cls, text: str) -> "GaConfig":
        return cls.from_dict(read_key_values(text))

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


def read_key_values(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[root]\n" + text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    return dict(parser["root"])


class RankObjective:
    """Average (or maximum) correct position of the true pair over a case set.

    Criteria are deduplicated once; models score only the distinct rows.
    """

    def __init__(self, cases: PairedCaseSet, metric: str = "average",
                 ties: str = "pessimistic"):
        if len(cases) == 0:
            raise ValueError("empty training set")
        self.n = len(cases)
        self.rows, self.inv = unique_rows(cases.criteria())
        self.norm_rows = normalize_criteria(self.rows)
        self.metric = metric
        self.ties = ties

    def positions(self, uniq_scores: np.ndarray) -> np.ndarray:
        s = np.atleast_2d(uniq_scores)[:, self.inv]
        return positions_from_scores(s, ties=self.ties)

    def fitness(self, uniq_scores: np.ndarray) -> np.ndarray:
        pos = self.positions(uniq_scores)
        return pos.mean(axis=-1) if self.metric == "average" else pos.max(axis=-1).astype(float)


def crossover_blx(a, b, alpha: float, rng: np.random.Generator,
                  gene_range: tuple[float, float] | None = None):
    """Two BLX-alpha offspring, optionally clamped to gene_range."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("parents differ in length")
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    d = hi - lo
    lo, hi = lo - alpha * d, hi + alpha * d
    c1 = lo + rng.random(a.shape) * (hi - lo)
    c2 = lo + rng.random(a.shape) * (hi - lo)
    if gene_range is not None:
        c1 = np.clip(c1, *gene_range)
        c2 = np.clip(c2, *gene_range)
    return c1, c2


def select(fit: np.ndarray, rng: np.random.Generator, cfg: GaConfig) -> int:
    """Roulette wheel on inverted (minimized) fitness, optionally within a pool."""
    n = len(fit)
    if cfg.selection == "pool" and cfg.selection_pool < n:
        pool = rng.choice(n, cfg.selection_pool, replace=False)
    else:
        pool = np.arange(n)
    f = fit[pool]
    w = f.max() - f + 1e-6
    return int(pool[rng.choice(len(pool), p=w / w.sum())])


@dataclass
class TrainResult:
    model: object
    fitness: float
    history: list[float]
    config: GaConfig
    kind: str = field(default="")


def _evolve(init, score_batch, vary, objective: RankObjective, cfg: GaConfig,
            rng: np.random.Generator):
    """Generational loop with elitism; individuals are opaque to it.

    `vary` returns (child, changed) pairs; unchanged copies keep their
    parent's fitness instead of being re-scored.
    """
    pop = list(init)
    known = [None] * len(pop)
    history: list[float] = []
    for g in range(cfg.generations):
        todo = [i for i, f in enumerate(known) if f is None]
        fit = np.array(known, dtype=np.float64)
        if todo:
            fit[todo] = objective.fitness(score_batch([pop[i] for i in todo]))
        order = np.argsort(fit, kind="stable")
        history.append(float(fit[order[0]]))
        if g == cfg.generations - 1:
            break
        nxt = [pop[i] for i in order[:cfg.elitism]]
        nxt_known = [fit[i] for i in order[:cfg.elitism]]
        while len(nxt) < cfg.population_size:
            ia, ib = select(fit, rng, cfg), select(fit, rng, cfg)
            for (child, changed), parent in zip(vary(pop[ia], pop[ib]), (ia, ib)):
                if len(nxt) < cfg.population_size:
                    nxt.append(child)
                    nxt_known.append(None if changed else fit[parent])
        pop, known = nxt, nxt_known
    return pop[order[0]], history


def _real_vary(cfg: GaConfig, rng: np.random.Generator):
    def vary(a, b):
        crossed = rng.random() < cfg.crossover_prob
        if crossed:
            children = crossover_blx(a, b, cfg.blx_alpha, rng, cfg.gene_range)
        else:
            children = (a.copy(), b.copy())
        out = []
        for c in children:
            changed = crossed
            # One uniformly chosen gene is reset per mutation event.
            if rng.random() < cfg.mutation_prob:
                c[rng.integers(c.size)] = rng.uniform(*cfg.gene_range)
                changed = True
            out.append((c, changed))
        return out
    return vary


def _tree_vary(cfg: GaConfig, rng: np.random.Generator):
    def vary(a, b):
        crossed = rng.random() < cfg.crossover_prob
        if crossed:
            children = gp.subtree_crossover(a, b, rng, cfg.max_depth)
        else:
            children = (a, b)
        out = []
        for c in children:
            changed = crossed
            if rng.random() < cfg.mutation_prob:
                if rng.random() < 0.5:
                    c = gp.point_mutation(c, rng, cfg.gene_range)
                else:
                    c = gp.subtree_mutation(c, rng, cfg.gene_range, cfg.max_depth)
                changed = True
            out.append((c, changed))
        return out
    return vary


def ga_train(model_kind: str, train: PairedCaseSet | RankObjective,
             cfg: GaConfig = GaConfig()) -> TrainResult:
    """Evolve a scoring model that minimizes the correct-comparison position."""
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    objective = train if isinstance(train, RankObjective) else RankObjective(
        train, metric=cfg.fitness, ties=cfg.ties)
    rng = np.random.default_rng(cfg.seed)
    P = cfg.population_size

    if model_kind == "symbolic":
        init = gp.ramped_half_and_half(rng, P, cfg.gene_range)

        def score_batch(pop):
            return np.stack([gp.evaluate(t, objective.rows) for t in pop])

        best, history = _evolve(init, score_batch, _tree_vary(cfg, rng), objective, cfg, rng)
        model = ExpressionTree(best, cfg.max_depth)
    else:
        n_genes = LinearModel.n_params if model_kind == "linear" else MLP_N_PARAMS
        init = list(rng.uniform(cfg.gene_min, cfg.gene_max, (P, n_genes)))
        if model_kind == "linear":
            X1 = np.hstack([np.ones((len(objective.rows), 1)), objective.rows])

            def score_batch(pop):
                return np.asarray(pop) @ X1.T
        else:
            scale = max(abs(cfg.gene_min), abs(cfg.gene_max))

            def score_batch(pop):
                return mlp_batch_forward(np.asarray(pop), objective.norm_rows, scale)

        best, history = _evolve(init, score_batch, _real_vary(cfg, rng), objective, cfg, rng)
        model = (LinearModel.from_params(best) if model_kind == "linear"
                 else MlpModel.from_params(best, scale))
    return TrainResult(model, history[-1], history, cfg, model_kind)
