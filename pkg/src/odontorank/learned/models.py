"""Scoring models trained by the evolutionary search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..aggregators import normalize_criteria
from ..core import CriteriaVector
from . import gp


def _rows(c) -> np.ndarray:
    if isinstance(c, CriteriaVector):
        return c.as_array()
    return np.asarray(c, dtype=np.float64)


@dataclass(frozen=True)
class LinearModel:
    beta: float
    w: tuple[float, ...]

    kind = "linear"
    lexicographic = False
    n_params = 8

    def __post_init__(self):
        w = tuple(float(x) for x in self.w)
        if len(w) != 7 or not np.all(np.isfinite(w + (self.beta,))):
            raise ValueError("a linear model needs 7 finite weights and a finite beta")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def from_params(cls, params) -> "LinearModel":
        p = np.asarray(params, dtype=np.float64)
        return cls(float(p[0]), tuple(p[1:]))

    @property
    def params(self) -> np.ndarray:
        return np.array((self.beta,) + self.w)

    def scores(self, rows) -> np.ndarray:
        return self.beta + _rows(rows) @ np.array(self.w)


def lr_score(m: LinearModel, c) -> float:
    """beta + sum(w_i * x_i) over raw criteria."""
    return float(m.scores(c))


def published_linear_model() -> LinearModel:
    """The best-fold linear model reported for the Israeli/Chilean data."""
    return LinearModel(0.67, (-0.2891, 0.4594, -0.8470, 0.0214, -0.1328, 0.0544, -0.9323))


@dataclass(frozen=True)
class ExpressionTree:
    root: tuple
    max_depth: int = gp.MAX_DEPTH

    kind = "symbolic"
    lexicographic = False

    def __post_init__(self):
        gp.validate(self.root, self.max_depth)

    @classmethod
    def parse(cls, text: str, max_depth: int = gp.MAX_DEPTH) -> "ExpressionTree":
        return cls(gp.from_prefix(text), max_depth)

    def __str__(self) -> str:
        return gp.to_infix(self.root)

    def prefix(self) -> str:
        return gp.to_prefix(self.root)

    def scores(self, rows) -> np.ndarray:
        return gp.evaluate(self.root, _rows(rows))


def sr_eval(t: ExpressionTree, c) -> float:
    return float(t.scores(c))


def published_sr_tree(mapping: str = "prose") -> ExpressionTree:
    """((a - b) / c) / b for the best reported symbolic model.

    "prose" reads a = number of matches, b = percentage of mismatches and
    c = number of possible matches; "literal" uses the linear model's x1..x7.
    """
    if mapping == "prose":
        text = "/ / - x2 x7 x6 x7"
    elif mapping == "literal":
        text = "/ / - x1 x6 x5 x6"
    else:
        raise ValueError(f"unknown mapping {mapping!r}")
    return ExpressionTree.parse(text)


MLP_LAYERS = (7, 32, 32, 32, 1)


def _layer_shapes(layers=MLP_LAYERS):
    return [(a, b) for a, b in zip(layers[:-1], layers[1:])]


MLP_N_PARAMS = sum(a * b + b for a, b in _layer_shapes())


# Genes are divided by this before use as weights, so the default gene range
# [-50, 50] yields weights in [-1, 1] and tanh units stay out of saturation.
MLP_GENE_SCALE = 50.0


@dataclass(frozen=True, eq=False)
class MlpModel:
    params: np.ndarray
    gene_scale: float = MLP_GENE_SCALE

    kind = "mlp"
    lexicographic = False
    n_params = MLP_N_PARAMS

    def __post_init__(self):
        p = np.array(self.params, dtype=np.float64).ravel()
        if p.size != MLP_N_PARAMS:
            raise ValueError(f"expected {MLP_N_PARAMS} MLP parameters, got {p.size}")
        if not self.gene_scale > 0:
            raise ValueError("gene_scale must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "gene_scale", float(self.gene_scale))

    def __eq__(self, other) -> bool:
        return (isinstance(other, MlpModel) and self.gene_scale == other.gene_scale
                and np.array_equal(self.params, other.params))

    def __hash__(self) -> int:
        return hash((self.params.tobytes(), self.gene_scale))

    @classmethod
    def from_params(cls, params, gene_scale: float = MLP_GENE_SCALE) -> "MlpModel":
        return cls(params, gene_scale)

    def scores(self, rows) -> np.ndarray:
        x = normalize_criteria(_rows(rows))
        return mlp_batch_forward(self.params[None, :], x, self.gene_scale)[0]


def unpack_mlp(params: np.ndarray):
    """Split a (P, 2625) parameter batch into per-layer (W, b) arrays."""
    out, k = [], 0
    for a, b in _layer_shapes():
        W = params[:, k:k + a * b].reshape(-1, a, b)
        k += a * b
        bias = params[:, k:k + b].reshape(-1, 1, b)
        k += b
        out.append((W, bias))
    return out


def mlp_batch_forward(params: np.ndarray, x: np.ndarray,
                      gene_scale: float = MLP_GENE_SCALE) -> np.ndarray:
    """Scores for a batch of networks on normalized inputs; shape (P, *x.shape[:-1])."""
    params = np.atleast_2d(params) / gene_scale
    lead = x.shape[:-1]
    x2 = x.reshape(-1, x.shape[-1])
    out = np.empty((len(params), len(x2)))
    # One network at a time: faster than a stacked batched matmul here.
    for k, p in enumerate(params):
        h = x2
        layers = unpack_mlp(p[None, :])
        for W, b in layers[:-1]:
            h = np.tanh(h @ W[0] + b[0])
        W, b = layers[-1]
        out[k] = (h @ W[0] + b[0])[:, 0]
    return out.reshape((-1,) + lead)


def mlp_forward(m: MlpModel, c) -> float:
    return float(m.scores(c))
