"""Trained-model files (JSON)."""
from __future__ import annotations

import json
from pathlib import Path

from .ga import GaConfig, TrainResult
from .models import ExpressionTree, LinearModel, MlpModel


def model_to_dict(model, config: GaConfig | None = None, fitness: float | None = None) -> dict:
    d: dict = {"kind": model.kind}
    if model.kind == "symbolic":
        d["expression"] = model.prefix()
        d["max_depth"] = model.max_depth
    else:
        d["parameters"] = [float(x) for x in model.params]
        if model.kind == "mlp":
            d["gene_scale"] = model.gene_scale
    if config is not None:
        d["config"] = config.to_dict()
        d["seed"] = config.seed
    if fitness is not None:
        d["fitness"] = fitness
    return d


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "linear":
        return LinearModel.from_params(d["parameters"])
    if kind == "mlp":
        return MlpModel.from_params(d["parameters"], float(d.get("gene_scale", 50.0)))
    if kind == "symbolic":
        return ExpressionTree.parse(d["expression"], int(d.get("max_depth", 8)))
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(path: str | Path, model, config: GaConfig | None = None,
               fitness: float | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, config, fitness), indent=1) + "\n")


def save_result(path: str | Path, result: TrainResult) -> None:
    save_model(path, result.model, result.config, result.fitness)


def load_model(path: str | Path):
    return model_from_dict(json.loads(Path(path).read_text()))
