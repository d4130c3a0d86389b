"""Model specification strings and aggregator config files."""
from __future__ import annotations

import json
from pathlib import Path

from . import aggregators as agg
from .learned import model_from_dict, read_key_values
from .learned.ga import ConfigError

SPEC_HELP = ("aa-lex | lo-lex | lex:<A>B>...> | owa:<preset|w1,..,w7> | owhm:<preset|w1,..,w7> "
             "| choquet:<cardinality|lambda> | sugeno:<cardinality|lambda> | file:<path>")

PRESETS = ("maximum", "minimum", "average", "linear")


class ModelSpecError(ValueError):
    pass


def _weights(arg: str, literal_linear: bool = False):
    if arg in PRESETS:
        return tuple(agg.owa_named_weights(arg, literal_linear=literal_linear)), arg
    try:
        w = tuple(float(x) for x in arg.split(","))
    except ValueError:
        raise ModelSpecError(f"unknown weight preset {arg!r}") from None
    if len(w) != agg.N_CRITERIA:
        raise ModelSpecError("explicit weights need 7 values")
    return w, "custom"


def _measure(kind: str, densities=None, lambda_cases=None) -> agg.FuzzyMeasure:
    if kind == "cardinality":
        return agg.FuzzyMeasure.cardinality()
    if kind != "lambda":
        raise ModelSpecError(f"unknown measure {kind!r}")
    if densities is None:
        if lambda_cases is None:
            raise ModelSpecError("a lambda measure needs densities or training cases")
        densities = agg.densities_from_single_criterion_ranks(lambda_cases)
    return agg.FuzzyMeasure.sugeno_lambda(densities)


def parse_densities(text: str) -> tuple[float, ...]:
    d = tuple(float(x) for x in text.replace(",", " ").split())
    if len(d) != agg.N_CRITERIA:
        raise ModelSpecError("densities need 7 values")
    return d


def build_aggregator(operator: str, arg: str, densities=None, lambda_cases=None,
                     literal_linear: bool = False):
    if operator == "aa-lex":
        return agg.aa_order()
    if operator == "lo-lex":
        return agg.lo_order()
    if operator == "lex":
        try:
            return agg.LexOrder.parse(arg)
        except ValueError as e:
            raise ModelSpecError(str(e)) from None
    if operator in ("owa", "owhm"):
        w, name = _weights(arg, literal_linear)
        return agg.OwaModel(w, harmonic=operator == "owhm", name=f"{operator}:{name}")
    if operator in ("choquet", "sugeno"):
        mu = _measure(arg, densities, lambda_cases)
        return agg.FuzzyIntegralModel(operator, mu, name=f"{operator}:{arg}")
    raise ModelSpecError(f"unknown model spec; expected {SPEC_HELP}")


def load_aggregator_config(path: str | Path, lambda_cases=None):
    """Key-value aggregator file: operator, weights, measure, densities, literal_linear."""
    kv = read_key_values(Path(path).read_text())
    op = kv.get("operator")
    if op is None:
        raise ConfigError("aggregator config needs an 'operator' key")
    densities = parse_densities(kv["densities"]) if "densities" in kv else None
    literal = kv.get("literal_linear", "false").strip().lower() in ("1", "true", "yes")
    arg = kv.get("weights") or kv.get("measure") or kv.get("order", "")
    return build_aggregator(op, arg, densities, lambda_cases, literal)


def parse_model_spec(spec: str, densities=None, lambda_cases=None):
    """Resolve a model spec string; trained models load from JSON files."""
    if spec in ("aa-lex", "lo-lex"):
        return build_aggregator(spec, "")
    op, sep, arg = spec.partition(":")
    if not sep:
        raise ModelSpecError(f"unknown model spec {spec!r}; expected {SPEC_HELP}")
    if op == "file":
        path = Path(arg)
        text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            return load_aggregator_config(path, lambda_cases)
        return model_from_dict(data)
    return build_aggregator(op, arg, densities, lambda_cases)


def needs_training_cases(spec: str) -> bool:
    return spec.endswith(":lambda")
