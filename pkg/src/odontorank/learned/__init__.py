from .ga import (GaConfig, RankObjective, TrainResult, crossover_blx, ga_train,
                 read_key_values)
from .io import load_model, model_from_dict, model_to_dict, save_model, save_result
from .models import (MLP_N_PARAMS, ExpressionTree, LinearModel, MlpModel, lr_score,
                     mlp_forward, published_linear_model, published_sr_tree, sr_eval)

__all__ = [
    "GaConfig", "RankObjective", "TrainResult", "crossover_blx", "ga_train",
    "read_key_values", "load_model", "model_from_dict", "model_to_dict", "save_model",
    "save_result", "MLP_N_PARAMS", "ExpressionTree", "LinearModel", "MlpModel",
    "lr_score", "mlp_forward", "published_linear_model", "published_sr_tree", "sr_eval",
]
