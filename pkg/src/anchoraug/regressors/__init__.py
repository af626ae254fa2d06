from .linear import (
    AnchorRegression,
    LinearModel,
    RidgeRegression,
    anchor_loss,
    anchor_loss_grad,
    fit_anchor_regression,
    fit_ols,
    fit_ridge,
)
from .metrics import metrics
from .mlp import MLP, MLPConfig, MLPRegressor, TrainReport, mlp_predict, mlp_train

__all__ = [
    "AnchorRegression",
    "LinearModel",
    "MLP",
    "MLPConfig",
    "MLPRegressor",
    "RidgeRegression",
    "TrainReport",
    "anchor_loss",
    "anchor_loss_grad",
    "fit_anchor_regression",
    "fit_ols",
    "fit_ridge",
    "metrics",
    "mlp_predict",
    "mlp_train",
]
