import numpy as np

from ..exceptions import DimensionMismatchError


def metrics(pred, truth) -> dict:
    """MSE, RMSE and MAPE (in percent).

    Samples with a zero target are left out of the MAPE; how many were left
    out is reported under ``mape_excluded``.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise DimensionMismatchError(
            f"pred has length {pred.size} but truth has length {truth.size}"
        )
    err = pred - truth
    mse = float(np.mean(err**2))
    nz = truth != 0
    mape = float(100.0 * np.mean(np.abs(err[nz]) / np.abs(truth[nz]))) if nz.any() else float("nan")
    return {"mse": mse, "rmse": float(np.sqrt(mse)), "mape": mape,
            "mape_excluded": int((~nz).sum())}
