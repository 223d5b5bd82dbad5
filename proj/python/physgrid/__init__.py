"""Physics-guided downscaling and forecasting on gridded fields."""

from ._core import (
    DataError,
    GridAxes,
    GridField,
    NumericalError,
    UsageError,
    acc,
    bicubic_upsample,
    chronological_split,
    climatology,
    downscale,
    fd_derivative,
    generate,
    load_grid,
    rmse,
    save_grid,
)
from ._core import train as _train

__all__ = [
    "DataError", "GridAxes", "GridField", "NumericalError", "UsageError", "acc", "bicubic_upsample",
    "chronological_split", "climatology", "downscale", "fd_derivative", "generate", "load_grid", "rmse",
    "save_grid", "train",
]


def _value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v + '"'
    return repr(v)


def train(data, **config):
    """Train on `data`; keyword arguments are training config keys (epochs=5, alpha=0.1, ...)."""
    text = "".join(f"{k} = {_value(v)}\n" for k, v in config.items())
    return _train(data, text)
