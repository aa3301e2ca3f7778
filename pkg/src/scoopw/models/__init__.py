"""Pluggable execution models."""

from scoopw.models.base import ExecutionModel
from scoopw.models.dscoop import DScoopModel
from scoopw.models.qoq import QoQModel
from scoopw.models.rq import RQModel

MODELS = {"rq": RQModel, "qoq": QoQModel, "dscoop": DScoopModel}


def get_model(name: str, **options) -> ExecutionModel:
    """Instantiate a model by id ("rq", "qoq", "dscoop")."""
    try:
        cls = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {', '.join(MODELS)}") from None
    return cls(**options)


__all__ = ["DScoopModel", "ExecutionModel", "MODELS", "QoQModel", "RQModel", "get_model"]
