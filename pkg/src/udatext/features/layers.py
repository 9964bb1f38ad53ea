"""Precomputed per-layer transformer features and layer-selection strategies."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..corpus import read_jsonl
from ..errors import ContractError


class LayerStrategy(str, Enum):
    FIRST = "first"
    LAST = "last"
    CONCAT_LAST4 = "concat4"


@dataclass(frozen=True)
class LayerFeatures:
    id: str
    layers: np.ndarray      # (n_layers, d), first -> last

    def __post_init__(self):
        layers = np.asarray(self.layers, dtype=np.float64)
        if layers.ndim != 2 or layers.shape[0] < 1 or layers.shape[1] < 1:
            raise ContractError(f"{self.id}: layers must be a nonempty list of equal-length vectors")
        object.__setattr__(self, "layers", layers)


def select_layers(features: LayerFeatures, strategy="last") -> np.ndarray:
    strategy = LayerStrategy(strategy)
    layers = features.layers
    if strategy is LayerStrategy.FIRST:
        return layers[0].copy()
    if strategy is LayerStrategy.LAST:
        return layers[-1].copy()
    if layers.shape[0] < 4:
        raise ContractError(f"{features.id}: concat4 needs at least 4 layers, got {layers.shape[0]}")
    return layers[-4:].reshape(-1)


def load_layer_features(path) -> list:
    out = []
    for lineno, obj in read_jsonl(path):
        try:
            out.append(LayerFeatures(str(obj["id"]), np.array(obj["layers"], dtype=np.float64)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"{path}: line {lineno}: bad layer record ({exc})") from None
    return out
