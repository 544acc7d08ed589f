"""Chain-topology inference models as per-layer compute/data tables.

A model is a sequence of layers; a split decision ``s`` means the first ``s``
layers run on the device and the remaining ``M - s`` layers run on the edge
server.  All cost formulas consume the prefix sums precomputed here.

Units are abstract but consistent across the package: layer work in GFLOP,
data sizes in Mbit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LayerProfile",
    "ModelProfile",
    "layer_flops",
    "build_profile",
    "synthetic_catalog",
    "load_catalog",
    "CATALOG_NAMES",
]


@dataclass(frozen=True)
class LayerProfile:
    """One layer of a chain model.

    ``out_size_bits`` is the intermediate output transmitted when the split
    occurs right after this layer.
    """

    conv_count: int
    pool_count: int
    relu_count: int
    flops: float
    out_size_bits: float

    def __post_init__(self):
        if self.conv_count < 0 or self.pool_count < 0 or self.relu_count < 0:
            raise ValueError("operation counts must be nonnegative")
        if self.flops <= 0:
            raise ValueError("layer flops must be positive")
        if self.out_size_bits < 0:
            raise ValueError("out_size_bits must be nonnegative")


@dataclass(frozen=True)
class ModelProfile:
    """Chain model with prefix sums over layer work.

    ``input_bits`` is the raw input size, used as the transmitted payload for
    the all-on-server split (s = 0).  ``final_result_bits`` is the inference
    result returned to the device.
    """

    layers: tuple[LayerProfile, ...]
    final_result_bits: float
    input_bits: float
    prefix_flops: np.ndarray = field(repr=False)
    total_flops: float = 0.0

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def on_device_flops(self, s: int) -> float:
        """Work executed on the device for split s (first s layers)."""
        self._check_split(s)
        return 0.0 if s == 0 else float(self.prefix_flops[s - 1])

    def on_server_flops(self, s: int) -> float:
        """Work executed on the server for split s (layers s+1..M)."""
        self._check_split(s)
        return self.total_flops - self.on_device_flops(s)

    def split_output_bits(self, s: int) -> float:
        """Payload transmitted to the server when splitting at s.

        s = 0 sends the raw input; s = M runs everything on the device and
        sends nothing (the value here is only meaningful for s < M).
        """
        self._check_split(s)
        if s == 0:
            return self.input_bits
        return self.layers[s - 1].out_size_bits

    def _check_split(self, s: int):
        if not 0 <= s <= self.num_layers:
            raise ValueError(f"split {s} outside [0, {self.num_layers}]")


def layer_flops(conv_count: int, pool_count: int, relu_count: int,
                unit_costs: tuple[float, float, float]) -> float:
    """Total work of one layer from its operation counts and per-op costs."""
    if conv_count < 0 or pool_count < 0 or relu_count < 0:
        raise ValueError("operation counts must be nonnegative")
    if conv_count == 0 and pool_count == 0 and relu_count == 0:
        raise ValueError("layer must contain at least one operation")
    c_conv, c_pool, c_relu = unit_costs
    if c_conv <= 0 or c_pool <= 0 or c_relu <= 0:
        raise ValueError("unit costs must be positive")
    return conv_count * c_conv + pool_count * c_pool + relu_count * c_relu


def build_profile(layers, final_result_bits: float, input_bits: float) -> ModelProfile:
    """Assemble a ModelProfile with prefix sums from a layer list."""
    layers = tuple(layers)
    if not layers:
        raise ValueError("model needs at least one layer")
    if final_result_bits <= 0:
        raise ValueError("final_result_bits must be positive")
    if input_bits <= 0:
        raise ValueError("input_bits must be positive")
    prefix = np.cumsum([l.flops for l in layers])
    return ModelProfile(
        layers=layers,
        final_result_bits=float(final_result_bits),
        input_bits=float(input_bits),
        prefix_flops=prefix,
        total_flops=float(prefix[-1]),
    )


# Per-op costs (GFLOP) used by the built-in catalogs.
_UNIT_COSTS = (0.30, 0.05, 0.02)

# Built-in catalogs: synthetic per-layer tables for three well-known chain
# CNNs (layer counts match the real models; work/size values are documented
# constants, with the mid-network bulge in intermediate sizes typical of
# CNNs).  Each record: (conv, pool, relu, out_size_bits Mbit).
_CATALOGS = {
    "NiN": {
        "input_bits": 24.0,
        "final_result_bits": 0.04,
        "layers": [
            (3, 0, 3, 3.0), (2, 1, 2, 4.6), (3, 0, 3, 5.8), (2, 1, 2, 4.2),
            (3, 0, 3, 2.9), (2, 1, 2, 1.8), (3, 0, 3, 1.0), (2, 0, 2, 0.5),
            (1, 1, 1, 0.2),
        ],
    },
    "YOLOv2": {
        "input_bits": 33.0,
        "final_result_bits": 0.08,
        "layers": [
            (1, 1, 1, 4.0), (1, 1, 1, 5.2), (2, 0, 2, 6.8), (1, 0, 1, 7.6),
            (2, 1, 2, 8.1), (2, 0, 2, 6.9), (1, 1, 1, 5.4), (2, 0, 2, 4.3),
            (2, 0, 2, 3.5), (1, 1, 1, 2.7), (2, 0, 2, 2.1), (2, 0, 2, 1.6),
            (2, 0, 2, 1.2), (1, 1, 1, 0.8), (2, 0, 2, 0.5), (1, 0, 1, 0.3),
            (1, 0, 1, 0.1),
        ],
    },
    "VGG16": {
        "input_bits": 25.0,
        "final_result_bits": 0.05,
        "layers": [
            (1, 0, 1, 6.4), (1, 1, 1, 7.8), (1, 0, 1, 9.5), (1, 1, 1, 10.2),
            (1, 0, 1, 9.0), (1, 0, 1, 8.1), (1, 1, 1, 6.6), (1, 0, 1, 5.6),
            (1, 0, 1, 4.9), (1, 1, 1, 4.1), (1, 0, 1, 3.4), (1, 0, 1, 2.8),
            (1, 1, 1, 2.2), (2, 0, 2, 1.8), (1, 0, 1, 1.4), (1, 0, 1, 1.1),
            (1, 1, 1, 0.8), (1, 0, 1, 0.6), (1, 0, 1, 0.5), (1, 0, 1, 0.35),
            (1, 0, 1, 0.25), (1, 0, 1, 0.18), (1, 0, 1, 0.1), (1, 0, 1, 0.05),
        ],
    },
}

CATALOG_NAMES = tuple(_CATALOGS)


def synthetic_catalog(name: str) -> ModelProfile:
    """Built-in chain-model profile by name (NiN, YOLOv2, or VGG16)."""
    try:
        spec = _CATALOGS[name]
    except KeyError:
        raise ValueError(f"unknown catalog {name!r}; choose from {sorted(_CATALOGS)}") from None
    layers = [
        LayerProfile(c, p, r, layer_flops(c, p, r, _UNIT_COSTS), out)
        for (c, p, r, out) in spec["layers"]
    ]
    return build_profile(layers, spec["final_result_bits"], spec["input_bits"])


def load_catalog(path) -> ModelProfile:
    """Load a model profile from a JSON file.

    Schema::

        {"input_bits": 24.0, "final_result_bits": 0.04,
         "layers": [{"conv": 1, "pool": 0, "relu": 1,
                     "flops": 0.32, "out_size_bits": 3.0}, ...]}
    """
    with open(path) as fh:
        doc = json.load(fh)
    return profile_from_dict(doc)


def profile_from_dict(doc: dict) -> ModelProfile:
    """Build a ModelProfile from the JSON catalog schema (see load_catalog)."""
    layers = [
        LayerProfile(
            conv_count=int(rec.get("conv", 0)),
            pool_count=int(rec.get("pool", 0)),
            relu_count=int(rec.get("relu", 0)),
            flops=float(rec["flops"]),
            out_size_bits=float(rec["out_size_bits"]),
        )
        for rec in doc["layers"]
    ]
    return build_profile(layers, float(doc["final_result_bits"]), float(doc["input_bits"]))
