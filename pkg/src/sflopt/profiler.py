"""Static compute/data profiling of layered network architectures.

Produces, for each layer boundary, the cumulative multiply-accumulate count
of everything up to that layer and the bit size of the layer's output, the
two quantities every latency model downstream consumes.  All arithmetic is
exact integer math so profiles are deterministic.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

LAYER_KINDS = ("conv", "fully_connected", "activation", "pooling", "normalization")

#: MAC-equivalents charged per output element for layers without a
#: multiply-accumulate formula of their own.
DEFAULT_COST_FACTORS = {"activation": 1.0, "pooling": 1.0, "normalization": 1.0}


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a feed-forward architecture.

    ``kernel_h``/``kernel_w`` are meaningful for conv layers only.  Spatial
    output dims are 1x1 for fully connected layers.
    """

    kind: str
    in_channels: int
    out_channels: int
    out_h: int
    out_w: int
    kernel_h: int = 1
    kernel_w: int = 1
    name: str = ""

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        for f in ("in_channels", "out_channels", "out_h", "out_w", "kernel_h", "kernel_w"):
            if getattr(self, f) < 1:
                raise ValueError(f"layer {self.name!r}: {f} must be >= 1")

    @property
    def output_elements(self):
        return self.out_h * self.out_w * self.out_channels


@dataclass(frozen=True)
class NetworkArchitecture:
    """An ordered stack of layers plus batch size and element precision."""

    layers: tuple[LayerSpec, ...]
    batch_size: int = 1
    element_bits: int = 32
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.layers) < 1:
            raise ValueError("architecture needs at least one layer")
        if self.batch_size < 1 or self.element_bits < 1:
            raise ValueError("batch_size and element_bits must be >= 1")
        for prev, cur in zip(self.layers, self.layers[1:]):
            # fully connected layers may flatten the preceding feature map
            ok = cur.in_channels == prev.out_channels or (
                cur.kind == "fully_connected" and cur.in_channels == prev.output_elements
            )
            if not ok:
                raise ValueError(
                    f"channel chaining broken between {prev.name!r} "
                    f"(out {prev.out_channels}, elements {prev.output_elements}) "
                    f"and {cur.name!r} (in {cur.in_channels})"
                )

    @property
    def num_layers(self):
        return len(self.layers)


@dataclass(frozen=True)
class NetworkProfile:
    """Per-layer cumulative MACs and output data sizes in bits."""

    cumulative_macs: np.ndarray
    data_size_bits: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cumulative_macs, dtype=np.int64)
        d = np.asarray(self.data_size_bits, dtype=np.int64)
        if c.shape != d.shape or c.ndim != 1:
            raise ValueError("profile arrays must be 1-D and equally long")
        if np.any(np.diff(c) < 0) or np.any(c < 0) or np.any(d < 0):
            raise ValueError("cumulative MACs must be non-decreasing and non-negative")
        object.__setattr__(self, "cumulative_macs", c)
        object.__setattr__(self, "data_size_bits", d)

    @property
    def num_layers(self):
        return len(self.cumulative_macs)


def layer_macs(layer: LayerSpec, batch_size: int, cost_factors=None) -> int:
    """MAC count of one layer for a batch.

    conv: kernel_h*kernel_w*in_channels*out_h*out_w*out_channels per sample;
    fully connected: in_channels*out_channels per sample; other kinds charge
    a configurable MAC-equivalent per output element (default 1).
    """
    if layer.kind == "conv":
        per_sample = (
            layer.kernel_h * layer.kernel_w * layer.in_channels
            * layer.out_h * layer.out_w * layer.out_channels
        )
    elif layer.kind == "fully_connected":
        per_sample = layer.in_channels * layer.out_channels
    else:
        factors = dict(DEFAULT_COST_FACTORS)
        if cost_factors:
            factors.update(cost_factors)
        per_sample = int(round(factors[layer.kind] * layer.output_elements))
    return per_sample * batch_size


def intermediate_size_bits(layer: LayerSpec, batch_size: int, element_bits: int) -> int:
    """Bit size of the layer's output feature map for a batch."""
    return layer.output_elements * batch_size * element_bits


def profile(arch: NetworkArchitecture, cost_factors=None) -> NetworkProfile:
    """Profile an architecture: cumulative MACs and per-layer output bits."""
    cum = 0
    macs, bits = [], []
    for layer in arch.layers:
        cum += layer_macs(layer, arch.batch_size, cost_factors)
        macs.append(cum)
        bits.append(intermediate_size_bits(layer, arch.batch_size, arch.element_bits))
    return NetworkProfile(cumulative_macs=np.array(macs, dtype=np.int64),
                          data_size_bits=np.array(bits, dtype=np.int64))


def parameter_bits(arch: NetworkArchitecture) -> int:
    """Total parameter size in bits (weights plus biases)."""
    total = 0
    for layer in arch.layers:
        if layer.kind == "conv":
            total += (layer.kernel_h * layer.kernel_w * layer.in_channels + 1) * layer.out_channels
        elif layer.kind == "fully_connected":
            total += (layer.in_channels + 1) * layer.out_channels
    return total * arch.element_bits


def _conv(name, k, cin, cout, hw):
    return LayerSpec("conv", cin, cout, hw, hw, k, k, name=name)


def _same(kind, name, ch, hw):
    return LayerSpec(kind, ch, ch, hw, hw, name=name)


def _fc(name, cin, cout):
    return LayerSpec("fully_connected", cin, cout, 1, 1, name=name)


def _alexnet20(batch_size, element_bits):
    # 20 layers: 5 conv, 3 fully connected, relu/norm/pool interleaved.
    # Dimensions follow the common 224x224 variant (64/192/384/256/256).
    layers = [
        LayerSpec("conv", 3, 64, 55, 55, 11, 11, name="conv1"),
        _same("activation", "relu1", 64, 55),
        _same("normalization", "norm1", 64, 55),
        _same("pooling", "pool1", 64, 27),
        _conv("conv2", 5, 64, 192, 27),
        _same("activation", "relu2", 192, 27),
        _same("normalization", "norm2", 192, 27),
        _same("pooling", "pool2", 192, 13),
        _conv("conv3", 3, 192, 384, 13),
        _same("activation", "relu3", 384, 13),
        _conv("conv4", 3, 384, 256, 13),
        _same("activation", "relu4", 256, 13),
        _conv("conv5", 3, 256, 256, 13),
        _same("activation", "relu5", 256, 13),
        _same("pooling", "pool5", 256, 6),
        _fc("fc6", 6 * 6 * 256, 4096),
        _same("activation", "relu6", 4096, 1),
        _fc("fc7", 4096, 4096),
        _same("activation", "relu7", 4096, 1),
        _fc("fc8", 4096, 1000),
    ]
    return NetworkArchitecture(tuple(layers), batch_size, element_bits, name="alexnet20")


def _vgg16(batch_size, element_bits):
    # Standard VGG16 topology (13 conv + 3 fc) with relu after every conv
    # and the first two fc layers, pooling after each block.
    layers = []
    hw = 224
    cin = 3
    for b, (n_convs, cout) in enumerate(
        [(2, 64), (2, 128), (3, 256), (3, 512), (3, 512)], start=1
    ):
        for i in range(1, n_convs + 1):
            layers.append(_conv(f"conv{b}_{i}", 3, cin, cout, hw))
            layers.append(_same("activation", f"relu{b}_{i}", cout, hw))
            cin = cout
        hw //= 2
        layers.append(_same("pooling", f"pool{b}", cout, hw))
    layers += [
        _fc("fc1", 7 * 7 * 512, 4096),
        _same("activation", "relu_fc1", 4096, 1),
        _fc("fc2", 4096, 4096),
        _same("activation", "relu_fc2", 4096, 1),
        _fc("fc3", 4096, 1000),
    ]
    return NetworkArchitecture(tuple(layers), batch_size, element_bits, name="vgg16")


_BUILTINS = {"alexnet20": _alexnet20, "vgg16": _vgg16}


def builtin_architecture(name: str, batch_size: int = 1, element_bits: int = 32) -> NetworkArchitecture:
    """Return a built-in architecture preset by name."""
    try:
        builder = _BUILTINS[name]
    except KeyError:
        raise ConfigError(
            f"architecture.name: unknown preset {name!r}; choose from {sorted(_BUILTINS)}"
        ) from None
    return builder(batch_size, element_bits)


def load_architecture(path, batch_size=None, element_bits=None) -> NetworkArchitecture:
    """Load an architecture from an INI-style file.

    Schema: a ``[network]`` section with ``batch_size`` and ``element_bits``,
    followed by one ``[layer:NAME]`` section per layer, in order, with keys
    matching :class:`LayerSpec` fields (``kind``, ``in_channels``,
    ``out_channels``, ``out_h``, ``out_w``, and for conv layers ``kernel_h``,
    ``kernel_w``).
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"architecture file not found: {path}")
    net = parser["network"] if parser.has_section("network") else {}
    if batch_size is None:
        batch_size = int(net.get("batch_size", 1))
    if element_bits is None:
        element_bits = int(net.get("element_bits", 32))
    layers = []
    for section in parser.sections():
        if not section.startswith("layer:"):
            continue
        s = parser[section]
        name = section.split(":", 1)[1]
        try:
            kwargs = dict(
                kind=s["kind"],
                in_channels=int(s["in_channels"]),
                out_channels=int(s["out_channels"]),
                out_h=int(s["out_h"]),
                out_w=int(s["out_w"]),
                name=name,
            )
            if s.get("kernel_h"):
                kwargs["kernel_h"] = int(s["kernel_h"])
            if s.get("kernel_w"):
                kwargs["kernel_w"] = int(s["kernel_w"])
            layers.append(LayerSpec(**kwargs))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc
    if not layers:
        raise ConfigError(f"{path}: no [layer:...] sections found")
    try:
        return NetworkArchitecture(tuple(layers), batch_size, element_bits, name=str(path))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
