"""Layer descriptions for the layered classifier.

Inputs always enter the network as flat feature vectors. A ``conv2d`` layer
declares how it views its flat input as a height x width x channels image
(row-major, channels fastest); ``maxpool`` inherits that geometry from the
nearest spatial layer before it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

KINDS = ("affine", "relu", "tanh", "conv2d", "maxpool", "softmax")


class SpecError(ValueError):
    """The layer list does not describe a valid network."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    n_in: int = 0
    n_out: int = 0
    height: int = 0
    width: int = 0
    channels: int = 0
    filter_h: int = 0
    filter_w: int = 0
    out_channels: int = 0
    pool_h: int = 0
    pool_w: int = 0

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k == "kind" or v}

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        return cls(**d)

    @property
    def has_params(self) -> bool:
        return self.kind in ("affine", "conv2d")


def affine(n_in: int, n_out: int) -> LayerSpec:
    return LayerSpec("affine", n_in=n_in, n_out=n_out)


def relu() -> LayerSpec:
    return LayerSpec("relu")


def tanh() -> LayerSpec:
    return LayerSpec("tanh")


def conv2d(height, width, channels, filter_h, filter_w, out_channels) -> LayerSpec:
    """Stride-1, valid-padding convolution over an HWC view of the input."""
    return LayerSpec(
        "conv2d",
        height=height,
        width=width,
        channels=channels,
        filter_h=filter_h,
        filter_w=filter_w,
        out_channels=out_channels,
    )


def maxpool(pool_h: int, pool_w: int) -> LayerSpec:
    """Non-overlapping max pooling; trailing rows/columns that do not fill a window are dropped."""
    return LayerSpec("maxpool", pool_h=pool_h, pool_w=pool_w)


def softmax_output() -> LayerSpec:
    return LayerSpec("softmax")


def mlp(sizes: Sequence[int], activation: str = "relu") -> tuple[LayerSpec, ...]:
    """``mlp([20, 64, 64, 10])`` -> affine/activation stack ending in softmax."""
    act = {"relu": relu, "tanh": tanh}[activation]
    layers: list[LayerSpec] = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        layers.append(affine(a, b))
        if i < len(sizes) - 2:
            layers.append(act())
    layers.append(softmax_output())
    return tuple(layers)


class LayerShape(NamedTuple):
    in_width: int
    out_width: int
    in_geom: tuple[int, int, int] | None
    out_geom: tuple[int, int, int] | None


def resolve(spec: Sequence[LayerSpec]) -> list[LayerShape]:
    """Check extents layer by layer and return each layer's input/output shape."""
    if not spec:
        raise SpecError("empty layer list")
    kinds = [layer.kind for layer in spec]
    for k in kinds:
        if k not in KINDS:
            raise SpecError(f"unknown layer kind {k!r}")
    if kinds.count("softmax") != 1 or kinds[-1] != "softmax":
        raise SpecError("exactly one softmax output layer is required, and it must be last")

    shapes: list[LayerShape] = []
    width: int | None = None
    geom: tuple[int, int, int] | None = None
    for idx, layer in enumerate(spec):
        k = layer.kind
        if k == "affine":
            if layer.n_in < 1 or layer.n_out < 1:
                raise SpecError(f"layer {idx}: affine widths must be positive")
            if width is not None and width != layer.n_in:
                raise SpecError(f"layer {idx}: expects width {layer.n_in}, gets {width}")
            shapes.append(LayerShape(layer.n_in, layer.n_out, None, None))
            width, geom = layer.n_out, None
        elif k == "conv2d":
            h, w, c = layer.height, layer.width, layer.channels
            fh, fw, oc = layer.filter_h, layer.filter_w, layer.out_channels
            if min(h, w, c, fh, fw, oc) < 1:
                raise SpecError(f"layer {idx}: conv2d extents must be positive")
            if fh > h or fw > w:
                raise SpecError(f"layer {idx}: filter larger than input")
            if width is not None and width != h * w * c:
                raise SpecError(f"layer {idx}: expects width {h * w * c}, gets {width}")
            out = (h - fh + 1, w - fw + 1, oc)
            shapes.append(LayerShape(h * w * c, out[0] * out[1] * oc, (h, w, c), out))
            width, geom = out[0] * out[1] * oc, out
        elif k == "maxpool":
            if layer.pool_h < 1 or layer.pool_w < 1:
                raise SpecError(f"layer {idx}: pool extents must be positive")
            if geom is None:
                raise SpecError(f"layer {idx}: maxpool needs a spatial input")
            h, w, c = geom
            if layer.pool_h > h or layer.pool_w > w:
                raise SpecError(f"layer {idx}: pool window larger than input")
            out = (h // layer.pool_h, w // layer.pool_w, c)
            shapes.append(LayerShape(h * w * c, out[0] * out[1] * c, geom, out))
            width, geom = out[0] * out[1] * c, out
        else:
            if width is None:
                raise SpecError(f"layer {idx}: {k} cannot be the first layer")
            shapes.append(LayerShape(width, width, geom, geom))
    return shapes


def input_width(spec: Sequence[LayerSpec]) -> int:
    return resolve(spec)[0].in_width


def n_classes(spec: Sequence[LayerSpec]) -> int:
    return resolve(spec)[-1].out_width
