"""The seven-layer face recognition network.

input -> C1 (conv) -> S1 (subsample) -> C2 (conv) -> S2 (subsample)
      -> H (hidden, fully connected) -> F (output, fully connected)

All trainable values of a network live in one contiguous ``float64`` vector;
the per-layer arrays are views into it. Gradient sets use the identical
layout, so accumulation and updates are single vector operations.
"""

from dataclasses import astuple, dataclass

import numpy as np

from .exceptions import ConfigurationError
from .layers import (
    ConvLayerParams,
    FullLayerParams,
    SubsampleLayerParams,
    conv_forward,
    hidden_forward,
    output_forward,
    subsample_forward,
    window_sums,
)

LAYER_NAMES = ("c1", "s1", "c2", "s2", "h", "f")


@dataclass(frozen=True)
class ArchitectureSpec:
    input_size: int = 32
    conv1_kernels: int = 6
    kernel1_size: int = 5
    pool1_window: int = 2
    conv2_kernels: int = 16
    kernel2_size: int = 5
    pool2_window: int = 2
    hidden_units: int = 170
    num_classes: int = 17

    def as_tuple(self):
        return astuple(self)

    def dimension_chain(self):
        """Spatial side length after each layer, validating as it goes.

        Returns ``{"input": n, "c1": ..., "s1": ..., "c2": ..., "s2": ...}``.
        """
        for name, value in zip(self.__dataclass_fields__, self.as_tuple()):
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        chain = {"input": self.input_size}
        c1 = self.input_size - self.kernel1_size + 1
        if c1 < 1:
            raise ConfigurationError(
                f"C1: {self.kernel1_size}x{self.kernel1_size} kernel larger than "
                f"{self.input_size}x{self.input_size} input"
            )
        chain["c1"] = c1
        if c1 % self.pool1_window:
            raise ConfigurationError(
                f"S1: {c1}x{c1} maps not divisible by {self.pool1_window}x{self.pool1_window} window"
            )
        s1 = c1 // self.pool1_window
        chain["s1"] = s1
        c2 = s1 - self.kernel2_size + 1
        if c2 < 1:
            raise ConfigurationError(
                f"C2: {self.kernel2_size}x{self.kernel2_size} kernel larger than {s1}x{s1} input"
            )
        chain["c2"] = c2
        if c2 % self.pool2_window:
            raise ConfigurationError(
                f"S2: {c2}x{c2} maps not divisible by {self.pool2_window}x{self.pool2_window} window"
            )
        chain["s2"] = c2 // self.pool2_window
        return chain

    def layer_shapes(self):
        """Output shape of every layer, e.g. ``(6, 28, 28)`` for C1."""
        d = self.dimension_chain()
        return {
            "input": (1, d["input"], d["input"]),
            "c1": (self.conv1_kernels, d["c1"], d["c1"]),
            "s1": (self.conv1_kernels, d["s1"], d["s1"]),
            "c2": (self.conv2_kernels, d["c2"], d["c2"]),
            "s2": (self.conv2_kernels, d["s2"], d["s2"]),
            "h": (self.hidden_units,),
            "f": (self.num_classes,),
        }

    def layout(self):
        """``(array name, shape)`` in storage and checkpoint order."""
        d = self.dimension_chain()
        flat = self.conv2_kernels * d["s2"] ** 2
        k1, k2 = self.kernel1_size, self.kernel2_size
        return [
            ("c1.kernels", (self.conv1_kernels, 1, k1, k1)),
            ("c1.biases", (self.conv1_kernels,)),
            ("s1.coefficients", (self.conv1_kernels,)),
            ("s1.biases", (self.conv1_kernels,)),
            ("c2.kernels", (self.conv2_kernels, self.conv1_kernels, k2, k2)),
            ("c2.biases", (self.conv2_kernels,)),
            ("s2.coefficients", (self.conv2_kernels,)),
            ("s2.biases", (self.conv2_kernels,)),
            ("h.weights", (self.hidden_units, flat)),
            ("h.biases", (self.hidden_units,)),
            ("f.weights", (self.num_classes, self.hidden_units)),
            ("f.biases", (self.num_classes,)),
        ]

    def fan_in(self):
        """Inputs feeding one output neuron, per layer."""
        d = self.dimension_chain()
        return {
            "c1": self.kernel1_size**2,
            "s1": self.pool1_window**2,
            "c2": self.conv1_kernels * self.kernel2_size**2,
            "s2": self.pool2_window**2,
            "h": self.conv2_kernels * d["s2"] ** 2,
            "f": self.hidden_units,
        }


DEFAULT_SPEC = ArchitectureSpec()

# Small enough to finite-difference every parameter.
REDUCED_SPEC = ArchitectureSpec(
    input_size=8,
    conv1_kernels=2,
    kernel1_size=3,
    pool1_window=2,
    conv2_kernels=2,
    kernel2_size=2,
    pool2_window=2,
    hidden_units=4,
    num_classes=3,
)


class NetworkParams:
    """All weights and biases of one network, backed by ``self.vector``."""

    def __init__(self, spec=DEFAULT_SPEC, vector=None):
        self.spec = spec
        layout = spec.layout()
        total = sum(int(np.prod(shape)) for _, shape in layout)
        if vector is None:
            vector = np.zeros(total)
        else:
            vector = np.asarray(vector, dtype=np.float64)
            if vector.shape != (total,):
                raise ConfigurationError(
                    f"parameter vector has shape {vector.shape}, spec needs ({total},)"
                )
        self.vector = vector
        self.arrays = {}
        offset = 0
        for name, shape in layout:
            n = int(np.prod(shape))
            self.arrays[name] = vector[offset:offset + n].reshape(shape)
            offset += n

    def __getitem__(self, name):
        return self.arrays[name]

    def __setitem__(self, name, value):
        # writes go into the shared vector; the view itself is never rebound
        target = self.arrays[name]
        if value is not target:
            target[...] = value

    @property
    def c1(self):
        return ConvLayerParams(self["c1.kernels"], self["c1.biases"])

    @property
    def s1(self):
        w = self.spec.pool1_window
        return SubsampleLayerParams(self["s1.coefficients"], self["s1.biases"], w, w)

    @property
    def c2(self):
        return ConvLayerParams(self["c2.kernels"], self["c2.biases"])

    @property
    def s2(self):
        w = self.spec.pool2_window
        return SubsampleLayerParams(self["s2.coefficients"], self["s2.biases"], w, w)

    @property
    def h(self):
        return FullLayerParams(self["h.weights"], self["h.biases"])

    @property
    def f(self):
        return FullLayerParams(self["f.weights"], self["f.biases"])

    def layer(self, name):
        return getattr(self, name)

    @property
    def size(self):
        return self.vector.size

    def copy(self):
        return type(self)(self.spec, self.vector.copy())

    def zeros_like(self):
        return type(self)(self.spec)

    def same_shape(self, other):
        return self.spec == other.spec and self.vector.shape == other.vector.shape

    def __eq__(self, other):
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return self.same_shape(other) and np.array_equal(self.vector, other.vector)

    def __repr__(self):
        return f"{type(self).__name__}(spec={self.spec!r}, size={self.size})"


def build(spec=DEFAULT_SPEC, seed=0):
    """Fresh parameters: weights uniform on +-1/sqrt(fan_in), biases zero.

    Subsampling coefficients count as weights with fan-in ``window**2``.
    """
    spec.dimension_chain()
    params = NetworkParams(spec)
    rng = np.random.default_rng(seed)
    fan_in = spec.fan_in()
    weight_arrays = {
        "c1": "c1.kernels",
        "s1": "s1.coefficients",
        "c2": "c2.kernels",
        "s2": "s2.coefficients",
        "h": "h.weights",
        "f": "f.weights",
    }
    for layer in LAYER_NAMES:
        arr = params[weight_arrays[layer]]
        bound = 1.0 / np.sqrt(fan_in[layer])
        arr[...] = rng.uniform(-bound, bound, size=arr.shape)
    return params


def count_parameters(params):
    """Trainable values per layer plus ``"total"``."""
    counts = {layer: params.layer(layer).size for layer in LAYER_NAMES}
    counts["total"] = sum(counts.values())
    return counts


def connection_count(spec, layer):
    """Connections into a subsampling layer, counting each output neuron's bias
    as one connection (``S1`` of the default spec: 5880)."""
    shapes = spec.layer_shapes()
    window = spec.pool1_window if layer == "s1" else spec.pool2_window
    n, rows, cols = shapes[layer]
    return n * rows * cols * (window * window + 1)


@dataclass
class ForwardTrace:
    """Activations of one forward pass, kept for the backward pass."""

    image: np.ndarray  # (1, n, n)
    c1: np.ndarray
    s1_sums: np.ndarray
    s1: np.ndarray
    c2: np.ndarray
    s2_sums: np.ndarray
    s2: np.ndarray
    h: np.ndarray
    output: np.ndarray

    def shapes(self):
        return {
            "input": self.image.shape,
            "c1": self.c1.shape,
            "s1": self.s1.shape,
            "c2": self.c2.shape,
            "s2": self.s2.shape,
            "h": self.h.shape,
            "f": self.output.shape,
        }


def forward_full(params, image):
    """Run one image through the network. Returns ``(trace, outputs)``."""
    spec = params.spec
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3 and image.shape[0] == 1:
        image = image[0]
    if image.shape != (spec.input_size, spec.input_size):
        raise ConfigurationError(
            f"image is {image.shape}, network expects "
            f"{spec.input_size}x{spec.input_size}"
        )
    x = image[np.newaxis]
    c1 = conv_forward(x, params.c1)
    s1_sums = window_sums(c1, spec.pool1_window, spec.pool1_window)
    s1 = subsample_forward(c1, params.s1, sums=s1_sums)
    c2 = conv_forward(s1, params.c2)
    s2_sums = window_sums(c2, spec.pool2_window, spec.pool2_window)
    s2 = subsample_forward(c2, params.s2, sums=s2_sums)
    h = hidden_forward(s2, params.h)
    out = output_forward(h, params.f)
    return ForwardTrace(x, c1, s1_sums, s1, c2, s2_sums, s2, h, out), out


def predict_outputs(params, image):
    return forward_full(params, image)[1]
