"""Forward pass of the four layer kinds: convolution, subsampling, hidden
full connection and output full connection.

Every function takes a stack of input maps shaped ``(patterns, rows, cols)``
(a list of 2-D maps is accepted too) and is pure in its arguments.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import ConfigurationError


@dataclass
class ConvLayerParams:
    """Kernels shaped ``(out_patterns, in_patterns, kh, kw)`` and one bias per
    output pattern."""

    kernels: np.ndarray
    biases: np.ndarray

    @property
    def size(self):
        return self.kernels.size + self.biases.size


@dataclass
class SubsampleLayerParams:
    """One scaling coefficient and one bias per feature pattern."""

    coefficients: np.ndarray
    biases: np.ndarray
    window_height: int = 2
    window_width: int = 2

    @property
    def size(self):
        return self.coefficients.size + self.biases.size


@dataclass
class FullLayerParams:
    """Weights shaped ``(n_outputs, n_inputs)`` and one bias per output."""

    weights: np.ndarray
    biases: np.ndarray

    @property
    def size(self):
        return self.weights.size + self.biases.size


def _as_stack(inputs):
    stack = np.asarray(inputs, dtype=np.float64)
    if stack.ndim == 2:
        stack = stack[np.newaxis]
    if stack.ndim != 3:
        raise ConfigurationError(
            f"expected a stack of 2-D feature maps, got array of shape {stack.shape}"
        )
    return stack


def conv_windows(stack, kh, kw):
    """All ``kh x kw`` patches: shape ``(patterns, out_rows, out_cols, kh, kw)``."""
    return sliding_window_view(stack, (kh, kw), axis=(1, 2))


def conv_forward(inputs, params):
    """Valid (unpadded, stride 1) convolution of every input pattern with its
    kernel, summed over input patterns, plus bias, through tanh."""
    stack = _as_stack(inputs)
    n_out, n_in, kh, kw = params.kernels.shape
    if stack.shape[0] != n_in:
        raise ConfigurationError(
            f"convolution expects {n_in} input maps, got {stack.shape[0]}"
        )
    if kh > stack.shape[1] or kw > stack.shape[2]:
        raise ConfigurationError(
            f"{kh}x{kw} kernel does not fit {stack.shape[1]}x{stack.shape[2]} input"
        )
    if params.biases.shape != (n_out,):
        raise ConfigurationError(f"convolution needs {n_out} biases")
    windows = conv_windows(stack, kh, kw)
    pre = np.tensordot(params.kernels, windows, axes=([1, 2, 3], [0, 3, 4]))
    pre += params.biases[:, np.newaxis, np.newaxis]
    return np.tanh(pre)


def window_sums(inputs, window_height, window_width):
    """Sum of each non-overlapping window, per pattern."""
    stack = _as_stack(inputs)
    n, rows, cols = stack.shape
    if rows % window_height or cols % window_width:
        raise ConfigurationError(
            f"{rows}x{cols} maps are not divisible into "
            f"{window_height}x{window_width} windows"
        )
    return stack.reshape(
        n, rows // window_height, window_height, cols // window_width, window_width
    ).sum(axis=(2, 4))


def subsample_forward(inputs, params, sums=None):
    """Non-overlapping window sums scaled by one coefficient per pattern, plus
    bias, through tanh. Pattern ``k`` only feeds pattern ``k``.

    ``sums`` can carry precomputed window sums to avoid recomputation.
    """
    if sums is None:
        sums = window_sums(inputs, params.window_height, params.window_width)
    if params.coefficients.shape != (sums.shape[0],) or params.biases.shape != (sums.shape[0],):
        raise ConfigurationError(
            f"subsampling needs one coefficient and bias for each of {sums.shape[0]} maps"
        )
    pre = sums * params.coefficients[:, np.newaxis, np.newaxis]
    pre += params.biases[:, np.newaxis, np.newaxis]
    return np.tanh(pre)


def flatten_maps(inputs):
    """Flatten in (pattern, row, col) order; this order is shared by the hidden
    layer weights, the backward pass and the checkpoint file."""
    return _as_stack(inputs).reshape(-1)


def hidden_forward(inputs, params):
    x = flatten_maps(inputs)
    return _dense(x, params)


def output_forward(hidden, params):
    x = np.asarray(hidden, dtype=np.float64).reshape(-1)
    return _dense(x, params)


def _dense(x, params):
    n_out, n_in = params.weights.shape
    if x.shape[0] != n_in:
        raise ConfigurationError(f"layer expects {n_in} inputs, got {x.shape[0]}")
    if params.biases.shape != (n_out,):
        raise ConfigurationError(f"layer needs {n_out} biases")
    return np.tanh(params.weights @ x + params.biases)
