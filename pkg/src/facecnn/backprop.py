"""Backward pass for ``E = 1/2 * sum((y - t)**2)``.

Deltas named ``d_in_*`` are gradients with respect to a layer's
pre-activation, ``d_out_*`` with respect to its post-activation output.
The returned :class:`GradientSet` holds dE/dtheta (ascent direction); the
trainer subtracts it.
"""

import numpy as np

from .exceptions import ConfigurationError
from .layers import conv_windows
from .network import NetworkParams
from .tensor import tanh_derivative_from_output


class GradientSet(NetworkParams):
    """Gradient values laid out exactly like :class:`NetworkParams`."""

    @classmethod
    def zeros(cls, spec):
        return cls(spec)


def output_deltas(predicted, target):
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ConfigurationError(
            f"prediction has shape {predicted.shape}, target {target.shape}"
        )
    return (predicted - target) * tanh_derivative_from_output(predicted)


def loss(predicted, target):
    diff = np.asarray(predicted, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return 0.5 * float(diff @ diff)


def _pool_backward(d_in_pool, coefficients, conv_out, window):
    """Spread subsampling deltas back over their windows and through the
    conv layer's tanh. Every cell in a window gets ``coefficient * delta``."""
    d_out_conv = np.repeat(np.repeat(d_in_pool, window, axis=1), window, axis=2)
    d_out_conv *= coefficients[:, np.newaxis, np.newaxis]
    return d_out_conv * tanh_derivative_from_output(conv_out)


def _conv_input_grad(d_in_conv, kernels):
    """Full correlation of conv deltas with the flipped kernels: the gradient
    with respect to the conv layer's input maps."""
    _, _, kh, kw = kernels.shape
    padded = np.pad(d_in_conv, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
    windows = conv_windows(padded, kh, kw)
    flipped = kernels[:, :, ::-1, ::-1]
    return np.tensordot(flipped, windows, axes=([0, 2, 3], [0, 3, 4]))


def backward(trace, target, params, out=None):
    """Gradient of the single-image loss for every weight and bias.

    With ``out`` given, gradients are added into it instead of a fresh set.
    """
    spec = params.spec
    target = np.asarray(target, dtype=np.float64)
    if trace.output.shape != (spec.num_classes,) or target.shape != trace.output.shape:
        raise ConfigurationError(
            f"trace output {trace.output.shape} / target {target.shape} do not match "
            f"{spec.num_classes} classes"
        )
    if trace.s2.size != params["h.weights"].shape[1]:
        raise ConfigurationError("trace does not belong to these parameters")
    grads = GradientSet.zeros(spec) if out is None else out

    # output layer
    d_in_f = output_deltas(trace.output, target)
    grads["f.weights"] += np.outer(d_in_f, trace.h)
    grads["f.biases"] += d_in_f

    # hidden layer
    d_out_h = params["f.weights"].T @ d_in_f
    d_in_h = d_out_h * tanh_derivative_from_output(trace.h)
    grads["h.weights"] += np.outer(d_in_h, trace.s2.reshape(-1))
    grads["h.biases"] += d_in_h

    # S2: weight sums over hidden neurons, back to (pattern, row, col)
    d_out_s2 = (params["h.weights"].T @ d_in_h).reshape(trace.s2.shape)
    d_in_s2 = d_out_s2 * tanh_derivative_from_output(trace.s2)
    grads["s2.coefficients"] += np.einsum("kxy,kxy->k", d_in_s2, trace.s2_sums)
    grads["s2.biases"] += d_in_s2.sum(axis=(1, 2))

    # C2
    d_in_c2 = _pool_backward(d_in_s2, params["s2.coefficients"], trace.c2, spec.pool2_window)
    k2 = spec.kernel2_size
    grads["c2.kernels"] += np.tensordot(
        d_in_c2, conv_windows(trace.s1, k2, k2), axes=([1, 2], [1, 2])
    )
    grads["c2.biases"] += d_in_c2.sum(axis=(1, 2))

    # S1
    d_out_s1 = _conv_input_grad(d_in_c2, params["c2.kernels"])
    d_in_s1 = d_out_s1 * tanh_derivative_from_output(trace.s1)
    grads["s1.coefficients"] += np.einsum("kxy,kxy->k", d_in_s1, trace.s1_sums)
    grads["s1.biases"] += d_in_s1.sum(axis=(1, 2))

    # C1
    d_in_c1 = _pool_backward(d_in_s1, params["s1.coefficients"], trace.c1, spec.pool1_window)
    k1 = spec.kernel1_size
    grads["c1.kernels"] += np.tensordot(
        d_in_c1, conv_windows(trace.image, k1, k1), axes=([1, 2], [1, 2])
    )
    grads["c1.biases"] += d_in_c1.sum(axis=(1, 2))
    return grads


def accumulate(acc, delta):
    """Add ``delta`` into ``acc`` in place and return ``acc``."""
    if not acc.same_shape(delta):
        raise ConfigurationError("gradient sets have different shapes")
    acc.vector += delta.vector
    return acc
