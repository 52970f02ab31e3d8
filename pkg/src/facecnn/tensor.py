"""Feature maps and the tanh activation.

A feature map is a 2-D ``float64`` numpy array indexed ``(row, col)`` in
row-major order. A stack of maps belonging to one layer is a 3-D array of
shape ``(patterns, height, width)``.
"""

import numpy as np

from .exceptions import ConfigurationError

FeatureMap = np.ndarray


def feature_map(values, height=None, width=None):
    """Build a validated feature map from nested rows or a flat sequence.

    A flat sequence needs ``height`` and ``width``; values are taken in
    row-major order.
    """
    arr = np.array(values, dtype=np.float64)
    if height is not None or width is not None:
        if height is None or width is None:
            raise ConfigurationError("height and width must be given together")
        if arr.size != height * width:
            raise ConfigurationError(
                f"{arr.size} values cannot fill a {height}x{width} map"
            )
        arr = arr.reshape(height, width)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ConfigurationError(f"feature map must be 2-D and non-empty, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError("feature map values must be finite")
    return arr


def get(fmap, row, col):
    # Out-of-range access is a caller bug; no negative-index wraparound.
    assert 0 <= row < fmap.shape[0] and 0 <= col < fmap.shape[1], (row, col, fmap.shape)
    return float(fmap[row, col])


def tanh_activation(x):
    return np.tanh(x)


def tanh_derivative_from_output(y):
    """Slope of tanh at the point whose output is ``y``: ``1 - y**2``."""
    return 1.0 - np.square(y)
