"""Independent oracles shared by several test modules."""

import numpy as np

from facecnn.network import build, forward_full

FD_STEP = 1e-5
REL_TOL = 1e-4
ABS_TOL = 1e-7
SMALL_GRAD = 1e-4


def summed_loss(params, samples):
    """0.5 * sum of squared output errors over (image, target) pairs, using
    only the forward pass."""
    total = 0.0
    for image, target in samples:
        diff = forward_full(params, image)[1] - target
        total += 0.5 * float(diff @ diff)
    return total


def finite_difference(params, samples, indices, h=FD_STEP):
    """Central differences of ``summed_loss`` w.r.t. selected vector entries."""
    out = np.empty(len(indices))
    for j, i in enumerate(indices):
        old = params.vector[i]
        params.vector[i] = old + h
        plus = summed_loss(params, samples)
        params.vector[i] = old - h
        minus = summed_loss(params, samples)
        params.vector[i] = old
        out[j] = (plus - minus) / (2 * h)
    return out


def gradient_mismatches(analytic, numeric):
    """Indices failing: relative error < 1e-4, or absolute < 1e-7 for
    gradients smaller than 1e-4."""
    bad = []
    for j, (g, fd) in enumerate(zip(analytic, numeric)):
        if abs(g) < SMALL_GRAD:
            ok = abs(g - fd) < ABS_TOL
        else:
            ok = abs(g - fd) / max(abs(g), abs(fd)) < REL_TOL
        if not ok:
            bad.append(j)
    return bad


def random_problem(spec, seed, n_samples=1):
    """Parameters with non-zero biases plus random images and +-1 targets."""
    rng = np.random.default_rng(seed)
    params = build(spec, seed=seed)
    for name, arr in params.arrays.items():
        if name.endswith("biases"):
            arr[...] = rng.uniform(-0.5, 0.5, arr.shape)
    samples = []
    for _ in range(n_samples):
        image = rng.uniform(-1, 1, (spec.input_size, spec.input_size))
        target = -np.ones(spec.num_classes)
        target[rng.integers(spec.num_classes)] = 1.0
        samples.append((image, target))
    return params, samples
