"""Batch gradient descent and the two-phase training protocol.

Phase 1 trains until the misclassification count stops changing and
reports that plateau value. Phase 2 retrains (from fresh parameters) until
the count falls to the plateau threshold, or gives up after ``max_epochs``,
which counts as having fallen into a local optimum.
"""

import csv
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backprop import GradientSet, backward, loss
from .exceptions import ConfigurationError
from .network import forward_full


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    max_epochs: int = 100
    error_threshold: Optional[int] = None
    plateau_window: int = 4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigurationError("learning_rate must be non-negative")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be at least 1")
        if self.plateau_window < 1:
            raise ConfigurationError("plateau_window must be at least 1")
        if self.error_threshold is not None and self.error_threshold < 0:
            raise ConfigurationError("error_threshold must be non-negative")


@dataclass
class EpochRecord:
    epoch: int
    error: int
    loss: float
    wall_time_ms: float


@dataclass
class TimingProfile:
    """Mean forward (t1) and backward (t2) time per image, and the time of
    the single weight update (t3), in milliseconds."""

    t1_ms: float
    t2_ms: float
    t3_ms: float
    n_images: int


@dataclass
class PhaseOneResult:
    plateau_error: int
    plateau_reached: bool
    curve: list = field(default_factory=list)


@dataclass
class PhaseTwoResult:
    success: bool
    elapsed_ms: float
    curve: list = field(default_factory=list)

    @property
    def outcome(self):
        return "success" if self.success else "failure"


def target_vector(label, num_classes):
    """-1 everywhere except +1 at the true class."""
    t = np.full(num_classes, -1.0)
    t[label] = 1.0
    return t


def classify(outputs):
    # np.argmax returns the lowest index among ties
    return int(np.argmax(outputs))


def _check_dataset(dataset, spec):
    if len(dataset) == 0:
        raise ConfigurationError("dataset is empty")
    for sample in dataset:
        if not 0 <= sample.label < spec.num_classes:
            raise ConfigurationError(
                f"label {sample.label} outside [0, {spec.num_classes})"
            )


def accumulate_samples(params, samples, grads):
    """Forward and backward every sample in order, adding gradients into
    ``grads``. Returns ``(errors, loss, forward_s, backward_s)``."""
    spec = params.spec
    errors = 0
    total_loss = 0.0
    t_fwd = t_bwd = 0.0
    for sample in samples:
        target = target_vector(sample.label, spec.num_classes)
        t0 = time.perf_counter()
        trace, out = forward_full(params, sample.image)
        t1 = time.perf_counter()
        backward(trace, target, params, out=grads)
        t2 = time.perf_counter()
        t_fwd += t1 - t0
        t_bwd += t2 - t1
        errors += classify(out) != sample.label
        total_loss += loss(out, target)
    return errors, total_loss, t_fwd, t_bwd


def apply_update(params, grads, lr):
    """theta <- theta - lr * grad, in place."""
    if not params.same_shape(grads):
        raise ConfigurationError("gradient set does not match parameters")
    if lr:
        params.vector -= lr * grads.vector


def train_epoch(params, dataset, lr, epoch=0):
    """One pass of batch gradient descent: accumulate gradients over every
    image, then update once. Mutates ``params``."""
    _check_dataset(dataset, params.spec)
    start = time.perf_counter()
    grads = GradientSet.zeros(params.spec)
    errors, total_loss, t_fwd, t_bwd = accumulate_samples(params, dataset, grads)
    t0 = time.perf_counter()
    apply_update(params, grads, lr)
    t_update = time.perf_counter() - t0
    n = len(dataset)
    record = EpochRecord(
        epoch, int(errors), total_loss, (time.perf_counter() - start) * 1e3
    )
    profile = TimingProfile(t_fwd / n * 1e3, t_bwd / n * 1e3, t_update * 1e3, n)
    return record, profile


def evaluate(params, dataset):
    """Misclassification count and summed loss, without training."""
    errors = 0
    total = 0.0
    for sample in dataset:
        out = forward_full(params, sample.image)[1]
        errors += classify(out) != sample.label
        total += loss(out, target_vector(sample.label, params.spec.num_classes))
    return int(errors), total


def train_phase1(params, dataset, config, epoch_fn=train_epoch):
    """Train until the error is identical for ``plateau_window`` consecutive
    epochs, or ``max_epochs`` run out."""
    curve = []
    run = 0
    for epoch in range(1, config.max_epochs + 1):
        record, _ = epoch_fn(params, dataset, config.learning_rate, epoch=epoch)
        if curve and record.error == curve[-1].error:
            run += 1
        else:
            run = 1
        curve.append(record)
        if run >= config.plateau_window:
            return PhaseOneResult(record.error, True, curve)
    return PhaseOneResult(curve[-1].error, False, curve)


def train_phase2(params, dataset, config, epoch_fn=train_epoch):
    """Train until an epoch's error is at most ``config.error_threshold``.

    The error of an epoch is measured before that epoch's update, so on
    success ``params`` is rolled back to the state that achieved it.
    """
    if config.error_threshold is None:
        raise ConfigurationError("phase 2 needs an error threshold")
    curve = []
    start = time.perf_counter()
    for epoch in range(1, config.max_epochs + 1):
        before = params.vector.copy()
        record, _ = epoch_fn(params, dataset, config.learning_rate, epoch=epoch)
        curve.append(record)
        if record.error <= config.error_threshold:
            params.vector[...] = before
            return PhaseTwoResult(True, (time.perf_counter() - start) * 1e3, curve)
    return PhaseTwoResult(False, (time.perf_counter() - start) * 1e3, curve)


def write_curve_csv(path, curve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "error", "loss", "wall_time_ms"])
        for r in curve:
            writer.writerow([r.epoch, r.error, repr(r.loss), f"{r.wall_time_ms:.3f}"])
