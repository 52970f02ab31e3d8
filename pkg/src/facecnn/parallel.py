"""Data-parallel batch gradient descent and the speedup model.

The dataset is cut into ``n`` contiguous shards, one per worker thread. All
workers read the same parameter snapshot, which nobody writes until every
worker has finished. The per-image gradients are then summed on the calling
thread in dataset order (shard 0 adds straight into the total, since it
comes first), so the update is bit-identical to
:func:`facecnn.trainer.train_epoch` whatever the worker count.

Cost model, with t1/t2 the per-image forward/backward time and t3 the update
time::

    t_serial   = (t1 + t2) * N + t3
    t_parallel = (t1 + t2) * ceil(N / n) + t3
"""

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backprop import GradientSet, backward, loss
from .exceptions import ConfigurationError
from .network import forward_full
from .trainer import (
    EpochRecord,
    TimingProfile,
    _check_dataset,
    apply_update,
    classify,
    target_vector,
    train_epoch,
)

REPORT_COLUMNS = [
    "n",
    "t_serial_ms",
    "t_parallel_ms",
    "speedup",
    "efficiency",
    "predicted_speedup",
]


@dataclass
class SpeedupReport:
    n_nodes: int
    t_serial_ms: float
    t_parallel_ms: float
    speedup_ratio: float
    efficiency: float
    predicted_speedup: float
    profile: TimingProfile = None

    @classmethod
    def from_times(cls, n_nodes, t_serial_ms, t_parallel_ms, predicted_speedup=float("nan"), profile=None):
        speedup = t_serial_ms / t_parallel_ms
        return cls(n_nodes, t_serial_ms, t_parallel_ms, speedup, speedup / n_nodes,
                   predicted_speedup, profile)

    def summary_line(self):
        return (
            f"n={self.n_nodes} serial={self.t_serial_ms:.6f} "
            f"parallel={self.t_parallel_ms:.6f} speedup={self.speedup_ratio:.6f} "
            f"efficiency={self.efficiency:.6f} predicted={self.predicted_speedup:.6f}"
        )


def shard_bounds(n_items, n_shards):
    """Contiguous ``(start, stop)`` ranges; earlier shards take the extra item."""
    if n_shards < 1:
        raise ConfigurationError("need at least one worker")
    base, extra = divmod(n_items, n_shards)
    bounds = []
    start = 0
    for i in range(n_shards):
        stop = start + base + (i < extra)
        bounds.append((start, stop))
        start = stop
    return bounds


class WorkerPool:
    """Worker threads plus a reusable per-image gradient buffer.

    Keeping one pool alive across epochs avoids re-spawning threads and
    re-faulting the buffer pages every epoch.
    """

    def __init__(self, n_workers):
        if n_workers < 1:
            raise ConfigurationError("n_workers must be at least 1")
        self.n_workers = n_workers
        self._executor = ThreadPoolExecutor(max_workers=n_workers)
        self._scratch = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        self._executor.shutdown()
        self._scratch = None

    def _buffer(self, n_rows, n_params):
        if self._scratch is None or self._scratch.shape != (n_rows, n_params):
            self._scratch = np.zeros((n_rows, n_params))
        return self._scratch

    def epoch(self, params, dataset, lr, epoch=0):
        _check_dataset(dataset, params.spec)
        start = time.perf_counter()
        spec = params.spec
        bounds = shard_bounds(len(dataset), self.n_workers)
        head = bounds[0][1]
        total = GradientSet.zeros(spec)
        scratch = self._buffer(len(dataset) - head, params.size)

        # Shard 0 comes first in dataset order, so it may add straight into
        # the total; later shards park one gradient row per image.
        futures = [self._executor.submit(_run_shard, params, dataset, 0, head, total)]
        for a, b in bounds[1:]:
            rows = [GradientSet(spec, scratch[i - head]) for i in range(a, b)]
            futures.append(self._executor.submit(_run_shard, params, dataset, a, b, rows))
        results = [f.result() for f in futures]  # barrier

        for row in scratch:
            total.vector += row
        errors = 0
        total_loss = 0.0
        t_fwd = t_bwd = 0.0
        for shard_errors, losses, f_s, b_s in results:
            for value in losses:
                total_loss += value
            errors += shard_errors
            t_fwd += f_s
            t_bwd += b_s

        t0 = time.perf_counter()
        apply_update(params, total, lr)
        t_update = time.perf_counter() - t0
        n = len(dataset)
        record = EpochRecord(epoch, int(errors), total_loss, (time.perf_counter() - start) * 1e3)
        return record, TimingProfile(t_fwd / n * 1e3, t_bwd / n * 1e3, t_update * 1e3, n)


def _run_shard(params, dataset, start, stop, out):
    """Worker body for images ``start..stop``. ``out`` is either one shared
    accumulator or a list with a private gradient row per image. Reads
    ``params`` only."""
    spec = params.spec
    errors = 0
    losses = []
    t_fwd = t_bwd = 0.0
    for i in range(start, stop):
        sample = dataset[i]
        target = target_vector(sample.label, spec.num_classes)
        t0 = time.perf_counter()
        trace, outputs = forward_full(params, sample.image)
        t1 = time.perf_counter()
        if isinstance(out, list):
            dest = out[i - start]
            dest.vector.fill(0.0)
        else:
            dest = out
        backward(trace, target, params, out=dest)
        t_fwd += t1 - t0
        t_bwd += time.perf_counter() - t1
        errors += classify(outputs) != sample.label
        losses.append(loss(outputs, target))
    return errors, losses, t_fwd, t_bwd


def parallel_epoch(params, dataset, lr, n_workers, epoch=0, pool=None):
    """One batch-gradient epoch with the forward/backward work spread over
    ``n_workers`` threads. Mutates ``params`` exactly like ``train_epoch``.

    Pass a :class:`WorkerPool` to reuse threads and buffers across epochs.
    """
    if pool is not None:
        if pool.n_workers != n_workers:
            raise ConfigurationError(
                f"pool has {pool.n_workers} workers, {n_workers} requested"
            )
        return pool.epoch(params, dataset, lr, epoch)
    with WorkerPool(n_workers) as own:
        return own.epoch(params, dataset, lr, epoch)


def predict_times(profile, n_images, n_nodes):
    """Modelled ``(t_serial, t_parallel)`` in the profile's time unit."""
    if n_images < 1 or n_nodes < 1:
        raise ConfigurationError("image and node counts must be positive")
    per_image = profile.t1_ms + profile.t2_ms
    t_serial = per_image * n_images + profile.t3_ms
    t_parallel = per_image * math.ceil(n_images / n_nodes) + profile.t3_ms
    return t_serial, t_parallel


def mean_profile(profiles):
    return TimingProfile(
        float(np.mean([p.t1_ms for p in profiles])),
        float(np.mean([p.t2_ms for p in profiles])),
        float(np.mean([p.t3_ms for p in profiles])),
        profiles[0].n_images,
    )


def _time_epochs(params, dataset, lr, epochs, pool=None):
    """Wall time of ``epochs`` epochs from a copy of ``params``, plus the mean
    timing profile."""
    params = params.copy()
    profiles = []
    start = time.perf_counter()
    for e in range(epochs):
        if pool is None:
            _, prof = train_epoch(params, dataset, lr, epoch=e)
        else:
            _, prof = pool.epoch(params, dataset, lr, epoch=e)
        profiles.append(prof)
    return (time.perf_counter() - start) * 1e3, mean_profile(profiles)


def benchmark(params, dataset, lr, worker_counts, epochs=1, repeats=5, warmup=True):
    """Measure serial vs parallel wall time for each worker count.

    For every worker count, ``epochs`` serial epochs and ``epochs`` parallel
    epochs (each from a copy of ``params``) are timed back to back in
    ``repeats`` rounds, alternating which side goes first. The reported round
    is the one with the median serial/parallel ratio (lower median for an
    even count): pairing within a round cancels scheduler noise that a
    per-side minimum picks up. The predicted speedup uses that round's
    serial t1/t2/t3 profile.
    """
    if not worker_counts:
        raise ConfigurationError("worker_counts is empty")
    if any(n < 1 for n in worker_counts):
        raise ConfigurationError("worker counts must be at least 1")
    if epochs < 1 or repeats < 1:
        raise ConfigurationError("epochs and repeats must be at least 1")
    reports = []
    for n in worker_counts:
        rounds = []
        with WorkerPool(n) as pool:
            if warmup:
                # start threads and fault in the gradient buffer untimed
                pool.epoch(params.copy(), dataset, lr)
                train_epoch(params.copy(), dataset, lr)
            for r in range(repeats):
                if r % 2:
                    t_parallel = _time_epochs(params, dataset, lr, epochs, pool)[0]
                    t_serial, profile = _time_epochs(params, dataset, lr, epochs)
                else:
                    t_serial, profile = _time_epochs(params, dataset, lr, epochs)
                    t_parallel = _time_epochs(params, dataset, lr, epochs, pool)[0]
                rounds.append((t_serial / t_parallel, t_serial, t_parallel, profile))
        rounds.sort(key=lambda item: item[0])
        _, t_serial, t_parallel, profile = rounds[(len(rounds) - 1) // 2]
        model_serial, model_parallel = predict_times(profile, len(dataset), n)
        reports.append(
            SpeedupReport.from_times(
                n, t_serial, t_parallel, model_serial / model_parallel, profile
            )
        )
    return reports


def write_report_csv(path, reports):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([
                r.n_nodes,
                f"{r.t_serial_ms:.6f}",
                f"{r.t_parallel_ms:.6f}",
                f"{r.speedup_ratio:.6f}",
                f"{r.efficiency:.6f}",
                f"{r.predicted_speedup:.6f}",
            ])
