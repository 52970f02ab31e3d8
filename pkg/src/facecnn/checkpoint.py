"""Text checkpoint format (``.cnnckpt``).

::

    FACECNN-CHECKPOINT
    version 1
    spec <input_size> <conv1_kernels> <kernel1_size> <pool1_window> <conv2_kernels> <kernel2_size> <pool2_window> <hidden_units> <num_classes>
    seed <int or none>
    <array name> <value count> <v0> <v1> ...      (one line per array)

Arrays appear in storage order (see ``ArchitectureSpec.layout``). Values are
written with ``repr`` so every float64 round-trips bit-exactly.
"""

import math
from pathlib import Path

import numpy as np

from .exceptions import (
    CheckpointMissingError,
    CheckpointShapeError,
    CheckpointValueError,
    CheckpointVersionError,
    ConfigurationError,
)
from .network import ArchitectureSpec, NetworkParams

MAGIC = "FACECNN-CHECKPOINT"
FORMAT_VERSION = 1
SUFFIX = ".cnnckpt"


def dumps(params, seed=None):
    if not np.all(np.isfinite(params.vector)):
        raise CheckpointValueError("refusing to save non-finite parameters")
    lines = [
        MAGIC,
        f"version {FORMAT_VERSION}",
        "spec " + " ".join(str(int(v)) for v in params.spec.as_tuple()),
        f"seed {'none' if seed is None else int(seed)}",
    ]
    for name, arr in params.arrays.items():
        values = arr.reshape(-1).tolist()
        lines.append(f"{name} {len(values)} " + " ".join(map(repr, values)))
    return "\n".join(lines) + "\n"


def save_checkpoint(params, path, seed=None):
    Path(path).write_text(dumps(params, seed), encoding="ascii")


def _parse_header(lines, path):
    if len(lines) < 4 or lines[0] != MAGIC:
        raise CheckpointVersionError(f"{path}: not a checkpoint file")
    if lines[1] != f"version {FORMAT_VERSION}":
        raise CheckpointVersionError(
            f"{path}: unsupported checkpoint version line {lines[1]!r}"
        )
    spec_fields = lines[2].split()
    if spec_fields[:1] != ["spec"] or len(spec_fields) != 10:
        raise CheckpointShapeError(f"{path}: malformed spec line")
    try:
        spec = ArchitectureSpec(*(int(v) for v in spec_fields[1:]))
        spec.dimension_chain()
    except (ValueError, ConfigurationError) as exc:
        raise CheckpointShapeError(f"{path}: invalid architecture in header: {exc}") from exc
    seed_fields = lines[3].split()
    if len(seed_fields) != 2 or seed_fields[0] != "seed":
        raise CheckpointShapeError(f"{path}: malformed seed line")
    try:
        seed = None if seed_fields[1] == "none" else int(seed_fields[1])
    except ValueError as exc:
        raise CheckpointValueError(f"{path}: bad seed {seed_fields[1]!r}") from exc
    return spec, seed


def loads(text, path="<string>"):
    """Parse checkpoint text. Returns ``(params, spec, seed)``."""
    lines = text.splitlines()
    spec, seed = _parse_header(lines, path)
    layout = spec.layout()
    body = lines[4:]
    if len(body) != len(layout):
        raise CheckpointShapeError(
            f"{path}: expected {len(layout)} parameter arrays, found {len(body)}"
        )
    vector = np.empty(sum(int(np.prod(shape)) for _, shape in layout))
    offset = 0
    for line, (name, shape) in zip(body, layout):
        fields = line.split()
        expected = int(np.prod(shape))
        if len(fields) < 2 or fields[0] != name:
            raise CheckpointShapeError(
                f"{path}: expected array {name!r}, found {fields[:1]}"
            )
        try:
            declared = int(fields[1])
        except ValueError as exc:
            raise CheckpointShapeError(f"{path}: bad length field for {name}") from exc
        if declared != expected or len(fields) - 2 != expected:
            raise CheckpointShapeError(
                f"{path}: {name} declares {declared} values and holds "
                f"{len(fields) - 2}, architecture needs {expected}"
            )
        try:
            values = [float(v) for v in fields[2:]]
        except ValueError as exc:
            raise CheckpointValueError(f"{path}: unparseable value in {name}") from exc
        if not all(math.isfinite(v) for v in values):
            raise CheckpointValueError(f"{path}: non-finite value in {name}")
        vector[offset:offset + expected] = values
        offset += expected
    return NetworkParams(spec, vector), spec, seed


def load_checkpoint(path):
    """Read a checkpoint file. Returns ``(params, spec)``."""
    params, spec, _ = read_checkpoint(path)
    return params, spec


def read_checkpoint(path):
    """Like :func:`load_checkpoint` but also returns the recorded seed."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except FileNotFoundError as exc:
        raise CheckpointMissingError(f"checkpoint not found: {path}") from exc
    except UnicodeDecodeError as exc:
        raise CheckpointVersionError(f"{path}: not a text checkpoint") from exc
    return loads(text, path)
