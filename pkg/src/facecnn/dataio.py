"""Grayscale image ingestion and synthetic datasets.

Datasets on disk use one directory per class::

    root/<class_name>/<image>.pgm

Images are PGM (ASCII ``P2`` or binary ``P5``, maxval <= 255). Other formats
can be converted first, e.g. ``convert face.png -colorspace gray face.pgm``.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    ConfigurationError,
    DatasetError,
    PGMError,
    PGMHeaderError,
    PGMMaxvalError,
    PGMTruncatedError,
)

_WHITESPACE = b" \t\r\n\v\f"


@dataclass
class TrainingSample:
    image: np.ndarray
    label: int


@dataclass
class DatasetManifest:
    class_names: list
    samples: list = field(default_factory=list)  # (path, class index)

    @property
    def num_classes(self):
        return len(self.class_names)


class PGMFileNotFoundError(PGMError, FileNotFoundError):
    pass


def _header_tokens(data, count, path):
    """First ``count`` whitespace-separated header tokens, skipping ``#``
    comments. Returns ``[(token, offset), ...]`` and the offset just past the
    last token."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise PGMHeaderError(
                f"header ended after {len(tokens)} of {count} fields", path, pos
            )
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append((data[start:pos], start))
    return tokens, pos


def decode_pgm(data, path=None):
    """Decode PGM bytes into a float64 map of raw pixel values (0..maxval)."""
    tokens, pos = _header_tokens(data, 4, path)
    magic, _ = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PGMHeaderError(f"unsupported magic {magic!r}", path, 0)
    numbers = []
    for tok, off in tokens[1:]:
        try:
            value = int(tok)
        except ValueError:
            raise PGMHeaderError(f"header field {tok!r} is not an integer", path, off) from None
        if value < 1:
            raise PGMHeaderError(f"header field {value} must be positive", path, off)
        numbers.append(value)
    width, height, maxval = numbers
    if maxval > 255:
        raise PGMMaxvalError(f"maxval {maxval} is not supported (max 255)", path, tokens[3][1])
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise PGMTruncatedError("missing raster after header", path, pos)
        start = pos + 1
        payload = data[start:start + count]
        if len(payload) < count:
            raise PGMTruncatedError(
                f"raster holds {len(payload)} of {count} bytes", path, start + len(payload)
            )
        pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    else:
        body = data[pos:]
        fields = body.split()
        if len(fields) < count:
            raise PGMTruncatedError(
                f"raster holds {len(fields)} of {count} values", path, len(data)
            )
        try:
            pixels = np.array([int(v) for v in fields[:count]], dtype=np.float64)
        except ValueError:
            raise PGMHeaderError("non-integer pixel value", path, pos) from None
    if pixels.max(initial=0) > maxval:
        raise PGMError(f"pixel value exceeds maxval {maxval}", path, pos)
    return pixels.reshape(height, width)


def load_pgm(path):
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise PGMFileNotFoundError("no such image", path) from None
    return decode_pgm(data, path)


def write_pgm(path, pixels):
    """Write a binary (P5) PGM. ``pixels`` must already be integers 0..255."""
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ConfigurationError("PGM images are 2-D")
    if arr.min() < 0 or arr.max() > 255:
        raise ConfigurationError("PGM pixels must lie in 0..255")
    height, width = arr.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + arr.astype(np.uint8).tobytes())


def preprocess(raw, target_size=32):
    """Block-average down to ``target_size`` square, then map 0..255 to -1..1.

    Non-square or non-divisible images are center-cropped to the largest
    square whose side is a multiple of ``target_size``.
    """
    raw = np.asarray(raw, dtype=np.float64)
    rows, cols = raw.shape
    side = min(rows, cols)
    if target_size < 1 or target_size > side:
        raise ConfigurationError(
            f"cannot reduce a {rows}x{cols} image to {target_size}x{target_size}"
        )
    side -= side % target_size
    top = (rows - side) // 2
    left = (cols - side) // 2
    crop = raw[top:top + side, left:left + side]
    k = side // target_size
    small = crop.reshape(target_size, k, target_size, k).mean(axis=(1, 3))
    return small / 127.5 - 1.0


def to_pixels(image):
    """Inverse of the normalization, rounded to 8-bit pixel values."""
    return np.clip(np.rint((np.asarray(image) + 1.0) * 127.5), 0, 255).astype(np.uint8)


def scan_dataset(root_dir):
    root = Path(root_dir)
    if not root.is_dir():
        raise DatasetError("dataset root is not a directory", root)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise DatasetError("dataset root has no class directories", root)
    manifest = DatasetManifest([d.name for d in class_dirs])
    for index, class_dir in enumerate(class_dirs):
        files = sorted(p for p in class_dir.iterdir() if p.suffix.lower() == ".pgm")
        if not files:
            raise DatasetError("class directory has no .pgm images", class_dir)
        manifest.samples.extend((p, index) for p in files)
    return manifest


def load_dataset(root_dir, target_size=32):
    """Load ``root/<class>/*.pgm``. Classes are indexed in sorted name order
    and samples ordered by (class, filename)."""
    manifest = scan_dataset(root_dir)
    samples = []
    for path, label in manifest.samples:
        try:
            raw = load_pgm(path)
        except PGMError as exc:
            raise DatasetError(f"unreadable image ({exc})", path) from exc
        except OSError as exc:
            raise DatasetError(f"unreadable image ({exc.strerror})", path) from exc
        samples.append(TrainingSample(preprocess(raw, target_size), label))
    return manifest, samples


def class_patterns(num_classes, size):
    """Noise-free base image of every class: a cosine grating with its own
    orientation and spatial frequency, amplitude 0.9."""
    rows, cols = np.mgrid[0:size, 0:size] / size
    patterns = np.empty((num_classes, size, size))
    for c in range(num_classes):
        angle = np.pi * c / num_classes
        cycles = 2 + (c % 3)
        phase = 2 * np.pi * cycles * (rows * np.cos(angle) + cols * np.sin(angle))
        patterns[c] = 0.9 * np.cos(phase)
    return patterns


def generate_synthetic(num_classes=17, per_class=8, size=32, seed=0, noise=0.1):
    """Class-major list of samples: base grating plus uniform noise in
    ``[-noise, noise]``. Base patterns do not depend on ``seed``."""
    if num_classes < 2:
        raise ConfigurationError("need at least two classes")
    if per_class < 1:
        raise ConfigurationError("need at least one sample per class")
    patterns = class_patterns(num_classes, size)
    rng = np.random.default_rng(seed)
    samples = []
    for label in range(num_classes):
        for _ in range(per_class):
            jitter = rng.uniform(-noise, noise, size=(size, size)) if noise else 0.0
            image = np.clip(patterns[label] + jitter, -1.0, 1.0)
            samples.append(TrainingSample(image, label))
    return samples


def synthetic_class_names(num_classes):
    """``class0``.. names, zero-padded so they sort in label order."""
    width = len(str(num_classes - 1))
    return [f"class{label:0{width}d}" for label in range(num_classes)]


def write_dataset(root_dir, samples, class_names=None, upscale=3):
    """Materialize samples in the directory layout as 8-bit P5 files, each
    pixel repeated ``upscale`` times per axis."""
    root = Path(root_dir)
    labels = sorted({s.label for s in samples})
    if class_names is None:
        class_names = synthetic_class_names(max(labels) + 1)
    counters = {}
    paths = []
    for sample in samples:
        class_dir = root / class_names[sample.label]
        class_dir.mkdir(parents=True, exist_ok=True)
        idx = counters.get(sample.label, 0)
        counters[sample.label] = idx + 1
        pixels = to_pixels(sample.image)
        pixels = np.repeat(np.repeat(pixels, upscale, axis=0), upscale, axis=1)
        path = class_dir / f"img{idx:04d}.pgm"
        write_pgm(path, pixels)
        paths.append(path)
    return paths


def as_arrays(samples):
    """Stack samples into ``(X, y)`` with X shaped ``(n, rows, cols)``."""
    X = np.stack([s.image for s in samples])
    y = np.array([s.label for s in samples])
    return X, y
