"""Dataset ingestion, gradient-dataset persistence and deterministic batching.

Two byte layouts are normative here:

* IDX (the MNIST container): big-endian, magic 0x00000803 for images and
  0x00000801 for labels, pixel bytes scaled to [0, 1] by /255.
* GDS1 (this package's gradient container): ASCII magic ``GDS1``, then
  little-endian u32 dimension, u64 row count, the rows as float64
  row-major, and finally a u32-length-prefixed UTF-8 JSON metadata blob.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from geodp.errors import BadMagic, CountMismatch, InvalidBatchSize, TruncatedFile

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
GDS_MAGIC = b"GDS1"


@dataclass
class LabeledDataset:
    """Feature matrix in [0, 1] plus integer class labels."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"features {self.features.shape} do not pair with labels {self.labels.shape}"
            )
        if self.size < 1:
            raise ValueError("dataset must contain at least one example")
        if self.features.min() < 0.0 or self.features.max() > 1.0:
            raise ValueError("features must lie in [0, 1]")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError(f"labels must lie in [0, {self.num_classes})")

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


@dataclass
class GradientDataset:
    """Dense float64 gradient rows plus free-form capture metadata."""

    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[0] < 1:
            raise ValueError(f"rows must be a non-empty (count, d) array, got {self.rows.shape}")
        if not np.isfinite(self.rows).all():
            raise ValueError("gradient rows must be finite")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def count(self) -> int:
        return self.rows.shape[0]


def _read_exact(fh, nbytes: int, what: str) -> bytes:
    offset = fh.tell()
    buf = fh.read(nbytes)
    if len(buf) != nbytes:
        raise TruncatedFile(
            f"{what}: wanted {nbytes} bytes at offset {offset}, file ends after {len(buf)}"
        )
    return buf


def _read_idx_images(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, "image header"))
        if magic != IMAGES_MAGIC:
            raise BadMagic(f"image file magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}")
        n, rows, cols = struct.unpack(">III", _read_exact(fh, 12, "image header"))
        pixels = _read_exact(fh, n * rows * cols, "image payload")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(n, rows * cols)


def _read_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, "label header"))
        if magic != LABELS_MAGIC:
            raise BadMagic(f"label file magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}")
        (n,) = struct.unpack(">I", _read_exact(fh, 4, "label header"))
        raw = _read_exact(fh, n, "label payload")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def load_mnist(images_path, labels_path, num_classes: int = 10) -> LabeledDataset:
    """Parse an IDX image/label file pair into a dataset scaled to [0, 1]."""
    images = _read_idx_images(images_path)
    labels = _read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return LabeledDataset(images.astype(np.float64) / 255.0, labels, num_classes)


def save_idx_images(path, images: np.ndarray) -> None:
    """Write uint8 images of shape (n, rows, cols) in IDX layout."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def save_idx_labels(path, labels: np.ndarray) -> None:
    """Write uint8 labels of shape (n,) in IDX layout."""
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def save_gradients(ds: GradientDataset, path) -> None:
    """Persist a gradient dataset in the GDS1 layout (bit-exact round trip)."""
    blob = json.dumps(ds.metadata, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(GDS_MAGIC)
        fh.write(struct.pack("<IQ", ds.dim, ds.count))
        fh.write(np.ascontiguousarray(ds.rows, dtype="<f8").tobytes())
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)


def load_gradients(path) -> GradientDataset:
    """Read a GDS1 file written by :func:`save_gradients`."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "gradient header")
        if magic != GDS_MAGIC:
            raise BadMagic(f"gradient file magic {magic!r}, expected {GDS_MAGIC!r}")
        d, count = struct.unpack("<IQ", _read_exact(fh, 12, "gradient header"))
        payload = _read_exact(fh, count * d * 8, "gradient payload")
        (blob_len,) = struct.unpack("<I", _read_exact(fh, 4, "metadata length"))
        blob = _read_exact(fh, blob_len, "metadata blob")
    rows = np.frombuffer(payload, dtype="<f8").reshape(count, d).copy()
    return GradientDataset(rows, json.loads(blob.decode("utf-8")))


def batch_iter(ds: LabeledDataset, batch_size: int, seed: int, epochs=None):
    """Yield index arrays for consecutive disjoint batches.

    Each epoch draws a fresh permutation from one generator seeded with
    ``seed``, then slices it into ``floor(n/B)`` full batches (the short
    remainder is dropped so the noise scale C/B stays uniform).  With
    ``epochs=None`` the iterator is endless.
    """
    n = ds.size
    if not 1 <= batch_size <= n:
        raise InvalidBatchSize(f"batch size must be in [1, {n}], got {batch_size}")
    rng = np.random.default_rng(seed)
    per_epoch = n // batch_size
    epoch = 0
    while epochs is None or epoch < epochs:
        order = rng.permutation(n)
        for b in range(per_epoch):
            yield order[b * batch_size : (b + 1) * batch_size]
        epoch += 1


def synthetic_digits(
    n: int,
    seed: int,
    noise: float = 0.06,
    hard_fraction: float = 0.0,
    label_noise: float = 0.0,
):
    """Deterministic MNIST-shaped stand-in dataset (28x28 uint8, 10 classes).

    Each class owns a disjoint canvas cell holding a near-saturated blob
    signature; examples apply brightness jitter and in-support pixel
    noise, quantized to uint8 like scan data.  ``hard_fraction`` blends a
    random second class's signature into an example at mixing weights up
    to 0.48, producing direction-ambiguous images with small decision
    margins; ``label_noise`` reassigns that fraction of labels uniformly
    to a wrong class.  Returns ``(images (n, 28, 28), labels (n,))``
    suitable for :func:`save_idx_images` / :func:`save_idx_labels`.
    """
    rng = np.random.default_rng(seed)
    s, num_classes, margin = 28, 10, 1
    yy, xx = np.mgrid[0:s, 0:s] / (s - 1)

    templates = np.zeros((num_classes, s, s))
    supports = np.zeros((num_classes, s, s), dtype=bool)
    for k in range(num_classes):
        row, col = divmod(k, 2)
        y0, y1 = margin + row * 5, margin + row * 5 + 5
        x0, x1 = margin + col * 13, margin + col * 13 + 13
        cell = np.zeros((s, s), dtype=bool)
        cell[y0:y1, x0:x1] = True
        cy0, cx0 = (y0 + y1) / 2 / (s - 1), (x0 + x1) / 2 / (s - 1)
        t = np.full((s, s), 0.8) * cell
        for _ in range(2):
            cx = cx0 + rng.uniform(-0.15, 0.15)
            cy = cy0 + rng.uniform(-0.05, 0.05)
            w = rng.uniform(0.04, 0.07)
            t += 0.6 * np.exp(-(((xx - cx) ** 2 + (yy - cy) ** 2)) / (2 * w * w)) * cell
        templates[k] = np.clip(t, 0.0, 1.0)
        supports[k] = cell

    labels = rng.integers(0, num_classes, size=n)
    brightness = rng.uniform(0.85, 1.0, size=n)
    pixels = templates[labels] * brightness[:, None, None]
    support = supports[labels].copy()

    hard = np.flatnonzero(rng.random(n) < hard_fraction)
    if hard.size:
        other = (labels[hard] + rng.integers(1, num_classes, size=hard.size)) % num_classes
        mix = rng.uniform(0.25, 0.45, size=hard.size)
        pixels[hard] = (1.0 - mix)[:, None, None] * pixels[hard] + (
            mix * brightness[hard]
        )[:, None, None] * templates[other]
        support[hard] |= supports[other]

    pixels += noise * rng.standard_normal((n, s, s)) * support
    pixels = np.clip(pixels, 0.0, 1.0)

    out_labels = labels.copy()
    flip = np.flatnonzero(rng.random(n) < label_noise)
    if flip.size:
        out_labels[flip] = (labels[flip] + rng.integers(1, num_classes, size=flip.size)) % num_classes
    return np.round(pixels * 255.0).astype(np.uint8), out_labels.astype(np.uint8)
