"""Perceptual image verification and the pluggable disease classifier.

Evidence photos are matched against trusted reference images with a 64-bit
difference hash: luma (0.299R + 0.587G + 0.114B), exact area-average
downsample to 9x8 cells, one bit per horizontal neighbor pair (left < right).
Constant brightness shifts cancel in the gradient, which is what field photos
need. Dissimilarity is the Hamming distance between hashes.

The heavy CNN classifier is out of scope; ``ClassifierProvider`` is its
interface and ``SidecarClassifier`` a deterministic stand-in that reads
``<image>.label`` files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InputError

HASH_BITS = 64
DEFAULT_MATCH_THRESHOLD = 10

_GRID_W = 9  # one extra column for the horizontal gradient
_GRID_H = 8


def _box_resample(arr: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    """Exact fractional box average along ``axis`` (linear in pixel values)."""
    arr = np.moveaxis(arr, axis, 0)
    in_len = arr.shape[0]
    # Prefix integral with a leading zero row: I[k] = sum(arr[:k]).
    integral = np.concatenate([np.zeros((1,) + arr.shape[1:]), np.cumsum(arr, axis=0)])

    def segment_sum(lo: float, hi: float) -> np.ndarray:
        lo_i, hi_i = int(np.floor(lo)), int(np.ceil(hi))
        total = integral[hi_i] - integral[lo_i]
        total = total - arr[lo_i] * (lo - lo_i)
        if hi_i > hi:
            total = total - arr[hi_i - 1] * (hi_i - hi)
        return total

    edges = np.linspace(0.0, in_len, out_len + 1)
    out = np.stack([segment_sum(edges[k], edges[k + 1]) / (edges[k + 1] - edges[k])
                    for k in range(out_len)])
    return np.moveaxis(out, 0, axis)


def _load_pixels(image: "Image.Image | str | Path") -> np.ndarray:
    if isinstance(image, (str, Path)):
        path = Path(image)
        try:
            with Image.open(path) as img:
                img = img.convert("RGB")
                arr = np.asarray(img, dtype=np.float64)
        except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
            raise InputError(f"cannot decode image {path}: {exc}") from None
    else:
        arr = np.asarray(image.convert("RGB"), dtype=np.float64)
    return arr


def phash(image: "Image.Image | str | Path") -> int:
    """64-bit difference hash of an image; deterministic for identical pixels."""
    rgb = _load_pixels(image)
    h, w = rgb.shape[:2]
    if w < _GRID_W or h < _GRID_H:
        raise InputError(f"image too small for hashing: {w}x{h}, need at least "
                         f"{_GRID_W}x{_GRID_H}")
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    cells = _box_resample(_box_resample(luma, _GRID_H, axis=0), _GRID_W, axis=1)
    bits = cells[:, :-1] < cells[:, 1:]
    value = 0
    for r in range(_GRID_H):
        for c in range(_GRID_W - 1):
            if bits[r, c]:
                value |= 1 << (HASH_BITS - 1 - (r * (_GRID_W - 1) + c))
    return value


def hamming(h1: int, h2: int) -> int:
    """Number of differing bits between two 64-bit hashes."""
    return ((h1 ^ h2) & (2 ** HASH_BITS - 1)).bit_count()


def verify_match(user_image: str | Path, references: list[str | Path],
                 threshold: int = DEFAULT_MATCH_THRESHOLD) -> tuple[bool, int]:
    """Check a user photo against trusted references.

    Matched iff the smallest Hamming distance between hashes is within
    ``threshold``. Raises InputError naming the file on any undecodable image.
    """
    if not references:
        raise InputError("reference image list is empty")
    user_hash = phash(user_image)
    best = min(hamming(user_hash, phash(ref)) for ref in references)
    return best <= threshold, best


@dataclass(frozen=True)
class DiseaseVerdict:
    label: str
    confidence: float

    def __post_init__(self):
        if not self.label:
            raise InputError("classifier verdict has an empty label")
        if not (0.0 <= self.confidence <= 1.0):
            raise InputError(f"classifier confidence outside [0, 1]: {self.confidence}")


class ClassifierProvider(Protocol):
    """Anything that can label a plant image; real CNNs plug in here."""

    def classify(self, image_path: str | Path) -> DiseaseVerdict: ...


class SidecarClassifier:
    """Deterministic stub: reads ``<image>.label`` holding ``label,confidence``."""

    def classify(self, image_path: str | Path) -> DiseaseVerdict:
        sidecar = Path(f"{image_path}.label")
        if not sidecar.is_file():
            raise InputError(f"no sidecar label file: {sidecar}")
        line = sidecar.read_text("utf-8").strip()
        label, sep, conf_s = line.rpartition(",")
        if not sep or not label.strip():
            raise InputError(f"sidecar {sidecar} must contain 'label,confidence'")
        try:
            confidence = float(conf_s)
        except ValueError:
            raise InputError(f"sidecar {sidecar}: bad confidence {conf_s!r}") from None
        return DiseaseVerdict(label=label.strip(), confidence=confidence)


def classify(image: str | Path, provider: ClassifierProvider) -> DiseaseVerdict:
    """Run the configured classifier on an image."""
    return provider.classify(image)
