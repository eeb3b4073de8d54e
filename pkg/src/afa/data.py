"""Procedural toy classification data and binary PGM/PPM image files.

Every synthetic class is a texture family with a documented generative rule;
nuisance factors (colours, phase, position, jitter of the class frequency,
pixel noise) are drawn per image.  Class identity lives largely in the
spatial-frequency content, so frequency-domain augmentation and Fourier
heatmaps act on something meaningful:

====  =======================================================
 id   rule (u, v pixel coordinates, M image size)
====  =======================================================
 0    horizontal stripes, low frequency  (k ~ U[1.5, 2.5] cycles/image)
 1    horizontal stripes, high frequency (k ~ U[4.5, 5.5])
 2    vertical stripes, low frequency
 3    vertical stripes, high frequency
 4    checkerboard, k ~ U[2.5, 3.5] along both axes
 5    concentric rings, period M/4 +- 10%, centre jittered
 6    gaussian blob, width M/6 .. M/4, centre jittered
 7    diagonal cross-hatch (both diagonals), k ~ U[2.5, 3.5]
====  =======================================================

Classes are only distinguishable up to horizontal flips, which the standard
augmentation applies anyway; every rule above is flip-symmetric as a family.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from afa.errors import InvalidParam, NotPnm, UnsupportedMaxval
from afa.tensor_core import ImageTensor, Rng

CLASS_FAMILIES = (
    "hstripes_low",
    "hstripes_high",
    "vstripes_low",
    "vstripes_high",
    "checkerboard",
    "rings",
    "blob",
    "crosshatch",
)


@dataclass(frozen=True)
class SyntheticSpec:
    image_size: int = 16
    num_classes: int = 6
    train_per_class: int = 100
    test_per_class: int = 50
    channels: int = 3
    noise: float = 0.05
    min_contrast: float = 0.35
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.num_classes <= len(CLASS_FAMILIES):
            raise InvalidParam(f"num_classes must lie in [2, {len(CLASS_FAMILIES)}]")
        if self.image_size < 8:
            raise InvalidParam("image_size must be >= 8")
        if self.channels not in (1, 3):
            raise InvalidParam("channels must be 1 or 3")
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise InvalidParam("need at least one sample per class in each split")
        if self.noise < 0 or not 0 <= self.min_contrast <= 1:
            raise InvalidParam("noise must be >= 0 and min_contrast in [0, 1]")


@dataclass(frozen=True, eq=False)
class Dataset:
    images: np.ndarray  # N x C x M x M float32 in [0, 1]
    labels: np.ndarray  # N int64
    split: str = "train"

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float32)
        labels = np.asarray(self.labels, dtype=np.int64)
        if images.ndim != 4 or len(images) != len(labels):
            raise InvalidParam(f"{len(images)} images vs {len(labels)} labels")
        if images.size and (images.min() < 0 or images.max() > 1):
            raise InvalidParam("dataset images must be clamped to [0, 1]")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i) -> tuple[ImageTensor, int]:
        return ImageTensor(self.images[i], clamped=True), int(self.labels[i])

    @property
    def image_size(self) -> int:
        return self.images.shape[-1]


def _pattern(family: str, m: int, rng: Rng) -> np.ndarray:
    """Grey-level pattern in [0, 1] for one sample of ``family``."""
    c = np.arange(m, dtype=np.float64)
    u, v = np.meshgrid(c, c)  # u varies along columns, v along rows
    phase = 2 * np.pi * rng.uniform()
    if family.startswith(("hstripes", "vstripes")):
        lo, hi = (1.5, 2.5) if family.endswith("low") else (4.5, 5.5)
        k = lo + (hi - lo) * rng.uniform()
        coord = v if family.startswith("h") else u
        return 0.5 + 0.5 * np.sin(2 * np.pi * k * coord / m + phase)
    if family == "checkerboard":
        k = 2.5 + rng.uniform()
        phase2 = 2 * np.pi * rng.uniform()
        return 0.5 + 0.5 * np.sin(2 * np.pi * k * u / m + phase) * np.sin(2 * np.pi * k * v / m + phase2)
    cx = (m - 1) / 2 + (rng.uniform() - 0.5) * m / 4
    cy = (m - 1) / 2 + (rng.uniform() - 0.5) * m / 4
    r = np.hypot(u - cx, v - cy)
    if family == "rings":
        period = m / 4 * (0.9 + 0.2 * rng.uniform())
        return 0.5 + 0.5 * np.cos(2 * np.pi * r / period + phase)
    if family == "blob":
        width = m / 6 + (m / 4 - m / 6) * rng.uniform()
        return np.exp(-0.5 * (r / width) ** 2)
    if family == "crosshatch":
        k = 2.5 + rng.uniform()
        a = np.sin(2 * np.pi * k * (u + v) / (np.sqrt(2) * m) + phase)
        b = np.sin(2 * np.pi * k * (u - v) / (np.sqrt(2) * m) + phase)
        return 0.25 * (a + b) + 0.5
    raise InvalidParam(f"unknown class family {family!r}")


def render_sample(spec: SyntheticSpec, label: int, index: int) -> np.ndarray:
    """Image number ``index`` of class ``label``; a pure function of ``spec``, ``label`` and ``index``."""
    rng = Rng(spec.seed).child("synth", label, index)
    m = spec.image_size
    pattern = _pattern(CLASS_FAMILIES[label], m, rng)
    fg = rng.uniform(spec.channels)
    bg = rng.uniform(spec.channels)
    # keep foreground/background apart on average
    gap = np.mean(fg - bg)
    if abs(gap) < spec.min_contrast:
        shift = (spec.min_contrast - abs(gap)) * (1 if gap >= 0 else -1)
        fg = np.clip(fg + shift / 2, 0, 1)
        bg = np.clip(bg - shift / 2, 0, 1)
    img = bg[:, None, None] + (fg - bg)[:, None, None] * pattern[None]
    if spec.noise:
        img = img + spec.noise * rng.normal(img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def synth_dataset(spec: SyntheticSpec) -> tuple[Dataset, Dataset]:
    """Class-balanced train and test splits.

    Sample indices ``0 .. train_per_class-1`` of every class form the training
    split and the next ``test_per_class`` indices the test split, so the two
    never share an image.
    """
    splits = []
    for split, start, count in (
        ("train", 0, spec.train_per_class),
        ("test", spec.train_per_class, spec.test_per_class),
    ):
        images, labels = [], []
        for i in range(start, start + count):
            for label in range(spec.num_classes):
                images.append(render_sample(spec, label, i))
                labels.append(label)
        splits.append(Dataset(np.stack(images), np.array(labels), split))
    return splits[0], splits[1]


# ---------------------------------------------------------------------------
# PGM / PPM
# ---------------------------------------------------------------------------

_PNM_HEADER = re.compile(rb"\A(P[56])(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)\s")


def read_pgm_ppm(path) -> ImageTensor:
    """Binary P5 (grey) or P6 (RGB) with maxval 255, scaled to [0, 1]."""
    raw = Path(path).read_bytes()
    match = _PNM_HEADER.match(raw)
    if not match:
        raise NotPnm(f"{path}: not a binary PGM/PPM file")
    magic, w, h, maxval = match.group(1), *(int(g) for g in match.groups()[1:])
    if maxval != 255:
        raise UnsupportedMaxval(f"{path}: maxval {maxval} (only 255 is supported)")
    channels = 1 if magic == b"P5" else 3
    body = raw[match.end():]
    if len(body) < w * h * channels or w < 1 or h < 1:
        raise NotPnm(f"{path}: pixel data truncated")
    pixels = np.frombuffer(body, dtype=np.uint8, count=w * h * channels).reshape(h, w, channels)
    return ImageTensor(pixels.transpose(2, 0, 1).astype(np.float32) / 255.0, clamped=True)


def to_bytes(img) -> np.ndarray:
    data = img.data if isinstance(img, ImageTensor) else np.asarray(img)
    return np.round(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm_ppm(path, img) -> None:
    """Write a C x H x W image (C = 1 -> P5, C = 3 -> P6); values clipped to [0, 1]."""
    pixels = to_bytes(img)
    if pixels.ndim == 2:
        pixels = pixels[None]
    c, h, w = pixels.shape
    if c not in (1, 3):
        raise InvalidParam(f"PNM needs 1 or 3 channels, got {c}")
    magic = b"P5" if c == 1 else b"P6"
    with open(path, "wb") as fh:
        fh.write(magic + f"\n{w} {h}\n255\n".encode())
        fh.write(pixels.transpose(1, 2, 0).tobytes())
