"""Parametric image corruptions at five severities and perturbation sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from afa.augment import AfaConfig, apply_waves, sample_afa_params
from afa.errors import InvalidParam, SequenceTooShort, UnknownCorruption
from afa.robustness.constants import (
    CORRUPTION_KINDS,
    NEUTRAL_PARAMS,
    NOISE_KINDS,
    SEQUENCE_NOISE_SEVERITY,
    SEVERITY_PARAMS,
)


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int

    def __post_init__(self):
        if self.kind not in SEVERITY_PARAMS:
            raise UnknownCorruption(f"unknown corruption {self.kind!r}")
        if self.severity not in (1, 2, 3, 4, 5):
            raise InvalidParam(f"severity must be 1..5, got {self.severity}")

    @property
    def param(self):
        return SEVERITY_PARAMS[self.kind][self.severity - 1]


def all_specs(kinds=CORRUPTION_KINDS) -> list[CorruptionSpec]:
    return [CorruptionSpec(k, s) for k in kinds for s in range(1, 6)]


def corrupt(x: np.ndarray, kind: str, param, rng) -> np.ndarray:
    """Apply one corruption with an explicit parameter to a C x H x W image."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "gaussian_noise":
        out = x + param * rng.normal(x.shape) if param else x
    elif kind == "shot_noise":
        # normal approximation of Poisson(count * x) / count
        out = x + np.sqrt(np.maximum(x, 0.0) / param) * rng.normal(x.shape) if np.isfinite(param) else x
    elif kind == "impulse_noise":
        u = rng.uniform(x.shape)
        out = np.where(u < param / 2, 0.0, np.where(u >= 1 - param / 2, 1.0, x))
    elif kind == "box_blur":
        size = int(param)
        out = uniform_filter(x, size=(1, size, size), mode="reflect") if size > 1 else x
    elif kind == "brightness":
        out = x + param
    elif kind == "contrast":
        mean = x.mean(axis=(1, 2), keepdims=True)
        out = (x - mean) * param + mean
    elif kind == "planar_wave":
        # same sampling and rendering path as AFA, strength pinned to ``param``
        cfg = AfaConfig(mean_strength=1.0, image_size=x.shape[-1], fixed_strength=float(param))
        out = apply_waves(x, sample_afa_params(rng, cfg, x.shape[0]), clamp=False)
    else:
        raise UnknownCorruption(f"unknown corruption {kind!r}")
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def corrupt_images(images: np.ndarray, spec: CorruptionSpec, rng) -> np.ndarray:
    """Corrupt a stack; image ``i`` draws from ``rng.child(kind, severity, i)``."""
    out = np.empty_like(images, dtype=np.float32)
    for i, img in enumerate(images):
        out[i] = corrupt(img, spec.kind, spec.param, rng.child(spec.kind, spec.severity, i))
    return out


def generate_corruptions(dataset, specs, rng) -> dict[tuple[str, int], np.ndarray]:
    """Corrupted copies of ``dataset.images`` keyed by ``(kind, severity)``.

    Labels are unchanged and stay on the dataset.
    """
    images = dataset.images if hasattr(dataset, "images") else np.asarray(dataset)
    family = {}
    for spec in specs:
        if not isinstance(spec, CorruptionSpec):
            spec = CorruptionSpec(*spec)
        family[(spec.kind, spec.severity)] = corrupt_images(images, spec, rng)
    return family


# ---------------------------------------------------------------------------
# Perturbation sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PerturbationSequence:
    frames: np.ndarray  # m x n x C x H x W
    kind: str
    temporally_related: bool

    def __post_init__(self):
        if self.frames.ndim != 5:
            raise InvalidParam(f"frames must be m x n x C x H x W, got {self.frames.shape}")
        if self.frames.shape[1] < 2:
            raise SequenceTooShort("a perturbation sequence needs at least 2 frames")

    @property
    def m(self) -> int:
        return self.frames.shape[0]

    @property
    def n(self) -> int:
        return self.frames.shape[1]


def frame_params(kind: str, n: int) -> list:
    """Corruption parameter for each of ``n`` frames.

    Noise kinds repeat a mid severity (fresh noise per frame); the other kinds
    ramp from the neutral value towards the severity-5 parameter.
    """
    if kind not in SEVERITY_PARAMS:
        raise UnknownCorruption(f"unknown corruption {kind!r}")
    if kind in NOISE_KINDS:
        return [SEVERITY_PARAMS[kind][SEQUENCE_NOISE_SEVERITY - 1]] * n
    start, stop = NEUTRAL_PARAMS[kind], SEVERITY_PARAMS[kind][4]
    params = [start + (stop - start) * j / n for j in range(1, n + 1)]
    if kind == "box_blur":
        params = [int(round(p)) for p in params]
    return params


def make_sequences(images: np.ndarray, kind: str, n: int, rng) -> PerturbationSequence:
    """One sequence of ``n`` frames per image.

    Planar-wave sequences keep each image's wave fixed and grow its strength,
    so consecutive frames are related; noise frames are independent draws.
    """
    if n < 2:
        raise SequenceTooShort("a perturbation sequence needs at least 2 frames")
    params = frame_params(kind, n)
    frames = np.empty((len(images), n) + images.shape[1:], dtype=np.float32)
    for i, img in enumerate(images):
        for j, p in enumerate(params):
            if kind == "planar_wave":
                stream = rng.child(kind, "seq", i)
            else:
                stream = rng.child(kind, "seq", i, j)
            frames[i, j] = corrupt(img, kind, p, stream)
    return PerturbationSequence(frames, kind, kind not in NOISE_KINDS)
