"""Fourier-basis (planar wave) augmentation and the standard crop/flip baseline.

A planar wave of frequency ``f`` (cycles per image) and direction ``omega`` is

    A(u, v) = R * sin(2*pi*f * (u/M * cos(omega) + v/M * sin(omega) - pi/4))

rendered on an M x M grid (``grid[v, u]``) with ``R`` solved so the grid has unit
l2-norm.  When ``(f cos omega, f sin omega)`` is an integer pair ``(kx, ky)`` the
wave's spectrum is supported on exactly two bins, ``(kx, ky)`` and its
conjugate; off-lattice frequencies leak into neighbouring bins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from afa.errors import (
    DegenerateWave,
    InvalidFrequency,
    InvalidParam,
    InvalidRange,
    NotVerifiable,
    ShapeMismatch,
)
from afa.tensor_core import ImageTensor, conjugate_bin, dft2, sample_exponential, sample_uniform

CHANNEL_NAMES = {1: ("Y",), 3: ("R", "G", "B")}


@dataclass(frozen=True)
class PlanarWave:
    f: float
    omega: float
    size: int
    amplitude: float  # R, solved by normalization

    def render(self) -> np.ndarray:
        return self.amplitude * _raw_waves(np.array([self.f]), np.array([self.omega]), self.size)[0]


@dataclass(frozen=True)
class AfaConfig:
    mean_strength: float = 10.0
    image_size: int = 32
    per_channel: bool = True
    clamp: bool = True
    # if set, every sigma equals this value (the sigma draw is still consumed)
    fixed_strength: float | None = None

    def __post_init__(self):
        if not self.mean_strength > 0:
            raise InvalidParam(f"mean_strength must be positive, got {self.mean_strength}")
        if self.image_size < 2:
            raise InvalidParam(f"image_size must be >= 2, got {self.image_size}")
        if self.fixed_strength is not None and self.fixed_strength < 0:
            raise InvalidParam("fixed_strength must be nonnegative")


@dataclass(frozen=True)
class VisualAugConfig:
    crop_padding: int = 4
    hflip_prob: float = 0.5

    def __post_init__(self):
        if self.crop_padding < 0:
            raise InvalidParam("crop_padding must be >= 0")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise InvalidParam("hflip_prob must lie in [0, 1]")


@dataclass(frozen=True)
class WaveDraw:
    """Parameters sampled for one channel: frequency, direction, strength."""

    f: float
    omega: float
    sigma: float


@dataclass(frozen=True)
class SpectralDelta:
    plus_bin: tuple[int, int]
    minus_bin: tuple[int, int]
    expected_magnitude: float

    @property
    def self_conjugate(self) -> bool:
        return self.plus_bin == self.minus_bin


# ---------------------------------------------------------------------------
# Planar waves
# ---------------------------------------------------------------------------


def _raw_waves(f: np.ndarray, omega: np.ndarray, m: int) -> np.ndarray:
    """Unnormalized waves, shape (len(f), m, m), float64."""
    coords = np.arange(m, dtype=np.float64) / m
    fx = (f * np.cos(omega))[:, None, None]
    fy = (f * np.sin(omega))[:, None, None]
    u = coords[None, None, :]
    v = coords[None, :, None]
    return np.sin(2 * np.pi * (fx * u + fy * v - f[:, None, None] * (np.pi / 4)))


def _check_wave_args(f, omega, m):
    if m < 2:
        raise InvalidParam(f"image size must be >= 2, got {m}")
    f = np.asarray(f, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    if np.any(~np.isfinite(f)) or np.any(f < 1):
        raise InvalidFrequency(f"frequency must be >= 1 cycle per image, got {f}")
    if np.any(omega < 0) or np.any(omega >= np.pi):
        raise InvalidParam(f"direction must lie in [0, pi), got {omega}")


def render_waves(f, omega, m: int) -> np.ndarray:
    """Unit-norm waves for arrays of (f, omega); shape (n, m, m), float64."""
    _check_wave_args(f, omega, m)
    f = np.atleast_1d(np.asarray(f, dtype=np.float64))
    omega = np.atleast_1d(np.asarray(omega, dtype=np.float64))
    raw = _raw_waves(f, omega, m)
    norms = np.sqrt(np.sum(raw * raw, axis=(1, 2)))
    # sin() of an exact multiple of pi comes back near 1e-16, not 0
    bad = norms < 1e-9 * m
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DegenerateWave(f"wave f={f[i]}, omega={omega[i]} renders as all zeros on {m}x{m}")
    return raw / norms[:, None, None]


def make_wave(f: float, omega: float, m: int) -> np.ndarray:
    """Unit-l2 planar wave as an m x m float64 grid."""
    return render_waves(f, omega, m)[0]


def planar_wave(f: float, omega: float, m: int) -> PlanarWave:
    _check_wave_args(f, omega, m)
    raw = _raw_waves(np.array([float(f)]), np.array([float(omega)]), m)[0]
    norm = float(np.sqrt(np.sum(raw * raw)))
    if norm < 1e-9 * m:
        raise DegenerateWave(f"wave f={f}, omega={omega} renders as all zeros on {m}x{m}")
    return PlanarWave(float(f), float(omega), m, 1.0 / norm)


def sample_basis(rng, m: int) -> tuple[float, float]:
    """Draw ``f ~ U[1, m)`` then ``omega ~ U[0, pi)``."""
    if m < 2:
        raise InvalidParam(f"image size must be >= 2, got {m}")
    f = sample_uniform(rng, 1.0, float(m))
    omega = sample_uniform(rng, 0.0, np.pi)
    return f, omega


def wave_for_bin(kx: int, ky: int) -> tuple[float, float]:
    """(f, omega) whose wave has spectral support on bin (kx, ky) and its conjugate."""
    if kx == 0 and ky == 0:
        raise InvalidFrequency("the DC bin has no planar wave (f = 0)")
    f = math.hypot(kx, ky)
    omega = math.atan2(ky, kx) % math.pi
    if omega >= math.pi:
        omega = 0.0
    return f, omega


def basis_for_bin(kx: int, ky: int, m: int) -> np.ndarray:
    """Unit-norm real grid whose spectrum is nonzero only at (kx, ky) and its conjugate."""
    if kx % m == 0 and ky % m == 0:
        return np.full((m, m), 1.0 / m)
    return make_wave(*wave_for_bin(kx, ky), m)


# ---------------------------------------------------------------------------
# AFA
# ---------------------------------------------------------------------------


def sample_afa_params(rng, cfg: AfaConfig, channels: int) -> list[WaveDraw]:
    """Three draws per channel in the fixed order (f, omega, sigma).

    With ``per_channel=False`` one draw is shared by every channel.
    """
    n = channels if cfg.per_channel else 1
    draws = []
    for _ in range(n):
        f, omega = sample_basis(rng, cfg.image_size)
        sigma = sample_exponential(rng, cfg.mean_strength)
        if cfg.fixed_strength is not None:
            sigma = float(cfg.fixed_strength)
        draws.append(WaveDraw(f, omega, sigma))
    if not cfg.per_channel:
        draws = draws * channels
    return draws


def apply_waves(x: np.ndarray, draws: list[WaveDraw], clamp: bool) -> np.ndarray:
    """Add ``sigma_c * A_c`` to channel ``c`` of a C x M x M array."""
    m = x.shape[-1]
    waves = render_waves([d.f for d in draws], [d.omega for d in draws], m)
    sigmas = np.array([d.sigma for d in draws])[:, None, None]
    out = x.astype(np.float64) + sigmas * waves
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out.astype(np.float32)


def _check_afa_input(x: ImageTensor, cfg: AfaConfig):
    _, h, w = x.shape
    if h != w or h != cfg.image_size:
        raise ShapeMismatch(f"AFA configured for {cfg.image_size}x{cfg.image_size}, got {h}x{w}")
    if not x.clamped:
        raise InvalidRange("AFA expects a clamped input image")


def afa_augment(x: ImageTensor, cfg: AfaConfig, rng, return_params: bool = False):
    """Per-channel additive planar-wave augmentation.

    Each channel gets its own wave and an exponentially distributed strength
    with mean ``cfg.mean_strength``; the result is clamped to [0, 1] unless
    ``cfg.clamp`` is off.
    """
    _check_afa_input(x, cfg)
    draws = sample_afa_params(rng, cfg, x.channels)
    out = ImageTensor(apply_waves(x.data, draws, cfg.clamp), clamped=cfg.clamp)
    return (out, draws) if return_params else out


def afa_augment_batch(images: np.ndarray, cfg: AfaConfig, rngs) -> np.ndarray:
    """AFA over an N x C x M x M array with one RNG stream per image."""
    n, c, h, w = images.shape
    if h != w or h != cfg.image_size:
        raise ShapeMismatch(f"AFA configured for {cfg.image_size}x{cfg.image_size}, got {h}x{w}")
    draws = [d for rng in rngs for d in sample_afa_params(rng, cfg, c)]
    if len(draws) != n * c:
        raise ShapeMismatch(f"need one RNG stream per image ({n}), got {len(draws) // c}")
    waves = render_waves([d.f for d in draws], [d.omega for d in draws], h).reshape(n, c, h, w)
    sigmas = np.array([d.sigma for d in draws]).reshape(n, c, 1, 1)
    out = images.astype(np.float64) + sigmas * waves
    if cfg.clamp:
        out = np.clip(out, 0.0, 1.0)
    return out.astype(np.float32)


# ---------------------------------------------------------------------------
# Standard visual augmentation
# ---------------------------------------------------------------------------


def _crop_flip(x: np.ndarray, pad: int, dy: int, dx: int, flip: bool) -> np.ndarray:
    _, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    out = x[:, dy:dy + h, dx:dx + w]
    if flip:
        out = out[:, :, ::-1]
    return np.ascontiguousarray(out)


def sample_visual_params(rng, cfg: VisualAugConfig) -> tuple[int, int, bool]:
    span = 2 * cfg.crop_padding + 1
    dy = rng.integers(span)
    dx = rng.integers(span)
    flip = rng.uniform() < cfg.hflip_prob
    return dy, dx, flip


def standard_visual_aug(x: ImageTensor, cfg: VisualAugConfig, rng) -> ImageTensor:
    """Zero-pad, random crop back to the input size, random horizontal flip."""
    if not x.clamped:
        raise InvalidRange("visual augmentation expects a clamped input image")
    dy, dx, flip = sample_visual_params(rng, cfg)
    return ImageTensor(_crop_flip(x.data, cfg.crop_padding, dy, dx, flip), clamped=True)


def standard_visual_aug_batch(images: np.ndarray, cfg: VisualAugConfig, rngs) -> np.ndarray:
    out = np.empty_like(images)
    for i, rng in enumerate(rngs):
        dy, dx, flip = sample_visual_params(rng, cfg)
        out[i] = _crop_flip(images[i], cfg.crop_padding, dy, dx, flip)
    return out


# ---------------------------------------------------------------------------
# Spectral verification
# ---------------------------------------------------------------------------


def spectral_delta(f: float, omega: float, m: int, sigma: float = 1.0) -> SpectralDelta:
    """Predicted support of the spectrum of ``sigma * A_{f, omega}``.

    Only defined on the integer lattice: ``f cos omega`` must be within 1e-9 of
    an integer in [-m/2, m/2] and ``f sin omega`` of one in [0, m/2].
    """
    fx, fy = f * math.cos(omega), f * math.sin(omega)
    kx, ky = round(fx), round(fy)
    if abs(fx - kx) > 1e-9 or abs(fy - ky) > 1e-9:
        raise NotVerifiable(f"(f cos w, f sin w) = ({fx:.6g}, {fy:.6g}) is not an integer pair")
    if abs(kx) > m / 2 or not 0 <= ky <= m / 2:
        raise NotVerifiable(f"bin ({kx}, {ky}) lies outside the unaliased range for M={m}")
    plus = (kx % m, ky % m)
    minus = conjugate_bin(kx, ky, m)
    wave = planar_wave(f, omega, m)
    if plus == minus:
        # all energy in one bin: |S| = M * ||w||
        magnitude = abs(sigma) * m
    else:
        magnitude = abs(sigma) * wave.amplitude * m * m / 2
    return SpectralDelta(plus, minus, magnitude)


def spectral_delta_check(f: float, omega: float, m: int, sigma: float = 1.0) -> dict:
    """Render ``sigma * A``, transform it, and measure the energy in the predicted bins."""
    delta = spectral_delta(f, omega, m, sigma)
    spectrum = dft2(sigma * make_wave(f, omega, m))
    energy = np.abs(spectrum) ** 2
    bins = {delta.plus_bin, delta.minus_bin}
    in_bins = sum(energy[ky, kx] for kx, ky in bins)
    total = float(np.sum(energy))
    fraction = float(in_bins / total) if total > 0 else 0.0
    kx, ky = delta.plus_bin
    measured = float(np.abs(spectrum[ky, kx]))
    mag_ok = abs(measured - delta.expected_magnitude) <= 1e-6 * max(1.0, delta.expected_magnitude)
    return {
        "f": float(f),
        "omega": float(omega),
        "M": int(m),
        "sigma": float(sigma),
        "plus_bin": delta.plus_bin,
        "minus_bin": delta.minus_bin,
        "expected_magnitude": delta.expected_magnitude,
        "measured_magnitude": measured,
        "peak_fraction": fraction,
        "passed": bool(fraction >= 0.999 and mag_ok),
    }
