"""Numeric substrate: tensors, 2-D DFT, seeded sampling and the AFAT file format.

Grids and spectra are stored row-major as ``grid[v, u]`` (row index ``v`` is the
vertical pixel coordinate, column index ``u`` the horizontal one).  Spectral bins
are *named* ``(kx, ky)`` -- horizontal frequency first -- so the bin ``(kx, ky)``
lives at ``spectrum[ky, kx]``.  :func:`bin_value` hides that transposition.

The forward DFT is unnormalized::

    S[ky, kx] = sum_{v,u} g[v, u] * exp(-2j*pi*(kx*u/W + ky*v/H))
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from afa.errors import (
    CorruptFile,
    InvalidDims,
    InvalidParam,
    InvalidRange,
    NotRealSpectrum,
    NotTensorFile,
)

PathLike = Union[str, Path]

# ---------------------------------------------------------------------------
# Tensors
# ---------------------------------------------------------------------------


def as_tensor(values, dims=None) -> np.ndarray:
    """Coerce to a finite float32 array of rank 1..4 (optionally reshaped)."""
    arr = np.asarray(values, dtype=np.float32)
    if dims is not None:
        dims = tuple(int(d) for d in dims)
        if arr.size != int(np.prod(dims)):
            raise InvalidDims(f"{arr.size} values do not fill dims {dims}")
        arr = arr.reshape(dims)
    if not 1 <= arr.ndim <= 4 or any(d < 1 for d in arr.shape):
        raise InvalidDims(f"tensor dims must be 1..4 positive extents, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParam("tensor contains NaN or Inf")
    return arr


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """A C x H x W float32 image with a flag recording that values lie in [0, 1]."""

    data: np.ndarray
    clamped: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise InvalidDims(f"image must be C x H x W, got shape {arr.shape}")
        if arr.shape[0] not in (1, 3):
            raise InvalidDims(f"image must have 1 or 3 channels, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParam("image contains NaN or Inf")
        if self.clamped and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InvalidRange("image flagged clamped has values outside [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self):
        return self.data.shape

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def size(self) -> int:
        """Side length M of a square image (height)."""
        return self.data.shape[1]

    @classmethod
    def from_unit_range(cls, data) -> "ImageTensor":
        """Wrap data that is already known to lie in [0, 1]."""
        return cls(np.asarray(data, dtype=np.float32), clamped=True)


def clamp01(img: ImageTensor) -> ImageTensor:
    return ImageTensor(np.clip(img.data, 0.0, 1.0), clamped=True)


def l2_norm(t) -> float:
    return float(np.sqrt(np.sum(np.square(np.asarray(t, dtype=np.float64)))))


# ---------------------------------------------------------------------------
# Discrete Fourier transform
# ---------------------------------------------------------------------------


def _check_grid(grid: np.ndarray) -> np.ndarray:
    if grid.ndim != 2 or grid.shape[0] < 2 or grid.shape[1] < 2:
        raise InvalidDims(f"DFT needs an H x W grid with H, W >= 2, got {grid.shape}")
    return grid


def dft2(channel) -> np.ndarray:
    """Unnormalized forward 2-D DFT of a real grid, accumulated in float64."""
    grid = _check_grid(np.asarray(channel, dtype=np.float64))
    return np.fft.fft2(grid)


def dft2_bruteforce(channel) -> np.ndarray:
    """Literal O(H^2 W^2) evaluation of the DFT sum.

    Kept as an oracle for :func:`dft2`; shares no code with the FFT path.
    """
    grid = _check_grid(np.asarray(channel, dtype=np.float64))
    h, w = grid.shape
    v = np.arange(h)
    u = np.arange(w)
    # kernel[ky, kx, v, u]
    phase = (
        np.multiply.outer(np.arange(h), v)[:, None, :, None] / h
        + np.multiply.outer(np.arange(w), u)[None, :, None, :] / w
    )
    kernel = np.exp(-2j * np.pi * phase)
    out = np.empty((h, w), dtype=np.complex128)
    for ky in range(h):
        for kx in range(w):
            out[ky, kx] = np.sum(kernel[ky, kx] * grid)
    return out


def conjugate_bin(kx: int, ky: int, h: int, w: int | None = None) -> tuple[int, int]:
    """Bin holding the complex conjugate of ``(kx, ky)`` for a real input."""
    w = h if w is None else w
    return (-kx) % w, (-ky) % h


def bin_value(spectrum: np.ndarray, kx: int, ky: int) -> complex:
    h, w = spectrum.shape
    return complex(spectrum[ky % h, kx % w])


def is_hermitian(spectrum: np.ndarray, tol: float = 1e-6) -> bool:
    spec = np.asarray(spectrum)
    mirrored = np.conj(np.roll(spec[::-1, ::-1], 1, axis=(0, 1)))
    scale = max(1.0, float(np.max(np.abs(spec))))
    return bool(np.max(np.abs(spec - mirrored)) <= tol * scale)


def idft2(grid) -> np.ndarray:
    """Inverse of :func:`dft2` for spectra of real grids; returns float64."""
    spec = np.asarray(grid, dtype=np.complex128)
    _check_grid(spec)
    if not is_hermitian(spec):
        raise NotRealSpectrum("spectrum is not Hermitian-symmetric; its inverse is not real")
    return np.real(np.fft.ifft2(spec))


# ---------------------------------------------------------------------------
# Random numbers
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _mix_int(x: int) -> int:
    return int(_mix64(np.array([x & _MASK64], dtype=np.uint64))[0])


def _key_to_int(key) -> int:
    if isinstance(key, (bool, np.bool_)):
        key = int(key)
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    if isinstance(key, str):
        # FNV-1a 64; Python's hash() is salted per process
        h = 0xCBF29CE484222325
        for b in key.encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & _MASK64
        return h
    raise TypeError(f"RNG keys must be int or str, not {type(key).__name__}")


class Rng:
    """Counter-based SplitMix64 stream.

    Draw ``k`` (0-based, counted from the stream start) is
    ``mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)``; the state is the pair
    ``(seed, counter)``.  Uniform doubles use the top 53 bits.
    Child streams are derived by hashing keys into the seed, so parallel
    consumers never share a stream.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.counter = int(counter)

    def __repr__(self):
        return f"Rng(seed={self.seed:#x}, counter={self.counter})"

    @property
    def state(self) -> tuple[int, int]:
        return self.seed, self.counter

    def copy(self) -> "Rng":
        return Rng(self.seed, self.counter)

    def raw(self, n: int) -> np.ndarray:
        ks = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + ks * np.uint64(_GOLDEN_GAMMA)
            return _mix64(z)

    def uniform(self, size=None):
        """Doubles in [0, 1); a float when ``size`` is None."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def normal(self, size) -> np.ndarray:
        """Standard normals via Box-Muller; consumes two uniforms per pair."""
        n = int(np.prod(size))
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1, u2 = u[:pairs], u[pairs:]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:n].reshape(size)

    def integers(self, high: int, size=None):
        """Integers in [0, high) by scaling a uniform (bias < 2**-40 for small high)."""
        u = self.uniform(size)
        if size is None:
            return min(int(u * high), high - 1)
        return np.minimum((u * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def child(self, *keys) -> "Rng":
        """Independent stream identified by ``keys`` (ints or strings)."""
        s = self.seed
        for key in keys:
            s = _mix_int(s ^ _mix_int(_key_to_int(key) + _GOLDEN_GAMMA))
        return Rng(s)


def sample_uniform(rng, lo: float, hi: float, size=None):
    """Uniform draw on [lo, hi).

    When ``hi - lo`` is below the spacing of floats around ``hi`` the affine map
    can round up to ``hi``; such results are pulled back to the largest float
    below ``hi``, so the half-open contract holds even as the range collapses.
    """
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise InvalidRange(f"need lo < hi, got [{lo}, {hi})")
    u = rng.uniform(size)
    x = np.minimum(lo + (hi - lo) * np.asarray(u), np.nextafter(hi, lo))
    return float(x) if size is None else x


def sample_exponential(rng, mean: float, size=None):
    """Inverse-CDF exponential draw, ``-mean * ln(1 - u)``: one uniform per sample."""
    mean = float(mean)
    if not mean > 0:
        raise InvalidParam(f"exponential mean must be positive, got {mean}")
    u = rng.uniform(size)
    x = -mean * np.log1p(-np.asarray(u, dtype=np.float64))
    return float(x) if size is None else x


# ---------------------------------------------------------------------------
# AFAT tensor files
# ---------------------------------------------------------------------------

AFAT_MAGIC = b"AFAT"
AFAT_VERSION = 1
_DTYPE_F32 = 1


def write_tensor(path: PathLike, t) -> None:
    arr = np.asarray(t)
    if arr.ndim == 0 or arr.ndim > 4:
        raise InvalidDims(f"AFAT stores rank 1..4 tensors, got rank {arr.ndim}")
    arr = as_tensor(arr)
    header = AFAT_MAGIC + bytes([AFAT_VERSION, _DTYPE_F32, arr.ndim])
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_tensor(path: PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != AFAT_MAGIC:
        raise NotTensorFile(f"{path}: missing AFAT magic")
    if len(raw) < 7:
        raise CorruptFile(f"{path}: truncated header")
    version, dtype, rank = raw[4], raw[5], raw[6]
    if version != AFAT_VERSION or dtype != _DTYPE_F32 or not 1 <= rank <= 4:
        raise CorruptFile(f"{path}: unsupported version/dtype/rank {version}/{dtype}/{rank}")
    offset = 7 + 4 * rank
    if len(raw) < offset:
        raise CorruptFile(f"{path}: truncated dims")
    dims = struct.unpack(f"<{rank}I", raw[7:offset])
    count = int(np.prod(dims))
    if count == 0 or len(raw) != offset + 4 * count:
        raise CorruptFile(f"{path}: expected {count} floats after header, found {(len(raw) - offset) / 4}")
    return np.frombuffer(raw, dtype="<f4", offset=offset, count=count).astype(np.float32).reshape(dims)


def tensor_bytes(arrays: Iterable[np.ndarray]) -> bytes:
    """Concatenated little-endian float32 payloads, handy for hashing state."""
    return b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in arrays)
