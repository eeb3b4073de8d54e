"""Fourier heatmaps: error under single-frequency perturbations ``X + r v U_ij``.

The grid covers horizontal frequencies ``kx = 0..G`` (columns) and vertical
frequencies ``ky = -G..G`` (rows, top row ``ky = -G``).  A bin and its
conjugate describe the same real perturbation, so duplicated cells of the
half-plane share one evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from afa.augment import basis_for_bin
from afa.errors import InvalidBin, InvalidParam
from afa.robustness.metrics import model_predict
from afa.tensor_core import conjugate_bin


@dataclass(frozen=True)
class HeatmapSpec:
    extent: int = 8
    v: float = 4.0
    trials: int = 1

    def __post_init__(self):
        if self.extent < 0:
            raise InvalidParam("extent must be >= 0")
        if self.v < 0:
            raise InvalidParam("v must be >= 0")
        if self.trials < 1:
            raise InvalidParam("trials must be >= 1")


def grid_bins(extent: int) -> list[tuple[int, int]]:
    """Bins in grid order: row by row from ky = -extent, kx = 0..extent."""
    return [(kx, ky) for ky in range(-extent, extent + 1) for kx in range(extent + 1)]


def fourier_basis(kx: int, ky: int, m: int, extent: int | None = None) -> np.ndarray:
    """Unit-norm ``U_ij`` whose spectrum lives on (kx, ky) and its conjugate."""
    limit = m // 2 if extent is None else min(extent, m // 2)
    if not (0 <= kx <= limit and -limit <= ky <= limit):
        raise InvalidBin(f"bin ({kx}, {ky}) outside the half-plane grid of extent {limit} for M={m}")
    return basis_for_bin(kx, ky, m)


def _pair_key(kx, ky, m):
    return frozenset({(kx % m, ky % m), conjugate_bin(kx, ky, m)})


def fourier_heatmap(model, images, labels, spec: HeatmapSpec, rng) -> np.ndarray:
    """Classification error per frequency cell, shape (2G+1) x (G+1).

    Every image channel gets its own ``r ~ U[-1, 1]`` per cell and trial;
    perturbed images are clamped to [0, 1] before evaluation.
    """
    images = np.asarray(images, dtype=np.float32)
    labels = np.asarray(labels)
    m = images.shape[-1]
    if spec.extent > m // 2:
        raise InvalidBin(f"extent {spec.extent} exceeds the Nyquist index {m // 2} for M={m}")
    g = spec.extent
    grid = np.zeros((2 * g + 1, g + 1))
    done = {}
    for kx, ky in grid_bins(g):
        key = _pair_key(kx, ky, m)
        if key not in done:
            basis = fourier_basis(kx, ky, m)
            errs = []
            for t in range(spec.trials):
                cell_rng = rng.child("heatmap", *min(key), t)
                r = 2.0 * cell_rng.uniform((len(images), images.shape[1])) - 1.0
                noisy = images + (r * spec.v)[:, :, None, None] * basis[None, None]
                noisy = np.clip(noisy, 0.0, 1.0).astype(np.float32)
                errs.append(np.mean(model_predict(model, noisy) != labels))
            done[key] = float(np.mean(errs))
        grid[ky + g, kx] = done[key]
    return grid


def heatmap_to_pgm_bytes(grid: np.ndarray) -> np.ndarray:
    """Fixed linear mapping: error 0 -> 0 (black), error 1 -> 255 (white)."""
    return np.round(np.clip(grid, 0.0, 1.0) * 255.0).astype(np.uint8)
