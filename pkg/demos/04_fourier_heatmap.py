"""
Fourier heatmaps
================

Each cell adds a single-frequency unit-norm perturbation, scaled by v, to
every test image and records the error.  Rows run over vertical frequency
-G..G, columns over horizontal frequency 0..G.  With v = 0 every cell is the
clean error.
"""

from pathlib import Path

import numpy as np

from afa.config import RunConfig
from afa.data import synth_dataset, write_pgm_ppm
from afa.pipeline import train_from_config
from afa.robustness import fourier_heatmap, heatmap_to_pgm_bytes
from afa.tensor_core import Rng

out = Path("demo_output")
out.mkdir(exist_ok=True)

cfg = RunConfig(seed=0, data_train_per_class=60, data_test_per_class=30)
_, test = synth_dataset(cfg.synthetic_spec())

np.set_printoptions(precision=2, suppress=True)
for setting in ("standard", "afa_aux"):
    model, _, _ = train_from_config(cfg.replace(train_setting=setting))
    flat = fourier_heatmap(model, test.images, test.labels, cfg.heatmap_spec(v=0.0), Rng(0))
    print(setting, "v=0 cells all equal:", bool(np.all(flat == flat[0, 0])), "clean error", flat[0, 0])
    grid = fourier_heatmap(model, test.images, test.labels, cfg.heatmap_spec(), Rng(0).child("heatmap"))
    print(grid)
    print(setting, "mean heatmap error:", round(float(grid.mean()), 4))
    # one pixel per cell, black = 0 error, white = all wrong
    write_pgm_ppm(out / f"heatmap_{setting}.pgm", heatmap_to_pgm_bytes(grid)[None] / 255.0)
