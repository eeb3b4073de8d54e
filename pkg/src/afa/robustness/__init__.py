"""Corruption benchmarks, consistency metrics and Fourier heatmaps."""

from afa.robustness.constants import CORRUPTION_KINDS, NOISE_KINDS, SEVERITY_PARAMS
from afa.robustness.corruptions import (
    CorruptionSpec,
    PerturbationSequence,
    all_specs,
    corrupt,
    corrupt_images,
    frame_params,
    generate_corruptions,
    make_sequences,
)
from afa.robustness.heatmap import (
    HeatmapSpec,
    fourier_basis,
    fourier_heatmap,
    grid_bins,
    heatmap_to_pgm_bytes,
)
from afa.robustness.metrics import (
    CorruptionErrorTable,
    classification_error,
    corruption_error,
    flip_prob,
    flip_prob_from_predictions,
    mce,
    mfr,
    mt5d,
    rankings_from_scores,
    robust_accuracy,
    t5d,
    t5d_from_rankings,
    top5_distances,
)
