"""Corruption parameter tables, one entry per severity 1..5.

Values are in image units (pixels in [0, 1], side length 16..32).  Each table
is monotone so that higher severities perturb more; amplitude-type parameters
grow roughly threefold from severity 1 to severity 5.
"""

CORRUPTION_KINDS = (
    "gaussian_noise",
    "shot_noise",
    "impulse_noise",
    "box_blur",
    "brightness",
    "contrast",
    "planar_wave",
)

# kinds whose perturbation is independent noise rather than a growing transform
NOISE_KINDS = frozenset({"gaussian_noise", "shot_noise", "impulse_noise"})

SEVERITY_PARAMS = {
    # additive N(0, std^2) per pixel and channel
    "gaussian_noise": (0.08, 0.12, 0.16, 0.20, 0.24),
    # photon count per unit intensity; noise std is sqrt(x / count)
    "shot_noise": (60.0, 30.0, 17.0, 10.0, 7.0),
    # fraction of pixel values replaced by 0 or 1 (half each)
    "impulse_noise": (0.03, 0.045, 0.06, 0.075, 0.09),
    # side length of the box filter
    "box_blur": (2, 3, 4, 5, 6),
    # additive intensity shift
    "brightness": (0.1, 0.15, 0.2, 0.25, 0.3),
    # factor applied to deviations from the per-channel mean
    "contrast": (0.6, 0.5, 0.4, 0.3, 0.2),
    # strength of a unit-norm planar wave per channel
    "planar_wave": (2.0, 3.0, 4.0, 5.0, 6.0),
}

# identity value of each parameter, the start of a perturbation sequence
NEUTRAL_PARAMS = {
    "gaussian_noise": 0.0,
    "shot_noise": float("inf"),
    "impulse_noise": 0.0,
    "box_blur": 1,
    "brightness": 0.0,
    "contrast": 1.0,
    "planar_wave": 0.0,
}

# noise sequences use this severity for every frame
SEQUENCE_NOISE_SEVERITY = 3
