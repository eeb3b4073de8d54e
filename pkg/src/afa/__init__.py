"""Auxiliary Fourier-basis augmentation and frequency-robustness evaluation."""

__version__ = "0.1.0"
