"""
Planar waves and their spectra
==============================

A planar wave on an M x M grid is a sinusoid with frequency f (cycles per
image) and direction omega.  When (f cos omega, f sin omega) lands on the
integer lattice the whole spectrum sits in two conjugate bins.
"""

import numpy as np

from afa.augment import make_wave, spectral_delta_check, wave_for_bin
from afa.tensor_core import dft2, l2_norm

M = 16

# a horizontal wave, two cycles across the image
w = make_wave(2.0, 0.0, M)
print("norm:", l2_norm(w))

# magnitude spectrum, rounded so the two peaks stand out
spec = np.abs(dft2(w))
print(np.round(spec, 2)[:3, :])

# an oblique wave built from the bin (3, 1)
f, omega = wave_for_bin(3, 1)
print(f"bin (3, 1) -> f = {f:.4f}, omega = {omega:.4f} rad")
report = spectral_delta_check(f, omega, M, sigma=5.0)
print("bins:", report["plus_bin"], report["minus_bin"])
print("energy fraction:", report["peak_fraction"])
print("peak magnitude:", report["measured_magnitude"], "expected:", report["expected_magnitude"])

# off the lattice the energy leaks into neighbouring bins
leaky = np.abs(dft2(make_wave(2.5, 0.0, M))) ** 2
top_two = np.sort(leaky.ravel())[-2:].sum() / leaky.sum()
print(f"f = 2.5: top two bins hold {top_two:.1%} of the energy")
