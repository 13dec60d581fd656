"""Computational microlocal analysis on the periodic torus."""

from .grid import Grid, SampledField, Spectrum, fourier_multiplier, forward_transform, inverse_transform
from .littlewood_paley import DyadicPartition, block, build_partition, low_pass

__all__ = ["Grid", "SampledField", "Spectrum", "fourier_multiplier", "forward_transform",
           "inverse_transform", "DyadicPartition", "block", "build_partition", "low_pass"]
