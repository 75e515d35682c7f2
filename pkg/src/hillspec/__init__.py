"""Periodic Schrodinger band spectra and a thin-spectrum limit-periodic construction."""

from __future__ import annotations

__version__ = "0.1.0"

from .potential import PeriodicPotential
from .intervalset import DimensionProfile, IntervalSet
from .floquet import BandSpectrum, band_set, discriminant, monodromy, spectrum_measure
from .construction import ConstructionState, ShrinkConfig, Stage, build_sequence, shrink_spectrum

__all__ = [
    "BandSpectrum",
    "ConstructionState",
    "DimensionProfile",
    "IntervalSet",
    "PeriodicPotential",
    "ShrinkConfig",
    "Stage",
    "__version__",
    "band_set",
    "build_sequence",
    "discriminant",
    "monodromy",
    "shrink_spectrum",
    "spectrum_measure",
]
