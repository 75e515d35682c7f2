"""Monodromy, Hill discriminant and band spectra of -u'' + V u = E u."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..potential import PeriodicPotential
from .bands import BandFlags, BandSpectrum, band_count_bound, band_set, spectrum_measure
from .integrate import DEFAULT_ODE_TOL, BatchResult, evaluate_batch, thread_count


@dataclass(frozen=True)
class Monodromy:
    """One-period solution map (u, u')(0) -> (u, u')(T) at energy E."""

    m11: float
    m12: float
    m21: float
    m22: float
    energy: float
    error: float

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21


def monodromy(V: PeriodicPotential, E: float, tol: float = DEFAULT_ODE_TOL) -> Monodromy:
    res = evaluate_batch(V, [E], tol)
    m11, m21, m12, m22 = (float(x) for x in res.matrices[0])
    if res.scale_exp[0] > 0:
        # entries overflowed the rescaling threshold; keep signs, report inf
        m11, m21, m12, m22 = (math.copysign(math.inf, x) if x != 0 else 0.0 for x in (m11, m21, m12, m22))
    return Monodromy(m11, m12, m21, m22, float(E), float(res.errors[0]))


def discriminant(V: PeriodicPotential, E: float, tol: float = DEFAULT_ODE_TOL) -> float:
    """Delta(E) = trace of the monodromy matrix."""
    return float(evaluate_batch(V, [E], tol).traces[0])


__all__ = [
    "BandFlags",
    "BandSpectrum",
    "BatchResult",
    "DEFAULT_ODE_TOL",
    "Monodromy",
    "band_count_bound",
    "band_set",
    "discriminant",
    "evaluate_batch",
    "monodromy",
    "spectrum_measure",
    "thread_count",
]
