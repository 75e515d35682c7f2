"""Real periodic potentials: finite trigonometric series and step functions.

Trigonometric kind is the canonical form::

    V(x) = sum_k a_k cos(2 pi k x / T) + b_k sin(2 pi k x / T)

Piecewise-constant ("pwc") kind holds ``samples[i]`` on the i-th of
``len(samples)`` equal subintervals of one period.  Both are closed under
``add`` and ``view_with_period``, and both admit an exact, cheap upper bound
on the sup norm, which is all the construction needs for distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import KindMismatchError, PeriodMismatchError

TRIG = "trig"
PWC = "pwc"

_PERIOD_RTOL = 1e-9


@dataclass(frozen=True)
class PeriodicPotential:
    period: float
    kind: str = TRIG
    coeffs: tuple[tuple[int, float, float], ...] = ()
    samples: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive and finite, got {self.period}")
        if self.kind == TRIG:
            merged: dict[int, list[float]] = {}
            for k, a, b in self.coeffs:
                if int(k) != k or k < 0:
                    raise ValueError(f"harmonic index must be a nonnegative integer, got {k}")
                k = int(k)
                if k == 0 and b != 0:
                    raise ValueError("b_0 must be zero")
                acc = merged.setdefault(k, [0.0, 0.0])
                acc[0] += float(a)
                acc[1] += float(b)
            canon = tuple(
                (k, ab[0], ab[1]) for k, ab in sorted(merged.items()) if ab[0] != 0.0 or ab[1] != 0.0
            )
            object.__setattr__(self, "coeffs", canon)
            if self.samples:
                raise ValueError("trig potential takes no samples")
        elif self.kind == PWC:
            if not self.samples:
                raise ValueError("pwc potential needs at least one sample")
            if self.coeffs:
                raise ValueError("pwc potential takes no coefficients")
            object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    # constructors ---------------------------------------------------------

    @classmethod
    def trig(cls, period: float, coeffs: Iterable[Sequence[float]]) -> "PeriodicPotential":
        return cls(period=float(period), kind=TRIG, coeffs=tuple((int(c[0]), float(c[1]), float(c[2])) for c in coeffs))

    @classmethod
    def constant(cls, value: float, period: float = 2 * math.pi) -> "PeriodicPotential":
        return cls.trig(period, [(0, value, 0.0)])

    @classmethod
    def piecewise(cls, period: float, samples: Iterable[float]) -> "PeriodicPotential":
        return cls(period=float(period), kind=PWC, samples=tuple(samples))

    # basic queries --------------------------------------------------------

    @property
    def is_constant(self) -> bool:
        if self.kind == TRIG:
            return all(k == 0 for k, _, _ in self.coeffs)
        return len(set(self.samples)) == 1

    @property
    def mean_value(self) -> float:
        if self.kind == TRIG:
            return sum(a for k, a, _ in self.coeffs if k == 0)
        return float(np.mean(self.samples))

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(V: PeriodicPotential, x):
    """V(x) for scalar or array ``x``, using the exact periodic extension."""
    xs = np.asarray(x, dtype=float)
    if V.kind == TRIG:
        out = np.zeros_like(xs)
        w = 2 * math.pi / V.period
        for k, a, b in V.coeffs:
            if k == 0:
                out = out + a
                continue
            # reduce the phase first so large x stays accurate
            phase = w * np.mod(k * xs, V.period)
            out = out + a * np.cos(phase) + b * np.sin(phase)
    else:
        n = len(V.samples)
        idx = np.floor(np.mod(xs, V.period) / V.period * n).astype(int)
        idx = np.clip(idx, 0, n - 1)
        out = np.asarray(V.samples)[idx]
    if np.ndim(x) == 0:
        return float(out)
    return out


def sup_norm_bound(V: PeriodicPotential) -> float:
    """Upper bound on ||V||_inf: l1 norm of the coefficients, or max |sample|."""
    if V.kind == TRIG:
        return math.fsum(abs(a) + abs(b) for _, a, b in V.coeffs)
    return max(abs(s) for s in V.samples)


def view_with_period(V: PeriodicPotential, N: int) -> PeriodicPotential:
    """The same function declared with period ``N * V.period``."""
    if int(N) != N or N < 1:
        raise ValueError(f"multiple must be a positive integer, got {N}")
    N = int(N)
    if N == 1:
        return V
    if V.kind == TRIG:
        return PeriodicPotential(V.period * N, TRIG, tuple((N * k, a, b) for k, a, b in V.coeffs))
    return PeriodicPotential(V.period * N, PWC, samples=V.samples * N)


def period_multiple(T_small: float, T_large: float) -> int | None:
    """Integer m with T_large == m * T_small (relative tolerance 1e-9), else None."""
    ratio = T_large / T_small
    m = round(ratio)
    if m >= 1 and abs(ratio - m) <= _PERIOD_RTOL * m:
        return int(m)
    return None


def common_period(V: PeriodicPotential, W: PeriodicPotential) -> tuple[int, int]:
    """Multiples (m_V, m_W) bringing V and W onto their least common period."""
    if V.period <= W.period:
        m = period_multiple(V.period, W.period)
        if m is not None:
            return m, 1
    else:
        m = period_multiple(W.period, V.period)
        if m is not None:
            return 1, m
    raise PeriodMismatchError(
        f"periods {V.period!r} and {W.period!r} are not integer multiples of each other"
    )


def _as_trig(V: PeriodicPotential) -> PeriodicPotential:
    if V.kind == TRIG:
        return V
    if V.is_constant:
        return PeriodicPotential.trig(V.period, [(0, V.samples[0], 0.0)])
    raise KindMismatchError("cannot mix a non-constant step potential with a trigonometric one")


def _as_pwc(V: PeriodicPotential) -> PeriodicPotential:
    if V.kind == PWC:
        return V
    if V.is_constant:
        return PeriodicPotential.piecewise(V.period, [V.mean_value])
    raise KindMismatchError("cannot mix a non-constant step potential with a trigonometric one")


def _refine_samples(samples: tuple[float, ...], n: int) -> tuple[float, ...]:
    rep = n // len(samples)
    return tuple(s for s in samples for _ in range(rep))


def add(V: PeriodicPotential, W: PeriodicPotential) -> PeriodicPotential:
    """Pointwise sum on the least common period."""
    mV, mW = common_period(V, W)
    if V.kind != W.kind:
        step, other = (V, W) if V.kind == PWC else (W, V)
        if not step.is_constant and other.is_constant:
            # a constant trig side is exactly a one-step potential
            V, W = _as_pwc(V), _as_pwc(W)
    if V.kind == PWC and W.kind == PWC:
        Vv, Wv = view_with_period(V, mV), view_with_period(W, mW)
        n = math.lcm(len(Vv.samples), len(Wv.samples))
        sv, sw = _refine_samples(Vv.samples, n), _refine_samples(Wv.samples, n)
        period = max(Vv.period, Wv.period)
        return PeriodicPotential(period, PWC, samples=tuple(x + y for x, y in zip(sv, sw)))
    Vv, Wv = view_with_period(_as_trig(V), mV), view_with_period(_as_trig(W), mW)
    period = max(Vv.period, Wv.period)
    return PeriodicPotential(period, TRIG, Vv.coeffs + Wv.coeffs)


def scale(V: PeriodicPotential, factor: float) -> PeriodicPotential:
    if V.kind == TRIG:
        return PeriodicPotential(V.period, TRIG, tuple((k, factor * a, factor * b) for k, a, b in V.coeffs))
    return PeriodicPotential(V.period, PWC, samples=tuple(factor * s for s in V.samples))


def shift(V: PeriodicPotential, c: float) -> PeriodicPotential:
    """V + c for a real constant c."""
    if V.kind == TRIG:
        return PeriodicPotential(V.period, TRIG, V.coeffs + ((0, float(c), 0.0),))
    return PeriodicPotential(V.period, PWC, samples=tuple(s + c for s in V.samples))


def subtract(V: PeriodicPotential, W: PeriodicPotential) -> PeriodicPotential:
    return add(V, scale(W, -1.0))


def sup_distance(V: PeriodicPotential, W: PeriodicPotential) -> float:
    """Upper bound on ||V - W||_inf (never below the true sup distance)."""
    return sup_norm_bound(subtract(V, W))


# JSON interchange -----------------------------------------------------------

def to_json_dict(V: PeriodicPotential) -> dict:
    if V.kind == TRIG:
        return {"period": V.period, "kind": TRIG, "coeffs": [[k, a, b] for k, a, b in V.coeffs]}
    return {"period": V.period, "kind": PWC, "samples": list(V.samples)}


def from_json_dict(data: dict) -> PeriodicPotential:
    try:
        period = float(data["period"])
        kind = data.get("kind", TRIG)
        if kind == TRIG:
            return PeriodicPotential.trig(period, data.get("coeffs", []))
        if kind == PWC:
            return PeriodicPotential.piecewise(period, data["samples"])
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed potential JSON: {exc!r}") from exc
    raise ValueError(f"unknown potential kind {kind!r}")
