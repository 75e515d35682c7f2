"""Inductive construction of a limit-periodic potential with thin spectrum.

Each stage multiplies the period by an integer N and adds a small periodic
layer that opens gaps, cutting the spectral measure inside a window.  The
epsilon/delta bookkeeping, the tail bound, the covering certificates and the
separable multidimensional assembly live here as well.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import potential as pot
from .errors import EmptySpectrumWindow, ShrinkBudgetExhausted
from .floquet import BandFlags, BandSpectrum, band_set
from .intervalset import (
    DimensionProfile,
    IntervalSet,
    covering_number,
    log_ratio,
    minkowski_sum,
    neighborhood,
    window,
)
from .potential import PeriodicPotential, sup_distance, sup_norm_bound

log = logging.getLogger(__name__)

HALVE = "halve"
FACTOR = "factor"
ASYMPTOTIC = "asymptotic"

STATUS_COMPLETE = "complete"
STATUS_EMPTY = "empty-window"
STATUS_FAILED = "best-effort-failure"


# ---------------------------------------------------------------------------
# records

@dataclass
class ShrinkConfig:
    """Search knobs for the measure-shrinking surrogate.

    ``amplitudes`` are fractions of the epsilon handed to shrink_spectrum, so
    every trial layer has sup-norm bound strictly below epsilon.
    ``budget`` is the number of trials per candidate multiple.  ``cells`` is
    the number of steps per base period in step layers.  ``window`` replaces
    the 2^n window schedule with a constant one (stages flagged off_paper).
    """

    candidates: tuple[int, ...] = (2, 4, 8, 16, 32)
    harmonics: int = 3
    cells: int = 8
    amplitudes: tuple[float, ...] = (0.95,)
    seed: int = 0
    budget: int = 2
    target: str = HALVE
    factor: float = 0.5
    window: float | None = None

    def __post_init__(self):
        self.candidates = tuple(int(n) for n in self.candidates)
        self.amplitudes = tuple(float(x) for x in self.amplitudes)
        if not self.candidates or any(n < 2 for n in self.candidates):
            raise ValueError("candidate multiples must be integers >= 2")
        if list(self.candidates) != sorted(set(self.candidates)):
            raise ValueError("candidate multiples must be strictly increasing")
        if not self.amplitudes or any(not 0 < x < 1 for x in self.amplitudes):
            raise ValueError("amplitudes are fractions of eps and must lie in (0, 1)")
        if self.harmonics < 1:
            raise ValueError("harmonics must be positive")
        if self.cells < 1:
            raise ValueError("cells must be positive")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if self.target not in (HALVE, FACTOR, ASYMPTOTIC):
            raise ValueError(f"unknown target {self.target!r}")
        if self.target == FACTOR and not 0 < self.factor < 1:
            raise ValueError("factor target needs r in (0, 1)")
        if self.window is not None and not self.window > 0:
            raise ValueError("window override must be positive")

    def window_for(self, n: int) -> float:
        return float(self.window) if self.window is not None else float(2**n)

    def meets(self, delta: float, base: float, period: float) -> bool:
        if self.target == HALVE:
            return delta <= base / 2
        if self.target == FACTOR:
            return delta <= self.factor * base
        return delta <= math.exp(-math.sqrt(period))

    def to_json_dict(self) -> dict:
        return {
            "candidates": list(self.candidates),
            "harmonics": self.harmonics,
            "cells": self.cells,
            "amplitudes": list(self.amplitudes),
            "seed": self.seed,
            "budget": self.budget,
            "target": self.target,
            "factor": self.factor,
            "window": self.window,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ShrinkConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        kw = dict(data)
        for key in ("candidates", "amplitudes"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass
class Stage:
    n: int
    potential: PeriodicPotential
    epsilon: float
    delta: float
    a: float
    bands: BandSpectrum
    multiple: int = 1
    off_paper: bool = False

    @property
    def period(self) -> float:
        return self.potential.period


@dataclass
class ConstructionState:
    """Stages 0..n; stage 0 records the base potential and epsilon_0."""

    stages: list[Stage]
    tol: float
    config: ShrinkConfig = field(default_factory=ShrinkConfig)
    status: str = STATUS_COMPLETE
    message: str = ""

    @property
    def eps0(self) -> float:
        return self.stages[0].epsilon

    @property
    def base(self) -> PeriodicPotential:
        return self.stages[0].potential

    @property
    def last(self) -> int:
        return len(self.stages) - 1

    def epsilons(self) -> list[float]:
        return [s.epsilon for s in self.stages]

    def deltas(self) -> list[float]:
        return [s.delta for s in self.stages]


# ---------------------------------------------------------------------------
# recursion

def next_epsilon(eps_prev: float, delta_prev: float) -> float:
    """min(eps_prev / 2, delta_prev / 4)."""
    if not eps_prev > 0:
        raise ValueError(f"previous epsilon must be positive, got {eps_prev}")
    if delta_prev == 0:
        raise EmptySpectrumWindow("windowed spectrum is empty; nothing left to shrink")
    if not delta_prev > 0:
        raise ValueError(f"previous delta must be positive, got {delta_prev}")
    return min(eps_prev / 2, delta_prev / 4)


def _allowed_harmonics(N: int, period: float, v: float, a: float) -> np.ndarray:
    # non-lattice k whose first Bragg energy (pi k / NT)^2 - v lies below the window top
    kmax = max(1, int(N * period * math.sqrt(a + v) / math.pi))
    ks = np.arange(1, kmax + 1)
    return ks[ks % N != 0]


def _trial_layers(N: int, V: PeriodicPotential, eps: float, a: float, config: ShrinkConfig, stage: int):
    """Deterministic list of (amplitude-vector key, layer potential) for one candidate.

    Step bases get random +-amp step layers, whose sup norm is exact.  Trig
    bases get trig layers, whose l1 bound caps the first-order gap total.
    """
    T = N * V.period
    v = sup_norm_bound(V)
    rng = np.random.default_rng([config.seed, N, stage])
    out = []
    if V.kind == pot.PWC or V.is_constant:
        n = N * config.cells
        if V.kind == pot.PWC:
            n = math.lcm(n, N * len(V.samples))
        for t in range(config.budget):
            amp = config.amplitudes[t % len(config.amplitudes)] * eps
            layer = PeriodicPotential.piecewise(T, amp * rng.choice([-1.0, 1.0], size=n))
            out.append((layer.samples, layer))
        return out
    ks = _allowed_harmonics(N, V.period, v, a)
    for t in range(config.budget):
        amp = config.amplitudes[t % len(config.amplitudes)] * eps
        if t < len(config.amplitudes):
            # slow modulation: the k = 1 layer splits every band into N subbands
            terms = [(1, amp, 0.0)]
        else:
            m = min(config.harmonics, ks.size)
            pick = np.sort(rng.choice(ks, size=m, replace=False))
            w = rng.standard_normal((m, 2))
            w *= amp / np.abs(w).sum()
            terms = [(int(k), float(c), float(s)) for k, (c, s) in zip(pick, w)]
        layer = PeriodicPotential.trig(T, terms)
        key = tuple(x for _, c, s in layer.coeffs for x in (c, s))
        out.append((key, layer))
    return out


def _shrink(V, eps, a, config, tol, stage=0):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not a > 0:
        raise ValueError(f"window half-width must be positive, got {a}")
    base = band_set(V, a, tol)
    if base.measure == 0:
        return V, 1, 0.0, base
    best = None
    for N in config.candidates:
        for key, layer in _trial_layers(N, V, eps, a, config, stage):
            Vt = pot.add(V, layer)
            if not sup_distance(V, Vt) < eps:
                continue
            bs = band_set(Vt, a, tol)
            rank = (bs.measure, N, key)
            log.debug("stage %d N=%d measure %.6g (base %.6g)", stage, N, bs.measure, base.measure)
            if best is None or rank < best[0]:
                best = (rank, Vt, N, bs)
        if best is not None and config.meets(best[3].measure, base.measure, best[1].period):
            return best[1], best[2], best[3].measure, best[3]
    if best is None:
        raise ShrinkBudgetExhausted("no admissible perturbation", V, 1, base.measure)
    raise ShrinkBudgetExhausted(
        f"target {config.target!r} not met; best measure {best[3].measure:.6g} "
        f"from {base.measure:.6g} with N={best[2]}",
        best[1],
        best[2],
        best[3].measure,
    )


def shrink_spectrum(
    V: PeriodicPotential, eps: float, a: float, config: ShrinkConfig | None = None, tol: float = 1e-9
) -> tuple[PeriodicPotential, int, float]:
    """Find W of period N*T, ||W|| < eps, so that V + W has a thinner spectrum in [-a, a].

    Candidates N are tried in increasing order; within one candidate the best
    trial by measure wins (ties: smaller N, then lexicographic amplitudes).
    Raises ShrinkBudgetExhausted carrying the best attempt when no candidate
    meets the target.
    """
    Vt, N, delta, _ = _shrink(V, eps, a, config or ShrinkConfig(), tol)
    return Vt, N, delta


def build_sequence(
    V0: PeriodicPotential,
    eps0: float,
    n_max: int,
    config: ShrinkConfig | None = None,
    tol: float = 1e-9,
) -> ConstructionState:
    """Stages 1..n_max of the recursion; stops early on an empty window or a failed shrink."""
    if not eps0 > 0:
        raise ValueError(f"eps0 must be positive, got {eps0}")
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be a positive integer, got {n_max}")
    config = config or ShrinkConfig()
    off = config.window is not None
    a0 = config.window_for(0)
    b0 = band_set(V0, a0, tol)
    state = ConstructionState([Stage(0, V0, float(eps0), b0.measure, a0, b0, 1, off)], tol, config)
    for n in range(1, int(n_max) + 1):
        prev = state.stages[-1]
        if n == 1:
            eps = float(eps0) / 2
        else:
            try:
                eps = next_epsilon(prev.epsilon, prev.delta)
            except EmptySpectrumWindow as exc:
                state.status, state.message = STATUS_EMPTY, str(exc)
                break
        a = config.window_for(n)
        try:
            Vn, N, delta, bands = _shrink(prev.potential, eps, a, config, tol, stage=n)
        except ShrinkBudgetExhausted as exc:
            state.status, state.message = STATUS_FAILED, f"stage {n}: {exc}"
            log.warning("construction halted: %s", state.message)
            break
        state.stages.append(Stage(n, Vn, eps, delta, a, bands, N, off))
        log.info("stage %d: N=%d period=%.6g eps=%.6g delta=%.6g", n, N, Vn.period, eps, delta)
    return state


# ---------------------------------------------------------------------------
# certificates

def tail_sum(state: ConstructionState, n: int) -> float:
    """sum_{j=n+1..last} eps_j + eps_last: a bound on all later perturbations."""
    eps = [Fraction(e) for e in state.epsilons()]
    return float(sum(eps[n + 1 :], Fraction(0)) + eps[-1])


@dataclass(frozen=True)
class TailCertificate:
    n: int
    tail: float
    half_delta: float
    holds: bool

    def __bool__(self) -> bool:
        return self.holds


def tail_bound_check(state: ConstructionState, n: int) -> TailCertificate:
    """Whether the unbuilt tail stays within delta_n / 2 (exact rational comparison).

    The recursion forces equality in the extreme case, so the comparison is
    non-strict.
    """
    if not 1 <= n < state.last:
        raise ValueError(f"need 1 <= n < {state.last}, got {n}")
    eps = [Fraction(e) for e in state.epsilons()]
    tail = sum(eps[n + 1 :], Fraction(0)) + eps[-1]
    half = Fraction(state.stages[n].delta) / 2
    return TailCertificate(n, float(tail), float(half), tail <= half)


@dataclass(frozen=True)
class CoverEstimate:
    cover: IntervalSet
    eps_cover: float
    ratio: float  # from the covering number of the cover at eps_cover
    count: int
    pieces: int  # windowed bands plus the two edge intervals
    interval_ratio: float  # from ``pieces``
    bound_ratio: float  # from the band-count bound on ``pieces``

    def __iter__(self):
        return iter((self.cover, self.eps_cover, self.ratio))


def cover_estimate(state: ConstructionState, n: int, j: int) -> CoverEstimate:
    """Cover of the limit spectrum in [-a_j, a_j] built from stage n."""
    if not 0 <= j <= n <= state.last:
        raise ValueError(f"need 0 <= j <= n <= {state.last}, got j={j}, n={n}")
    st, aj = state.stages[n], state.stages[j].a
    d = st.delta
    core = window(st.bands.bands, aj)
    if d > 0:
        edges = IntervalSet([(-aj, -aj + 2 * d), (aj - 2 * d, aj)])
        cover = neighborhood(core, d / 2).union(edges)
        eps = 2 * d
        count = covering_number(cover, eps)
        ratio = log_ratio(count, eps)
        pieces = len(core) + 2
        iratio = log_ratio(pieces, eps)
        bound = st.period * math.sqrt(sup_norm_bound(state.base) + state.eps0 + aj) / math.pi + 3
        bratio = math.log(bound) / math.log(1 / eps) if eps < 1 else math.nan
    else:
        cover = IntervalSet([(-aj, -aj), (aj, aj)])
        eps, count, pieces, ratio, iratio, bratio = 0.0, 2, 2, 0.0, 0.0, 0.0
    return CoverEstimate(cover, eps, ratio, count, pieces, iratio, bratio)


def dim_certificate(state: ConstructionState, j: int) -> DimensionProfile:
    """Sampled ratios log N(2 delta_n) / log(1 / 2 delta_n) for n = max(j, 1)..last."""
    if not 0 <= j <= state.last:
        raise ValueError(f"need 0 <= j <= {state.last}, got {j}")
    samples = []
    for n in range(max(j, 1), state.last + 1):
        ce = cover_estimate(state, n, j)
        samples.append((ce.eps_cover, ce.count, ce.ratio))
    flags = []
    eps = [s[0] for s in samples]
    ratios = [s[2] for s in samples]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        flags.append("scales-not-decreasing")
    if any(b >= a for a, b in zip(ratios, ratios[1:])):
        flags.append("ratios-non-decreasing")
    return DimensionProfile(samples, flags)


@dataclass(frozen=True)
class DecayRow:
    n: int
    step_norm: float
    kl_bound: float
    flagged: bool


def decay_report(state: ConstructionState, C: float = 1.0, eta: float = 1.0) -> list[DecayRow]:
    """Compare each layer's size with C exp(-2^(eta n)); flags mark layers above it."""
    if len(state.stages) < 2:
        raise ValueError("decay report needs at least two stages")
    rows = []
    for prev, cur in zip(state.stages, state.stages[1:]):
        step = sup_distance(prev.potential, cur.potential)
        bound = C * math.exp(-(2.0 ** (eta * cur.n)))
        rows.append(DecayRow(cur.n, step, bound, step > bound))
    return rows


# ---------------------------------------------------------------------------
# separable potentials

def separable_spectrum(W: PeriodicPotential, couplings: Sequence[float], a: float, tol: float = 1e-9) -> IntervalSet:
    """Spectrum of sum_j lambda_j W(x_j) in [-a, a], as a sum of 1D band sets.

    Each lambda_j W is recomputed: the spectrum does not scale with lambda.
    """
    lams = [float(x) for x in couplings]
    if not lams:
        raise ValueError("need at least one coupling")
    if any(not x > 0 for x in lams):
        raise ValueError("couplings must be positive")
    if not a > 0:
        raise ValueError(f"window half-width must be positive, got {a}")
    d = len(lams)
    v = max(x * sup_norm_bound(W) for x in lams)
    a_coord = a + (d - 1) * v
    cache: dict[float, IntervalSet] = {}
    total = None
    for lam in lams:
        if lam not in cache:
            cache[lam] = band_set(pot.scale(W, lam), a_coord, tol).bands
        total = cache[lam] if total is None else minkowski_sum(total, cache[lam])
    if total.is_empty:
        return total
    return window(total, a)


# ---------------------------------------------------------------------------
# JSON / CSV

def _bands_to_json(bs: BandSpectrum) -> dict:
    return {
        "window": list(bs.window),
        "intervals": [[lo, hi] for lo, hi in bs.bands.intervals],
        "flags": [[f.clipped_low, f.clipped_high, f.floored] for f in bs.flags],
        "tolerance": bs.tolerance,
        "closed_gaps": bs.closed_gaps,
    }


def _bands_from_json(data: dict) -> BandSpectrum:
    return BandSpectrum(
        window=tuple(data["window"]),
        bands=IntervalSet.from_json_dict(data),
        flags=[BandFlags(*f) for f in data["flags"]],
        samples=[],
        tolerance=float(data["tolerance"]),
        closed_gaps=int(data.get("closed_gaps", 0)),
    )


def state_to_json_dict(state: ConstructionState) -> dict:
    return {
        "status": state.status,
        "message": state.message,
        "tol": state.tol,
        "config": state.config.to_json_dict(),
        "stages": [
            {
                "n": s.n,
                "potential": pot.to_json_dict(s.potential),
                "period": s.period,
                "epsilon": s.epsilon,
                "delta": s.delta,
                "a": s.a,
                "multiple": s.multiple,
                "off_paper": s.off_paper,
                "bands": _bands_to_json(s.bands),
            }
            for s in state.stages
        ],
    }


def state_from_json_dict(data: dict) -> ConstructionState:
    try:
        stages = [
            Stage(
                n=int(s["n"]),
                potential=pot.from_json_dict(s["potential"]),
                epsilon=float(s["epsilon"]),
                delta=float(s["delta"]),
                a=float(s["a"]),
                bands=_bands_from_json(s["bands"]),
                multiple=int(s.get("multiple", 1)),
                off_paper=bool(s.get("off_paper", False)),
            )
            for s in data["stages"]
        ]
        return ConstructionState(
            stages=stages,
            tol=float(data["tol"]),
            config=ShrinkConfig.from_json_dict(data.get("config", {})),
            status=data.get("status", STATUS_COMPLETE),
            message=data.get("message", ""),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed construction-state JSON: {exc!r}") from exc


CERTIFICATE_HEADER = ["n", "epsilon", "delta", "tail_sum", "ratio"]


def certificate_rows(state: ConstructionState, j: int = 1) -> list[list]:
    """Rows n, epsilon_n, delta_n, tail sum after n, sampled ratio at 2 delta_n."""
    if state.last < 1:
        return []
    j = min(j, state.last)
    prof = dim_certificate(state, j)
    ratio_at = {n: r for n, (_, _, r) in zip(range(max(j, 1), state.last + 1), prof.samples)}
    rows = []
    for s in state.stages[1:]:
        rows.append([s.n, s.epsilon, s.delta, tail_sum(state, s.n), ratio_at.get(s.n, math.nan)])
    return rows
