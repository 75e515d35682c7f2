"""Band spectrum of a periodic potential inside an energy window.

Each probe energy E gets an exact ordinal position in the band/gap sequence:
band n sits at 2n + 1 and gap m (the one below band m) at 2m.  The band index
comes from the number of zeros of the Dirichlet solution over one period,
which counts Dirichlet eigenvalues below E (one per gap closure), and the sign
of the discriminant fixes the parity inside gaps.  Comparing positions of
neighbouring probes tells exactly how many band edges lie between them, so a
narrow band can never hide between grid points unnoticed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import RefinementError
from ..intervalset import IntervalSet
from ..potential import PeriodicPotential, sup_norm_bound
from .integrate import DEFAULT_ODE_TOL, evaluate_batch

log = logging.getLogger(__name__)

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_SPLIT_ROUNDS = 60
_MAX_ROOT_ITERS = 200


def band_count_bound(T: float, v: float, a: float) -> float:
    """(T/pi) sqrt(a + v) + 1: bands of a T-periodic V with ||V|| <= v meeting [-a, a]."""
    if not T > 0:
        raise ValueError(f"period must be positive, got {T}")
    if not a > 0:
        raise ValueError(f"window half-width must be positive, got {a}")
    if v < 0:
        raise ValueError(f"sup norm must be nonnegative, got {v}")
    return (T / math.pi) * math.sqrt(a + v) + 1.0


@dataclass(frozen=True)
class BandFlags:
    clipped_low: bool = False
    clipped_high: bool = False
    floored: bool = False


@dataclass
class BandSpectrum:
    window: tuple[float, float]
    bands: IntervalSet
    flags: list[BandFlags]
    samples: list[tuple[float, float]]
    tolerance: float
    probes: int = 0
    closed_gaps: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.bands)

    @property
    def measure(self) -> float:
        return self.bands.measure()


class _Probe:
    """Discriminant sampler that keeps every evaluated energy."""

    def __init__(self, V: PeriodicPotential, ode_tol: float):
        self.V = V
        self.ode_tol = ode_tol
        self.evaluations = 0

    def __call__(self, energies: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        res = evaluate_batch(self.V, energies, self.ode_tol)
        self.evaluations += len(energies)
        delta = res.traces
        return delta, positions(delta, res.zeros)


def positions(delta: np.ndarray, zeros: np.ndarray) -> np.ndarray:
    """Ordinal band/gap position of each probe (band n -> 2n+1, gap m -> 2m)."""
    z = np.asarray(zeros, dtype=np.int64)
    pos = 2 * z + 1
    gap = ~(np.abs(delta) <= 2.0)
    parity = (delta < 0).astype(np.int64)
    m = np.where((z % 2) == parity, z, z + 1)
    pos[gap] = 2 * m[gap]
    return pos


def _golden_max(probe: _Probe, lo: np.ndarray, hi: np.ndarray, sign: np.ndarray, tol: float):
    """Maximise sign*Delta on each [lo, hi] (unimodal there); batched golden section."""
    a, b = np.array(lo, dtype=float), np.array(hi, dtype=float)
    sign = np.asarray(sign, dtype=float)
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc = sign * probe(c)[0]
    fd = sign * probe(d)[0]
    for _ in range(200):
        idx = np.flatnonzero((b - a) > tol)
        if idx.size == 0:
            break
        left = fc[idx] > fd[idx]
        li, ri = idx[left], idx[~left]
        # maximum in [a, d]: drop (d, b]
        b[li], d[li], fd[li] = d[li], c[li], fc[li]
        c[li] = b[li] - _GOLD * (b[li] - a[li])
        # maximum in [c, b]: drop [a, c)
        a[ri], c[ri], fc[ri] = c[ri], d[ri], fd[ri]
        d[ri] = a[ri] + _GOLD * (b[ri] - a[ri])
        pts = np.concatenate([c[li], d[ri]])
        vals = probe(pts)[0]
        fc[li] = sign[li] * vals[: li.size]
        fd[ri] = sign[ri] * vals[li.size :]
    best = np.where(fc >= fd, c, d)
    return best, np.maximum(fc, fd)


def _refine_roots(probe: _Probe, lo, hi, level, tol: float):
    """Shrink brackets of Delta(E) = level to width <= tol (Illinois with bisection guard).

    Returns the final (lo, hi) bracket endpoints.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    level = np.asarray(level, dtype=float)
    if lo.size == 0:
        return lo, hi
    flo = probe(lo)[0] - level
    fhi = probe(hi)[0] - level
    side = np.zeros(lo.size, dtype=np.int64)  # Illinois: which end was retained last
    for it in range(_MAX_ROOT_ITERS):
        active = (hi - lo) > tol
        if not np.any(active):
            return lo, hi
        idx = np.flatnonzero(active)
        l, h = lo[idx], hi[idx]
        fl, fh = flo[idx], fhi[idx]
        mid = 0.5 * (l + h)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            x = (l * fh - h * fl) / (fh - fl)
        width = h - l
        bad = ~np.isfinite(x) | (x <= l + 1e-3 * width) | (x >= h - 1e-3 * width)
        if it % 3 == 2:
            bad[:] = True
        x = np.where(bad, mid, x)
        fx = probe(x)[0] - level[idx]
        same_as_lo = np.sign(fx) == np.sign(fl)
        exact = fx == 0
        new_l = np.where(same_as_lo & ~exact, x, l)
        new_h = np.where(same_as_lo & ~exact, h, x)
        new_fl = np.where(same_as_lo & ~exact, fx, fl)
        new_fh = np.where(same_as_lo & ~exact, fh, fx)
        new_l = np.where(exact, x, new_l)
        new_fl = np.where(exact, 0.0, new_fl)
        # Illinois: halve the stale endpoint value when the same side is kept twice
        s_old = side[idx]
        s_new = np.where(same_as_lo, 1, -1)
        stale_hi = (s_new == 1) & (s_old == 1)
        stale_lo = (s_new == -1) & (s_old == -1)
        new_fh = np.where(stale_hi & np.isfinite(new_fh), 0.5 * new_fh, new_fh)
        new_fl = np.where(stale_lo & np.isfinite(new_fl), 0.5 * new_fl, new_fl)
        lo[idx], hi[idx] = new_l, new_h
        flo[idx], fhi[idx] = new_fl, new_fh
        side[idx] = s_new
    i = int(np.argmax(hi - lo))
    raise RefinementError(
        f"band-edge bracket did not shrink to {tol:g} in {_MAX_ROOT_ITERS} iterations",
        (float(lo[i]), float(hi[i])),
    )


def _gap_sign(m):
    """Sign of Delta inside gap m: +1 for even m, -1 for odd m."""
    return np.where(np.asarray(m) % 2 == 0, 1.0, -1.0)


def band_set(
    V: PeriodicPotential,
    a: float,
    tol: float = 1e-9,
    *,
    ode_tol: float = DEFAULT_ODE_TOL,
    grid_factor: int = 8,
) -> BandSpectrum:
    """sigma(L_V) intersected with [-a, a].

    Band edges solve |Delta| = 2 to within ``tol`` in energy; ``tol`` also
    serves as the discriminant slack deciding whether a gap is closed.
    """
    if not a > 0:
        raise ValueError(f"window half-width must be positive, got {a}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    v = sup_norm_bound(V)
    lo = max(-a, -v) - tol
    hi = float(a)
    bound = band_count_bound(V.period, v, a)
    n = max(grid_factor * math.ceil(bound), 16)
    # uniform in sqrt(E - lo): bands are roughly evenly spaced in quasi-momentum
    s = np.linspace(0.0, 1.0, n + 1)
    grid = lo + (hi - lo) * s * s
    grid[-1] = hi
    probe = _Probe(V, ode_tol)
    d_grid, p_grid = probe(grid)
    samples = list(zip(grid.tolist(), d_grid.tolist()))

    E, D, P = grid, d_grid, p_grid
    min_width = max(tol * 1e-3, 4 * np.finfo(float).eps * max(1.0, abs(a)))

    # split cells holding three or more transitions until each holds at most two
    for _ in range(_MAX_SPLIT_ROUNDS):
        dp = np.diff(P)
        wide = (dp >= 3) & (np.diff(E) > min_width)
        if not np.any(wide):
            break
        i = np.flatnonzero(wide)
        mids = 0.5 * (E[i] + E[i + 1])
        dm, pm = probe(mids)
        E, D, P = _merge_probes(E, D, P, mids, dm, pm)

    # band -> band cells hide one gap: find the discriminant extremum inside
    closed_cells: set[float] = set()
    closed = 0
    for _ in range(4):
        dp = np.diff(P)
        bb = (dp == 2) & (P[:-1] % 2 == 1)
        bb &= ~np.isin(E[:-1], list(closed_cells))
        if not np.any(bb):
            break
        i = np.flatnonzero(bb)
        m = (P[i] + 1) // 2
        sg = _gap_sign(m)
        xs, fx = _golden_max(probe, E[i], E[i + 1], sg, tol)
        open_gap = fx > 2.0 + tol
        for k in np.flatnonzero(~open_gap):
            closed_cells.add(float(E[i[k]]))
            closed += 1
        if np.any(open_gap):
            dm, pm = probe(xs[open_gap])
            E, D, P = _merge_probes(E, D, P, xs[open_gap], dm, pm)

    dp = np.diff(P)
    if np.any(dp < 0):
        i = int(np.flatnonzero(dp < 0)[0])
        log.debug("position anomaly %s -> %s at [%r, %r]", P[i], P[i + 1], E[i], E[i + 1])
    crowded = dp >= 3
    if np.any(crowded & (np.diff(E) > min_width)):
        i = int(np.flatnonzero(crowded & (np.diff(E) > min_width))[0])
        raise RefinementError("could not separate band edges", (float(E[i]), float(E[i + 1])))

    # root brackets for every transition
    lows, highs, levels, kinds, cells = [], [], [], [], []
    for i in np.flatnonzero(dp > 0):
        p0, p1 = int(P[i]), int(P[i + 1])
        if p1 - p0 == 1:
            if p0 % 2 == 0:  # gap p0/2 -> band p0/2: lower edge
                lvl = 2.0 * float(_gap_sign(p0 // 2))
                kinds.append("open")
            else:  # band -> gap (p0+1)/2: upper edge
                lvl = 2.0 * float(_gap_sign(p1 // 2))
                kinds.append("close")
            lows.append(E[i]), highs.append(E[i + 1]), levels.append(lvl), cells.append(i)
        elif p1 - p0 == 2 and p0 % 2 == 0:  # gap -> band -> gap: band hidden in cell
            lows.append(E[i]), highs.append(E[i + 1])
            levels.append(2.0 * float(_gap_sign(p0 // 2))), kinds.append("open"), cells.append(i)
            lows.append(E[i]), highs.append(E[i + 1])
            levels.append(2.0 * float(_gap_sign(p1 // 2))), kinds.append("close"), cells.append(i)
        elif p1 - p0 >= 3:
            # several edges inside a cell below resolution: one band spans the cell
            if p0 % 2 == 0:
                lows.append(E[i]), highs.append(E[i]), levels.append(0.0), kinds.append("open"), cells.append(i)
            if p1 % 2 == 0:
                lows.append(E[i + 1]), highs.append(E[i + 1]), levels.append(0.0), kinds.append("close"), cells.append(i)
        # band -> band with dp == 2 here is a closed gap: the band continues
    r_lo, r_hi = _refine_roots(probe, np.array(lows), np.array(highs), np.array(levels), tol)

    # walk the transitions in order; band-side bracket ends are the edges
    events = sorted(zip(cells, range(len(kinds))), key=lambda t: (t[0], 0 if kinds[t[1]] == "open" else 1))
    raw: list[list] = []  # [lo, hi, clipped_low, clipped_high]
    current = None
    if P[0] % 2 == 1:
        current = [max(E[0], -a), True]
    for _, j in events:
        if kinds[j] == "open":
            current = [float(r_hi[j]), False]
        else:
            if current is None:  # noise at the window start; treat as clipped
                current = [max(E[0], -a), True]
            raw.append([current[0], float(r_lo[j]), current[1], False])
            current = None
    if current is not None:
        raw.append([current[0], hi, current[1], True])

    # a gap whose probes never leave |Delta| <= 2 + tol is a tangency: merge
    raw, merged = _merge_marginal_gaps(probe, raw, E, D, tol)
    closed += merged

    floor = max(tol, 1e-12 * a)
    intervals, flags = [], []
    for b_lo, b_hi, cl, ch in raw:
        b_lo, b_hi = max(b_lo, -a), min(b_hi, a)
        floored = False
        if b_hi - b_lo < floor:
            c = 0.5 * (b_lo + b_hi)
            b_lo, b_hi = max(c - floor / 2, -a), min(c + floor / 2, a)
            floored = True
        if b_lo <= -a:
            cl = True
        if intervals and b_lo <= intervals[-1][1]:
            intervals[-1] = (intervals[-1][0], max(intervals[-1][1], b_hi))
            f = flags[-1]
            flags[-1] = BandFlags(f.clipped_low, ch or f.clipped_high, floored or f.floored)
            continue
        intervals.append((b_lo, b_hi))
        flags.append(BandFlags(cl, ch, floored))
    bands = IntervalSet(intervals)
    if len(bands) != len(flags):  # slack-level merges inside IntervalSet
        flags = _realign_flags(bands, intervals, flags)
    return BandSpectrum(
        window=(-float(a), float(a)),
        bands=bands,
        flags=flags,
        samples=samples,
        tolerance=tol,
        probes=probe.evaluations,
        closed_gaps=closed,
    )


def _merge_probes(E, D, P, e_new, d_new, p_new):
    E2 = np.concatenate([E, e_new])
    order = np.argsort(E2, kind="stable")
    return E2[order], np.concatenate([D, d_new])[order], np.concatenate([P, p_new])[order]


def _merge_marginal_gaps(probe, raw, E, D, tol):
    if len(raw) < 2:
        return raw, 0
    cand = []
    for k in range(len(raw) - 1):
        g_lo, g_hi = raw[k][1], raw[k + 1][0]
        inside = (E > g_lo) & (E < g_hi)
        if np.any(inside) and np.max(np.abs(D[inside])) > 2.0 + tol:
            continue
        cand.append(k)
    if not cand:
        return raw, 0
    g_lo = np.array([raw[k][1] for k in cand])
    g_hi = np.array([raw[k + 1][0] for k in cand])
    mid = 0.5 * (g_lo + g_hi)
    sg = np.sign(probe(mid)[0])
    sg[sg == 0] = 1.0
    _, fx = _golden_max(probe, g_lo, np.maximum(g_hi, g_lo), sg, tol)
    close = set(int(cand[i]) for i in np.flatnonzero(fx <= 2.0 + tol))
    if not close:
        return raw, 0
    out = []
    for k, b in enumerate(raw):
        if out and (k - 1) in close:
            out[-1] = [out[-1][0], b[1], out[-1][2], b[3]]
        else:
            out.append(list(b))
    return out, len(close)


def _realign_flags(bands: IntervalSet, intervals, flags):
    out = []
    j = 0
    for lo, hi in bands:
        f = BandFlags()
        while j < len(intervals) and intervals[j][0] <= hi + 1e-12 * max(1.0, abs(hi)):
            g = flags[j]
            f = BandFlags(f.clipped_low or g.clipped_low, f.clipped_high or g.clipped_high, f.floored or g.floored)
            j += 1
        out.append(f)
    return out


def spectrum_measure(V: PeriodicPotential, a: float, tol: float = 1e-9, **kwargs) -> float:
    """Lebesgue measure of sigma(L_V) within [-a, a]."""
    return band_set(V, a, tol, **kwargs).measure
