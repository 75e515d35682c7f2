"""Finite unions of closed real intervals.

Sets are stored canonically: sorted, disjoint, and non-touching.  Endpoints
are floats; two intervals whose gap is within ``1e-12 * max(1, |x|)`` are
treated as touching and merged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

SLACK = 1e-12


def _slack(x) -> np.ndarray | float:
    return SLACK * np.maximum(1.0, np.abs(x))


def _canonical(arr: np.ndarray) -> np.ndarray:
    if arr.shape[0] == 0:
        return np.zeros((0, 2))
    arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
    lo, hi = arr[:, 0], arr[:, 1]
    run_hi = np.maximum.accumulate(hi)
    starts = np.empty(len(lo), dtype=bool)
    starts[0] = True
    starts[1:] = lo[1:] > run_hi[:-1] + _slack(run_hi[:-1])
    group = np.cumsum(starts) - 1
    out_lo = lo[starts]
    out_hi = np.full(out_lo.shape, -np.inf)
    np.maximum.at(out_hi, group, hi)
    return np.column_stack([out_lo, out_hi])


class IntervalSet:
    """Immutable canonical union of closed intervals [lo, hi]."""

    __slots__ = ("_a",)

    def __init__(self, intervals: Iterable[Sequence[float]] = ()):
        if isinstance(intervals, IntervalSet):
            self._a = intervals._a
            return
        arr = np.asarray(list(intervals) if not isinstance(intervals, np.ndarray) else intervals, dtype=float)
        if arr.size == 0:
            arr = np.zeros((0, 2))
        arr = arr.reshape(-1, 2)
        if np.any(~np.isfinite(arr)):
            raise ValueError("interval endpoints must be finite")
        bad = arr[:, 0] > arr[:, 1]
        if np.any(bad):
            lo, hi = arr[np.flatnonzero(bad)[0]]
            raise ValueError(f"interval has lo > hi: ({lo}, {hi})")
        a = _canonical(arr)
        a.setflags(write=False)
        self._a = a

    @classmethod
    def _raw(cls, arr: np.ndarray) -> "IntervalSet":
        obj = cls.__new__(cls)
        arr = np.asarray(arr, dtype=float).reshape(-1, 2)
        arr.setflags(write=False)
        obj._a = arr
        return obj

    @classmethod
    def points(cls, xs: Iterable[float]) -> "IntervalSet":
        return cls([(x, x) for x in xs])

    # container protocol ---------------------------------------------------

    @property
    def array(self) -> np.ndarray:
        return self._a

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return [(float(lo), float(hi)) for lo, hi in self._a]

    def __len__(self) -> int:
        return self._a.shape[0]

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return len(self) > 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return np.array_equal(self._a, other._a)

    __hash__ = None

    def __repr__(self) -> str:
        return f"IntervalSet({self.intervals!r})"

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    @property
    def lower(self) -> float:
        return float(self._a[0, 0])

    @property
    def upper(self) -> float:
        return float(self._a[-1, 1])

    def diameter(self) -> float:
        return 0.0 if self.is_empty else self.upper - self.lower

    def measure(self) -> float:
        return math.fsum((self._a[:, 1] - self._a[:, 0]).tolist())

    def almost_equal(self, other: "IntervalSet", atol: float) -> bool:
        return len(self) == len(other) and bool(np.all(np.abs(self._a - other._a) <= atol))

    # set algebra ----------------------------------------------------------

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        """Intersection with [lo, hi]."""
        if self.is_empty or lo > hi:
            return IntervalSet()
        a = self._a
        keep = (a[:, 1] >= lo) & (a[:, 0] <= hi)
        a = a[keep].copy()
        a[:, 0] = np.maximum(a[:, 0], lo)
        a[:, 1] = np.minimum(a[:, 1], hi)
        return IntervalSet._raw(a)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(np.vstack([self._a, other._a]))

    __or__ = union

    def scaled(self, factor: float) -> "IntervalSet":
        a = self._a * factor
        return IntervalSet(a[:, ::-1] if factor < 0 else a)

    def shifted(self, c: float) -> "IntervalSet":
        return IntervalSet._raw(self._a + c)

    def to_json_dict(self) -> dict:
        return {"intervals": [[lo, hi] for lo, hi in self.intervals]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "IntervalSet":
        try:
            return cls([(float(lo), float(hi)) for lo, hi in data["intervals"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed interval-set JSON: {exc!r}") from exc


def make(intervals: Iterable[Sequence[float]]) -> IntervalSet:
    return IntervalSet(intervals)


def window(S: IntervalSet, a: float) -> IntervalSet:
    """S intersected with [-a, a]."""
    if not a > 0:
        raise ValueError(f"window half-width must be positive, got {a}")
    return S.clip(-a, a)


def measure(S: IntervalSet) -> float:
    return S.measure()


def minkowski_sum(A: IntervalSet, B: IntervalSet) -> IntervalSet:
    """{x + y : x in A, y in B}."""
    if A.is_empty or B.is_empty:
        return IntervalSet()
    a, b = A.array, B.array
    lo = (a[:, 0][:, None] + b[:, 0][None, :]).ravel()
    hi = (a[:, 1][:, None] + b[:, 1][None, :]).ravel()
    return IntervalSet(np.column_stack([lo, hi]))


def self_sum(C: IntervalSet, d: int) -> IntervalSet:
    """d-fold Minkowski sum C + ... + C, canonicalising after every step."""
    if int(d) != d or d < 1:
        raise ValueError(f"number of summands must be a positive integer, got {d}")
    out = C
    for _ in range(int(d) - 1):
        out = minkowski_sum(out, C)
    return out


def neighborhood(S: IntervalSet, delta: float) -> IntervalSet:
    """Closed delta-neighbourhood of S."""
    if not delta > 0:
        raise ValueError(f"neighbourhood radius must be positive, got {delta}")
    if S.is_empty:
        return S
    a = S.array.copy()
    a[:, 0] -= delta
    a[:, 1] += delta
    return IntervalSet(a)


def contains(A: IntervalSet, B: IntervalSet) -> bool:
    """True iff B is a subset of A (up to the merge slack)."""
    if B.is_empty:
        return True
    if A.is_empty:
        return False
    a = A.array
    idx = np.searchsorted(a[:, 0], B.array[:, 0] + _slack(B.array[:, 0]), side="right") - 1
    if np.any(idx < 0):
        return False
    host = a[idx]
    ok_lo = host[:, 0] <= B.array[:, 0] + _slack(B.array[:, 0])
    ok_hi = B.array[:, 1] <= host[:, 1] + _slack(host[:, 1])
    return bool(np.all(ok_lo & ok_hi))


def covering_number(S: IntervalSet, eps: float) -> int:
    """Minimal number of closed intervals of length eps covering S.

    Greedy: each new interval starts at the leftmost uncovered point, which is
    optimal on the line.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    count = 0
    end = -math.inf
    for lo, hi in S.array.tolist():
        if hi <= end + _slack(end if math.isfinite(end) else 0.0):
            continue
        start = end if lo <= end else lo
        k = max(1, math.ceil((hi - start) / eps * (1.0 - 1e-9)))
        count += k
        end = start + k * eps
    return count


@dataclass
class DimensionProfile:
    """Covering counts at sampled scales and the log-ratio estimates they imply.

    The estimates are bounds at the sampled scales only, never limits.
    """

    samples: list[tuple[float, int, float]]
    flags: list[str] = field(default_factory=list)

    @property
    def epsilons(self) -> list[float]:
        return [s[0] for s in self.samples]

    @property
    def counts(self) -> list[int]:
        return [s[1] for s in self.samples]

    @property
    def ratios(self) -> list[float]:
        return [s[2] for s in self.samples]

    @property
    def lower_estimate(self) -> float:
        finite = [r for r in self.ratios if math.isfinite(r)]
        return min(finite) if finite else math.nan

    @property
    def upper_estimate(self) -> float:
        tail = self.ratios[len(self.ratios) // 2 :]
        finite = [r for r in tail if math.isfinite(r)]
        return max(finite) if finite else math.nan

    def to_csv_rows(self) -> list[list]:
        return [[e, c, r] for e, c, r in self.samples]


def log_ratio(count: int, eps: float) -> float:
    """log N / log(1/eps); 0 for a single box, nan when eps >= 1."""
    if count <= 1:
        return 0.0
    if eps >= 1.0:
        return math.nan
    return math.log(count) / math.log(1.0 / eps)


def dimension_profile(S: IntervalSet, eps_list: Sequence[float]) -> DimensionProfile:
    if S.is_empty:
        raise ValueError("dimension profile of the empty set is undefined")
    eps = [float(e) for e in eps_list]
    if any(not e > 0 for e in eps):
        raise ValueError("all scales must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("scales must be strictly decreasing")
    samples = []
    for e in eps:
        n = covering_number(S, e)
        samples.append((e, n, log_ratio(n, e)))
    return DimensionProfile(samples)


def cantor_generator(ratio: float, depth: int, base: Sequence[float] = (0.0, 1.0)) -> IntervalSet:
    """Depth-n stage of the two-piece self-similar Cantor set on ``base``."""
    if not 0 < ratio < 0.5:
        raise ValueError(f"ratio must lie in (0, 1/2), got {ratio}")
    if int(depth) != depth or depth < 0:
        raise ValueError(f"depth must be a nonnegative integer, got {depth}")
    b0, b1 = float(base[0]), float(base[1])
    if b1 < b0:
        raise ValueError("base interval has lo > hi")
    # exact rational ratios keep the stage endpoints exact before rounding
    r = Fraction(ratio)
    approx = r.limit_denominator(10**6)
    if abs(float(approx) - float(ratio)) <= 1e-15:
        r = approx
    lows = [Fraction(0)]
    length = Fraction(1)
    for _ in range(int(depth)):
        nxt = length * r
        lows = [x for lo in lows for x in (lo, lo + length - nxt)]
        length = nxt
    span = b1 - b0
    return IntervalSet._raw(
        np.array([(b0 + float(lo) * span, b0 + float(lo + length) * span) for lo in lows]).reshape(-1, 2)
    )


def unbounded_counterexample(alpha: float, M: int) -> IntervalSet:
    """Points {1..M} and {-alpha k : k = 1..M}, a truncation of Z_+ u (-alpha Z_+)."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    ks = np.arange(1, int(M) + 1, dtype=float)
    return IntervalSet.points(np.concatenate([ks, -alpha * ks]))
