"""Checks of the sum-of-sets facts used for multidimensional spectra.

Three suites:

* sum-cover submultiplicativity, N(eA + eB; A + B) <= N(eA; A) N(eB; B),
  on Cantor fixtures and random sets;
* the window inclusion for sets bounded below by -gamma,
  (C^(d)) n [-a, a]  is contained in  (C n [-gamma, a + (d-1) gamma])^(d);
* growth of covering counts for the truncated unbounded counterexample.

Fixtures are plain JSON so a corrupted fixture makes the suite fail.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .intervalset import (
    IntervalSet,
    cantor_generator,
    contains,
    covering_number,
    minkowski_sum,
    self_sum,
    unbounded_counterexample,
    window,
)

GOLDEN = (1 + math.sqrt(5)) / 2

DEFAULT_FIXTURES: dict = {
    "cantor": [
        {"ratio": 1 / 3, "depth": 6, "d": 2, "self_sum": [[0.0, 2.0]]},
        {"ratio": 1 / 3, "depth": 4, "d": 2, "self_sum": [[0.0, 2.0]]},
        {"ratio": 0.25, "depth": 4, "d": 2},
        {"ratio": 0.2, "depth": 3, "d": 3},
    ],
    "random": {"seed": 0, "cases": 100, "max_intervals": 6},
    "inclusion": {"seed": 1, "cases": 100, "d": [2, 3], "a": [1.0, 5.0]},
    "counterexample": {"alpha": GOLDEN, "M": 50, "window": 5.0, "eps": 0.01, "min_factor": 10, "count": 306},
}


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checks > 0 and not self.failures

    def check(self, ok: bool, what: str):
        self.checks += 1
        if not ok:
            self.failures.append(what)

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": self.checks, "failures": self.failures}


def _random_set(rng: np.random.Generator, n_max: int, lo: float, hi: float) -> IntervalSet:
    n = int(rng.integers(1, n_max + 1))
    pts = np.sort(rng.uniform(lo, hi, size=2 * n)).reshape(n, 2)
    point = rng.random(n) < 0.2
    pts[point, 1] = pts[point, 0]
    return IntervalSet(pts)


def submultiplicativity_suite(fixtures: dict) -> SuiteResult:
    res = SuiteResult("sum-cover submultiplicativity")
    for fx in fixtures.get("cantor", []):
        r, depth, d = float(fx["ratio"]), int(fx["depth"]), int(fx["d"])
        C = cantor_generator(r, depth)
        S = self_sum(C, d)
        if "self_sum" in fx:
            expect = IntervalSet(fx["self_sum"])
            res.check(S.almost_equal(expect, 1e-12), f"self_sum(C(ratio={r:g}, depth={depth}), {d}) = {S.intervals}")
        for j in range(1, depth + 1):
            eps = r**j
            lhs = covering_number(S, d * eps)
            rhs = covering_number(C, eps) ** d
            res.check(lhs <= rhs, f"ratio={r:g} d={d} j={j}: N(d eps; C^(d)) = {lhs} > {rhs}")
    rnd = fixtures.get("random", {})
    rng = np.random.default_rng(int(rnd.get("seed", 0)))
    for i in range(int(rnd.get("cases", 0))):
        A = _random_set(rng, int(rnd.get("max_intervals", 6)), 0.0, 10.0)
        B = _random_set(rng, int(rnd.get("max_intervals", 6)), -5.0, 5.0)
        eps = float(rng.uniform(0.05, 3.0))
        lhs = covering_number(minkowski_sum(A, B), 2 * eps)
        rhs = covering_number(A, eps) * covering_number(B, eps)
        res.check(lhs <= rhs, f"random case {i}: N(2 eps; A+B) = {lhs} > {rhs}")
    return res


def inclusion_suite(fixtures: dict) -> SuiteResult:
    res = SuiteResult("window inclusion for sets bounded below")
    cfg = fixtures.get("inclusion", {})
    rng = np.random.default_rng(int(cfg.get("seed", 1)))
    ds = [int(x) for x in cfg.get("d", [2, 3])]
    avals = [float(x) for x in cfg.get("a", [1.0, 5.0])]
    for i in range(int(cfg.get("cases", 0))):
        gamma = float(rng.uniform(0.0, 3.0))
        C = _random_set(rng, 6, -gamma, 12.0)
        gamma = max(gamma, -C.lower)
        d = ds[i % len(ds)]
        a = avals[(i // len(ds)) % len(avals)]
        lhs = self_sum(C, d).clip(-a, a)
        rhs = self_sum(C.clip(-gamma, a + (d - 1) * gamma), d)
        res.check(contains(rhs, lhs), f"case {i}: d={d} a={a} gamma={gamma:g}")
    return res


def counterexample_suite(fixtures: dict) -> SuiteResult:
    res = SuiteResult("unbounded counterexample growth")
    cfg = fixtures.get("counterexample")
    if not cfg:
        return res
    C = unbounded_counterexample(float(cfg["alpha"]), int(cfg["M"]))
    a, eps = float(cfg["window"]), float(cfg["eps"])
    base = covering_number(window(C, a), eps)
    summed = covering_number(window(self_sum(C, 2), a), eps)
    res.check(summed >= float(cfg["min_factor"]) * base, f"N(C+C) = {summed} vs N(C) = {base}")
    if "count" in cfg:
        res.check(summed == int(cfg["count"]), f"N(C+C) = {summed}, fixture records {cfg['count']}")
    return res


def run_all(fixtures: dict | None = None) -> list[SuiteResult]:
    fx = DEFAULT_FIXTURES if fixtures is None else fixtures
    return [submultiplicativity_suite(fx), inclusion_suite(fx), counterexample_suite(fx)]


def load_fixtures(path: str | Path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("fixture file must hold a JSON object")
    return data
