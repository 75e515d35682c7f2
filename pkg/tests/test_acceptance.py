"""One test per acceptance criterion; each records a PASS/FAIL line before asserting."""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from hillspec import appendix, cli
from hillspec import construction as con
from hillspec import intervalset as iv
from hillspec import potential as pot
from hillspec.floquet import band_count_bound, band_set, evaluate_batch, monodromy
from hillspec.intervalset import IntervalSet
from hillspec.potential import PeriodicPotential

from conftest import BUILD_SECONDS, COS
from oracles import brute_sum, exhaustive_cover, hill_bands

TWO_PI = 2 * math.pi


@pytest.fixture
def record(acceptance_log):
    def rec(k, ok, detail):
        acceptance_log[k] = (bool(ok), detail)
        return bool(ok)

    return rec


def random_trig(rng, max_harmonics=4, vmax=3.0):
    n = int(rng.integers(1, max_harmonics + 1))
    ks = rng.choice(np.arange(1, 6), size=n, replace=False)
    ab = rng.normal(size=(n, 2))
    ab *= rng.uniform(0.2, vmax) / np.abs(ab).sum()
    T = float(rng.uniform(1.0, 8.0))
    return PeriodicPotential.trig(T, [(int(k), float(a), float(b)) for k, (a, b) in zip(ks, ab)])


def dense_sup(V, n=20001):
    x = np.linspace(0.0, V.period, n)
    return float(np.max(np.abs(pot.evaluate(V, x))))


def rational_set(rng, n_max=5, denom=4, span=8):
    n = int(rng.integers(1, n_max + 1))
    out = []
    for _ in range(n):
        lo = Fraction(int(rng.integers(0, span * denom + 1)), denom)
        out.append((lo, lo + Fraction(int(rng.integers(0, 3 * denom + 1)), denom)))
    return out


def as_floats(ivs):
    return IntervalSet([(float(lo), float(hi)) for lo, hi in ivs])


def merge_exact(ivs):
    out = []
    for lo, hi in sorted(ivs):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def test_criterion_01_free_discriminant(record):
    t0 = time.perf_counter()
    E = np.linspace(0.1, 50.0, 500)
    worst = 0.0
    for T in (1.0, math.pi, TWO_PI):
        d = evaluate_batch(PeriodicPotential.constant(0.0, T), E).traces
        worst = max(worst, float(np.max(np.abs(d - 2 * np.cos(T * np.sqrt(E))))))
    dt = time.perf_counter() - t0
    ok = record(1, worst <= 1e-8 and dt < 10, f"max error {worst:.2e} in {dt:.2f}s")
    assert ok


def test_criterion_02_wronskian(record):
    rng = np.random.default_rng(2)
    bad, worst = 0, 0.0
    for _ in range(100):
        V = random_trig(rng, vmax=5.0)
        E = float(rng.uniform(-5.0, 40.0))
        M = monodromy(V, E)
        dev = abs(M.det - 1)
        worst = max(worst, dev)
        bad += dev > 10 * M.error
    ok = record(2, bad == 0, f"{bad} violations / 100, max |det-1| {worst:.2e}")
    assert ok


def test_criterion_03_band_count_bound(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    over, missed, cases = 0, 0, 0
    for _ in range(50):
        V = random_trig(rng, vmax=3.0)
        vinf = dense_sup(V)
        assert vinf <= 3.0
        for a in (2.0, 5.0, 10.0):
            cases += 1
            bs = band_set(V, a)
            over += bs.count > band_count_bound(V.period, vinf, a)
            audit = band_set(V, a, grid_factor=16)
            missed += audit.count != bs.count
    dt = time.perf_counter() - t0
    ok = record(3, over == 0 and missed == 0 and dt < 300, f"{cases} cases: {over} over bound, {missed} audit mismatches, {dt:.0f}s")
    assert ok


def test_criterion_04_covering_exact(record):
    rng = np.random.default_rng(4)
    bad = 0
    for _ in range(200):
        ivs = rational_set(rng)
        eps = Fraction(int(rng.integers(1, 13)), 4)
        bad += iv.covering_number(as_floats(ivs), float(eps)) != exhaustive_cover(ivs, eps)
    ok = record(4, bad == 0, f"{bad} mismatches / 200 against exhaustive search")
    assert ok


def test_criterion_05_cantor(record):
    C = iv.cantor_generator(1 / 3, 6)
    S = iv.self_sum(C, 2)
    ref = IntervalSet(brute_sum(C.intervals, C.intervals))
    sum_ok = S.almost_equal(IntervalSet([(0.0, 2.0)]), 1e-12) and ref.almost_equal(S, 1e-12)
    prof = iv.dimension_profile(C, [3.0**-k for k in range(1, 7)])
    dev = max(abs(r - math.log(2) / math.log(3)) for r in prof.ratios)
    ok = record(5, sum_ok and dev <= 1e-9, f"C6+C6 = {S.intervals}, max ratio deviation {dev:.1e}")
    assert ok


def test_criterion_06_submultiplicative(record):
    rng = np.random.default_rng(6)
    bad = 0
    for _ in range(100):
        A, B = rational_set(rng), rational_set(rng)
        eps = Fraction(int(rng.integers(1, 9)), 4)
        AB = merge_exact((a0 + b0, a1 + b1) for a0, a1 in A for b0, b1 in B)
        lhs = exhaustive_cover(AB, 2 * eps)
        bad += lhs > exhaustive_cover(A, eps) * exhaustive_cover(B, eps)
        # library path on the same instance
        S = iv.minkowski_sum(as_floats(A), as_floats(B))
        bad += iv.covering_number(S, float(2 * eps)) != lhs
    suite = appendix.submultiplicativity_suite(appendix.DEFAULT_FIXTURES)
    ok = record(6, bad == 0 and suite.passed, f"{bad} violations / 100 exact pairs; library suite {suite.checks} checks, {len(suite.failures)} failures")
    assert ok


def test_criterion_07_inclusion(record):
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(100):
        d = int(rng.choice([2, 3]))
        a = float(rng.choice([1.0, 5.0]))
        gamma = Fraction(int(rng.integers(0, 13)), 4)
        C = [(lo - gamma, hi - gamma) for lo, hi in rational_set(rng)]
        g = max(Fraction(0), -min(lo for lo, _ in C))
        top = Fraction(a) + (d - 1) * g
        clipped = [(max(lo, -g), min(hi, top)) for lo, hi in C if hi >= -g and lo <= top]
        lhs, rhs = C, clipped
        for _ in range(d - 1):
            lhs = merge_exact((x0 + c0, x1 + c1) for x0, x1 in lhs for c0, c1 in C)
            rhs = merge_exact((x0 + c0, x1 + c1) for x0, x1 in rhs for c0, c1 in clipped)
        lhs = [(max(lo, -Fraction(a)), min(hi, Fraction(a))) for lo, hi in lhs if hi >= -a and lo <= a]
        bad += not all(any(r0 <= l0 and l1 <= r1 for r0, r1 in rhs) for l0, l1 in lhs)
    suite = appendix.inclusion_suite(appendix.DEFAULT_FIXTURES)
    ok = record(7, bad == 0 and suite.passed, f"{bad} violations / 100 exact cases; library suite {suite.checks} checks, {len(suite.failures)} failures")
    assert ok


def test_criterion_08_recursion(record, cos_state):
    st = cos_state
    eps, delta = st.epsilons(), st.deltas()
    problems = []
    if st.status != con.STATUS_COMPLETE or st.last != 3:
        problems.append(f"status {st.status} after {st.last} stages")
    if not eps[1] == eps[0] / 2:
        problems.append("eps_1")
    for n in range(2, st.last + 1):
        if not eps[n] == min(eps[n - 1] / 2, delta[n - 1] / 4):
            problems.append(f"eps_{n}")
    for n in range(1, st.last):
        if not con.tail_bound_check(st, n):
            problems.append(f"tail n={n}")
    d = delta[1:]
    if not all(b < a for a, b in zip(d, d[1:])):
        problems.append("delta not strictly decreasing")
    prof = con.dim_certificate(st, 1)
    r = prof.ratios
    if len(r) != 3 or not all(b < a for a, b in zip(r, r[1:])):
        problems.append(f"ratios {r}")
    seconds = BUILD_SECONDS.get("cos_state", 0.0)
    if seconds >= 900:
        problems.append(f"build took {seconds:.0f}s")
    detail = (
        f"delta {[round(x, 4) for x in d]}, ratios {[round(x, 3) for x in r]}, build {seconds:.0f}s"
        if not problems
        else "; ".join(problems)
    )
    ok = record(8, not problems, detail)
    assert ok


def test_criterion_09_stability(record, cos_state):
    st = cos_state
    a1 = st.stages[1].a
    worst, bad = 0.0, []
    for n in range(1, st.last + 1):
        step = pot.sup_distance(st.stages[n - 1].potential, st.stages[n].potential)
        inner = band_set(st.stages[n].potential, a1).bands
        outer = band_set(st.stages[n - 1].potential, a1 + step).bands
        if not iv.contains(iv.neighborhood(outer, step + 1e-6), inner):
            bad.append(n)
        worst = max(worst, step)
    ok = record(9, not bad, f"stages 1..{st.last} contained (max step {worst:.3g})" if not bad else f"fails at stages {bad}")
    assert ok


def test_criterion_10_separable(record):
    a = 4.0
    one = band_set(COS, a).bands
    identity = con.separable_spectrum(COS, [1.0], a) == one
    free = con.separable_spectrum(PeriodicPotential.constant(0.0), [1.0, 1.0], a)
    free_ok = len(free) == 1 and abs(free.lower) <= 1e-8 and free.upper == a
    S = con.separable_spectrum(COS, [1.0, 1.0], a)
    A = one
    AA = iv.minkowski_sum(A, A)
    loss = AA.measure() - iv.window(AA, a).measure()
    bm_ok = S.measure() >= 2 * A.measure() - loss - 1e-9
    wide = hill_bands([(1, 0.5, 0.0)], TWO_PI, a + 0.5, M=80)
    ref = iv.window(IntervalSet(brute_sum(wide, wide)), a)
    oracle_ok = len(S) == len(ref) and np.allclose(S.array, ref.array, atol=1e-4)
    ok = record(
        10,
        identity and free_ok and bm_ok and oracle_ok,
        f"d=1 {identity}, free [0,a] {free_ok}, |S|={S.measure():.4f} >= {2 * A.measure() - loss:.4f} {bm_ok}, oracle {oracle_ok}",
    )
    assert ok


def test_criterion_11_determinism(record, tmp_path):
    src = tmp_path / "cos.json"
    src.write_text(json.dumps(pot.to_json_dict(COS)))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"candidates": [2, 4, 8, 16], "budget": 1, "seed": 0}))
    out = tmp_path / "out"
    args = ["construct", str(src), "--eps0", "0.5", "--n-max", "2", "--window", "1", "--config", str(cfg), "--out", str(out)]
    names = ["state.json", "certificate.csv"]
    runs = []
    for _ in range(2):
        code = cli.main(args)
        blobs = {n: (out / n).read_bytes() for n in names}
        man = json.loads((out / "manifest.json").read_text())
        man.pop("duration_s")
        runs.append((code, blobs, man))
    same = runs[0] == runs[1]
    ok = record(11, same and runs[0][0] == 0, f"exit {runs[0][0]}, outputs byte-identical {same}")
    assert ok
