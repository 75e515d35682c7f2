import math

import numpy as np
import pytest

from hillspec import potential as pot
from hillspec.floquet import (
    band_count_bound,
    band_set,
    discriminant,
    evaluate_batch,
    monodromy,
    spectrum_measure,
)
from hillspec.potential import PeriodicPotential

from oracles import hill_bands

TWO_PI = 2 * math.pi
COS = PeriodicPotential.trig(TWO_PI, [(1, 0.5, 0.0)])


def random_trig(rng, max_harmonics=4, vmax=3.0, period=None):
    n = int(rng.integers(1, max_harmonics + 1))
    ks = rng.choice(np.arange(1, 6), size=n, replace=False)
    ab = rng.normal(size=(n, 2))
    ab *= rng.uniform(0.2, vmax) / np.abs(ab).sum()
    T = period if period is not None else float(rng.uniform(1.0, 8.0))
    return PeriodicPotential.trig(T, [(int(k), float(a), float(b)) for k, (a, b) in zip(ks, ab)])


def test_free_discriminant_closed_form():
    E = np.linspace(0.1, 50, 200)
    for T in (1.0, math.pi, TWO_PI):
        V = PeriodicPotential.constant(0.0, T)
        d = evaluate_batch(V, E).traces
        assert np.max(np.abs(d - 2 * np.cos(T * np.sqrt(E)))) <= 1e-8


def test_negative_energy_free_discriminant():
    V = PeriodicPotential.constant(0.0, 1.0)
    for E in (-0.5, -4.0):
        assert discriminant(V, E) == pytest.approx(2 * math.cosh(math.sqrt(-E)), rel=1e-9)


def test_piecewise_matches_transfer_matrix():
    # two-step potential: product of exact constant-potential propagators
    V = PeriodicPotential.piecewise(2.0, [1.0, -0.5])

    def prop(q, L, E):
        k2 = E - q
        if k2 > 0:
            k = math.sqrt(k2)
            return np.array([[math.cos(k * L), math.sin(k * L) / k], [-k * math.sin(k * L), math.cos(k * L)]])
        k = math.sqrt(-k2)
        return np.array([[math.cosh(k * L), math.sinh(k * L) / k], [k * math.sinh(k * L), math.cosh(k * L)]])

    for E in (-0.3, 0.7, 2.5, 9.0):
        M = prop(-0.5, 1.0, E) @ prop(1.0, 1.0, E)
        assert discriminant(V, E) == pytest.approx(np.trace(M), abs=1e-8)


def test_wronskian_within_error_estimate():
    rng = np.random.default_rng(11)
    for _ in range(30):
        V = random_trig(rng, vmax=5.0)
        E = float(rng.uniform(-5, 20))
        M = monodromy(V, E)
        assert abs(M.det - 1) <= 10 * M.error + 1e-15


def test_shift_covariance():
    V = PeriodicPotential.trig(3.0, [(1, 0.7, 0.2), (2, -0.3, 0.1)])
    for c in (0.5, -1.25):
        for E in (-0.2, 1.3, 6.0):
            assert discriminant(pot.shift(V, c), E) == pytest.approx(discriminant(V, E - c), abs=1e-8)


def test_batch_order_independent():
    V = PeriodicPotential.trig(TWO_PI, [(1, 0.5, 0.0), (3, 0.1, 0.2)])
    E = np.linspace(-0.5, 3, 700)
    perm = np.random.default_rng(0).permutation(E.size)
    a = evaluate_batch(V, E)
    b = evaluate_batch(V, E[perm])
    assert np.array_equal(a.matrices[perm], b.matrices)


def test_band_count_bound_examples():
    assert band_count_bound(TWO_PI, 0.0, 1.0) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        band_count_bound(1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        band_count_bound(1.0, -1.0, 1.0)


def test_free_band_set_single_band():
    bs = band_set(PeriodicPotential.constant(0.0, TWO_PI), 9.0)
    assert bs.count == 1
    lo, hi = bs.bands.intervals[0]
    assert abs(lo) <= 1e-8 and hi == 9.0
    assert bs.flags[0].clipped_high and not bs.flags[0].clipped_low
    assert bs.closed_gaps >= 1


def test_constant_potentials():
    assert band_set(PeriodicPotential.constant(10.0), 4.0).bands.is_empty
    assert spectrum_measure(PeriodicPotential.constant(10.0), 4.0) == 0.0
    assert spectrum_measure(PeriodicPotential.constant(0.0), 4.0) == pytest.approx(4.0, abs=1e-8)
    bs = band_set(PeriodicPotential.constant(-1.0), 4.0)
    assert bs.count == 1
    assert bs.bands.intervals[0][0] == pytest.approx(-1.0, abs=1e-8)


def test_cos_matches_hill_oracle():
    for a in (1.0, 2.0, 5.0):
        bs = band_set(COS, a, 1e-10)
        ref = hill_bands([(1, 0.5, 0.0)], TWO_PI, a)
        assert bs.count == len(ref)
        assert np.allclose(bs.bands.array, np.array(ref), atol=1e-8)
    assert spectrum_measure(COS, 2.0) < 2.0


def test_random_potentials_match_hill_oracle():
    rng = np.random.default_rng(5)
    for _ in range(8):
        V = random_trig(rng, vmax=2.0, period=float(rng.uniform(1.0, 5.0)))
        bs = band_set(V, 3.0, 1e-10)
        ref = hill_bands(V.coeffs, V.period, 3.0, M=80)
        assert bs.count == len(ref)
        assert np.allclose(bs.bands.array, np.array(ref), atol=1e-7)


def test_band_set_invariants():
    rng = np.random.default_rng(8)
    for _ in range(10):
        V = random_trig(rng)
        a = float(rng.choice([2.0, 5.0]))
        tol = 1e-9
        bs = band_set(V, a, tol)
        arr = bs.bands.array
        assert bs.count <= band_count_bound(V.period, pot.sup_norm_bound(V), a)
        if bs.count:
            assert arr[0, 0] >= -pot.sup_norm_bound(V) - tol
            assert np.all(arr[1:, 0] > arr[:-1, 1])
        for (lo, hi), f in zip(bs.bands, bs.flags):
            if f.floored or hi - lo < 1e-6:
                continue
            xs = np.linspace(lo, hi, 12)[1:-1]
            assert np.all(np.abs(evaluate_batch(V, xs).traces) <= 2 + 1e-6)


def test_missed_band_audit():
    rng = np.random.default_rng(21)
    for _ in range(5):
        V = random_trig(rng)
        a = 5.0
        b1 = band_set(V, a, 1e-9)
        b2 = band_set(V, a, 1e-9, grid_factor=16)
        assert b1.count == b2.count
        assert np.allclose(b1.bands.array, b2.bands.array, atol=1e-8)


def test_deep_well_floor():
    V = PeriodicPotential.trig(TWO_PI, [(1, 40.0, 0.0)])
    bs = band_set(V, 40.0, 1e-9)
    assert bs.flags[0].floored
    lo, hi = bs.bands.intervals[0]
    assert hi - lo == pytest.approx(1e-9, rel=1e-3)
    ref = hill_bands(V.coeffs, TWO_PI, 40.0, M=80)
    assert 0.5 * (lo + hi) == pytest.approx(0.5 * (ref[0][0] + ref[0][1]), abs=1e-7)


def test_band_set_rejects_bad_args():
    with pytest.raises(ValueError):
        band_set(COS, 0.0)
    with pytest.raises(ValueError):
        band_set(COS, 1.0, tol=0.0)
