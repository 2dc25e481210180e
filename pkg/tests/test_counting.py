import numpy as np
import pytest

from conftest import random_spd_pencil
from tespect import assembly, companion, counting
from tespect.errors import (
    ContourNearZero,
    InsufficientResolvedRange,
    PhaseUnresolved,
)


def toy_det(lam):
    return (1.0 - lam) * (1.0 - lam / 4.0)


# -- determinant evaluation ------------------------------------------------------


def test_det_is_one_at_zero(toy_whitened):
    det = counting.fredholm_det(toy_whitened, 0.0)
    assert det.log_abs == 0.0 and det.arg == 0.0
    assert det.value == 1.0


def test_det_toy_factorization(toy_whitened):
    for lam in (2.0, -1.0, 0.5 + 0.5j, 3.0 - 2.0j):
        det = counting.fredholm_det(toy_whitened, lam)
        assert det.value == pytest.approx(toy_det(lam), rel=1e-12)


def test_det_conjugate_symmetry():
    rng = np.random.default_rng(2)
    wh = random_spd_pencil(rng, 12)
    for lam in (1.0 + 2.0j, -3.0 + 0.7j):
        d1 = counting.fredholm_det(wh, lam)
        d2 = counting.fredholm_det(wh, np.conj(lam))
        assert d1.log_abs == pytest.approx(d2.log_abs, rel=1e-10)
        assert d1.arg == pytest.approx(-d2.arg, abs=1e-10)


def test_det_vanishes_at_computed_eigenvalues():
    rng = np.random.default_rng(8)
    wh = random_spd_pencil(rng, 6)
    comp = companion.build_companion(wh)
    for t in companion.extract_spectrum(comp):
        at_root = counting.fredholm_det(wh, t.lam)
        nearby = counting.fredholm_det(wh, t.lam * (1.0 + 1e-3))
        # the determinant collapses by many orders at the computed root
        assert at_root.log_abs < nearby.log_abs + np.log(1e-7)


# -- winding ------------------------------------------------------------------------


def test_winding_toy(toy_whitened):
    assert counting.winding_count(toy_whitened, 2.0) == 1
    assert counting.winding_count(toy_whitened, 5.0) == 2
    assert counting.winding_count(toy_whitened, 0.5) == 0


def test_winding_triggers_grid_doubling(toy_whitened):
    # zero at lambda = 1 sits 0.5% inside the contour: 256 points cannot
    # resolve the phase swing, the automatic doubling must kick in
    assert counting.winding_count(toy_whitened, 1.005, points=256) == 1


def test_winding_contour_through_zero(toy_whitened):
    with pytest.raises(ContourNearZero):
        counting.winding_count(toy_whitened, 1.0)


def test_winding_phase_unresolved(toy_whitened):
    with pytest.raises(PhaseUnresolved):
        counting.winding_count(toy_whitened, 1.0 + 1e-7, points=256)


def test_winding_matches_spectrum_split():
    rng = np.random.default_rng(14)
    wh = random_spd_pencil(rng, 8)
    comp = companion.build_companion(wh)
    lams = np.array([t.lam for t in companion.extract_spectrum(comp)])
    moduli = np.sort(np.abs(lams))
    mid = np.sqrt(moduli[7] * moduli[8])  # radius splitting the spectrum
    inner = int(np.sum(np.abs(lams) < mid))
    assert counting.winding_count(wh, float(mid)) == inner


# -- half-radius bound -----------------------------------------------------------------


def test_jensen_bound_toy(toy_whitened):
    bound = counting.jensen_bound(toy_whitened, 3.0)
    assert bound >= counting.winding_count(toy_whitened, 1.5)
    # max |f| on |lam| = 3 is at lam = -3: 4 * 1.75 = 7
    assert bound == pytest.approx(np.log(7.0) / np.log(2.0), rel=1e-6)


def test_jensen_bound_small_radius(toy_whitened):
    bound = counting.jensen_bound(toy_whitened, 1e-3)
    assert 0.0 <= bound < 0.01
    assert counting.winding_count(toy_whitened, 5e-4) == 0


# -- growth profile ---------------------------------------------------------------------


def synthetic_double_root_system(n=24):
    # per-mode pencil lam^2 - 2 j^2 lam + j^4 = (lam - j^2)^2: double roots at j^2
    j = np.arange(1, n + 1, dtype=float)
    return assembly.WhitenedSystem.from_matrices(np.diag(j**4), np.diag(2.0 * j**2))


def test_growth_profile_synthetic_counts_and_slope():
    wh = synthetic_double_root_system()
    radii = [(j + 0.5) ** 2 for j in range(3, 8)]
    report = counting.growth_profile(wh, radii)
    exact = np.array([2 * int(np.sqrt(r)) for r in radii])
    assert np.array_equal(report.windings, exact)
    assert np.array_equal(report.cross_counts, exact)
    # finite-sample fit of the exact half-power law, compared against the
    # same fit recomputed from the exact counts
    ref_slope, _ = np.polyfit(
        np.log(report.radii[report.resolved]), np.log(exact[report.resolved]), 1
    )
    assert report.growth_exponent == pytest.approx(ref_slope, abs=1e-10)
    assert abs(report.growth_exponent - 0.5) <= 0.1
    assert report.growth_ceiling == 2.0


def test_growth_profile_insufficient_range(toy_whitened):
    with pytest.raises(InsufficientResolvedRange):
        counting.growth_profile(toy_whitened, [0.5, 2.0, 5.0])


def test_nudge_radius_moves_off_spectrum():
    moduli = np.array([1.0, 4.0])
    r = counting.nudge_radius(4.0, moduli)
    assert np.min(np.abs(moduli - r)) / r > 0.01
    assert counting.nudge_radius(2.0, moduli) == 2.0


def test_winding_under_thread_pool(toy_whitened, monkeypatch):
    from tespect.util import make_mapper

    monkeypatch.setenv("TE_SPECT_THREADS", "3")
    pooled = make_mapper()
    assert pooled is not map
    assert counting.winding_count(toy_whitened, 2.0, mapper=pooled) == 1
    assert counting.jensen_bound(toy_whitened, 3.0, mapper=pooled) == pytest.approx(
        counting.jensen_bound(toy_whitened, 3.0), rel=1e-14
    )
