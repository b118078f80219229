import json
import math
import pathlib
import warnings

import numpy as np
import pytest
from scipy import integrate

from layermap.errors import BetaOutOfRange, DegenerateSample, InteriorEmpty, RatioNotAboveOne
from layermap.ising import (BETA_C, BETA_MAX, BETA_MIN, CLAMPED_EPSILON, CLAMPED_RATIO, DEGENERATE,
                            PHI_MAX, PHI_MIN, ClampedRatioWarning, correlation_table, diag_correlation,
                            estimate_image, estimate_parameters, from_spins, g_statistic, gibbs_sample,
                            nn_correlation, phi, phi_inverse, to_spins)
from layermap.netpbm import GrayImage
from layermap.noise import flip_indicator

ORACLE = pathlib.Path(__file__).parent / "data" / "correlation_oracle.json"


def test_spin_maps():
    bits = np.array([[0, 1], [1, 0]], np.uint8)
    assert to_spins(bits).tolist() == [[-1, 1], [1, -1]]
    assert np.array_equal(from_spins(to_spins(bits)), bits)
    with pytest.raises(ValueError):
        from_spins(np.array([[0, 1]]))


def test_g_statistic_examples():
    const = np.ones((5, 6), np.int8)
    assert g_statistic(const, 1) == 1.0 and g_statistic(const, 2) == 1.0
    checker = np.where(np.add.outer(np.arange(6), np.arange(7)) % 2 == 0, 1, -1)
    assert g_statistic(checker, 1) == -1.0 and g_statistic(checker, 2) == 1.0
    stripes = np.where(np.arange(6)[:, None] % 2 == 0, 1, -1) * np.ones((1, 5), int)
    assert g_statistic(stripes, 1) == 0.0 and g_statistic(stripes, 2) == -1.0


def test_g_statistic_matches_explicit_loop(rng):
    s = np.where(rng.random((7, 9)) < 0.5, -1, 1)
    for a, offs in ((1, [(0, 1), (0, -1), (1, 0), (-1, 0)]), (2, [(1, 1), (1, -1), (-1, 1), (-1, -1)])):
        total = count = 0
        for r in range(1, 6):
            for c in range(1, 8):
                for dr, dc in offs:
                    total += s[r, c] * s[r + dr, c + dc]
                    count += 1
        assert g_statistic(s, a) == pytest.approx(total / count)


def test_g_statistic_errors():
    with pytest.raises(InteriorEmpty):
        g_statistic(np.ones((2, 5)), 1)
    with pytest.raises(ValueError):
        g_statistic(np.ones((4, 4)), 3)


def _series_nn(beta):
    """Nearest-neighbour correlation from the Onsager free energy, by quadrature."""
    def integrand(t1, t2):
        c2 = math.cosh(2 * beta)
        s2 = math.sinh(2 * beta)
        d = c2 * c2 - s2 * (math.cos(t1) + math.cos(t2))
        return (2 * c2 * 2 * s2 - 2 * c2 * (math.cos(t1) + math.cos(t2))) / d
    val, _ = integrate.dblquad(integrand, 0, math.pi, 0, math.pi, epsabs=1e-10)
    # u = -d(-beta f)/d beta per site, split equally over the two bonds
    return 0.5 * (val / (2 * math.pi ** 2))


@pytest.mark.parametrize("beta", [0.2, 0.35, 0.6, 0.9])
def test_nn_correlation_against_free_energy_quadrature(beta):
    assert nn_correlation(beta) == pytest.approx(_series_nn(beta), abs=1e-7)


def test_values_at_critical_point():
    assert nn_correlation(BETA_C) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert diag_correlation(BETA_C) == pytest.approx(2 / math.pi, abs=1e-12)
    assert phi(BETA_C) == pytest.approx(1.11072, abs=1e-5)
    near = [nn_correlation(BETA_C + d) for d in (-1e-6, 1e-6)]
    assert near[0] < 1 / math.sqrt(2) < near[1]


def test_continuous_through_critical_point():
    for d in (1e-15, 1e-12, 1e-9, 1e-7):
        for f, v in ((nn_correlation, 1 / math.sqrt(2)), (diag_correlation, 2 / math.pi)):
            lo, hi = f(BETA_C - d), f(BETA_C + d)
            assert math.isfinite(lo) and math.isfinite(hi)
            assert lo <= v + 1e-12 and hi >= v - 1e-12
            assert hi - lo < 1e-4


def test_high_temperature_limits():
    b = BETA_MIN
    assert nn_correlation(b) == pytest.approx(math.tanh(b), rel=2e-2)
    assert diag_correlation(b) == pytest.approx(2 * math.tanh(b) ** 2, rel=5e-2)


def test_beta_range_enforced():
    for f in (nn_correlation, diag_correlation, phi):
        with pytest.raises(BetaOutOfRange):
            f(0.01)
        with pytest.raises(BetaOutOfRange):
            f(2.0)


def test_table_invariants():
    t = correlation_table()
    assert len(t.beta_grid) == 291
    assert t.beta_grid[0] == BETA_MIN and t.beta_grid[-1] == pytest.approx(BETA_MAX)
    assert np.all(t.r1 >= t.r_sqrt2) and np.all(t.r_sqrt2 >= 0) and np.all(t.r1 <= 1)
    assert np.all(np.diff(t.r1) >= 0) and np.all(np.diff(t.r_sqrt2) >= 0)
    assert np.all(np.diff(t.phi) < 0)
    assert t.phi[0] == pytest.approx(PHI_MAX) and t.phi[-1] == pytest.approx(PHI_MIN)


@pytest.mark.skipif(not ORACLE.exists(), reason="oracle data not generated")
def test_exact_forms_against_monte_carlo_oracle():
    rows = json.loads(ORACLE.read_text())["rows"]
    for row in rows:
        b = row["beta"]
        tol1 = max(4 * row["r1_stderr"], 2e-3)
        tol2 = max(4 * row["r_sqrt2_stderr"], 2e-3)
        assert nn_correlation(b) == pytest.approx(row["r1_mc"], abs=tol1)
        assert diag_correlation(b) == pytest.approx(row["r_sqrt2_mc"], abs=tol2)


def test_phi_inverse_round_trip():
    for b in np.linspace(0.06, 1.4, 25):
        assert phi_inverse(phi(b)) == pytest.approx(b, abs=1e-7)


def test_phi_inverse_examples():
    assert phi_inverse(1.111) == pytest.approx(BETA_C, abs=1e-3)
    with pytest.raises(RatioNotAboveOne):
        phi_inverse(0.9)
    with pytest.raises(RatioNotAboveOne):
        phi_inverse(1.0)
    with pytest.warns(ClampedRatioWarning):
        assert phi_inverse(20.0) == BETA_MIN
    with pytest.warns(ClampedRatioWarning):
        assert phi_inverse(1.0 + 1e-9) == BETA_MAX
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        phi_inverse(PHI_MAX)


def test_degenerate_planes():
    with pytest.raises(DegenerateSample):
        estimate_parameters(np.ones((10, 10), np.uint8))
    checker = (np.add.outer(np.arange(10), np.arange(10)) % 2).astype(np.uint8)
    with pytest.raises(DegenerateSample):
        estimate_parameters(checker)
    res = estimate_image(GrayImage(np.full((6, 6), 77, np.uint8)))
    assert len(res) == 8
    assert all(r.degenerate and math.isnan(r.beta_hat) for r in res)
    assert res[0].g1 == 1.0


def test_estimate_noise_free_sample():
    x = gibbs_sample(128, 0.4, 300, seed=2)
    r = estimate_parameters(x)
    assert abs(r.beta_hat - 0.4) <= 0.03
    assert r.epsilon_hat <= 0.02
    assert CLAMPED_RATIO not in r.warnings


def test_estimate_clamps_epsilon_when_correlation_exceeds_model():
    x = gibbs_sample(128, 0.4, 300, seed=2)
    r = estimate_parameters(x)
    if r.g1 > nn_correlation(r.beta_hat):
        assert r.epsilon_hat == 0.0 and CLAMPED_EPSILON in r.warnings
    else:
        assert CLAMPED_EPSILON not in r.warnings


def test_estimate_noisy_sample():
    x = gibbs_sample(256, 0.35, 500, seed=11)
    y = x ^ flip_indicator(x.shape, 0.1, 5, 1)
    r = estimate_parameters(y)
    assert abs(r.beta_hat - 0.35) <= 0.05
    assert abs(r.epsilon_hat - 0.1) <= 0.02
    assert r.warnings == frozenset()


@pytest.mark.parametrize("eps", [0.05, 0.2])
def test_noise_attenuates_correlations(eps):
    x = gibbs_sample(128, 0.35, 300, seed=1)
    s0 = to_spins(x)
    ratios = []
    for a in (1, 2):
        g = np.mean([g_statistic(to_spins(x ^ flip_indicator(x.shape, eps, s, 1)), a) for s in range(20)])
        ratios.append(g / g_statistic(s0, a))
    assert ratios == pytest.approx([(1 - 2 * eps) ** 2] * 2, abs=0.01)


def test_gibbs_infinite_temperature():
    x = gibbs_sample(256, 0.0, 1, seed=5)
    assert set(np.unique(x)) <= {0, 1}
    assert 0.49 <= x.mean() <= 0.51


def test_gibbs_low_temperature_orders():
    x = gibbs_sample(32, 1.0, 10_000, seed=0)
    assert abs(to_spins(x).mean()) >= 0.9


def test_gibbs_deterministic():
    a = gibbs_sample(16, 0.44, 50, seed=3)
    assert np.array_equal(a, gibbs_sample(16, 0.44, 50, seed=3))
    assert not np.array_equal(a, gibbs_sample(16, 0.44, 50, seed=4))
    with pytest.raises(ValueError):
        gibbs_sample(4, 0.3, 10, 0)
    with pytest.raises(ValueError):
        gibbs_sample(16, 0.3, 0, 0)


def test_flag_names():
    assert {CLAMPED_RATIO, CLAMPED_EPSILON, DEGENERATE} == {"ClampedRatio", "ClampedEpsilon", "DegenerateSample"}
