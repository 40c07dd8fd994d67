import math

import numpy as np
import pytest

from specclip.errors import (
    DegenerateProjectionError,
    InsufficientSamplesError,
    LengthMismatchError,
    NonUnitVectorError,
    ZeroNoiseError,
)
from specclip.localization import (
    delocalized_signal,
    gaussian_baseline_median,
    hill_estimator,
    localization_components,
    localization_ratio,
    localization_report,
    spearman_rho,
    taylor_prediction,
)
from specclip.noisegen import SeedSpec

RNG = np.random.default_rng(99)


def unit(v):
    return v / np.linalg.norm(v)


def brute_force_components(u, v, e):
    """Independent oracle: explicit double loop over entries."""
    fro2 = 0.0
    total = 0.0
    best = 0.0
    for i in range(e.shape[0]):
        for j in range(e.shape[1]):
            fro2 += e[i, j] ** 2
            term = u[i] * e[i, j] * v[j]
            total += term
            best = max(best, term * term)
    return best / fro2, total * total / fro2


def test_components_aligned_single_entry():
    u = np.zeros(4); u[0] = 1.0
    v = np.zeros(5); v[0] = 1.0
    e = np.zeros((4, 5)); e[0, 0] = 1.0
    r_max, r = localization_components(u, v, e)
    assert r_max == pytest.approx(1.0)
    assert r == pytest.approx(1.0)
    assert localization_ratio(u, v, e) == pytest.approx(1.0)


def test_components_orthogonal_entry():
    u = np.zeros(4); u[0] = 1.0
    v = np.zeros(5); v[0] = 1.0
    e = np.zeros((4, 5)); e[1, 1] = 1.0
    r_max, r = localization_components(u, v, e)
    assert r_max == 0.0 and r == 0.0
    with pytest.raises(DegenerateProjectionError):
        localization_ratio(u, v, e)


def test_components_match_brute_force():
    u = unit(RNG.standard_normal(6))
    v = unit(RNG.standard_normal(8))
    e = 3.0 * np.outer(u, v)
    r_max, r = localization_components(u, v, e)
    bf_max, bf_r = brute_force_components(u, v, e)
    assert r_max == pytest.approx(bf_max, rel=1e-12)
    assert r == pytest.approx(bf_r, rel=1e-12)
    assert r == pytest.approx(1.0, rel=1e-10)

    e2 = RNG.standard_normal((6, 8))
    got = localization_components(u, v, e2)
    want = brute_force_components(u, v, e2)
    assert got[0] == pytest.approx(want[0], rel=1e-12)
    assert got[1] == pytest.approx(want[1], rel=1e-12)


def test_components_validation():
    with pytest.raises(NonUnitVectorError):
        localization_components(np.ones(3), unit(np.ones(3)), np.eye(3))
    with pytest.raises(ZeroNoiseError):
        localization_components(unit(np.ones(3)), unit(np.ones(3)), np.zeros((3, 3)))


def test_scale_invariance_exact_for_powers_of_two():
    u = unit(RNG.standard_normal(5))
    v = unit(RNG.standard_normal(7))
    e = RNG.standard_normal((5, 7))
    base = localization_ratio(u, v, e)
    for c in (2.0, 0.5, 4.0, -8.0):
        assert localization_ratio(u, v, c * e) == base
    assert localization_ratio(u, v, 3.7 * e) == pytest.approx(base, rel=1e-12)


def test_baseline_self_consistency():
    # The 256-draw median of the heavy-tailed ratio fluctuates by 6-20%
    # between independent estimates at 64x64 (measured over repeated runs),
    # so doubling the draw count reproduces it to tens of percent, not to a
    # few percent.  Deterministic seeds pin one representative comparison.
    local = np.random.default_rng(99)
    u = unit(local.standard_normal(64))
    v = unit(local.standard_normal(64))
    b256 = gaussian_baseline_median(u, v, 64, 64, draws=256, seed=SeedSpec(5, 0))
    b512 = gaussian_baseline_median(u, v, 64, 64, draws=512, seed=SeedSpec(5, 1))
    assert b512 == pytest.approx(b256, rel=0.30)


def test_report_regimes_quick():
    g, u, v = delocalized_signal(32, 32, SeedSpec(17))
    rng = np.random.default_rng(2)

    gauss = localization_report(g, rng.standard_normal((32, 32)), draws=128, seed=SeedSpec(3))
    assert 0.05 <= gauss.normalized_ratio <= 20

    spike = np.zeros((32, 32)); spike[4, 9] = 1.0
    rep = localization_report(g, spike, draws=128, seed=SeedSpec(3))
    assert rep.ratio == pytest.approx(1.0)
    assert rep.normalized_ratio > 10

    aligned = localization_report(g, 2.0 * np.outer(u, v), draws=128, seed=SeedSpec(3))
    assert aligned.normalized_ratio < 0.01
    assert aligned.r == pytest.approx(1.0, rel=1e-10)


def test_report_direction_index():
    g, _, _ = delocalized_signal(16, 16, SeedSpec(23))
    e = np.random.default_rng(4).standard_normal((16, 16))
    rep0 = localization_report(g, e, draws=64, seed=SeedSpec(9), direction_index=0)
    rep2 = localization_report(g, e, draws=64, seed=SeedSpec(9), direction_index=2)
    assert rep0.ratio != rep2.ratio


def test_taylor_commuting_diagonal():
    g = np.diag([2.0, 1.0])
    e = np.zeros((2, 2)); e[0, 0] = 0.1
    pred = taylor_prediction(g, e)
    assert pred.predicted == pytest.approx(2.1, rel=1e-12)
    actual = np.linalg.svd(g + e, compute_uv=False)[0]
    assert actual == pytest.approx(2.1, rel=1e-12)
    assert pred.applicable


def test_taylor_off_diagonal_second_order():
    g = np.diag([2.0, 1.0])
    eps = 0.1
    e = np.zeros((2, 2)); e[0, 1] = eps
    pred = taylor_prediction(g, e)
    assert pred.first_order_term == pytest.approx(0.0, abs=1e-14)
    actual = np.linalg.svd(g + e, compute_uv=False)[0]
    assert abs(actual - 2.0) <= 4 * eps**2 / 1.0


def test_taylor_bound_random_trials():
    rng = np.random.default_rng(31)
    done = 0
    while done < 100:
        g = rng.standard_normal((16, 16))
        s = np.linalg.svd(g, compute_uv=False)
        gap = s[0] - s[1]
        if gap < 0.5:
            continue
        e = rng.standard_normal((16, 16))
        e *= (gap / 8) / np.linalg.norm(e, 2)
        pred = taylor_prediction(g, e)
        assert pred.applicable
        actual = np.linalg.svd(g + e, compute_uv=False)[0]
        assert abs(actual - pred.predicted) <= pred.remainder_bound
        done += 1


def test_spearman_examples():
    xs = np.arange(10.0)
    assert spearman_rho(xs, xs * 2 + 1) == pytest.approx(1.0)
    assert spearman_rho(xs, -xs) == pytest.approx(-1.0)
    rng = np.random.default_rng(8)
    assert abs(spearman_rho(rng.standard_normal(1000), rng.standard_normal(1000))) <= 0.1
    with pytest.raises(LengthMismatchError):
        spearman_rho([1, 2], [1, 2, 3])
    with pytest.raises(LengthMismatchError):
        spearman_rho([1, 2], [3, 4])


def test_spearman_ties_average_rank():
    # ties share average ranks; monotone-with-ties stays below 1
    rho = spearman_rho([1, 1, 2, 3], [10, 20, 30, 40])
    assert 0.9 <= rho < 1.0


def test_hill_estimator_pareto():
    rng = np.random.default_rng(21)
    u = rng.random(100_000)
    pareto = u ** (-1 / 2.0)  # tail index 2
    est = hill_estimator(pareto, k=1000)
    assert 1.8 <= est <= 2.2


def test_hill_estimator_cauchy():
    rng = np.random.default_rng(22)
    cauchy = np.tan(np.pi * (rng.random(100_000) - 0.5))
    est = hill_estimator(cauchy, k=1000)
    assert 0.85 <= est <= 1.15


def test_hill_estimator_default_k_and_errors():
    rng = np.random.default_rng(23)
    est = hill_estimator(rng.standard_normal(10_000))
    assert est > 0
    with pytest.raises(InsufficientSamplesError):
        hill_estimator(np.ones(1000), k=100)
    with pytest.raises(InsufficientSamplesError):
        hill_estimator(np.arange(5.0))


def test_delocalized_signal_is_flat():
    g, u, v = delocalized_signal(64, 48, SeedSpec(77))
    np.testing.assert_allclose(np.abs(u), 1 / math.sqrt(64), rtol=1e-12)
    np.testing.assert_allclose(np.abs(v), 1 / math.sqrt(48), rtol=1e-12)
    s, vecs = np.linalg.svd(g, compute_uv=False)[0], None
    assert s == pytest.approx(10.0, rel=1e-10)
