import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pricegame.errors import AnchorError, ConfigError, DomainError, UnsupportedModelError
from pricegame.market import (
    CesModel,
    IsoElasticModel,
    PricePoint,
    SmoothingParams,
    adjusted_gradient,
    elasticity_fd,
    exact_log_gradient,
    lipschitz_check,
    log_revenue,
    revenue,
    smoothed_curve,
    smoothed_gradient,
    smoothed_log_revenue,
    smoothing_cost_check,
)

CES = CesModel(budget=2.0, weights=(1.0, 1.0), sigma=2.5)
ISO = IsoElasticModel(scales=(1.0, 1.0), elasticity=2.5)
SP = SmoothingParams(epsilon=math.log(1.0 / 0.9), r_lower=1.0, R_upper=1.25)


def test_price_point_consistency():
    pp = PricePoint.from_prices([1.0, 2.0])
    assert np.array_equal(pp.p_tilde, np.log(pp.p))
    pp2 = PricePoint.from_log_prices([0.0, math.log(2.0)])
    assert np.array_equal(pp2.p_tilde, np.log(pp2.p))
    with pytest.raises(DomainError):
        PricePoint.from_prices([1.0, -1.0])
    with pytest.raises(DomainError):
        PricePoint.from_prices([1.0, 200.0], domain=(0.01, 100.0))


def test_model_validation():
    with pytest.raises(ConfigError):
        CesModel(budget=2.0, weights=(1.0, 1.0), sigma=0.9)  # rho outside (0,1)
    with pytest.raises(ConfigError):
        CesModel(budget=-1.0, weights=(1.0, 1.0), sigma=2.5)
    with pytest.raises(ConfigError):
        CesModel(budget=1.0, weights=(1.0,), sigma=2.5)
    with pytest.raises(ConfigError):
        IsoElasticModel(scales=(1.0, 1.0), elasticity=1.0)  # E must exceed 1
    assert CesModel(budget=1.0, weights=(1, 1), sigma=2.0).rho == 0.5


def test_ces_demand_examples():
    np.testing.assert_allclose(CES.demand([1.0, 1.0]), [1.0, 1.0], rtol=1e-14)
    # uniform price scaling divides demand by the same factor
    np.testing.assert_allclose(CES.demand([2.0, 2.0]), [0.5, 0.5], rtol=1e-14)


def test_iso_demand_example():
    x = IsoElasticModel(scales=(1.0, 1.0), elasticity=2.5).demand([2.0, 1.0])
    np.testing.assert_allclose(x, [2.0**-2.5, 2.0**2.5], rtol=1e-13)


def test_demand_errors():
    with pytest.raises(DomainError):
        CES.demand([1.0, 0.0])
    with pytest.raises(DomainError):
        ISO.demand([1.0, -2.0])
    with pytest.raises(DomainError):
        CES.demand([1.0, 1.0, 1.0])


@given(
    st.lists(st.floats(0.05, 50.0), min_size=2, max_size=5),
    st.floats(0.5, 2.0),
)
def test_ces_budget_identity_and_homogeneity(prices, lam):
    n = len(prices)
    model = CesModel(budget=3.0, weights=(1.0,) * n, sigma=2.5)
    p = np.array(prices)
    x = model.demand(p)
    assert abs(float(p @ x) - model.budget) / model.budget < 1e-10
    np.testing.assert_allclose(model.demand(lam * p), x / lam, rtol=1e-9)


def test_iso_elasticity_constant():
    model = IsoElasticModel(scales=(1.0, 0.5, 2.0), elasticity=2.5)
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = np.exp(rng.uniform(-2, 2, 3))
        i, j = rng.integers(0, 3, 2)
        want = -2.5 if i == j else 2.5
        assert abs(elasticity_fd(model, p, i, j) - want) < 1e-4


def test_ces_elasticity_at_symmetric_point():
    # own elasticity -(sigma - (sigma-1)s) = -1.75 at share 1/2
    assert abs(elasticity_fd(CES, [1.0, 1.0], 0, 0) - (-1.75)) < 1e-4


def test_elasticity_fd_step_error():
    with pytest.raises(DomainError):
        elasticity_fd(CES, [1.0, 1.0], 0, 0, step=0.0)
    with pytest.raises(DomainError):
        elasticity_fd(CES, [1.0, 1.0], 0, 0, step=1e-300)


def test_gross_substitutes():
    rng = np.random.default_rng(1)
    for model in (CES, ISO):
        for _ in range(100):
            p = np.exp(rng.uniform(-2, 2, 2))
            x0 = model.demand(p)
            for _ in range(10):
                q = p.copy()
                q[0] *= 1.0 + rng.uniform(0.01, 0.5)
                assert model.demand(q)[1] >= x0[1] * (1 - 1e-12)


def test_revenue_branches():
    assert revenue(2.0, 0.5, 1.0) == 1.0  # demand-limited
    assert revenue(1.0, 3.0, 1.0) == 1.0  # supply-capped
    assert revenue(1.0, 1.0, 1.0) == 1.0  # boundary agrees
    np.testing.assert_allclose(
        log_revenue(2.0, 0.5, 1.0), math.log(2.0) + math.log(0.5), rtol=1e-15
    )
    with pytest.raises(DomainError):
        revenue(-1.0, 1.0, 1.0)


def test_exact_log_gradient():
    # demand below supply at high own price: slope 1 - E
    assert exact_log_gradient(ISO, [2.0, 1.0], 0, 1.0) == 1.0 - 2.5
    # supply-capped at low own price
    assert exact_log_gradient(ISO, [0.5, 1.0], 0, 1.0) == 1.0
    # boundary x == w goes with the capped branch
    assert exact_log_gradient(ISO, [1.0, 1.0], 0, 1.0) == 1.0
    with pytest.raises(UnsupportedModelError):
        exact_log_gradient(CES, [1.0, 1.0], 0, 1.0)


def test_adjusted_gradient():
    assert adjusted_gradient(0.5, 1.0) == -1.0
    assert adjusted_gradient(2.0, 1.0) == 1.0
    assert adjusted_gradient(1.0, 1.0) == 1.0
    with pytest.raises(DomainError):
        adjusted_gradient(0.0, 1.0)


def test_smoothed_gradient_branches():
    E = 2.5
    assert smoothed_gradient(1.0, 1.0, E, SP) == 1.0
    x_thr = SP.threshold(1.0)
    assert abs(smoothed_gradient(x_thr, 1.0, E, SP) - (1.0 - E)) < 1e-12
    # log-midpoint of the band interpolates to 1 - E/2
    x_mid = math.exp(0.5 * (math.log(x_thr) + 0.0))
    assert abs(smoothed_gradient(x_mid, 1.0, E, SP) - (1.0 - E / 2.0)) < 1e-12
    # outside the band
    assert smoothed_gradient(2.0, 1.0, E, SP) == 1.0
    assert smoothed_gradient(x_thr * 0.5, 1.0, E, SP) == 1.0 - E


def test_smoothing_params_validation():
    with pytest.raises(ConfigError):
        SmoothingParams(epsilon=0.0, r_lower=1.0, R_upper=1.0)
    with pytest.raises(ConfigError):
        SmoothingParams(epsilon=0.1, r_lower=2.0, R_upper=1.0)
    assert SP.threshold(1.0) == pytest.approx(0.9, rel=1e-12)
    assert SP.eps_r == pytest.approx(math.log(10.0 / 9.0), rel=1e-12)


def test_smoothed_gradient_monotone_and_curve_concave():
    curve = smoothed_curve(ISO, np.array([1.0]), 0, 1.0, SP)
    assert np.all(np.diff(curve.delta) <= 0.0)
    assert np.max(np.diff(curve.smoothed, 2)) <= 1e-8


def test_smoothed_curve_gap_bounds():
    # 0 <= actual - smoothed <= eps*r on the whole grid (quadrature slack)
    for others in ([1.0], [0.3], [4.0]):
        curve = smoothed_curve(ISO, np.array(others), 0, 1.0, SP)
        gap = curve.gap
        assert gap.min() >= 0.0
        assert gap.max() <= SP.eps_r * (1.0 + 1e-3)


def test_smoothed_curve_anchor_and_capped_gap():
    curve = smoothed_curve(ISO, np.array([1.0]), 0, 1.0, SP)
    # curves coincide exactly on the low-demand anchor region
    assert np.max(np.abs(curve.gap[curve.anchor_index :])) == 0.0
    # on the supply-capped region both slopes are 1, so the gap is frozen at
    # the band integral: int (delta - (1-E)) over the band = eps*r/2 for the
    # constant-elasticity model (triangle with base eps*r/E and height E)
    x = ISO.own_demand(np.exp(curve.p_tilde), np.array([1.0]), 0)
    capped = x > 1.0
    np.testing.assert_allclose(curve.gap[capped], SP.eps_r / 2.0, atol=5e-6)
    # at the threshold price the two curves have just met: gap ~ 0
    k = curve.anchor_index
    assert curve.gap[k - 1] < 1e-4


def test_smoothed_log_revenue_scalar_matches_curve():
    others = np.array([0.7])
    curve = smoothed_curve(ISO, others, 0, 1.0, SP)
    for idx in (17, 5000, 19990):
        p = float(np.exp(curve.p_tilde[idx]))
        val = smoothed_log_revenue(ISO, p, others, 0, 1.0, SP)
        assert abs(val - curve.smoothed[idx]) < 1e-9
    # off-grid point stays within the pointwise bound
    p = 1.2345
    x = float(ISO.own_demand(np.array([p]), others, 0)[0])
    gap = log_revenue(p, x, 1.0) - smoothed_log_revenue(ISO, p, others, 0, 1.0, SP)
    assert 0.0 <= gap <= SP.eps_r * (1.0 + 1e-3)


def test_smoothed_log_revenue_domain_and_anchor_errors():
    with pytest.raises(DomainError):
        smoothed_log_revenue(ISO, 1000.0, np.array([1.0]), 0, 1.0, SP)
    # opponent priced at the domain top keeps demand above the threshold
    with pytest.raises(AnchorError):
        smoothed_log_revenue(ISO, 1.0, np.array([100.0]), 0, 1.0, SP)


def test_smoothing_cost_check_runs_clean():
    res = smoothing_cost_check(ISO, 0, 1.0, SP, samples=300, seed=5)
    assert res.passed and res.failures == 0


def test_lipschitz_check_runs_clean():
    res = lipschitz_check(ISO, 0, 1.0, SP, samples=300, seed=5)
    assert res.passed and res.failures == 0


def test_lipschitz_bound_is_tightish_inside_band():
    # the band slope attains E^2/(eps*r) against own price, so nearby price
    # pairs straddling the band should come close to the bound
    E, L = 2.5, 2.5 * 2.5 / SP.eps_r
    base = np.array([1.0, 1.0])
    d0 = smoothed_gradient(float(ISO.demand(base)[0]), 1.0, E, SP)
    shifted = np.array([1.0 * math.exp(1e-4), 1.0])
    d1 = smoothed_gradient(float(ISO.demand(shifted)[0]), 1.0, E, SP)
    ratio = abs(d1 - d0) / (L * 1e-4)
    assert 0.9 < ratio <= 1.0 + 1e-3
