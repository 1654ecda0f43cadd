from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from discrete_hedge import (
    DegenerateDistributionError,
    MarketPath,
    MarketStep,
    MomentDomainError,
    ReturnDistribution,
    ValidationError,
    exp_moment,
    feasibility_interval,
    step_moments,
)

TAU = 0.01
DIST = ReturnDistribution.lognormal(0.05, 0.2)

# frozen against direct quadrature of the step density (see oracle tests below)
M_REF = 1.0007002450571767
D_REF = 0.00040064051494415054


def test_step_moments_frozen():
    m, d = step_moments(DIST, TAU)
    assert m == pytest.approx(M_REF, abs=1e-15)
    assert d == pytest.approx(D_REF, rel=1e-12)


def test_exp_moment_matches_quadrature_oracle():
    # independent check: integrate e^{px} u(x) over +-15 stds
    for p in (1.0, 2.0, -0.7, 3.3):
        direct = quad(
            lambda x: np.exp(p * x) * DIST.step_pdf(np.array([x]), TAU)[0],
            -0.3,
            0.3,
            limit=400,
            epsabs=1e-14,
            epsrel=1e-13,
        )[0]
        assert exp_moment(DIST, p, TAU) == pytest.approx(direct, rel=1e-11)


def test_exp_moment_complex_matches_quadrature():
    p = 1.3 + 2.2j
    re = quad(
        lambda x: np.real(np.exp(p * x)) * DIST.step_pdf(np.array([x]), TAU)[0],
        -0.3, 0.3, limit=400, epsabs=1e-14,
    )[0]
    im = quad(
        lambda x: np.imag(np.exp(p * x)) * DIST.step_pdf(np.array([x]), TAU)[0],
        -0.3, 0.3, limit=400, epsabs=1e-14,
    )[0]
    assert exp_moment(DIST, p, TAU) == pytest.approx(re + 1j * im, rel=1e-10)


def test_feasibility_interval_frozen_and_analytic():
    r_lo, r_hi = feasibility_interval(DIST, TAU)
    # lognormal endpoints are mean_rate + vol^2/2 and mean_rate + 3 vol^2/2
    assert r_lo == pytest.approx(0.05 + 0.5 * 0.04, abs=1e-11)
    assert r_hi == pytest.approx(0.05 + 1.5 * 0.04, abs=1e-11)
    assert r_lo < r_hi


@given(
    mean_rate=st.floats(-0.2, 0.2),
    vol=st.floats(0.05, 0.8),
    tau=st.floats(1e-4, 2.0),
)
@settings(max_examples=60, deadline=None)
def test_feasibility_endpoints_property(mean_rate, vol, tau):
    dist = ReturnDistribution.lognormal(mean_rate, vol)
    r_lo, r_hi = feasibility_interval(dist, tau)
    assert r_lo < r_hi
    # interval endpoints do not depend on tau for this family
    assert r_lo == pytest.approx(mean_rate + vol * vol / 2, rel=1e-8, abs=1e-10)
    assert r_hi == pytest.approx(mean_rate + 1.5 * vol * vol, rel=1e-8, abs=1e-10)


def _laplace_density(scale: float):
    def pdf(x: np.ndarray, tau: float) -> np.ndarray:
        return np.exp(-np.abs(x) / scale) / (2.0 * scale)

    return pdf


def test_custom_distribution_numeric_mgf():
    scale = 0.02  # exponential moments finite for |p| < 50
    dist = ReturnDistribution.from_density(
        _laplace_density(scale), moment_bound=1.0 / scale, quad_window=(-1.0, 1.0)
    )
    # analytic Laplace mgf: 1 / (1 - (p*scale)^2)
    for p in (1.0, 2.0, -3.0):
        assert exp_moment(dist, p, TAU) == pytest.approx(
            1.0 / (1.0 - (p * scale) ** 2), rel=1e-9
        )
    m, d = step_moments(dist, TAU)
    assert m == pytest.approx(1.0 / (1.0 - scale**2), rel=1e-9)
    r_lo, r_hi = feasibility_interval(dist, TAU)
    assert r_lo < r_hi


def test_moment_domain_error():
    dist = ReturnDistribution.from_density(
        _laplace_density(0.1), moment_bound=10.0, quad_window=(-3.0, 3.0)
    )
    with pytest.raises(MomentDomainError):
        exp_moment(dist, 10.0, TAU)
    with pytest.raises(MomentDomainError):
        exp_moment(dist, -12.0, TAU)


def test_custom_distribution_requires_second_moment():
    with pytest.raises(MomentDomainError):
        ReturnDistribution.from_density(
            _laplace_density(1.0), moment_bound=1.0, quad_window=(-5.0, 5.0)
        )


def test_degenerate_vol_rejected():
    with pytest.raises(DegenerateDistributionError):
        ReturnDistribution.lognormal(0.05, 0.0)


def test_step_and_path_validation():
    with pytest.raises(ValidationError):
        MarketStep(DIST, tau=-1.0, rate=0.05)
    with pytest.raises(ValidationError):
        MarketPath(steps=())
    with pytest.raises(ValidationError):
        MarketPath.uniform(DIST, TAU, 0.09, 0)
    with pytest.raises(ValidationError):
        exp_moment(DIST, 1.0, 0.0)


def test_path_accessors():
    path = MarketPath.uniform(DIST, TAU, 0.09, 100)
    assert len(path) == 100
    assert path.total_time == pytest.approx(1.0)
    assert path.discount == pytest.approx(np.exp(-0.09), rel=1e-14)
    assert all(s.tau == TAU for s in path)


@given(p=st.floats(-4.0, 4.0), tau=st.floats(1e-3, 1.0))
@settings(max_examples=40, deadline=None)
def test_exp_moment_positive_and_unit_at_zero(p, tau):
    val = exp_moment(DIST, p, tau)
    assert np.real(val) > 0.0
    assert exp_moment(DIST, 0.0, tau) == pytest.approx(1.0, abs=1e-15)
