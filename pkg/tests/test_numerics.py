from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from discrete_hedge import QuadratureError
from discrete_hedge.numerics import (
    EvalPlan,
    UniformCubic,
    integrate_refining,
    norm_pdf,
    simpson_nodes,
    simpson_pair,
)


def test_simpson_exact_on_cubics():
    x, w = simpson_nodes(-1.0, 3.0, 64)
    for k in range(4):
        exact = (3.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1)
        assert np.dot(x**k, w) == pytest.approx(exact, rel=1e-14)


def test_simpson_pair_consistency():
    x, _ = simpson_nodes(0.0, 1.0, 128)
    vals = np.sin(3.0 * x)
    fine, coarse = simpson_pair(vals, 0.0, 1.0)
    exact = (1.0 - np.cos(3.0)) / 3.0
    # 128-panel Simpson truncation for sin(3x) is ~2e-9; fine must sit well
    # inside the coarse error and close to exact
    assert fine == pytest.approx(exact, rel=1e-8)
    assert abs(fine - exact) < abs(coarse - exact) / 10


def test_simpson_pair_vectorised_rows():
    x, _ = simpson_nodes(0.0, 2.0, 64)
    vals = np.vstack([x, x**2])
    fine, coarse = simpson_pair(vals, 0.0, 2.0)
    assert fine == pytest.approx([2.0, 8.0 / 3.0], rel=1e-13)
    assert coarse.shape == (2,)


def test_integrate_refining_gaussian():
    got = integrate_refining(lambda x: norm_pdf(x, 0.3, 0.7), -7.0, 7.3, panels=64)
    assert got == pytest.approx(1.0, abs=1e-12)


def test_integrate_refining_raises_when_exhausted():
    with pytest.raises(QuadratureError):
        integrate_refining(
            lambda x: np.sin(997.0 * x), 0.0, 3.0, panels=4, max_doublings=1
        )


def test_simpson_nodes_validation():
    with pytest.raises(ValueError):
        simpson_nodes(0.0, 1.0, 3)


@given(
    seed=st.integers(0, 2**31),
    n=st.integers(6, 60),
)
@settings(max_examples=40, deadline=None)
def test_monotone_cubic_matches_scipy_pchip(seed, n):
    rng = np.random.default_rng(seed)
    y = np.cumsum(rng.uniform(-1.0, 2.0, size=n))  # mixed slopes incl. flats
    y[rng.integers(0, n)] = y[max(0, rng.integers(0, n) - 1)]
    h = 0.37
    x = 1.2 + h * np.arange(n)
    ours = UniformCubic.fit_monotone(1.2, h, y)
    ref = PchipInterpolator(x, y)
    pts = np.linspace(x[0], x[-1], 257)
    np.testing.assert_allclose(ours(pts), ref(pts), rtol=1e-12, atol=1e-12)


def test_monotone_cubic_no_overshoot_on_payoff_kink():
    h = 0.05
    x = -1.0 + h * np.arange(41)
    y = np.maximum(np.exp(x) - 1.0, 0.0)
    cub = UniformCubic.fit_monotone(-1.0, h, y)
    pts = np.linspace(-1.0, 1.0, 2001)
    vals = cub(pts)
    assert vals.min() >= 0.0  # monotone fit cannot undershoot the flat side
    assert np.all(np.diff(vals) >= -1e-14)


def test_eval_plan_matches_direct_and_extends():
    y = np.sin(np.linspace(0.0, 3.0, 31))
    cub = UniformCubic.fit_monotone(0.0, 0.1, y)
    pts = np.array([-0.5, 0.0, 0.123, 1.77, 2.93, 3.9])
    plan = EvalPlan.build(0.0, 0.1, 31, pts)
    out = plan.evaluate(cub, below_values=-7.0, above_values=np.array([7.0]))
    inside = (pts >= 0.0) & (pts < 3.0)
    np.testing.assert_allclose(out[inside], cub(pts[inside]), rtol=1e-13)
    assert out[0] == -7.0
    assert out[-1] == 7.0


def test_eval_plan_reuse_across_coefficients():
    pts = np.linspace(-0.3, 3.3, 101)
    plan = EvalPlan.build(0.0, 0.1, 31, pts)
    for fn in (np.sin, np.cos):
        y = fn(np.linspace(0.0, 3.0, 31))
        cub = UniformCubic.fit_monotone(0.0, 0.1, y)
        out = plan.evaluate(cub, 0.0, 0.0)
        inside = (pts >= 0.0) & (pts <= 3.0)
        np.testing.assert_allclose(out[inside], cub(pts[inside]), rtol=1e-13)


def test_norm_pdf_matches_quadrature_moments():
    total = quad(lambda x: norm_pdf(x, 1.0, 2.0), -20, 22)[0]
    assert total == pytest.approx(1.0, abs=1e-10)
