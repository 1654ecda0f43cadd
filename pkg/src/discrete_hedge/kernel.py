"""Signed pricing kernel and the backward value recursion on a log grid.

One hedging step maps the value function V through
    V_next(s) = integral V(s e^x) f(x) dx,
where f is the signed kernel of the step: the minimum-variance hedge plus the
funding account compress into a single density-like weight
    f(x) = ((e^x - m) c + e^{-r tau}) u(x),      c = (1 - e^{-r tau} m) / d,
with u the step return density and (m, d) the gross-return mean/variance.
f always integrates to the discount and reprices the stock exactly, but it is
only nonnegative for rates inside the feasibility interval — outside it the
recursion can push option values negative (see the negativity module).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import QuadratureError, ValidationError
from .market_model import MarketPath, MarketStep, step_moments
from .numerics import EvalPlan, UniformCubic, simpson_nodes


@dataclass(frozen=True)
class PricingKernel:
    """One-step kernel: market step plus its derived moment coefficients."""

    step: MarketStep
    m: float
    d: float

    @classmethod
    def from_step(cls, step: MarketStep) -> "PricingKernel":
        m, d = step_moments(step.dist, step.tau)
        return cls(step=step, m=m, d=d)

    @property
    def discount(self) -> float:
        return self.step.discount

    @property
    def tilt_coef(self) -> float:
        """Weight c of the (e^x - m) tilt; zero iff discounting matches m."""
        return (1.0 - self.discount * self.m) / self.d


def kernel_eval(kern: PricingKernel, x: np.ndarray | float) -> np.ndarray:
    """Kernel values f(x); signed, so not a probability density in general."""
    x = np.asarray(x, dtype=float)
    u = kern.step.dist.step_pdf(x, kern.step.tau)
    return ((np.exp(x) - kern.m) * kern.tilt_coef + kern.discount) * u


@dataclass(frozen=True)
class PriceGrid:
    """Value function sampled on a uniform grid in log-moneyness.

    `discount` accumulates exp(-sum r tau) over the steps applied so far; the
    deep in-the-money extension of a call is s - strike * discount, and the
    deep out-of-the-money extension is 0.  `steps_applied` counts backward
    applications since the payoff.
    """

    strike: float
    log_lo: float
    h: float
    values: np.ndarray
    discount: float = 1.0
    steps_applied: int = 0

    def __post_init__(self) -> None:
        if self.strike <= 0.0:
            raise ValidationError(f"strike must be positive, got {self.strike}")
        if self.h <= 0.0 or len(self.values) < 4:
            raise ValidationError("grid needs positive spacing and >= 4 nodes")

    @classmethod
    def call_payoff(
        cls, strike: float, *, span: float = 4.0, n_nodes: int = 2048
    ) -> "PriceGrid":
        """Terminal call payoff on log-moneyness in [-span, span]."""
        lm = np.linspace(-span, span, n_nodes)
        s = strike * np.exp(lm)
        return cls(
            strike=strike,
            log_lo=float(lm[0]),
            h=float(lm[1] - lm[0]),
            values=np.maximum(s - strike, 0.0),
        )

    @property
    def n_nodes(self) -> int:
        return len(self.values)

    @property
    def log_moneyness(self) -> np.ndarray:
        return self.log_lo + self.h * np.arange(self.n_nodes)

    @property
    def spots(self) -> np.ndarray:
        return self.strike * np.exp(self.log_moneyness)

    def interpolant(self) -> UniformCubic:
        return UniformCubic.fit_monotone(self.log_lo, self.h, self.values)

    def value_at(self, s: np.ndarray | float) -> np.ndarray:
        """Monotone-cubic read of the grid with the call-specific extensions."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s <= 0.0):
            raise ValidationError("spot prices must be positive")
        lm = np.log(s / self.strike)
        out = self.interpolant()(np.clip(lm, self.log_lo, self.log_lo + self.h * (self.n_nodes - 1)))
        hi = self.log_lo + self.h * (self.n_nodes - 1)
        out = np.where(lm < self.log_lo, 0.0, out)
        return np.where(lm > hi, s - self.strike * self.discount, out)


def _quad_window(kern: PricingKernel) -> tuple[float, float]:
    return kern.step.dist.step_window(kern.step.tau)


class _StepApplier:
    """Reusable one-step operator for a fixed (grid geometry, kernel) pair.

    Precomputes, per panel-doubling level: quadrature nodes, kernel weights
    for the fine and embedded half-resolution Simpson rules, the interpolant
    evaluation plan at every (grid node + quadrature node) point, and the spot
    values needed for the in-the-money extension.  Applying a step is then one
    coefficient fit, one planned gather, and two mat-vecs.
    """

    def __init__(
        self,
        grid: PriceGrid,
        kern: PricingKernel,
        *,
        panels: int = 4096,
        rtol: float = 1e-9,
        max_doublings: int = 6,
    ) -> None:
        self.kern = kern
        self.rtol = rtol
        self.max_doublings = max_doublings
        self.panels0 = panels
        self.geometry = (grid.log_lo, grid.h, grid.n_nodes, grid.strike)
        self._levels: dict[int, tuple] = {}

    def _level(self, panels: int) -> tuple:
        if panels not in self._levels:
            lo, hi = _quad_window(self.kern)
            xq, w_f = simpson_nodes(lo, hi, panels)
            _, w_c = simpson_nodes(lo, hi, panels // 2)
            fvals = kernel_eval(self.kern, xq)
            log_lo, h, n, strike = self.geometry
            lm = log_lo + h * np.arange(n)
            args = (lm[:, None] + xq[None, :]).ravel()
            plan = EvalPlan.build(log_lo, h, n, args)
            exp_above = strike * np.exp(args[plan.above])
            self._levels[panels] = (xq, fvals * w_f, fvals[::2] * w_c, plan, exp_above)
        return self._levels[panels]

    def apply(self, grid: PriceGrid) -> PriceGrid:
        if (grid.log_lo, grid.h, grid.n_nodes, grid.strike) != self.geometry:
            raise ValidationError("grid geometry changed mid-recursion")
        cubic = grid.interpolant()
        panels = self.panels0
        for _ in range(self.max_doublings + 1):
            xq, fw_fine, fw_coarse, plan, exp_above = self._level(panels)
            above_vals = exp_above - grid.strike * grid.discount
            vals = plan.evaluate(cubic, 0.0, above_vals)
            vals = vals.reshape(grid.n_nodes, len(xq))
            fine = vals @ fw_fine
            coarse = vals[:, ::2] @ fw_coarse
            scale = max(np.max(np.abs(fine)), np.finfo(float).tiny)
            diff = np.max(np.abs(fine - coarse))
            if diff <= self.rtol * scale:
                return replace(
                    grid,
                    values=fine,
                    discount=grid.discount * self.kern.discount,
                    steps_applied=grid.steps_applied + 1,
                )
            panels *= 2
        raise QuadratureError(
            f"backward step did not stabilise at {panels // 2} panels "
            f"(norm-relative change {diff / scale:.3e} > {self.rtol:.1e})"
        )


def backward_step(
    grid: PriceGrid,
    kern: PricingKernel,
    *,
    panels: int = 4096,
    rtol: float = 1e-9,
    max_doublings: int = 6,
) -> PriceGrid:
    """One backward application of the kernel to a value grid."""
    return _StepApplier(
        grid, kern, panels=panels, rtol=rtol, max_doublings=max_doublings
    ).apply(grid)


def _default_span(path: MarketPath) -> float:
    total_var = 0.0
    for s in path:
        lo, hi = s.dist.step_window(s.tau)
        total_var += ((hi - lo) / 20.0) ** 2
    return max(8.0 * np.sqrt(total_var), 4.0)


def price_recursive(
    path: MarketPath,
    strike: float,
    *,
    n_nodes: int = 2048,
    span: float | None = None,
    panels: int = 4096,
    rtol: float = 1e-9,
    max_doublings: int = 6,
    keep_history: bool = False,
) -> PriceGrid | list[PriceGrid]:
    """Run the backward recursion from the payoff through every step of `path`.

    Steps are applied maturity-first (the last element of `path` is the step
    adjacent to the payoff).  With keep_history=True returns all grids from
    the payoff (index 0) to the valuation date (index len(path)).
    """
    if span is None:
        span = _default_span(path)
    grid = PriceGrid.call_payoff(strike, span=span, n_nodes=n_nodes)
    history = [grid]
    applier: _StepApplier | None = None
    last_step: MarketStep | None = None
    for step in reversed(path.steps):
        if applier is None or step != last_step:
            applier = _StepApplier(
                grid,
                PricingKernel.from_step(step),
                panels=panels,
                rtol=rtol,
                max_doublings=max_doublings,
            )
            last_step = step
        grid = applier.apply(grid)
        if keep_history:
            history.append(grid)
    return history if keep_history else grid


def _step_expectations(
    grid: PriceGrid, kern: PricingKernel, s: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """E[V(s e^xi)], E[V(s e^xi) e^xi], and the kernel integral, per spot.

    One shared evaluation of the grid at every (spot, quadrature node) pair
    feeds all three weight vectors.
    """
    lo, hi = _quad_window(kern)
    xq, wq = simpson_nodes(lo, hi, 4096)
    u = kern.step.dist.step_pdf(xq, kern.step.tau)
    vals = grid.value_at(np.outer(s, np.exp(xq)).ravel()).reshape(len(s), len(xq))
    ex_v = vals @ (u * wq)
    ex_ve = vals @ (u * np.exp(xq) * wq)
    v_next = vals @ (kernel_eval(kern, xq) * wq)
    return ex_v, ex_ve, v_next


def min_variance_delta(
    grid: PriceGrid, kern: PricingKernel, s: np.ndarray | float
) -> np.ndarray:
    """Variance-minimising hedge ratio at spots s, one step before `grid`.

    delta(s) = cov[V(s e^xi), e^xi] / (s * var[e^xi]).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    ex_v, ex_ve, _ = _step_expectations(grid, kern, s)
    return (ex_ve - kern.m * ex_v) / (s * kern.d)


def portfolio_value(
    grid: PriceGrid, kern: PricingKernel, s: np.ndarray | float
) -> np.ndarray:
    """Hedged portfolio value one step before `grid`: V_next(s) - delta(s) * s.

    V_next comes from the kernel integral at the requested spots directly, so
    this works off-grid and for a single spot without stepping the whole grid.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    ex_v, ex_ve, v_next = _step_expectations(grid, kern, s)
    delta = (ex_ve - kern.m * ex_v) / (s * kern.d)
    return v_next - delta * s
