"""Market primitives: per-step return law, hedging steps, and step paths.

A hedging step of length tau carries a log-return xi with density u; the stock
moves s -> s * exp(xi).  Everything downstream consumes only the exponential
moments M(p) = E[exp(p * xi)] and the density itself, so a distribution is a
pair (pdf, mgf) plus a band of p where the mgf is finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DegenerateDistributionError, MomentDomainError, ValidationError
from .numerics import integrate_refining, norm_pdf

PdfFn = Callable[[np.ndarray, float], np.ndarray]
MgfFn = Callable[[complex, float], complex]


@dataclass(frozen=True)
class ReturnDistribution:
    """Law of the log-return over one hedging step.

    Parametric case (`lognormal`): xi ~ Normal(mean_rate*tau, vol^2*tau), all
    exponential moments in closed form.  Custom case (`from_density`): caller
    supplies pdf(x, tau) and either an analytic mgf or a finite moment_bound
    plus an integration window; silent tail extrapolation of unknown densities
    is how pricing kernels go quietly wrong, so the window is mandatory.
    """

    mean_rate: float | None = None
    vol: float | None = None
    pdf: PdfFn | None = None
    mgf: MgfFn | None = None
    moment_bound: float = np.inf
    quad_window: tuple[float, float] | None = None
    label: str = "lognormal"

    @classmethod
    def lognormal(cls, mean_rate: float, vol: float) -> "ReturnDistribution":
        if not np.isfinite(mean_rate) or not np.isfinite(vol):
            raise ValidationError("mean_rate and vol must be finite")
        if vol <= 0.0:
            raise DegenerateDistributionError(f"vol must be positive, got {vol}")
        return cls(mean_rate=mean_rate, vol=vol, label="lognormal")

    @classmethod
    def from_density(
        cls,
        pdf: PdfFn,
        *,
        moment_bound: float,
        quad_window: tuple[float, float],
        mgf: MgfFn | None = None,
        label: str = "custom",
    ) -> "ReturnDistribution":
        if moment_bound <= 2.0:
            raise MomentDomainError(
                "need finite exponential moments at least through order 2 "
                f"(moment_bound={moment_bound})"
            )
        lo, hi = quad_window
        if not lo < hi:
            raise ValidationError(f"empty quadrature window {quad_window}")
        return cls(
            pdf=pdf,
            mgf=mgf,
            moment_bound=float(moment_bound),
            quad_window=(float(lo), float(hi)),
            label=label,
        )

    @property
    def is_parametric(self) -> bool:
        return self.pdf is None

    def step_pdf(self, x: np.ndarray, tau: float) -> np.ndarray:
        if self.is_parametric:
            return norm_pdf(x, self.mean_rate * tau, self.vol * np.sqrt(tau))
        return self.pdf(np.asarray(x, dtype=float), tau)

    def step_window(self, tau: float, width: float = 10.0) -> tuple[float, float]:
        """Integration window covering the step density's effective support."""
        if self.is_parametric:
            c = self.mean_rate * tau
            w = width * self.vol * np.sqrt(tau)
            return c - w, c + w
        return self.quad_window


def exp_moment(dist: ReturnDistribution, p: complex | np.ndarray, tau: float) -> complex | np.ndarray:
    """M(p) = E[exp(p*xi)] for one step of length tau; accepts complex p."""
    if tau <= 0.0:
        raise ValidationError(f"step length must be positive, got {tau}")
    p = np.asarray(p)
    if np.any(np.abs(p.real) >= dist.moment_bound):
        raise MomentDomainError(
            f"Re p outside (-{dist.moment_bound}, {dist.moment_bound})"
        )
    if dist.is_parametric:
        out = np.exp(p * dist.mean_rate * tau + 0.5 * p * p * dist.vol**2 * tau)
        return out[()] if out.ndim == 0 else out
    if dist.mgf is not None:
        return dist.mgf(p, tau)
    lo, hi = dist.quad_window
    pv = np.atleast_1d(p)
    vals = integrate_refining(
        lambda x: dist.pdf(x, tau)[None, :] * np.exp(np.outer(pv, x)), lo, hi
    )
    return vals[0] if p.ndim == 0 else vals.reshape(p.shape)


def step_moments(dist: ReturnDistribution, tau: float) -> tuple[float, float]:
    """Mean m = M(1) and variance d = M(2) - M(1)^2 of the gross return exp(xi)."""
    m = float(np.real(exp_moment(dist, 1.0, tau)))
    d = float(np.real(exp_moment(dist, 2.0, tau))) - m * m
    if not np.isfinite(m) or not np.isfinite(d):
        raise MomentDomainError("gross-return moments are not finite")
    if d <= 0.0:
        raise DegenerateDistributionError(
            f"gross return has no variance (d={d:.3e}); hedge ratio undefined"
        )
    return m, d


def feasibility_interval(dist: ReturnDistribution, tau: float) -> tuple[float, float]:
    """Band of per-step rates r for which the pricing kernel stays nonnegative.

    r below the lower end makes the kernel dip negative at large returns; above
    the upper end, at low returns.  Endpoints: log M(1)/tau and
    log(M(2)/M(1))/tau.
    """
    m, d = step_moments(dist, tau)
    m2 = d + m * m
    return float(np.log(m) / tau), float(np.log(m2 / m) / tau)


@dataclass(frozen=True)
class MarketStep:
    """One hedging interval: return law, duration, and funding rate."""

    dist: ReturnDistribution
    tau: float
    rate: float

    def __post_init__(self) -> None:
        if self.tau <= 0.0 or not np.isfinite(self.tau):
            raise ValidationError(f"step length must be positive, got {self.tau}")
        if not np.isfinite(self.rate):
            raise ValidationError(f"rate must be finite, got {self.rate}")

    @property
    def discount(self) -> float:
        return float(np.exp(-self.rate * self.tau))


@dataclass(frozen=True)
class MarketPath:
    """Ordered hedging intervals from valuation date to maturity."""

    steps: tuple[MarketStep, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValidationError("a path needs at least one step")

    @classmethod
    def uniform(
        cls, dist: ReturnDistribution, tau: float, rate: float, n_steps: int
    ) -> "MarketPath":
        if n_steps < 1:
            raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
        return cls(steps=tuple(MarketStep(dist, tau, rate) for _ in range(n_steps)))

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @property
    def total_time(self) -> float:
        return float(sum(s.tau for s in self.steps))

    @property
    def discount(self) -> float:
        return float(np.exp(-sum(s.rate * s.tau for s in self.steps)))
