"""Closed forms for the lognormal step model.

With xi ~ Normal(mu*tau, sigma^2*tau) per step, the one-step pricing kernel is
a two-term mixture of exponentially tilted copies of the step density, so the
n-step propagator is a binomial mixture of Gaussians and the call price has a
Black-Scholes-like closed form.  These are the reference answers the recursion
and the transform route are cross-checked against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln, ndtr

from .errors import DegenerateDistributionError, ValidationError
from .market_model import MarketPath, MarketStep, ReturnDistribution


@dataclass(frozen=True)
class LognormalParams:
    """Lognormal stock dynamics over uniform hedging steps.

    mean_rate/vol are per unit time; tau is one step; rate is the per-step
    funding rate used in the hedging account.
    """

    mean_rate: float
    vol: float
    tau: float
    rate: float

    def __post_init__(self) -> None:
        if self.vol <= 0.0:
            raise DegenerateDistributionError(f"vol must be positive, got {self.vol}")
        if self.tau <= 0.0:
            raise ValidationError(f"tau must be positive, got {self.tau}")

    @property
    def step_var(self) -> float:
        return self.vol * self.vol * self.tau

    @property
    def discount(self) -> float:
        return float(np.exp(-self.rate * self.tau))

    def to_step(self) -> MarketStep:
        return MarketStep(
            ReturnDistribution.lognormal(self.mean_rate, self.vol), self.tau, self.rate
        )

    def to_path(self, n_steps: int) -> MarketPath:
        return MarketPath.uniform(
            ReturnDistribution.lognormal(self.mean_rate, self.vol),
            self.tau,
            self.rate,
            n_steps,
        )


@dataclass(frozen=True)
class BinomialCoefficients:
    """Mixture weights of the one-step kernel.

    The signed kernel is exactly m1*u(x) + m2*u~(x), where u is the step
    density and u~ its unit-return exponential tilt (for the Gaussian step:
    same variance, mean shifted by sigma^2*tau).  After n steps the propagator
    weights are binomial in (m1, m2).  m1 + m2 equals the one-step discount;
    both are nonnegative exactly when the rate sits inside the feasibility
    interval.
    """

    m1: float
    m2: float

    @property
    def discount_check(self) -> float:
        return self.m1 + self.m2


def closed_moments(params: LognormalParams) -> tuple[float, float]:
    """Gross-return mean m and variance d in closed form."""
    st2 = params.step_var
    m = float(np.exp(params.mean_rate * params.tau + 0.5 * st2))
    d = float(np.exp(2.0 * params.mean_rate * params.tau + st2) * np.expm1(st2))
    return m, d


def coefficients(params: LognormalParams) -> BinomialCoefficients:
    """Mixture weights via the literal quotient forms.

    A is the discounted first moment of the tilted step; D the first-moment
    spread.  Algebraically m1 = e^{-r tau} + (A-1)/D and m2 = (1-A)/D match
    m2 = m(1 - e^{-r tau} m)/d, but the quotient forms are what the closed
    expressions downstream are written in.
    """
    st2 = params.step_var
    mt = params.mean_rate * params.tau
    a = np.exp((params.mean_rate - params.rate) * params.tau + 0.5 * st2)
    d_spread = np.exp(mt + 1.5 * st2) - np.exp(mt + 0.5 * st2)
    m1 = params.discount + (a - 1.0) / d_spread
    m2 = (1.0 - a) / d_spread
    return BinomialCoefficients(m1=float(m1), m2=float(m2))


def U_closed(params: LognormalParams) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form one-step kernel transform p -> (m1 + m2*e^{p sigma^2 tau}) M(p).

    M is the step mgf and the e^{p sigma^2 tau} factor is the unit-return tilt
    of the second mixture component.  Entire in p for the lognormal step, so no
    strip bookkeeping is needed here; the transform evaluates to the one-step
    discount at p = 0 and to 1 at p = 1 (the kernel reprices the stock).
    """
    w = coefficients(params)
    mt = params.mean_rate * params.tau
    st2 = params.step_var

    def transform(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p)
        mp = np.exp(p * mt + 0.5 * p * p * st2)
        return (w.m1 + w.m2 * np.exp(p * st2)) * mp

    return transform


def _binomial_weights(n_steps: int, w: BinomialCoefficients) -> np.ndarray:
    """C(n,k) m1^{n-k} m2^k in log space; m1/m2 may be negative off-feasibility."""
    k = np.arange(n_steps + 1)
    log_c = gammaln(n_steps + 1) - gammaln(k + 1) - gammaln(n_steps - k + 1)
    with np.errstate(divide="ignore"):
        mag = log_c + (n_steps - k) * np.log(np.abs(w.m1)) + k * np.log(np.abs(w.m2))
    sign = np.sign(w.m1) ** (n_steps - k) * np.sign(w.m2) ** k
    return sign * np.exp(mag)


def green_closed(params: LognormalParams, n_steps: int, x: np.ndarray) -> np.ndarray:
    """n-step propagator: binomial mixture of Gaussians in log x.

    Normalised so that the integral of green * x^{-1} dx equals the n-step
    discount, matching the defining convolution
    value_n(s) = int green(s/y) payoff(y) dy/y.
    """
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    wts = _binomial_weights(n_steps, coefficients(params))
    v = params.vol * np.sqrt(n_steps * params.tau)
    centers = n_steps * params.mean_rate * params.tau + np.arange(n_steps + 1) * params.step_var
    lx = np.log(np.asarray(x, dtype=float))
    z = (lx[..., None] + centers) / v
    phi = np.exp(-0.5 * z * z) / (v * np.sqrt(2.0 * np.pi))
    return phi @ wts


def price_closed(
    params: LognormalParams, n_steps: int, strike: float, s: np.ndarray | float
) -> np.ndarray:
    """Call value after n hedging steps, in closed form.

    Each mixture component contributes a Black-Scholes-style pair of normal
    CDF terms; weights may alternate in sign outside the feasibility band.
    """
    if strike <= 0.0:
        raise ValidationError(f"strike must be positive, got {strike}")
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0.0):
        raise ValidationError("spot prices must be positive")
    wts = _binomial_weights(n_steps, coefficients(params))
    v = params.vol * np.sqrt(n_steps * params.tau)
    centers = n_steps * params.mean_rate * params.tau + np.arange(n_steps + 1) * params.step_var
    d2 = (np.log(s[:, None] / strike) + centers) / v
    d1 = d2 + v
    term = s[:, None] * np.exp(centers + 0.5 * v * v) * ndtr(d1) - strike * ndtr(d2)
    return term @ wts


def black_scholes(
    s: np.ndarray | float, strike: float, total_time: float, rate: float, vol: float
) -> np.ndarray:
    """Continuous-hedging reference price (the tau -> 0 limit of the recursion)."""
    if strike <= 0.0:
        raise ValidationError(f"strike must be positive, got {strike}")
    if total_time < 0.0:
        raise ValidationError(f"total_time must be >= 0, got {total_time}")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0.0):
        raise ValidationError("spot prices must be positive")
    disc = np.exp(-rate * total_time)
    width = vol * np.sqrt(total_time)
    if width <= 0.0:
        return np.maximum(s - strike * disc, 0.0)
    d1 = (np.log(s / strike) + (rate + 0.5 * vol * vol) * total_time) / width
    return s * ndtr(d1) - strike * disc * ndtr(d1 - width)
