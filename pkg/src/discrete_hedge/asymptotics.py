"""Small-step behaviour: fitted expansion orders and the continuous limit.

As the step length shrinks with the horizon fixed, discrete-hedging prices
approach the continuous-hedging (Black-Scholes) value; the approach is first
order in the step length.  These helpers fit that order empirically from a
ladder of step sizes so tests can assert the limit without trusting any one
magic constant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .lognormal import LognormalParams, black_scholes, price_closed


@dataclass(frozen=True)
class ExpansionEstimate:
    """Least-squares fit error ~ coefficient * tau^order over a tau ladder."""

    order: float
    coefficient: float
    taus: np.ndarray
    errors: np.ndarray
    reference: float
    max_log_residual: float

    @property
    def rel_errors(self) -> np.ndarray:
        return self.errors / abs(self.reference)


def estimate_expansion(
    taus: np.ndarray, errors: np.ndarray, *, reference: float = 1.0
) -> ExpansionEstimate:
    """Fit log|error| against log tau.

    Zero errors are dropped (they carry no slope information); at least three
    points and a tau range spanning a factor >= 2 are required for the fit to
    identify an order at all.
    """
    taus = np.asarray(taus, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    if taus.shape != errors.shape:
        raise ValidationError("taus and errors must have matching shapes")
    if np.any(taus <= 0.0):
        raise ValidationError("taus must be positive")
    keep = errors > 0.0
    if keep.sum() < 3:
        raise ValidationError("need at least three nonzero errors to fit an order")
    lt, le = np.log(taus[keep]), np.log(errors[keep])
    if np.ptp(lt) < np.log(2.0):
        raise ValidationError("tau ladder too narrow to identify an order")
    order, intercept = np.polyfit(lt, le, 1)
    resid = le - (order * lt + intercept)
    return ExpansionEstimate(
        order=float(order),
        coefficient=float(np.exp(intercept)),
        taus=taus,
        errors=errors,
        reference=float(reference),
        max_log_residual=float(np.max(np.abs(resid))),
    )


def bs_limit_check(
    mean_rate: float,
    vol: float,
    total_time: float,
    rate: float,
    strike: float,
    spot: float,
    n_list: tuple[int, ...] = (4, 8, 16, 32, 64, 128, 256),
) -> ExpansionEstimate:
    """Convergence of the n-step closed price to the continuous limit.

    Holds the horizon fixed, halves the step along `n_list`, and fits the
    order of |price_n - reference| in tau = total_time / n.  The reference is
    the continuous-hedging value at the same horizon.
    """
    if len(n_list) < 3:
        raise ValidationError("need at least three step counts")
    ref = float(black_scholes(spot, strike, total_time, rate, vol)[0])
    taus, errs = [], []
    for n in n_list:
        if n < 1:
            raise ValidationError(f"step counts must be >= 1, got {n}")
        tau = total_time / n
        params = LognormalParams(mean_rate=mean_rate, vol=vol, tau=tau, rate=rate)
        price = float(price_closed(params, n, strike, spot)[0])
        taus.append(tau)
        errs.append(price - ref)
    return estimate_expansion(np.array(taus), np.array(errs), reference=ref)
