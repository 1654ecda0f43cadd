"""Transform-domain solution of the backward recursion.

The multiplicative convolution V_next(s) = int V(s e^x) f(x) dx becomes a
product after a Mellin transform in the spot variable: each step multiplies
the transform by its kernel factor evaluated at the reflected argument, so the
n-step price transform is (payoff transform) * prod_m U_m(-p) and the price
itself comes back through one contour integral.  The contour sits on a fixed
vertical line left of -1 (the payoff transform's strip); conjugate symmetry
folds the integral onto t >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ContourError, StripError, ValidationError
from .kernel import PricingKernel
from .market_model import MarketPath, MarketStep, exp_moment
from .numerics import UniformCubic, integrate_refining, simpson_nodes

TransformFn = Callable[[np.ndarray], np.ndarray]

_PHASE_BUDGET = 4_000_000  # phase-matrix entries per block (~64 MB complex)


@dataclass(frozen=True)
class MellinLine:
    """Inversion contour Re p = real_part, truncated at |Im p| = p_max.

    n_nodes is the initial trapezoid resolution on [0, p_max]; the inverter
    doubles it until the result stabilises.
    """

    real_part: float
    p_max: float
    n_nodes: int = 256

    def __post_init__(self) -> None:
        if self.p_max <= 0.0 or self.n_nodes < 8:
            raise ValidationError("need p_max > 0 and n_nodes >= 8")


def mellin_forward(
    fn: Callable[[np.ndarray], np.ndarray],
    p: np.ndarray | complex,
    *,
    window: tuple[float, float],
    rtol: float = 1e-10,
) -> np.ndarray | complex:
    """Numeric Mellin transform int_0^inf x^{p-1} fn(x) dx.

    Computed in log space over `window` = (log x_lo, log x_hi), which must
    contain the integrand's effective support; if the sampled integrand has
    not decayed at the window's ends the line is (or behaves as) outside the
    strip of convergence and StripError is raised.
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=complex))
    lo, hi = window

    def sample(w: np.ndarray) -> np.ndarray:
        return fn(np.exp(w))[None, :] * np.exp(np.outer(p_arr, w))

    probe = sample(np.linspace(lo, hi, 512))
    mags = np.abs(probe)
    peak = mags.max(axis=1)
    edge = np.maximum(mags[:, 0], mags[:, -1])
    bad = edge > 1e-9 * np.maximum(peak, np.finfo(float).tiny)
    if np.any(bad):
        raise StripError(
            "integrand has not decayed at the window edge for "
            f"Re p = {p_arr[bad][0].real:g}; the transform diverges there "
            "or the window is too narrow"
        )
    vals = integrate_refining(sample, lo, hi, rtol=rtol)
    return vals[0] if np.isscalar(p) or np.asarray(p).ndim == 0 else vals


def payoff_transform_call(strike: float) -> TransformFn:
    """Transform of the call payoff: strike^{p+1} / (p (p+1)), Re p < -1."""
    if strike <= 0.0:
        raise ValidationError(f"strike must be positive, got {strike}")
    log_k = np.log(strike)

    def transform(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=complex)
        if np.any(p.real >= -1.0):
            raise StripError("call payoff transform requires Re p < -1")
        return np.exp((p + 1.0) * log_k) / (p * (p + 1.0))

    return transform


def kernel_transform(kern: PricingKernel) -> TransformFn:
    """One-step kernel factor U(p) = c (M(p+1) - m M(p)) + e^{-r tau} M(p).

    Needs exponential moments at p and p+1, so the usable band is
    Re p in (-bound, bound - 1) for a distribution with moments up to `bound`.
    """
    dist, tau = kern.step.dist, kern.step.tau
    c, m, disc = kern.tilt_coef, kern.m, kern.discount
    bound = dist.moment_bound

    def transform(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=complex)
        if np.any(p.real <= -bound) or np.any(p.real + 1.0 >= bound):
            raise StripError(
                f"kernel transform needs Re p in ({-bound:g}, {bound - 1.0:g})"
            )
        mp = exp_moment(dist, p, tau)
        mp1 = exp_moment(dist, p + 1.0, tau)
        return c * (mp1 - m * mp) + disc * mp

    return transform


def product_transform(path: MarketPath) -> TransformFn:
    """Product of the path's kernel factors, p -> prod_m U_m(p).

    Equal steps are grouped into integer powers, so uniform paths cost one
    factor evaluation regardless of length.
    """
    groups: list[tuple[MarketStep, int]] = []
    for step in path:
        if groups and groups[-1][0] == step:
            groups[-1] = (step, groups[-1][1] + 1)
        else:
            groups.append((step, 1))
    factors = [
        (kernel_transform(PricingKernel.from_step(step)), count)
        for step, count in groups
    ]

    def transform(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=complex)
        out = np.ones_like(p)
        for fn, count in factors:
            out = out * fn(p) ** count
        return out

    return transform


def _tail_estimate(transform: TransformFn, line: MellinLine) -> float:
    """Integral of |F| beyond p_max under a power-law decay model.

    Median magnitudes near p_max/2 and p_max give the local decay exponent;
    oscillation of the transform is why medians, not point samples.
    """
    t_mid = np.linspace(0.45 * line.p_max, 0.55 * line.p_max, 64)
    t_end = np.linspace(0.95 * line.p_max, line.p_max, 64)
    med_mid = float(np.median(np.abs(transform(line.real_part + 1j * t_mid))))
    med_end = float(np.median(np.abs(transform(line.real_part + 1j * t_end))))
    if med_end == 0.0:
        return 0.0
    if med_mid <= med_end:
        return np.inf
    beta = np.log(med_mid / med_end) / np.log(2.0)
    if beta <= 1.05:
        return np.inf
    return med_end * line.p_max / (beta - 1.0)


def mellin_inverse(
    transform: TransformFn,
    x: np.ndarray | float,
    line: MellinLine,
    *,
    rtol: float = 1e-8,
    max_doublings: int = 12,
    tail_rtol: float = 1e-6,
    tail_atol: float = 1e-9,
) -> np.ndarray:
    """Invert along the contour: x^{-a}/pi * Re int_0^{p_max} F(a+it) e^{-it log x} dt.

    Trapezoid on [0, p_max] with node doubling (each refinement reuses all
    previous evaluations); convergence is sup-norm relative to the batch's own
    scale.  After convergence the truncation tail is estimated from the decay
    of |F| near p_max and ContourError asks for a larger p_max if the bound is
    not negligible for the requested points.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0.0):
        raise ValidationError("inversion points must be positive")
    a0 = line.real_part
    lx = np.log(x)

    per_block = max(256, _PHASE_BUDGET // len(x))

    def partial(ts: np.ndarray) -> np.ndarray:
        acc = np.zeros(len(x))
        for chunk in np.array_split(ts, max(1, -(-len(ts) // per_block))):
            fv = transform(a0 + 1j * chunk)
            acc += (np.exp(np.outer(lx, -1j * chunk)) @ fv).real
        return acc

    n = line.n_nodes
    h = line.p_max / n
    ends = 0.5 * (
        (transform(np.array([a0 + 0j]))[0]).real
        + (np.exp(-1j * lx * line.p_max) * transform(np.array([a0 + 1j * line.p_max]))[0]).real
    )
    total = partial(np.linspace(0.0, line.p_max, n + 1)) - ends
    result = h * total
    converged = False
    for _ in range(max_doublings):
        mids = np.linspace(0.5 * h, line.p_max - 0.5 * h, n)
        total = total + partial(mids)
        h *= 0.5
        n *= 2
        refined = h * total
        scale = max(np.max(np.abs(refined)), np.finfo(float).tiny)
        if np.max(np.abs(refined - result)) <= rtol * scale:
            result = refined
            converged = True
            break
        result = refined
    if not converged:
        raise ContourError(
            f"contour integral did not stabilise by {n} nodes; "
            "raise n_nodes/max_doublings or lower rtol"
        )
    tail = _tail_estimate(transform, line)
    amp = np.max(x**(-a0))
    scale = max(np.max(np.abs(result)), np.finfo(float).tiny)
    if amp * tail / np.pi > max(tail_rtol * scale, tail_atol):
        raise ContourError(
            f"truncation tail estimate {amp * tail / np.pi:.2e} exceeds tolerance; "
            "increase p_max"
        )
    return x**(-a0) / np.pi * result


def default_line(path: MarketPath, *, n_nodes: int = 256) -> MellinLine:
    """Contour placement rule: mid-strip real part, width-scaled truncation.

    The transform of the n-step propagator decays in |Im p| on the scale of
    the total log-return width, so p_max = 8 / sqrt(total variance proxy).
    """
    bounds = [s.dist.moment_bound for s in path]
    b = min(bounds)
    a0 = -2.0 if not np.isfinite(b) else -b / 2.0
    if a0 >= -1.0:
        a0 = -1.0 - 0.5 * (b - 1.0)  # squeeze into (-b, -1) for narrow bands
    total_var = 0.0
    for s in path:
        lo, hi = s.dist.step_window(s.tau)
        total_var += ((hi - lo) / 20.0) ** 2
    return MellinLine(real_part=a0, p_max=8.0 / np.sqrt(total_var), n_nodes=n_nodes)


def price_mellin(
    path: MarketPath,
    strike: float,
    s: np.ndarray | float,
    *,
    line: MellinLine | None = None,
    rtol: float = 1e-8,
) -> np.ndarray:
    """Price by inverting (payoff transform) * prod U_m(-p) at the spots s."""
    if line is None:
        line = default_line(path)
    payoff_t = payoff_transform_call(strike)
    prod_t = product_transform(path)

    def transform(p: np.ndarray) -> np.ndarray:
        return payoff_t(p) * prod_t(-p)

    return mellin_inverse(transform, s, line, rtol=rtol)


def green_price(
    path: MarketPath,
    strike: float,
    s: np.ndarray | float,
    *,
    line: MellinLine | None = None,
    rtol: float = 1e-8,
    g_nodes: int = 4097,
    conv_panels: int = 4096,
) -> np.ndarray:
    """Price via the propagator: invert prod U_m(-p) once, then convolve.

    value(s) = int green(s/y) payoff(y) dy/y; in log coordinates the payoff
    clips the domain at w = log(s/strike) (the kink lands on an integration
    endpoint, where Simpson is clean).
    """
    if line is None:
        line = default_line(path)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0.0):
        raise ValidationError("spot prices must be positive")
    prod_t = product_transform(path)

    # effective support of the propagator in w = log x
    mid = 0.0
    spread_sq = 0.0
    tilt = 0.0
    for st in path:
        lo, hi = st.dist.step_window(st.tau)
        mid += 0.5 * (lo + hi)
        spread_sq += ((hi - lo) / 2.0) ** 2
        tilt += ((hi - lo) / 20.0) ** 2
    half = 1.3 * np.sqrt(spread_sq) + tilt
    w_lo, w_hi = -mid - tilt - half, -mid + half

    w_grid = np.linspace(w_lo, w_hi, g_nodes)
    g_vals = mellin_inverse(
        lambda p: prod_t(-p), np.exp(w_grid), line, rtol=rtol
    )
    g_cubic = UniformCubic.fit_monotone(w_lo, w_grid[1] - w_grid[0], g_vals)

    out = np.empty(len(s))
    for i, sv in enumerate(s):
        kink = np.log(sv / strike)
        hi_i = min(w_hi, kink)
        if hi_i <= w_lo:
            out[i] = 0.0
            continue
        wq, wts = simpson_nodes(w_lo, hi_i, conv_panels)
        out[i] = np.dot(g_cubic(wq) * (sv * np.exp(-wq) - strike), wts)
    return out
