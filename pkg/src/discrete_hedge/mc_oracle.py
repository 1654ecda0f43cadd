"""Monte Carlo oracle for one hedged step.

Provides an independent check of the kernel machinery: simulate the step
return, form the hedged portfolio V(s e^xi) - delta * s e^xi, and compare its
sample moments and fitted optimal hedge against the quadrature answers.

Randomness is counter-based: each path's uniform comes from a splitmix64
finalizer keyed by (seed, global path index), and paths are processed in
fixed-size chunks whose partial moments are merged in index order.  Worker
count therefore cannot change any output bit — parallelism only reorders the
wall clock, never the arithmetic.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import ndtri

from .errors import BracketingError, ValidationError
from .market_model import MarketStep

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class SimConfig:
    """Path count, stream seed, and executor width.

    chunk is the fixed accumulation granularity; it is part of the result's
    definition (changing it regroups floating-point sums), so it is a config
    field rather than a tuning knob derived from workers.
    """

    n_paths: int = 1_000_000
    seed: int = 0
    workers: int = 1
    chunk: int = 65536

    def __post_init__(self) -> None:
        if self.n_paths < 2:
            raise ValidationError("need at least two paths")
        if self.workers < 1 or self.chunk < 1:
            raise ValidationError("workers and chunk must be >= 1")


@dataclass(frozen=True)
class HedgeReport:
    """Sample moments of the hedged one-step portfolio."""

    spot: float
    delta: float
    n_paths: int
    portfolio_mean: float
    portfolio_var: float
    mean_stderr: float
    var_stderr: float


@dataclass(frozen=True)
class DeltaFit:
    """Fitted variance-minimising hedge with its sampling error.

    delta is the vertex of the quadratic variance scan; delta_direct the
    covariance-ratio estimator from the same draws (they agree to roundoff —
    the scan exists to show the variance really is a parabola with a bracketed
    minimum).
    """

    spot: float
    delta: float
    delta_direct: float
    stderr: float
    scan_deltas: np.ndarray
    scan_vars: np.ndarray
    n_paths: int


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform_stream(seed: int, start: int, count: int) -> np.ndarray:
    """Open-interval (0,1) uniforms for path indices [start, start+count)."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(np.uint64(seed) * _GOLDEN + idx + _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def _step_returns(step: MarketStep, seed: int, start: int, count: int) -> np.ndarray:
    if not step.dist.is_parametric:
        raise ValidationError(
            "the Monte Carlo oracle draws by inverse CDF and supports only the "
            "parametric (lognormal) step model"
        )
    u = uniform_stream(seed, start, count)
    return step.dist.mean_rate * step.tau + step.dist.vol * np.sqrt(step.tau) * ndtri(u)


def _chunks(cfg: SimConfig) -> Iterable[tuple[int, int]]:
    start = 0
    while start < cfg.n_paths:
        yield start, min(cfg.chunk, cfg.n_paths - start)
        start += cfg.chunk


def _map_ordered(cfg: SimConfig, fn: Callable[[tuple[int, int]], tuple]) -> list:
    blocks = list(_chunks(cfg))
    if cfg.workers == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, blocks))


def _merge_central(a: tuple, b: tuple) -> tuple:
    """Combine (n, mean, M2, M3, M4) central-sum accumulators of two blocks."""
    na, ma, s2a, s3a, s4a = a
    nb, mb, s2b, s3b, s4b = b
    n = na + nb
    d = mb - ma
    mean = ma + d * nb / n
    s2 = s2a + s2b + d * d * na * nb / n
    s3 = (
        s3a + s3b
        + d**3 * na * nb * (na - nb) / n**2
        + 3.0 * d * (na * s2b - nb * s2a) / n
    )
    s4 = (
        s4a + s4b
        + d**4 * na * nb * (na * na - na * nb + nb * nb) / n**3
        + 6.0 * d * d * (na * na * s2b + nb * nb * s2a) / (n * n)
        + 4.0 * d * (na * s3b - nb * s3a) / n
    )
    return n, mean, s2, s3, s4


def _central_sums(x: np.ndarray) -> tuple:
    n = float(len(x))
    mean = float(np.mean(x))
    d = x - mean
    d2 = d * d
    return n, mean, float(np.sum(d2)), float(np.sum(d2 * d)), float(np.sum(d2 * d2))


def simulate_hedged_step(
    value_fn: Callable[[np.ndarray], np.ndarray],
    step: MarketStep,
    spot: float,
    delta: float,
    cfg: SimConfig,
) -> HedgeReport:
    """Sample moments of V(s e^xi) - delta * s e^xi under the step's measure.

    value_fn is the next-period value function (e.g. a PriceGrid's value_at);
    the report's mean times the step discount is the pricing-policy value, so
    reports plug directly into identity checks against portfolio_value.
    """
    if spot <= 0.0:
        raise ValidationError(f"spot must be positive, got {spot}")

    def block(se: tuple[int, int]) -> tuple:
        start, count = se
        w = spot * np.exp(_step_returns(step, cfg.seed, start, count))
        return _central_sums(value_fn(w) - delta * w)

    parts = _map_ordered(cfg, block)
    acc = parts[0]
    for part in parts[1:]:
        acc = _merge_central(acc, part)
    n, mean, s2, _, s4 = acc
    var = s2 / (n - 1.0)
    mu4 = s4 / n
    var_of_var = max(mu4 - var * var * (n - 3.0) / (n - 1.0), 0.0) / n
    return HedgeReport(
        spot=float(spot),
        delta=float(delta),
        n_paths=int(n),
        portfolio_mean=mean,
        portfolio_var=var,
        mean_stderr=float(np.sqrt(var / n)),
        var_stderr=float(np.sqrt(var_of_var)),
    )


def fit_optimal_delta(
    value_fn: Callable[[np.ndarray], np.ndarray],
    step: MarketStep,
    spot: float,
    cfg: SimConfig,
    *,
    bracket: tuple[float, float] | None = None,
    scan_points: int = 9,
) -> DeltaFit:
    """Fit the variance-minimising hedge from simulated draws.

    Two deterministic passes over the same counter-based stream: the first
    pins the sample means, the second accumulates the centred cross-moments
    that give the covariance ratio, the variance parabola over the scan
    bracket, and the influence-function standard error
    se^2 = E[((e - delta f) f)^2] / (n var(w)^2).  The parabola's vertex must
    land inside the bracket, else BracketingError.
    """
    if spot <= 0.0:
        raise ValidationError(f"spot must be positive, got {spot}")
    if scan_points < 3:
        raise ValidationError("need at least three scan points")

    def sums(se: tuple[int, int]) -> tuple:
        start, count = se
        w = spot * np.exp(_step_returns(step, cfg.seed, start, count))
        y = value_fn(w)
        return (float(len(w)), float(np.sum(y)), float(np.sum(w)))

    parts = _map_ordered(cfg, sums)
    n = sum(p[0] for p in parts)
    y_bar = sum(p[1] for p in parts) / n
    w_bar = sum(p[2] for p in parts) / n

    def centred(se: tuple[int, int]) -> tuple:
        start, count = se
        w = spot * np.exp(_step_returns(step, cfg.seed, start, count))
        e = value_fn(w) - y_bar
        f = w - w_bar
        f2 = f * f
        return (
            float(np.sum(e * f)),
            float(np.sum(f2)),
            float(np.sum(e * e)),
            float(np.sum(e * e * f2)),
            float(np.sum(e * f * f2)),
            float(np.sum(f2 * f2)),
        )

    sef = sf2 = se2 = se2f2 = sef3 = sf4 = 0.0
    for p in _map_ordered(cfg, centred):
        sef += p[0]
        sf2 += p[1]
        se2 += p[2]
        se2f2 += p[3]
        sef3 += p[4]
        sf4 += p[5]

    if sf2 <= 0.0:
        raise ValidationError("simulated stock has no variance")
    delta_direct = sef / sf2
    var_w = sf2 / n
    psi2 = (se2f2 - 2.0 * delta_direct * sef3 + delta_direct**2 * sf4) / n
    stderr = float(np.sqrt(psi2 / (var_w * var_w) / n))

    if bracket is None:
        half = max(0.1, 0.5 * abs(delta_direct))
        bracket = (delta_direct - half, delta_direct + half)
    lo, hi = bracket
    if not lo < hi:
        raise BracketingError(f"empty scan bracket {bracket}")
    scan_deltas = np.linspace(lo, hi, scan_points)
    scan_vars = (se2 - 2.0 * scan_deltas * sef + scan_deltas**2 * sf2) / (n - 1.0)
    curv, slope, _ = np.polyfit(scan_deltas, scan_vars, 2)
    if curv <= 0.0:
        raise BracketingError("variance scan is not convex; no interior minimum")
    vertex = -slope / (2.0 * curv)
    if not lo <= vertex <= hi:
        raise BracketingError(
            f"variance minimum {vertex:.6g} falls outside the scan bracket {bracket}"
        )
    return DeltaFit(
        spot=float(spot),
        delta=float(vertex),
        delta_direct=float(delta_direct),
        stderr=stderr,
        scan_deltas=scan_deltas,
        scan_vars=scan_vars,
        n_paths=int(n),
    )
