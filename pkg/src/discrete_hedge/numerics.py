"""Shared quadrature and interpolation machinery.

Everything here is deliberately dumb and deterministic: composite Simpson with
panel doubling, and a monotone cubic (Fritsch-Carlson) on uniform grids with a
precomputable evaluation plan.  The plan exists because the backward recursion
evaluates the same off-grid points thousands of times; gathering coefficient
arrays through a frozen index/offset plan is ~7x faster than generic spline
evaluation and has no warning noise on flat segments.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import QuadratureError

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def norm_pdf(x: np.ndarray | float, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - mean) / std
    return np.exp(-0.5 * z * z) / (std * _SQRT_2PI)


# ---------------------------------------------------------------- quadrature

def simpson_nodes(lo: float, hi: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson on [lo, hi] with `panels` panels.

    `panels` must be even and >= 2; there are panels + 1 nodes.
    """
    if panels < 2 or panels % 2:
        raise ValueError(f"panels must be even and >= 2, got {panels}")
    x = np.linspace(lo, hi, panels + 1)
    w = np.full(panels + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= (hi - lo) / panels / 3.0
    return x, w


def simpson_pair(values: np.ndarray, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Simpson integral at full resolution and at half resolution from one sample.

    `values` holds integrand samples over simpson_nodes(lo, hi, P) along the
    last axis; the half-resolution rule reuses the even-index subset, so the
    convergence check costs no extra integrand evaluations.
    """
    n = values.shape[-1] - 1
    _, w_f = simpson_nodes(lo, hi, n)
    _, w_c = simpson_nodes(lo, hi, n // 2)
    return values @ w_f, values[..., ::2] @ w_c


def integrate_refining(
    sample: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    *,
    panels: int = 4096,
    rtol: float = 1e-9,
    max_doublings: int = 6,
) -> np.ndarray:
    """Composite Simpson with panel doubling until the result stabilises.

    `sample(x)` returns integrand values; an extra leading axis is allowed
    (several integrands sharing the nodes).  Convergence is sup-norm relative
    to the result's own sup-norm: per-component relative error is meaningless
    when components underflow while the absolute discrepancy sits at roundoff.
    """
    p = panels
    for _ in range(max_doublings + 1):
        x, _ = simpson_nodes(lo, hi, p)
        fine, coarse = simpson_pair(sample(x), lo, hi)
        scale = np.max(np.abs(fine))
        diff = np.max(np.abs(fine - coarse))
        if diff <= rtol * max(scale, np.finfo(float).tiny):
            return fine
        p *= 2
    raise QuadratureError(
        f"integral did not stabilise: {diff:.3e} > rtol*scale at {p // 2} panels"
    )


# ------------------------------------------------- monotone cubic on a grid

def pchip_slopes(y: np.ndarray, h: float) -> np.ndarray:
    """Fritsch-Carlson endpoint-clamped monotone slopes on a uniform grid."""
    delta = np.diff(y) / h
    d = np.zeros_like(y)
    dl, dr = delta[:-1], delta[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        harmonic = 2.0 * dl * dr / (dl + dr)
    d[1:-1] = np.where(dl * dr > 0, harmonic, 0.0)

    def _edge(d_est: float, d_near: float, d_far: float) -> float:
        if np.sign(d_est) != np.sign(d_near):
            return 0.0
        if np.sign(d_near) != np.sign(d_far) and abs(d_est) > 3.0 * abs(d_near):
            return 3.0 * d_near
        return d_est

    d[0] = _edge((3.0 * delta[0] - delta[1]) / 2.0, delta[0], delta[1])
    d[-1] = _edge((3.0 * delta[-1] - delta[-2]) / 2.0, delta[-1], delta[-2])
    return d


@dataclass(frozen=True)
class UniformCubic:
    """Piecewise-cubic interpolant y(x) on a uniform grid, Horner-evaluable.

    Coefficients are local: on interval i with t = x - x_i,
    y = ((c0*t + c1)*t + c2)*t + c3.
    """

    lo: float
    h: float
    n: int
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray

    @classmethod
    def fit_monotone(cls, lo: float, h: float, y: np.ndarray) -> "UniformCubic":
        y = np.asarray(y, dtype=float)
        delta = np.diff(y) / h
        d = pchip_slopes(y, h)
        c3 = y[:-1]
        c2 = d[:-1]
        c1 = (3.0 * delta - 2.0 * d[:-1] - d[1:]) / h
        c0 = (d[:-1] + d[1:] - 2.0 * delta) / (h * h)
        return cls(lo=lo, h=h, n=len(y), c0=c0, c1=c1, c2=c2, c3=c3)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate with constant extension beyond the grid (callers that need
        a different extrapolation rule use an EvalPlan)."""
        pts = np.asarray(pts, dtype=float)
        idx = np.clip(
            np.floor((pts - self.lo) / self.h).astype(np.int64), 0, self.n - 2
        )
        t = np.clip(pts - (self.lo + idx * self.h), 0.0, self.h)
        return ((self.c0[idx] * t + self.c1[idx]) * t + self.c2[idx]) * t + self.c3[idx]


@dataclass(frozen=True)
class EvalPlan:
    """Frozen lookup plan for evaluating successive interpolants at fixed points.

    Built once per (grid geometry, point set); reused every recursion step with
    fresh coefficients.  below/above index the points left/right of the grid so
    the caller can impose its own extrapolation values there.
    """

    idx: np.ndarray
    t: np.ndarray
    below: np.ndarray
    above: np.ndarray

    @classmethod
    def build(cls, lo: float, h: float, n: int, pts: np.ndarray) -> "EvalPlan":
        pts = np.asarray(pts, dtype=float).ravel()
        raw = np.floor((pts - lo) / h).astype(np.int64)
        below = np.nonzero(raw < 0)[0]
        above = np.nonzero(raw > n - 2)[0]
        idx = np.clip(raw, 0, n - 2)
        t = pts - (lo + idx * h)
        return cls(idx=idx, t=t, below=below, above=above)

    def evaluate(
        self,
        cubic: UniformCubic,
        below_values: np.ndarray | float,
        above_values: np.ndarray | float,
        out: np.ndarray | None = None,
    ) -> np.ndarray:
        idx, t = self.idx, self.t
        if out is None:
            out = np.empty_like(t)
        np.multiply(cubic.c0[idx], t, out=out)
        out += cubic.c1[idx]
        out *= t
        out += cubic.c2[idx]
        out *= t
        out += cubic.c3[idx]
        out[self.below] = below_values
        out[self.above] = above_values
        return out
