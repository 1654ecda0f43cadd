"""Command-line front end.

Eight subcommands over one INI config: price/delta/feasibility answer single
questions, crosscheck/bs-converge/asymptote run the validation experiments,
xi-scan hunts negative value regions, simulate runs the Monte Carlo oracle.
All output is CSV with floats at full precision (%.17g), so identical configs
and seeds produce byte-identical files regardless of worker count.

Exit codes: 0 success, 1 invalid inputs/config, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .asymptotics import bs_limit_check
from .errors import NumericError, ValidationError
from .kernel import PriceGrid, PricingKernel, min_variance_delta, portfolio_value, price_recursive
from .lognormal import LognormalParams, price_closed
from .market_model import MarketPath, feasibility_interval, step_moments
from .mc_oracle import SimConfig, fit_optimal_delta, simulate_hedged_step
from .mellin import MellinLine, green_price, price_mellin
from .negativity import scan_negative_set

_METHODS = ("recursive", "closed", "mellin", "green")


@dataclass(frozen=True)
class RunConfig:
    """Flattened run parameters; INI sections map onto field groups."""

    # [model]
    mean_rate: float = 0.05
    vol: float = 0.2
    tau: float = 0.01
    rate: float = 0.09
    strike: float = 100.0
    n_steps: int = 100
    # [method]
    method: str = "recursive"
    n_nodes: int = 2048
    span: float | None = None
    panels: int = 4096
    rtol: float = 1e-9
    # [contour]
    contour_real: float | None = None
    contour_pmax: float | None = None
    contour_nodes: int = 256
    # [mc]
    n_paths: int = 1_000_000
    seed: int = 0
    workers: int = 1
    chunk: int = 65536
    hedge_step: int = 1
    # [output]
    out: str | None = None
    spots: tuple[float, ...] = (60.0, 80.0, 100.0, 120.0, 140.0, 160.0)

    @classmethod
    def from_ini(cls, path: str) -> "RunConfig":
        if not os.path.exists(path):
            raise ValidationError(f"config file not found: {path}")
        cp = configparser.ConfigParser()
        cp.read(path)

        def get(section: str, key: str, cast, default):
            if not cp.has_option(section, key):
                return default
            raw = cp.get(section, key).strip()
            if raw == "":
                return default
            try:
                return cast(raw)
            except ValueError as exc:
                raise ValidationError(f"[{section}] {key}: {exc}") from exc

        spots_default = ",".join(str(s) for s in cls.spots)
        spots_raw = get("output", "spots", str, spots_default)
        try:
            spots = tuple(float(tok) for tok in spots_raw.split(",") if tok.strip())
        except ValueError as exc:
            raise ValidationError(f"[output] spots: {exc}") from exc
        return cls(
            mean_rate=get("model", "mean_rate", float, cls.mean_rate),
            vol=get("model", "vol", float, cls.vol),
            tau=get("model", "tau", float, cls.tau),
            rate=get("model", "rate", float, cls.rate),
            strike=get("model", "strike", float, cls.strike),
            n_steps=get("model", "n_steps", int, cls.n_steps),
            method=get("method", "name", str, cls.method),
            n_nodes=get("method", "n_nodes", int, cls.n_nodes),
            span=get("method", "span", float, None),
            panels=get("method", "panels", int, cls.panels),
            rtol=get("method", "rtol", float, cls.rtol),
            contour_real=get("contour", "real_part", float, None),
            contour_pmax=get("contour", "p_max", float, None),
            contour_nodes=get("contour", "n_nodes", int, cls.contour_nodes),
            n_paths=get("mc", "n_paths", int, cls.n_paths),
            seed=get("mc", "seed", int, cls.seed),
            workers=get("mc", "workers", int, cls.workers),
            chunk=get("mc", "chunk", int, cls.chunk),
            hedge_step=get("mc", "hedge_step", int, cls.hedge_step),
            out=get("output", "path", str, None),
            spots=spots,
        )

    def params(self) -> LognormalParams:
        return LognormalParams(
            mean_rate=self.mean_rate, vol=self.vol, tau=self.tau, rate=self.rate
        )

    def market_path(self, n_steps: int | None = None) -> MarketPath:
        return self.params().to_path(n_steps if n_steps is not None else self.n_steps)

    def line(self) -> MellinLine | None:
        if self.contour_real is None and self.contour_pmax is None:
            return None
        if self.contour_real is None or self.contour_pmax is None:
            raise ValidationError("set both [contour] real_part and p_max, or neither")
        return MellinLine(
            real_part=self.contour_real,
            p_max=self.contour_pmax,
            n_nodes=self.contour_nodes,
        )

    def sim(self) -> SimConfig:
        return SimConfig(
            n_paths=self.n_paths, seed=self.seed, workers=self.workers, chunk=self.chunk
        )


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(header: list[str], rows: list[tuple], out: str | None) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _spots(cfg: RunConfig) -> np.ndarray:
    if not cfg.spots:
        raise ValidationError("no spots configured")
    return np.asarray(cfg.spots, dtype=float)


def _prices(cfg: RunConfig, s: np.ndarray) -> np.ndarray:
    if cfg.method == "closed":
        return price_closed(cfg.params(), cfg.n_steps, cfg.strike, s)
    if cfg.method == "recursive":
        grid = price_recursive(
            cfg.market_path(),
            cfg.strike,
            n_nodes=cfg.n_nodes,
            span=cfg.span,
            panels=cfg.panels,
            rtol=cfg.rtol,
        )
        return grid.value_at(s)
    if cfg.method == "mellin":
        return price_mellin(cfg.market_path(), cfg.strike, s, line=cfg.line())
    if cfg.method == "green":
        return green_price(cfg.market_path(), cfg.strike, s, line=cfg.line())
    raise ValidationError(f"unknown method {cfg.method!r}; expected one of {_METHODS}")


def _history(cfg: RunConfig, n_steps: int) -> list[PriceGrid]:
    return price_recursive(
        cfg.market_path(n_steps),
        cfg.strike,
        n_nodes=cfg.n_nodes,
        span=cfg.span,
        panels=cfg.panels,
        rtol=cfg.rtol,
        keep_history=True,
    )


def cmd_price(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    s = _spots(cfg)
    vals = _prices(cfg, s)
    return ["spot", "value"], [(sv, vv) for sv, vv in zip(s, vals)]


def cmd_delta(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    s = _spots(cfg)
    kern = PricingKernel.from_step(cfg.params().to_step())
    if cfg.n_steps == 1:
        grid = PriceGrid.call_payoff(cfg.strike, span=cfg.span or 4.0, n_nodes=cfg.n_nodes)
    else:
        grid = _history(cfg, cfg.n_steps - 1)[-1]
    deltas = min_variance_delta(grid, kern, s)
    return ["spot", "delta"], [(sv, dv) for sv, dv in zip(s, deltas)]


def cmd_feasibility(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    step = cfg.params().to_step()
    r_lo, r_hi = feasibility_interval(step.dist, step.tau)
    m, d = step_moments(step.dist, step.tau)
    inside = int(r_lo <= cfg.rate <= r_hi)
    return (
        ["rate", "rate_lo", "rate_hi", "feasible", "gross_mean", "gross_var"],
        [(cfg.rate, r_lo, r_hi, inside, m, d)],
    )


def cmd_crosscheck(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    s = _spots(cfg)
    closed = price_closed(cfg.params(), cfg.n_steps, cfg.strike, s)
    recursive = replace(cfg, method="recursive")
    mellin = replace(cfg, method="mellin")
    rec = _prices(recursive, s)
    mel = _prices(mellin, s)
    stack = np.vstack([closed, rec, mel])
    spread = (stack.max(axis=0) - stack.min(axis=0)) / np.abs(closed)
    rows = [
        (sv, cv, rv, mv, pv)
        for sv, cv, rv, mv, pv in zip(s, closed, rec, mel, spread)
    ]
    return ["spot", "closed", "recursive", "mellin", "rel_spread"], rows


def cmd_xi_scan(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    history = _history(cfg, cfg.n_steps)
    rows: list[tuple] = []
    for grid in history:
        report = scan_negative_set(grid)
        if report.is_empty:
            rows.append((grid.steps_applied, -1, np.nan, np.nan, report.min_value, report.argmin_spot))
        else:
            for i, (lo, hi) in enumerate(report.intervals):
                rows.append((grid.steps_applied, i, lo, hi, report.min_value, report.argmin_spot))
    return (
        ["steps_applied", "interval", "spot_lo", "spot_hi", "min_value", "argmin_spot"],
        rows,
    )


def cmd_bs_converge(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    total_time = cfg.n_steps * cfg.tau
    est = bs_limit_check(
        cfg.mean_rate, cfg.vol, total_time, cfg.rate, cfg.strike, cfg.strike
    )
    rows = [
        (round(total_time / t), t, e, e / abs(est.reference), est.order)
        for t, e in zip(est.taus, est.errors)
    ]
    return ["n_steps", "tau", "abs_error", "rel_error", "fitted_order"], rows


def cmd_asymptote(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    total_time = cfg.n_steps * cfg.tau
    n_list = tuple(cfg.n_steps * 2**j for j in range(6))
    est = bs_limit_check(
        cfg.mean_rate, cfg.vol, total_time, cfg.rate, cfg.strike, cfg.strike,
        n_list=n_list,
    )
    rows = [
        (t, e, est.order, est.coefficient)
        for t, e in zip(est.taus, est.errors)
    ]
    return ["tau", "abs_error", "fitted_order", "fitted_coefficient"], rows


def cmd_simulate(cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    k = cfg.hedge_step
    if not 1 <= k <= cfg.n_steps:
        raise ValidationError(f"hedge_step must be in [1, {cfg.n_steps}], got {k}")
    if k == 1:
        grid = PriceGrid.call_payoff(cfg.strike, span=cfg.span or 4.0, n_nodes=cfg.n_nodes)
    else:
        grid = _history(cfg, k - 1)[-1]
    step = cfg.params().to_step()
    kern = PricingKernel.from_step(step)
    sim = cfg.sim()
    rows = []
    for spot in _spots(cfg):
        delta_theory = float(min_variance_delta(grid, kern, spot)[0])
        target = float(np.exp(step.rate * step.tau) * portfolio_value(grid, kern, spot)[0])
        fit = fit_optimal_delta(grid.value_at, step, float(spot), sim)
        rep = simulate_hedged_step(grid.value_at, step, float(spot), delta_theory, sim)
        z = (rep.portfolio_mean - target) / rep.mean_stderr
        rows.append(
            (
                k,
                spot,
                delta_theory,
                fit.delta,
                fit.stderr,
                rep.portfolio_mean,
                rep.mean_stderr,
                target,
                z,
                rep.portfolio_var,
                rep.var_stderr,
            )
        )
    header = [
        "hedge_step",
        "spot",
        "delta_theory",
        "delta_fit",
        "delta_fit_stderr",
        "portfolio_mean",
        "mean_stderr",
        "identity_target",
        "identity_z",
        "portfolio_var",
        "var_stderr",
    ]
    return header, rows


_COMMANDS = {
    "price": cmd_price,
    "delta": cmd_delta,
    "feasibility": cmd_feasibility,
    "crosscheck": cmd_crosscheck,
    "xi-scan": cmd_xi_scan,
    "bs-converge": cmd_bs_converge,
    "simulate": cmd_simulate,
    "asymptote": cmd_asymptote,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems are validation problems
        raise ValidationError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="discrete-hedge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--method", choices=_METHODS)
        p.add_argument("--tolerance", type=float, help="override method rtol")
        p.add_argument("--seed", type=int, help="override Monte Carlo seed")
        p.add_argument("--workers", type=int, help="override Monte Carlo workers")
        p.add_argument("--spots", help="comma-separated spot list")
        if name == "simulate":
            p.add_argument("--k", type=int, help="hedge step index (1 = adjacent to payoff)")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = RunConfig.from_ini(args.config) if args.config else RunConfig()
    if args.method is not None:
        cfg = replace(cfg, method=args.method)
    if args.tolerance is not None:
        cfg = replace(cfg, rtol=args.tolerance)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.spots is not None:
        try:
            cfg = replace(
                cfg, spots=tuple(float(t) for t in args.spots.split(",") if t.strip())
            )
        except ValueError as exc:
            raise ValidationError(f"--spots: {exc}") from exc
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    if getattr(args, "k", None) is not None:
        cfg = replace(cfg, hedge_step=args.k)
    header, rows = _COMMANDS[args.command](cfg)
    _write_csv(header, rows, cfg.out)
    return 0


def main() -> None:
    try:
        sys.exit(run())
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        sys.exit(2)
