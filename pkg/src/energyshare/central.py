"""Centralized scheduling: the community manager picks every type's day share."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import CostBreakdown, social_cost_es, social_cost_pa
from .model import Scenario, StrategyProfile, expected_demands, total_day_demand

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerConfig:
    grid: int = 21
    restarts: int = 8
    tol: float = 1e-8
    max_sweeps: int = 200
    # grid^M beyond this falls back to the largest per-axis resolution that fits
    max_grid_points: int = 5_000_000


@dataclass(frozen=True)
class CentralSolution:
    profile: StrategyProfile
    day_grid_import: float
    cost: CostBreakdown
    dual_threshold: float | None = None
    local_optima: int | None = None


def solve_central_pa(s: Scenario) -> CentralSolution:
    """Greedy optimum of the linear program under proportional allocation.

    Dominant-day types are scheduled at day; the rest fill the remaining RES
    capacity in order of decreasing inverse risk aversion (ties by position).
    """
    m = s.n_types
    g, b, c = s.tariffs.gamma, s.tariffs.beta, s.tariffs.c_res
    n = s.n_consumers
    p = np.zeros(m)
    threshold = None
    if s.res_capacity >= total_day_demand(s):
        p[:] = 1.0
    else:
        eps = s.inv_risks
        block = n * s.shares * s.day_demands
        day_set = eps >= g / b
        p[day_set] = 1.0
        remaining = s.res_capacity - float(block[day_set].sum())
        order = sorted((k for k in range(m) if not day_set[k]), key=lambda k: (-eps[k], k))
        for k in order:
            if block[k] <= 0:
                continue
            if remaining <= 1e-12 * s.res_capacity:
                break
            p[k] = min(1.0, remaining / block[k])
            remaining -= p[k] * block[k]
            if p[k] < 1.0:
                threshold = float(b * c * eps[k])
    profile = StrategyProfile.of(p)
    day, _ = expected_demands(s, profile)
    cost = social_cost_pa(s, profile)
    return CentralSolution(profile, max(0.0, day - s.res_capacity), cost, threshold)


def batch_cost_es(s: Scenario, P: np.ndarray) -> np.ndarray:
    """ES social cost for each row of ``P`` (shape K x M)."""
    return s.tariffs.c_res * _batch_units_es(s, P)


def _batch_units_es(s: Scenario, P: np.ndarray) -> np.ndarray:
    # cost over c_res; the search runs on this so its path ignores the price level
    n = s.n_consumers
    e, r, eps = s.day_demands, s.shares, s.inv_risks
    g, b = s.tariffs.gamma, s.tariffs.beta
    count = n * (P @ r)
    day = n * (P @ (r * e))
    night = n * ((1.0 - P) @ (r * eps * e))
    with np.errstate(divide="ignore", invalid="ignore"):
        sh = np.where(count > 0, s.res_capacity / count, 0.0)
    served = n * np.sum(P * r * np.minimum(e[None, :], sh[:, None]), axis=1)
    served = np.minimum(served, s.res_capacity)
    return served + (day - served) * g + night * b


def _grid_axis(cfg: OptimizerConfig, m: int) -> np.ndarray:
    k = cfg.grid
    while k > 2 and k ** m > cfg.max_grid_points:
        k -= 1
    return np.linspace(0.0, 1.0, k)


def _grid_seeds(s: Scenario, cfg: OptimizerConfig) -> list[np.ndarray]:
    m = s.n_types
    axis = _grid_axis(cfg, m)
    k = len(axis)
    best_cost = np.empty(0)
    best_pts = np.empty((0, m))
    # chunk over the leading coordinate to bound memory
    rest = np.stack(np.meshgrid(*([axis] * (m - 1)), indexing="ij"), -1).reshape(-1, m - 1) \
        if m > 1 else np.zeros((1, 0))
    for v in axis:
        P = np.hstack([np.full((len(rest), 1), v), rest])
        costs = _batch_units_es(s, P)
        take = min(cfg.restarts, len(costs))
        idx = np.argpartition(costs, take - 1)[:take]
        best_cost = np.concatenate([best_cost, costs[idx]])
        best_pts = np.vstack([best_pts, P[idx]])
    order = np.lexsort(tuple(best_pts[:, j] for j in reversed(range(m))) + (best_cost,))
    return [best_pts[i] for i in order[: cfg.restarts]]


def golden_section(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Minimize ``f`` on [lo, hi]; endpoints are always compared."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    cands = [(f(lo), lo), (f(hi), hi), (f1, x1), (f2, x2)]
    fx, x = min(cands)
    return x, fx


def _polish(s: Scenario, p0: np.ndarray, cfg: OptimizerConfig) -> tuple[np.ndarray, float]:
    p = p0.copy()
    fp = float(_batch_units_es(s, p[None, :])[0])
    for _ in range(cfg.max_sweeps):
        moved = 0.0
        for j in range(len(p)):
            def f(x, j=j):
                q = p.copy()
                q[j] = x
                return float(_batch_units_es(s, q[None, :])[0])
            x, fx = golden_section(f, 0.0, 1.0, cfg.tol)
            if fx < fp:
                moved = max(moved, abs(x - p[j]))
                p[j], fp = x, fx
        if moved <= cfg.tol:
            break
    return p, fp


def solve_central_es(s: Scenario, cfg: OptimizerConfig | None = None) -> CentralSolution:
    """Minimize the (non-convex) ES social cost over the unit box.

    Deterministic multi-start coordinate descent: the best grid points seed
    cyclic golden-section sweeps; all-day and the PA optimum are added seeds.
    """
    cfg = cfg or OptimizerConfig()
    seeds = _grid_seeds(s, cfg)
    seeds.append(np.ones(s.n_types))
    seeds.append(solve_central_pa(s).profile.as_array())
    results = [_polish(s, q, cfg) for q in seeds]
    optima = {tuple(np.round(p, 6)) for p, _ in results}
    best_p, best_f = min(results, key=lambda pf: (pf[1], tuple(pf[0])))
    profile = StrategyProfile.of(np.clip(best_p, 0.0, 1.0))
    cost = social_cost_es(s, profile)
    day, _ = expected_demands(s, profile)
    return CentralSolution(profile, max(0.0, day - cost.served_by_res), cost,
                           local_optima=len(optima))


def solve_central(s: Scenario, policy: str, cfg: OptimizerConfig | None = None) -> CentralSolution:
    if policy == "pa":
        return solve_central_pa(s)
    if policy == "es":
        return solve_central_es(s, cfg)
    raise ValueError(f"unknown policy {policy!r}")
