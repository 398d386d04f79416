"""Closed-form Nash equilibria of the decentralized sharing game.

Both policies share the same case machine: with enough RES capacity
everyone schedules at day, otherwise the dominant-day types (high inverse
risk aversion) are pinned to day, the dominant-night types to night, and the
remaining types mix on a hyperplane ``coef . p = rhs`` intersected with the
unit box.

The PA hyperplane is written in the deviator-consistent form, where every
other consumer is counted with weight ``N - 1``:

    sum_{mixed} (N-1) r E p = RE(g-1)/(g-eps*b) - E - (N-1) sum_{day} r E

The ES hyperplane counts competitors, with weight ``N``:

    sum_{mixed} N r p = RE(g-1)/(E(g-eps*b)) - N sum_{day} r

The day-type correction in the ES form is a head count.  Weighting it by
energy instead would mix units inside a count equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (Partition, Scenario, StrategyProfile, TariffSet, ConsumerType,
                    _profile_array, expected_demands, partition_types, total_day_demand)
from .policies import check_policy, competitor_count, served_by_res

EXISTENCE_RTOL = 1e-6

CASE1 = "case1_all_day"
DOMINANT_DAY = "dominant_day"
DOMINANT_NIGHT = "dominant_night"
MIXED = "mixed"
NO_EQUILIBRIUM = "no_equilibrium"

SELECTORS = ("worst_cost", "best_cost", "midpoint")


class NoEquilibriumError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    coefficients: tuple[float, ...]
    rhs: float

    def residual(self, p) -> float:
        return float(np.dot(self.coefficients, p)) - self.rhs


@dataclass(frozen=True)
class NESolution:
    policy: str
    case_label: str
    partition: Partition
    p_min: tuple[float, ...]
    p_max: tuple[float, ...]
    mixed: tuple[bool, ...]
    ne_constraint: LinearConstraint | None
    day_demand_ne: float | None
    day_demand_range: tuple[float, float] | None = None
    saturation: str | None = None  # "upper" / "lower" when the hyperplane misses the box
    offending: tuple[int, int] | None = None

    @property
    def has_equilibrium(self) -> bool:
        return self.case_label != NO_EQUILIBRIUM

    def fixed_value(self, k: int) -> float | None:
        if self.p_min[k] == self.p_max[k]:
            return self.p_min[k]
        return None


@dataclass(frozen=True)
class CostBreakdown:
    res_cost: float
    day_grid_cost: float
    night_cost: float
    total: float
    served_by_res: float
    day_grid_energy: float
    night_energy: float
    # total / c_res computed without the price, so ratios are price-free
    units: float = float("nan")


def ne_target_allocation(t: ConsumerType, tariffs: TariffSet) -> float:
    """RES allocation at which a type is indifferent between day and night."""
    g, b = tariffs.gamma, tariffs.beta
    return (g - t.inv_risk * b) / (g - 1.0) * t.day_demand


def _indices(s: Scenario, ids) -> list[int]:
    return [k for k, t in enumerate(s.types) if t.index in ids]


def _trivial(s: Scenario, policy: str, label: str, part: Partition, p: np.ndarray) -> NESolution:
    day, _ = expected_demands(s, p)
    tp = tuple(p.tolist())
    return NESolution(policy, label, part, tp, tp, (False,) * s.n_types, None, day, (day, day))


def _check_common(values: np.ndarray, mixed: list[int], s: Scenario):
    """Return the offending (type id, type id) pair if ``values`` differ."""
    v = values[mixed]
    scale = max(np.max(np.abs(v)), 1e-300)
    if np.max(v) - np.min(v) <= EXISTENCE_RTOL * scale:
        return None
    lo, hi = mixed[int(np.argmin(v))], mixed[int(np.argmax(v))]
    return (s.types[lo].index, s.types[hi].index)


def _project_bounds(coef: np.ndarray, rhs: float, mixed: list[int]):
    """Coordinate ranges of {coef . p = rhs} within [0, 1]^mixed."""
    total = coef[mixed].sum()
    lo = np.zeros(len(coef))
    hi = np.zeros(len(coef))
    for k in mixed:
        others = total - coef[k]
        lo[k] = min(1.0, max(0.0, (rhs - others) / coef[k]))
        hi[k] = min(1.0, max(0.0, rhs / coef[k]))
    return lo, hi


def _solve(s: Scenario, policy: str) -> NESolution:
    part = partition_types(s)
    m = s.n_types
    if part.case1:
        return _trivial(s, policy, CASE1, part, np.ones(m))

    n = s.n_consumers
    g, b = s.tariffs.gamma, s.tariffs.beta
    e, eps, r = s.day_demands, s.inv_risks, s.shares
    day_ids = _indices(s, part.sigma1)
    mixed = _indices(s, part.sigma22)

    base = np.zeros(m)
    base[day_ids] = 1.0
    if not mixed:
        label = DOMINANT_NIGHT if part.sigma21 else DOMINANT_DAY
        return _trivial(s, policy, label, part, base)

    with np.errstate(divide="ignore"):
        kappa = (g - eps * b) * e
    if policy == "pa":
        margin = s.res_capacity * (g - 1.0) * e / kappa - e
        bad = _check_common(margin, mixed, s)
        coef = (n - 1) * r * e
        rhs = float(np.mean(margin[mixed])) - (n - 1) * float(np.dot(r[day_ids], e[day_ids]))
    else:
        bad = _check_common(kappa, mixed, s)
        coef = n * r
        rhs = s.res_capacity * (g - 1.0) / float(np.mean(kappa[mixed])) - n * float(np.sum(r[day_ids]))
    if bad is not None:
        nan = (math.nan,) * m
        return NESolution(policy, NO_EQUILIBRIUM, part, nan, nan, (False,) * m, None, None,
                          offending=bad)

    mask = np.zeros(m, dtype=bool)
    mask[mixed] = True
    coef = np.where(mask, coef, 0.0)
    reach = coef.sum()
    saturation = None
    if rhs >= reach or rhs <= 0:
        # over- or under-competition: the hyperplane misses the box
        fill = 1.0 if rhs >= reach else 0.0
        if rhs > reach:
            saturation = "upper"
        elif rhs < 0:
            saturation = "lower"
        lo = hi = base + fill * mask
    else:
        plo, phi = _project_bounds(coef, rhs, mixed)
        lo, hi = base + plo, base + phi

    constraint = LinearConstraint(tuple(coef.tolist()), float(rhs))
    sol = NESolution(policy, MIXED, part, tuple(lo.tolist()), tuple(hi.tolist()),
                     tuple(mask.tolist()), constraint, None, None, saturation)
    if policy == "pa":
        d1 = total_day_demand(s, part.sigma1)
        d22 = total_day_demand(s, part.sigma22)
        demand = d1 + min(d22, max(n / (n - 1) * rhs, 0.0))
        return replace(sol, day_demand_ne=demand, day_demand_range=(demand, demand))
    # under ES the head count is pinned, not the energy; report the spread
    lo_d = expected_demands(s, _greedy(sol, s, np.asarray(e) * r, maximize=False))[0]
    hi_d = expected_demands(s, _greedy(sol, s, np.asarray(e) * r, maximize=True))[0]
    mid_d = expected_demands(s, _midpoint(sol))[0]
    return replace(sol, day_demand_ne=mid_d, day_demand_range=(lo_d, hi_d))


def solve_ne_pa(s: Scenario) -> NESolution:
    return _solve(s, "pa")


def solve_ne_es(s: Scenario) -> NESolution:
    return _solve(s, "es")


def solve_ne(s: Scenario, policy: str) -> NESolution:
    return _solve(s, check_policy(policy))


def _greedy(sol: NESolution, s: Scenario, weights: np.ndarray, maximize: bool) -> np.ndarray:
    """Extremize ``weights . p`` over the equilibrium set.

    Fractional-knapsack fill of the mixed coordinates in order of
    weight per unit of constraint coefficient; ties go to the lower position.
    """
    p = np.array(sol.p_min, dtype=float)
    if sol.ne_constraint is None or sol.saturation is not None:
        return p
    coef = np.asarray(sol.ne_constraint.coefficients)
    mixed = [k for k in range(len(p)) if sol.mixed[k]]
    ratio = {k: weights[k] / coef[k] for k in mixed}
    order = sorted(mixed, key=lambda k: (-ratio[k] if maximize else ratio[k], k))
    remaining = sol.ne_constraint.rhs
    for k in mixed:
        p[k] = 0.0
    for k in order:
        take = min(1.0, max(0.0, remaining / coef[k]))
        p[k] = take
        remaining -= take * coef[k]
    return p


def _midpoint(sol: NESolution) -> np.ndarray:
    lo = np.array(sol.p_min, dtype=float)
    hi = np.array(sol.p_max, dtype=float)
    if sol.ne_constraint is None or sol.saturation is not None:
        return lo
    coef = np.asarray(sol.ne_constraint.coefficients)
    a_lo, a_hi = float(coef @ lo), float(coef @ hi)
    if a_hi <= a_lo:
        return lo
    t = (sol.ne_constraint.rhs - a_lo) / (a_hi - a_lo)
    return np.clip(lo + min(1.0, max(0.0, t)) * (hi - lo), 0.0, 1.0)


def marginal_costs(s: Scenario, sol: NESolution) -> np.ndarray:
    """Per-type linear coefficient of social cost along the equilibrium set.

    Along the set the per-consumer RES allocation is constant (fixed day
    demand under PA, fixed head count under ES), so the social cost is
    affine in p.
    """
    return s.tariffs.c_res * _marginal_units(s, sol)


def _marginal_units(s: Scenario, sol: NESolution) -> np.ndarray:
    g, b = s.tariffs.gamma, s.tariffs.beta
    e = s.day_demands
    probe = StrategyProfile.of(_midpoint(sol))
    if sol.policy == "pa":
        day, _ = expected_demands(s, probe)
        res = e * s.res_capacity / max(s.res_capacity, day) if day > 0 else e
    else:
        count = competitor_count(s, probe)
        res = np.minimum(e, s.res_capacity / count) if count > 0 else e
    per_consumer = res + (e - res) * g - s.inv_risks * e * b
    return s.n_consumers * s.shares * per_consumer


def select_ne_profile(sol: NESolution, s: Scenario, selector: str = "worst_cost") -> StrategyProfile:
    if not sol.has_equilibrium:
        raise NoEquilibriumError(f"no equilibrium (types {sol.offending} violate the condition)")
    if selector not in SELECTORS:
        raise ValueError(f"unknown selector {selector!r}, expected one of {SELECTORS}")
    if selector == "midpoint":
        return StrategyProfile.of(_midpoint(sol))
    w = _marginal_units(s, sol)
    return StrategyProfile.of(_greedy(sol, s, w, maximize=selector == "worst_cost"))


def _breakdown(s: Scenario, served: float, day: float, night: float) -> CostBreakdown:
    c = s.tariffs.c_res
    res_cost = served * c
    grid = max(0.0, day - served)
    day_grid_cost = grid * s.tariffs.gamma * c
    night_cost = night * s.tariffs.beta * c
    units = served + grid * s.tariffs.gamma + night * s.tariffs.beta
    return CostBreakdown(res_cost, day_grid_cost, night_cost,
                         res_cost + day_grid_cost + night_cost, served, grid, night, units)


def social_cost_pa(s: Scenario, p: StrategyProfile) -> CostBreakdown:
    day, night = expected_demands(s, p)
    return _breakdown(s, min(s.res_capacity, day), day, night)


def social_cost_es(s: Scenario, p: StrategyProfile) -> CostBreakdown:
    day, night = expected_demands(s, p)
    return _breakdown(s, served_by_res(s, p, "es"), day, night)


def social_cost(s: Scenario, p: StrategyProfile, policy: str) -> CostBreakdown:
    if check_policy(policy) == "pa":
        return social_cost_pa(s, p)
    return social_cost_es(s, p)


def deviator_costs(s: Scenario, p, k: int, policy: str = "pa") -> tuple[float, float]:
    """Mean-field (day, night) cost of one consumer at type position ``k``.

    PA counts the deviator's own demand on top of ``N - 1`` others; ES uses
    the expected head count ``N sum r p`` as in the fair-share rule.
    """
    pd = _profile_array(s, p)
    t = s.types[k]
    c, g, b = s.tariffs.c_res, s.tariffs.gamma, s.tariffs.beta
    re_cap = s.res_capacity
    if check_policy(policy) == "pa":
        demand = t.day_demand + (s.n_consumers - 1) * float(np.dot(s.shares * s.day_demands, pd))
        res = t.day_demand * re_cap / max(re_cap, demand)
    else:
        count = max(1.0, competitor_count(s, pd))
        res = min(t.day_demand, re_cap / count)
    day = res * c + (t.day_demand - res) * g * c
    night = t.inv_risk * t.day_demand * b * c
    return day, night
