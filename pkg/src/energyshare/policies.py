"""Renewable allocation rules: proportional allocation (PA) and equal sharing (ES)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Scenario, StrategyProfile, _profile_array, expected_demands

POLICIES = ("pa", "es")


class NoCompetitorsError(ValueError):
    pass


@dataclass(frozen=True)
class AllocationResult:
    res_per_type: tuple[float, ...]
    served_by_res: float
    unused_res: float
    fair_share: float | None = None
    clamped: float = 0.0


def check_policy(policy: str) -> str:
    policy = policy.lower()
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {POLICIES}")
    return policy


def pa_allocation(s: Scenario, p: StrategyProfile) -> AllocationResult:
    day, _ = expected_demands(s, p)
    re_cap = s.res_capacity
    denom = max(re_cap, day)
    if denom == 0:
        # no capacity and nobody at day: nothing to hand out
        res = np.zeros(s.n_types)
    else:
        res = s.day_demands * re_cap / denom
    served = min(re_cap, day)
    return AllocationResult(tuple(res.tolist()), served, re_cap - served)


def competitor_count(s: Scenario, p: StrategyProfile) -> float:
    return s.n_consumers * float(np.dot(s.shares, _profile_array(s, p)))


def es_fair_share(s: Scenario, p: StrategyProfile) -> float:
    """RES capacity divided by the expected number of daytime competitors."""
    count = competitor_count(s, p)
    if count <= 0:
        raise NoCompetitorsError("no expected daytime competitors, fair share undefined")
    return s.res_capacity / count


def es_allocation(s: Scenario, p: StrategyProfile) -> AllocationResult:
    sh = es_fair_share(s, p)
    res = np.minimum(s.day_demands, sh)
    served = s.n_consumers * float(np.dot(s.shares * _profile_array(s, p), res))
    clamped = max(0.0, served - s.res_capacity)
    served -= clamped
    return AllocationResult(tuple(res.tolist()), served, s.res_capacity - served,
                            fair_share=sh, clamped=clamped)


def served_by_res(s: Scenario, p: StrategyProfile, policy: str) -> float:
    """Aggregate RES energy used; zero competitors under ES serve nothing."""
    if check_policy(policy) == "pa":
        return pa_allocation(s, p).served_by_res
    if competitor_count(s, p) <= 0:
        return 0.0
    return es_allocation(s, p).served_by_res
