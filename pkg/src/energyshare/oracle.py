"""Brute-force checks for small populations.

Expected costs are enumerated exactly over the binomial day/night outcomes
of the other consumers, so they do not rely on the mean-field expressions
used by the solvers.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import Scenario, StrategyProfile, _profile_array
from .policies import check_policy

MAX_ENUM_CONSUMERS = 12
MAX_GRID_TYPES = 3
MAX_GRID_RESOLUTION = 201


class EnumerationBoundError(ValueError):
    pass


@dataclass(frozen=True)
class SmallScenario:
    scenario: Scenario
    counts: tuple[int, ...]

    @classmethod
    def of(cls, s: "Scenario | SmallScenario") -> "SmallScenario":
        if isinstance(s, SmallScenario):
            return s
        if s.n_consumers > MAX_ENUM_CONSUMERS:
            raise EnumerationBoundError(
                f"{s.n_consumers} consumers exceed the enumeration bound {MAX_ENUM_CONSUMERS}")
        raw = s.n_consumers * s.shares
        counts = np.rint(raw)
        if np.any(np.abs(raw - counts) > 1e-9):
            raise EnumerationBoundError(f"type counts {raw.tolist()} are not integers")
        return cls(s, tuple(int(c) for c in counts))


def _binom_pmf(n: int, p: float) -> np.ndarray:
    return np.array([math.comb(n, k) * p ** k * (1.0 - p) ** (n - k) for k in range(n + 1)])


def exact_expected_costs(s: "Scenario | SmallScenario", p: StrategyProfile, type_id: int,
                         policy: str = "pa") -> tuple[float, float]:
    """Exact (day, night) expected cost of one consumer of ``type_id``.

    The other consumers go to day independently with their type's
    probability; the allocation is recomputed in every realized outcome from
    the realized competitor demand (PA) or head count (ES).
    """
    small = SmallScenario.of(s)
    sc = small.scenario
    policy = check_policy(policy)
    pd = _profile_array(sc, p)
    k = sc.position(type_id)
    others = list(small.counts)
    if others[k] < 1:
        raise ValueError(f"type {type_id} has no consumers")
    others[k] -= 1

    e = sc.day_demands
    mine = e[k]
    c, g, b = sc.tariffs.c_res, sc.tariffs.gamma, sc.tariffs.beta
    re_cap = sc.res_capacity
    pmfs = [_binom_pmf(n, q) for n, q in zip(others, pd)]

    day = 0.0
    for outcome in itertools.product(*(range(n + 1) for n in others)):
        w = 1.0
        for pmf, j in zip(pmfs, outcome):
            w *= pmf[j]
        if w == 0.0:
            continue
        if policy == "pa":
            demand = float(np.dot(outcome, e)) + mine
            res = mine * re_cap / max(re_cap, demand)
        else:
            res = min(mine, re_cap / (sum(outcome) + 1))
        day += w * (res * c + (mine - res) * g * c)
    night = sc.types[k].inv_risk * mine * b * c
    return float(day), float(night)


def verify_ne_by_deviation(s: "Scenario | SmallScenario", p: StrategyProfile,
                           policy: str = "pa") -> float:
    """Largest saving any type gets by switching from ``p`` to a pure strategy."""
    small = SmallScenario.of(s)
    sc = small.scenario
    pd = _profile_array(sc, p)
    gain = -math.inf
    for k, t in enumerate(sc.types):
        if small.counts[k] == 0:
            continue
        day, night = exact_expected_costs(small, p, t.index, policy)
        mixed = pd[k] * day + (1.0 - pd[k]) * night
        gain = max(gain, mixed - min(day, night))
    return float(gain)


def _grid_costs(s: Scenario, P: np.ndarray, policy: str) -> np.ndarray:
    n = s.n_consumers
    e, r, eps = s.day_demands, s.shares, s.inv_risks
    c, g, b = s.tariffs.c_res, s.tariffs.gamma, s.tariffs.beta
    re_cap = s.res_capacity
    day = n * (P @ (r * e))
    night = n * ((1.0 - P) @ (r * e * eps))
    if policy == "pa":
        served = np.minimum(day, re_cap)
    else:
        heads = n * (P @ r)
        share = np.divide(re_cap, heads, out=np.zeros_like(heads), where=heads > 0)
        served = np.minimum(n * np.sum(P * r * np.minimum(e, share[:, None]), axis=1), re_cap)
    return c * served + g * c * (day - served) + b * c * night


def grid_search_central(s: Scenario, policy: str = "pa",
                        resolution: int = 101) -> tuple[StrategyProfile, float]:
    """Exhaustive minimum of the social cost on a uniform grid of [0, 1]^M.

    Ties go to the lexicographically smallest profile.
    """
    policy = check_policy(policy)
    m = s.n_types
    if m > MAX_GRID_TYPES:
        raise EnumerationBoundError(f"{m} types exceed the grid bound {MAX_GRID_TYPES}")
    if not 2 <= resolution <= MAX_GRID_RESOLUTION:
        raise EnumerationBoundError(f"resolution {resolution} outside [2, {MAX_GRID_RESOLUTION}]")
    axis = np.linspace(0.0, 1.0, resolution)
    rest = np.array(list(itertools.product(axis, repeat=m - 1))).reshape(resolution ** (m - 1), m - 1)
    best_cost, best_p = math.inf, None
    for v in axis:  # lexicographic order of the leading coordinate
        P = np.hstack([np.full((len(rest), 1), v), rest])
        costs = _grid_costs(s, P, policy)
        i = int(np.argmin(costs))  # first minimum, rest is lexicographically sorted
        if costs[i] < best_cost:
            best_cost, best_p = float(costs[i]), P[i]
    return StrategyProfile.of(best_p), best_cost
