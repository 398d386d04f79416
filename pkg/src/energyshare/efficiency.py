"""Price of Anarchy: worst equilibrium cost over the centralized optimum."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .central import OptimizerConfig, solve_central
from .equilibrium import (NO_EQUILIBRIUM, CostBreakdown, NoEquilibriumError, select_ne_profile,
                          social_cost, solve_ne)
from .model import Scenario, StrategyProfile, with_ratio
from .policies import check_policy


@dataclass(frozen=True)
class PoAReport:
    policy: str
    ne_case: str
    worst_ne_cost: float
    best_ne_cost: float
    central_cost: float
    poa: float
    re_ratio: float | None = None
    worst_profile: StrategyProfile | None = None
    best_profile: StrategyProfile | None = None
    central_profile: StrategyProfile | None = None
    worst_breakdown: CostBreakdown | None = None
    best_breakdown: CostBreakdown | None = None
    central_breakdown: CostBreakdown | None = None
    day_demand_ne: float | None = None

    @property
    def defined(self) -> bool:
        return self.ne_case != NO_EQUILIBRIUM


def compute_poa(s: Scenario, policy: str = "pa", cfg: OptimizerConfig | None = None,
                re_ratio: float | None = None) -> PoAReport:
    policy = check_policy(policy)
    sol = solve_ne(s, policy)
    if not sol.has_equilibrium:
        raise NoEquilibriumError(
            f"{policy}: equilibrium condition fails between types {sol.offending}")
    worst = select_ne_profile(sol, s, "worst_cost")
    best = select_ne_profile(sol, s, "best_cost")
    cw, cb = social_cost(s, worst, policy), social_cost(s, best, policy)
    central = solve_central(s, policy, cfg)
    return PoAReport(policy, sol.case_label, cw.total, cb.total, central.cost.total,
                     cw.units / central.cost.units, re_ratio, worst, best, central.profile,
                     cw, cb, central.cost, sol.day_demand_ne)


def poa_curve(s: Scenario, re_ratios: Sequence[float], policy: str = "pa",
              cfg: OptimizerConfig | None = None) -> list[PoAReport]:
    """PoA at RE = ratio * D_total for each ratio, re-calibrating epsilons when
    the scenario carries a calibration request.  Points without an
    equilibrium are reported with ``ne_case == "no_equilibrium"`` and NaN costs.
    """
    out = []
    for ratio in re_ratios:
        if not 0 < ratio <= 1.5:
            raise ValueError(f"RE ratio {ratio} outside (0, 1.5]")
        point = with_ratio(s, ratio)
        try:
            out.append(compute_poa(point, policy, cfg, re_ratio=ratio))
        except NoEquilibriumError:
            nan = float("nan")
            out.append(PoAReport(policy, NO_EQUILIBRIUM, nan, nan, nan, nan, ratio))
    return out
