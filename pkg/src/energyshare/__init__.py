"""Energy sharing among prosumers: equilibria, central optimum and PoA."""
from .central import CentralSolution, OptimizerConfig, solve_central, solve_central_es, solve_central_pa
from .distalg import AlgoRun, CapPolicy, best_response, run_distributed
from .efficiency import PoAReport, compute_poa, poa_curve
from .equilibrium import (CostBreakdown, NESolution, NoEquilibriumError, select_ne_profile,
                          social_cost, solve_ne, solve_ne_es, solve_ne_pa)
from .model import (CalibrationError, ConsumerType, EpsilonCalibration, Partition, Scenario,
                    ScenarioError, StrategyProfile, TariffSet, calibrate_epsilons,
                    partition_types, total_day_demand, validate_scenario, with_ratio)
from .oracle import SmallScenario, exact_expected_costs, grid_search_central, verify_ne_by_deviation
from .policies import es_allocation, pa_allocation

__all__ = [
    "AlgoRun", "CalibrationError", "CapPolicy", "CentralSolution", "ConsumerType",
    "CostBreakdown", "EpsilonCalibration", "NESolution", "NoEquilibriumError",
    "OptimizerConfig", "Partition", "PoAReport", "Scenario", "ScenarioError", "SmallScenario",
    "StrategyProfile", "TariffSet", "best_response", "calibrate_epsilons", "compute_poa",
    "es_allocation", "exact_expected_costs", "grid_search_central", "pa_allocation",
    "partition_types", "poa_curve", "run_distributed", "select_ne_profile", "social_cost",
    "solve_central", "solve_central_es", "solve_central_pa", "solve_ne", "solve_ne_es",
    "solve_ne_pa", "total_day_demand", "validate_scenario", "verify_ne_by_deviation",
    "with_ratio",
]
